#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "csgm/md5.hpp"
#include "csgm/minhash.hpp"
#include "csgm/wire.hpp"

namespace csgm {

struct BloomSizing {
  std::uint64_t filter_bits = 0;
  std::uint32_t probe_hashes = 0;
};

// Standard Bloom parameterization: k = -log2(eps), m = -n*ln(eps)/(ln 2)^2.
inline BloomSizing size_for(std::uint64_t expected_items, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ValidationError("epsilon must be in (0, 1)");
  if (expected_items < 1) throw ValidationError("expected_items must be >= 1");
  const double ln2 = std::log(2.0);
  const double bits = std::ceil(-static_cast<double>(expected_items) * std::log(epsilon) / (ln2 * ln2));
  const auto k = static_cast<std::int64_t>(std::llround(-std::log2(epsilon)));
  BloomSizing sizing;
  sizing.filter_bits = static_cast<std::uint64_t>(bits);
  sizing.probe_hashes = static_cast<std::uint32_t>(std::max<std::int64_t>(1, k));
  return sizing;
}

// Dense bit-array Bloom filter keyed by 128-bit fingerprints. Probe
// positions come from double hashing over the fingerprint halves:
// position_i = (lo64 + i*hi64) mod filter_bits, i in [0, k), with wrapping
// 64-bit arithmetic. No deletions, no counting.
class BloomFilter {
 public:
  static constexpr std::uint64_t kMaxFilterBits = 1ULL << 33;  // 1 GiB per filter

  BloomFilter() = default;
  BloomFilter(std::uint64_t filter_bits, std::uint32_t probe_hashes,
              std::uint64_t expected_items = 0)
      : filter_bits_(filter_bits),
        probe_hashes_(probe_hashes),
        expected_items_(expected_items) {
    if (filter_bits < 8 || filter_bits > kMaxFilterBits)
      throw ValidationError("filter_bits out of range");
    if (probe_hashes < 1) throw ValidationError("probe_hashes must be >= 1");
    data_.assign((filter_bits + 7) / 8, 0);
  }

  std::uint64_t filter_bits() const { return filter_bits_; }
  std::uint32_t probe_hashes() const { return probe_hashes_; }
  std::uint64_t expected_items() const { return expected_items_; }
  std::uint64_t insert_count() const { return insert_count_; }
  const std::vector<std::uint8_t>& data() const { return data_; }

  void insert(const Fingerprint& fp) {
    const std::uint64_t lo = fp.lo64(), hi = fp.hi64();
    for (std::uint32_t i = 0; i < probe_hashes_; ++i)
      set_bit((lo + static_cast<std::uint64_t>(i) * hi) % filter_bits_);
    ++insert_count_;
  }

  bool query(const Fingerprint& fp) const {
    const std::uint64_t lo = fp.lo64(), hi = fp.hi64();
    for (std::uint32_t i = 0; i < probe_hashes_; ++i)
      if (!get_bit((lo + static_cast<std::uint64_t>(i) * hi) % filter_bits_)) return false;
    return true;
  }

  // Eq.-style prediction of the false-positive rate at the current load.
  double predicted_fp_rate() const {
    const double k = probe_hashes_;
    const double n = static_cast<double>(insert_count_);
    const double m = static_cast<double>(filter_bits_);
    return std::pow(1.0 - std::exp(-k * n / m), k);
  }

  // Restores a filter from wire fields; data must already be sized.
  static BloomFilter from_parts(std::uint64_t filter_bits, std::uint32_t probe_hashes,
                                std::uint64_t insert_count, std::vector<std::uint8_t> data) {
    BloomFilter f(filter_bits, probe_hashes);
    f.insert_count_ = insert_count;
    f.data_ = std::move(data);
    return f;
  }

 private:
  void set_bit(std::uint64_t pos) {
    data_[pos >> 3] |= static_cast<std::uint8_t>(1u << (pos & 7));  // LSB-first
  }
  bool get_bit(std::uint64_t pos) const {
    return (data_[pos >> 3] >> (pos & 7)) & 1u;
  }

  std::uint64_t filter_bits_ = 0;
  std::uint32_t probe_hashes_ = 0;
  std::uint64_t expected_items_ = 0;
  std::uint64_t insert_count_ = 0;
  std::vector<std::uint8_t> data_;
};

// One Bloom filter per band; filters[k] holds every set's band-k
// fingerprint. params_digest ties the bank to the MinHash parameters that
// produced the fingerprints.
struct BloomBank {
  std::vector<BloomFilter> filters;
  std::uint64_t params_digest = 0;

  std::uint32_t num_bands() const { return static_cast<std::uint32_t>(filters.size()); }
};

inline BloomBank build_bank(std::span<const BandedSignature> signatures,
                            const MinHashParams& params, std::uint64_t filter_bits,
                            std::uint32_t probe_hashes) {
  params.validate();
  BloomBank bank;
  bank.params_digest = params.digest();
  const std::uint32_t num_bands = params.num_bands();
  bank.filters.reserve(num_bands);
  for (std::uint32_t k = 0; k < num_bands; ++k)
    bank.filters.emplace_back(filter_bits, probe_hashes, signatures.size());
  for (const BandedSignature& sig : signatures) {
    if (sig.bands.size() != num_bands)
      throw ValidationError("banded signature width does not match params");
    for (std::uint32_t k = 0; k < num_bands; ++k) bank.filters[k].insert(sig.bands[k]);
  }
  return bank;
}

inline BloomBank build_bank(const SetFamily& family, const MinHashParams& params,
                            std::uint64_t filter_bits, std::uint32_t probe_hashes) {
  const std::vector<BandedSignature> sigs = band_family(family, params);
  return build_bank(sigs, params, filter_bits, probe_hashes);
}

inline constexpr std::uint16_t kBankWireVersion = 1;

// Bank wire format (all integers little-endian):
//   "CSGM" | version u16 | num_bands u16 | filter_bits u64 | k u16 |
//   params digest u64 | per filter: insert_count u64, bit array
//   ceil(filter_bits/8) bytes (LSB-first within each byte).
inline std::vector<std::uint8_t> serialize(const BloomBank& bank) {
  std::vector<std::uint8_t> out;
  const std::uint64_t filter_bits = bank.filters.empty() ? 8 : bank.filters[0].filter_bits();
  const std::uint32_t probes = bank.filters.empty() ? 1 : bank.filters[0].probe_hashes();
  out.reserve(26 + bank.filters.size() * (8 + (filter_bits + 7) / 8));
  for (char c : {'C', 'S', 'G', 'M'}) out.push_back(static_cast<std::uint8_t>(c));
  wire::put_u16(out, kBankWireVersion);
  wire::put_u16(out, static_cast<std::uint16_t>(bank.filters.size()));
  wire::put_u64(out, filter_bits);
  wire::put_u16(out, static_cast<std::uint16_t>(probes));
  wire::put_u64(out, bank.params_digest);
  for (const BloomFilter& f : bank.filters) {
    if (f.filter_bits() != filter_bits || f.probe_hashes() != probes)
      throw ValidationError("bank filters must share identical geometry");
    wire::put_u64(out, f.insert_count());
    out.insert(out.end(), f.data().begin(), f.data().end());
  }
  return out;
}

inline BloomBank deserialize(std::span<const std::uint8_t> payload) {
  wire::Reader in(payload);
  const auto magic = in.bytes(4);
  if (!(magic[0] == 'C' && magic[1] == 'S' && magic[2] == 'G' && magic[3] == 'M'))
    throw DecodeError("bad magic");
  const std::uint16_t version = in.u16();
  if (version != kBankWireVersion)
    throw DecodeError("unsupported version " + std::to_string(version));
  const std::uint16_t num_bands = in.u16();
  const std::uint64_t filter_bits = in.u64();
  const std::uint16_t probes = in.u16();
  const std::uint64_t params_digest = in.u64();
  if (filter_bits < 8 || filter_bits > BloomFilter::kMaxFilterBits || probes < 1)
    throw DecodeError("bad filter geometry");

  BloomBank bank;
  bank.params_digest = params_digest;
  bank.filters.reserve(num_bands);
  const std::size_t bytes_per_filter = (filter_bits + 7) / 8;
  for (std::uint16_t k = 0; k < num_bands; ++k) {
    const std::uint64_t insert_count = in.u64();
    auto data = in.bytes(bytes_per_filter);
    bank.filters.push_back(
        BloomFilter::from_parts(filter_bits, probes, insert_count, std::move(data)));
  }
  if (!in.exhausted()) throw DecodeError("trailing bytes after bank payload");
  return bank;
}

}  // namespace csgm
