#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "csgm/hash.hpp"
#include "csgm/md5.hpp"
#include "csgm/parallel.hpp"
#include "csgm/set_discovery.hpp"

namespace csgm {

// Shared sketch parameters. Both institutions must construct these from the
// same (num_hashes, band_rows, seed) triple or their fingerprints are
// incomparable; the digest is carried in the Bloom bank wire header to make
// a mismatch a hard error instead of silent garbage.
struct MinHashParams {
  std::uint32_t num_hashes = 100;
  std::uint32_t band_rows = 2;
  std::uint64_t seed = 0;

  MinHashParams() = default;
  MinHashParams(std::uint32_t m, std::uint32_t r, std::uint64_t s)
      : num_hashes(m), band_rows(r), seed(s) {
    validate();
  }

  void validate() const {
    if (num_hashes == 0 || band_rows == 0)
      throw ValidationError("num_hashes and band_rows must be positive");
    if (num_hashes % band_rows != 0)
      throw ValidationError("band_rows must divide num_hashes");
  }

  std::uint32_t num_bands() const { return num_hashes / band_rows; }

  std::uint64_t digest() const {
    std::uint64_t acc = 0x4353474d00000001ULL;  // "CSGM", layout 1
    acc = hash_accumulate(acc, num_hashes);
    acc = hash_accumulate(acc, band_rows);
    acc = hash_accumulate(acc, seed);
    return acc;
  }
};

// One column of the signature matrix: per hash function, the minimum hash
// value over the set's elements.
struct Signature {
  std::vector<std::uint64_t> values;
};

// The signature column split into num_bands fingerprints of band_rows values
// each.
struct BandedSignature {
  std::vector<Fingerprint> bands;
};

// values[t] = min over elements e of h_t(e), with h_t keyed by seed ^ t over
// the element's 16-byte (src || dst big-endian) encoding.
inline Signature minhash(std::span<const EdgeId> elements, const MinHashParams& params) {
  params.validate();
  if (elements.empty()) throw ValidationError("minhash of an empty set is undefined");
  Signature sig;
  sig.values.assign(params.num_hashes, std::numeric_limits<std::uint64_t>::max());
  for (const EdgeId& e : elements) {
    for (std::uint32_t t = 0; t < params.num_hashes; ++t) {
      const std::uint64_t h = keyed_hash64(params.seed ^ t, e);
      if (h < sig.values[t]) sig.values[t] = h;
    }
  }
  return sig;
}

inline Signature minhash(const CrossEdgeSet& set, const MinHashParams& params) {
  return minhash(std::span<const EdgeId>(set.edges), params);
}

// Fraction of agreeing positions; unbiased for the Jaccard similarity of the
// underlying sets.
inline double estimate_jaccard(const Signature& a, const Signature& b) {
  if (a.values.size() != b.values.size())
    throw ValidationError("signature length mismatch");
  if (a.values.empty()) throw ValidationError("empty signatures");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (a.values[i] == b.values[i]) ++agree;
  return static_cast<double>(agree) / static_cast<double>(a.values.size());
}

// Band k digests (k || values[k*r .. k*r+r)), all words big-endian. The band
// index prefix keeps identical row content in different bands from aliasing
// in the per-band Bloom filters.
inline BandedSignature band(const Signature& sig, const MinHashParams& params) {
  params.validate();
  if (sig.values.size() != params.num_hashes)
    throw ValidationError("signature length does not match params");
  const std::uint32_t r = params.band_rows;
  BandedSignature banded;
  banded.bands.reserve(params.num_bands());
  std::vector<std::uint8_t> buf(4 + 8 * static_cast<std::size_t>(r));
  for (std::uint32_t k = 0; k < params.num_bands(); ++k) {
    for (int i = 0; i < 4; ++i)
      buf[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(k >> (8 * (3 - i)));
    for (std::uint32_t row = 0; row < r; ++row) {
      const std::uint64_t v = sig.values[static_cast<std::size_t>(k) * r + row];
      for (int i = 0; i < 8; ++i)
        buf[4 + 8 * static_cast<std::size_t>(row) + static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(v >> (8 * (7 - i)));
    }
    banded.bands.push_back(Md5::digest(buf.data(), buf.size()));
  }
  return banded;
}

inline BandedSignature band_set(const CrossEdgeSet& set, const MinHashParams& params) {
  return band(minhash(set, params), params);
}

// Banded signatures for a whole family, one per set, computed in parallel.
inline std::vector<BandedSignature> band_family(const SetFamily& family,
                                                const MinHashParams& params) {
  std::vector<BandedSignature> out(family.sets.size());
  parallel_for(family.sets.size(),
               [&](std::size_t i) { out[i] = band_set(family.sets[i], params); });
  return out;
}

}  // namespace csgm
