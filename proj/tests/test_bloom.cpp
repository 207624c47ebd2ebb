#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <random>

#include "csgm/bloom.hpp"

using namespace csgm;

namespace {

Fingerprint random_fp(std::mt19937_64& rng) {
  Fingerprint fp;
  for (auto& b : fp.bytes) b = static_cast<std::uint8_t>(rng());
  return fp;
}

CrossEdgeSet set_of(AccountId anchor, std::initializer_list<EdgeId> edges) {
  CrossEdgeSet set;
  set.anchor = anchor;
  set.edges = edges;
  std::sort(set.edges.begin(), set.edges.end());
  return set;
}

}  // namespace

TEST_CASE("size_for evaluates the closed form") {
  SECTION("reference point") {
    const auto sizing = size_for(1000, 0.01);
    CHECK(sizing.filter_bits == 9586);
    CHECK(sizing.probe_hashes == 7);
  }
  SECTION("epsilon one half needs a single probe") {
    CHECK(size_for(1000, 0.5).probe_hashes == 1);
  }
  SECTION("fifty-two thousand sets need about half a million bits at one percent") {
    const auto sizing = size_for(52165, 0.01);
    CHECK(std::llabs(static_cast<long long>(sizing.filter_bits) - 500000) < 500);
  }
  SECTION("domain checks") {
    CHECK_THROWS_AS(size_for(1000, 0.0), ValidationError);
    CHECK_THROWS_AS(size_for(1000, 1.0), ValidationError);
    CHECK_THROWS_AS(size_for(0, 0.01), ValidationError);
  }
}

TEST_CASE("bloom filter membership") {
  std::mt19937_64 rng(43);
  BloomFilter filter(4096, 5);

  SECTION("fresh filter answers false everywhere") {
    for (int i = 0; i < 100; ++i) CHECK_FALSE(filter.query(random_fp(rng)));
    CHECK(filter.insert_count() == 0);
  }
  SECTION("no false negatives, ever") {
    std::vector<Fingerprint> inserted;
    for (int i = 0; i < 200; ++i) {
      inserted.push_back(random_fp(rng));
      filter.insert(inserted.back());
    }
    for (const auto& fp : inserted) CHECK(filter.query(fp));
    CHECK(filter.insert_count() == 200);
  }
  SECTION("re-inserting leaves the bit array unchanged") {
    const auto fp = random_fp(rng);
    filter.insert(fp);
    const auto snapshot = filter.data();
    filter.insert(fp);
    CHECK(filter.data() == snapshot);
    CHECK(filter.insert_count() == 2);
  }
  SECTION("geometry bounds") {
    CHECK_THROWS_AS(BloomFilter(4, 1), ValidationError);
    CHECK_THROWS_AS(BloomFilter(64, 0), ValidationError);
  }
}

TEST_CASE("measured false-positive rate tracks the design epsilon") {
  std::mt19937_64 rng(47);
  const std::uint64_t n = 1000;
  const auto sizing = size_for(n, 0.01);
  BloomFilter filter(sizing.filter_bits, sizing.probe_hashes, n);
  for (std::uint64_t i = 0; i < n; ++i) filter.insert(random_fp(rng));

  std::size_t fp_count = 0;
  const std::size_t probes = 100000;
  for (std::size_t i = 0; i < probes; ++i)
    if (filter.query(random_fp(rng))) ++fp_count;
  const double rate = static_cast<double>(fp_count) / static_cast<double>(probes);
  CHECK(rate >= 0.005);
  CHECK(rate <= 0.02);
  CHECK_THAT(filter.predicted_fp_rate(), Catch::Matchers::WithinAbs(0.01, 0.002));
}

TEST_CASE("build_bank inserts one fingerprint per band per set") {
  const MinHashParams params(6, 2, 42);  // three bands
  const std::vector<CrossEdgeSet> sets{
      set_of(1, {{1, 10}, {2, 20}, {3, 30}}),
      set_of(2, {{2, 20}, {3, 30}, {4, 40}}),
      set_of(3, {{5, 50}, {6, 60}}),
  };
  SetFamily family;
  family.sets = sets;

  const auto bank = build_bank(family, params, 4096, 5);
  REQUIRE(bank.filters.size() == 3);
  for (const auto& filter : bank.filters) CHECK(filter.insert_count() == 3);

  SECTION("own bands always query positive") {
    for (const auto& set : sets) {
      const auto banded = band_set(set, params);
      for (std::size_t k = 0; k < banded.bands.size(); ++k)
        CHECK(bank.filters[k].query(banded.bands[k]));
    }
  }
  SECTION("single-set family inserts once per filter") {
    SetFamily one;
    one.sets = {sets[0]};
    const auto small = build_bank(one, params, 4096, 5);
    for (const auto& filter : small.filters) CHECK(filter.insert_count() == 1);
  }
}

TEST_CASE("bank serialization round trips bit for bit") {
  std::mt19937_64 rng(53);
  const MinHashParams params(20, 4, 7);  // five bands

  std::vector<BandedSignature> sigs(17);
  for (auto& sig : sigs) {
    sig.bands.resize(params.num_bands());
    for (auto& fp : sig.bands) fp = random_fp(rng);
  }
  const auto bank = build_bank(sigs, params, 2048, 3);
  const auto payload = serialize(bank);

  SECTION("exact payload size") {
    CHECK(payload.size() == 26 + params.num_bands() * (8 + 2048 / 8));
  }
  SECTION("round trip") {
    const auto restored = deserialize(payload);
    CHECK(restored.params_digest == bank.params_digest);
    REQUIRE(restored.filters.size() == bank.filters.size());
    for (std::size_t k = 0; k < bank.filters.size(); ++k) {
      CHECK(restored.filters[k].data() == bank.filters[k].data());
      CHECK(restored.filters[k].insert_count() == bank.filters[k].insert_count());
      CHECK(restored.filters[k].filter_bits() == bank.filters[k].filter_bits());
      CHECK(restored.filters[k].probe_hashes() == bank.filters[k].probe_hashes());
    }
    CHECK(serialize(restored) == payload);
  }
  SECTION("truncation fails without a partial bank") {
    for (std::size_t cut : {3UL, 20UL, 30UL, payload.size() - 1}) {
      std::span<const std::uint8_t> clipped(payload.data(), cut);
      CHECK_THROWS_AS(deserialize(clipped), DecodeError);
    }
  }
  SECTION("bad magic") {
    auto corrupted = payload;
    corrupted[0] = 'X';
    CHECK_THROWS_AS(deserialize(corrupted), DecodeError);
  }
  SECTION("unsupported version") {
    auto corrupted = payload;
    corrupted[4] = 0xff;
    CHECK_THROWS_AS(deserialize(corrupted), DecodeError);
  }
  SECTION("trailing bytes rejected") {
    auto padded = payload;
    padded.push_back(0);
    CHECK_THROWS_AS(deserialize(padded), DecodeError);
  }
  SECTION("empty bank is a bare header") {
    const BloomBank empty{{}, 123};
    const auto bytes = serialize(empty);
    CHECK(bytes.size() == 26);
    const auto restored = deserialize(bytes);
    CHECK(restored.filters.empty());
    CHECK(restored.params_digest == 123);
  }
  SECTION("header layout is pinned byte for byte") {
    BloomBank tiny;
    tiny.params_digest = 0x0123456789abcdefULL;
    tiny.filters.emplace_back(16, 3);
    const auto bytes = serialize(tiny);
    const std::vector<std::uint8_t> expected{
        'C',  'S',  'G',  'M',              // magic
        0x01, 0x00,                         // version
        0x01, 0x00,                         // num_bands
        0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // filter_bits = 16
        0x03, 0x00,                         // probe hashes
        0xef, 0xcd, 0xab, 0x89, 0x67, 0x45, 0x23, 0x01,  // params digest LE
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // insert_count
        0x00, 0x00,                         // 16 empty bits
    };
    CHECK(bytes == expected);
  }
}

TEST_CASE("probe positions follow the double-hashing rule") {
  // position_i = (lo64 + i*hi64) mod filter_bits over the digest halves.
  Fingerprint fp;
  for (std::size_t i = 0; i < 16; ++i) fp.bytes[i] = static_cast<std::uint8_t>(i + 1);
  BloomFilter filter(64, 3);
  filter.insert(fp);

  const std::uint64_t lo = fp.lo64(), hi = fp.hi64();
  std::size_t set_bits = 0;
  for (std::uint64_t pos = 0; pos < 64; ++pos)
    if ((filter.data()[pos / 8] >> (pos % 8)) & 1) ++set_bits;
  CHECK(set_bits <= 3);
  for (std::uint32_t i = 0; i < 3; ++i) {
    const std::uint64_t pos = (lo + i * hi) % 64;
    CHECK(((filter.data()[pos / 8] >> (pos % 8)) & 1) == 1);
  }
}
