#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "csgm/bloom.hpp"
#include "csgm/minhash.hpp"
#include "csgm/parallel.hpp"
#include "csgm/rational.hpp"

namespace csgm {

enum class DetectMode : std::uint8_t { prob = 0, sim = 1 };

struct DetectionConfig {
  DetectMode mode = DetectMode::sim;
  double tau = 0.2;  // similarity threshold, sim mode only
  MinHashParams params;
};

struct SetVerdict {
  AccountId anchor = 0;
  bool hit = false;
  std::uint32_t matched_bands = 0;  // l; prob mode may stop at the first match
  std::uint32_t num_bands = 0;      // K
  std::optional<double> estimated_similarity;  // (l/K)^(1/r), sim mode only
};

namespace detail {

inline void check_bank_params(const BloomBank& bank, const MinHashParams& params) {
  if (bank.params_digest != params.digest())
    throw ProtocolError("bank was built with different MinHash parameters");
  if (bank.num_bands() != params.num_bands())
    throw ProtocolError("bank band count does not match parameters");
}

// Indices of bands whose fingerprint tests positive in the corresponding
// filter. Stops after the first match when early_exit is set.
inline std::vector<std::uint32_t> matched_band_indices(const BandedSignature& sig,
                                                       const BloomBank& bank, bool early_exit) {
  std::vector<std::uint32_t> matched;
  for (std::uint32_t k = 0; k < bank.num_bands(); ++k) {
    if (bank.filters[k].query(sig.bands[k])) {
      matched.push_back(k);
      if (early_exit) break;
    }
  }
  return matched;
}

}  // namespace detail

// Probability-based detector: a single band hit flags the set.
inline SetVerdict is_similar_prob(const BandedSignature& sig, AccountId anchor,
                                  const BloomBank& bank, const MinHashParams& params) {
  detail::check_bank_params(bank, params);
  const auto matched = detail::matched_band_indices(sig, bank, /*early_exit=*/true);
  SetVerdict verdict;
  verdict.anchor = anchor;
  verdict.num_bands = params.num_bands();
  verdict.matched_bands = static_cast<std::uint32_t>(matched.size());
  verdict.hit = !matched.empty();
  return verdict;
}

inline SetVerdict is_similar_prob(const CrossEdgeSet& set, const BloomBank& bank,
                                  const MinHashParams& params) {
  return is_similar_prob(band_set(set, params), set.anchor, bank, params);
}

// Similarity-based detector: the matched-band fraction l/K estimates the
// r-th power of the largest similarity against the inserted sets; a set is
// flagged when l/K >= tau^r. The tie comparison is exact (tau read at
// nano-unit precision), so l/K == tau^r counts as a hit.
inline SetVerdict is_similar_sim(const BandedSignature& sig, AccountId anchor,
                                 const BloomBank& bank, const MinHashParams& params, double tau) {
  detail::check_bank_params(bank, params);
  if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("tau must be in (0, 1]");
  const auto matched = detail::matched_band_indices(sig, bank, /*early_exit=*/false);
  const std::uint32_t num_bands = params.num_bands();

  SetVerdict verdict;
  verdict.anchor = anchor;
  verdict.num_bands = num_bands;
  verdict.matched_bands = static_cast<std::uint32_t>(matched.size());

  Rational tau_pow_r = 1;
  const Rational tau_exact = decimal_rational(tau);
  for (std::uint32_t i = 0; i < params.band_rows; ++i) tau_pow_r *= tau_exact;
  verdict.hit = Rational(verdict.matched_bands, num_bands) >= tau_pow_r;

  const double fraction =
      static_cast<double>(verdict.matched_bands) / static_cast<double>(num_bands);
  verdict.estimated_similarity = std::pow(fraction, 1.0 / params.band_rows);
  return verdict;
}

inline SetVerdict is_similar_sim(const CrossEdgeSet& set, const BloomBank& bank,
                                 const MinHashParams& params, double tau) {
  return is_similar_sim(band_set(set, params), set.anchor, bank, params, tau);
}

// Probability that a query set with true similarity s to some inserted set
// matches in at least one of K bands of r rows: 1 - (1 - s^r)^K.
inline double hit_probability(double s, std::uint32_t r, std::uint32_t K) {
  if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("similarity must be in [0, 1]");
  if (r < 1 || K < 1) throw ValidationError("r and K must be >= 1");
  return 1.0 - std::pow(1.0 - std::pow(s, static_cast<double>(r)), static_cast<double>(K));
}

// Least r for which the banding estimate of the dominant similarity is
// within epsilon: any sequence X1 >= X2 >= ... >= XN with Xi <= p*X1 for
// i >= 2 satisfies (sum Xi^r)^(1/r) - X1 <= epsilon once
// r > log_p(epsilon / (X1 * (N - 1))).
inline std::uint32_t banding_bias_bound(double x1, double p, std::uint32_t n_overlapping,
                                        double epsilon) {
  if (!(x1 > 0.0 && x1 <= 1.0)) throw ValidationError("X1 must be in (0, 1]");
  if (n_overlapping < 2) throw ValidationError("need at least two overlapping sets");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (p >= 1.0) throw ValidationError("requires X2 < X1 (p < 1)");
  if (p <= 0.0) return 1;  // all trailing terms vanish; the sum is X1^r exactly

  const double ratio = epsilon / (x1 * static_cast<double>(n_overlapping - 1));
  if (ratio >= 1.0) return 1;
  const double bound = std::log(ratio) / std::log(p);
  if (!(bound < 1e9))
    throw ValidationError("no practical r meets epsilon for p this close to 1");
  const double floor = std::floor(bound);
  return static_cast<std::uint32_t>(floor) + 1;  // strictly greater than the bound
}

// Applies the configured detector to every set of the family against the
// received bank. Output follows the family's anchor order.
inline std::vector<SetVerdict> detect_family(const SetFamily& family, const BloomBank& bank,
                                             const DetectionConfig& config) {
  detail::check_bank_params(bank, config.params);
  std::vector<SetVerdict> verdicts(family.sets.size());
  parallel_for(family.sets.size(), [&](std::size_t i) {
    const CrossEdgeSet& set = family.sets[i];
    verdicts[i] = config.mode == DetectMode::prob
                      ? is_similar_prob(set, bank, config.params)
                      : is_similar_sim(set, bank, config.params, config.tau);
  });
  return verdicts;
}

}  // namespace csgm
