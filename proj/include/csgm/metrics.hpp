#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "csgm/graph_io.hpp"
#include "csgm/minhash.hpp"
#include "csgm/parallel.hpp"
#include "csgm/set_discovery.hpp"

namespace csgm {

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;
  std::uint64_t true_positives = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t true_negatives = 0;
  std::uint64_t false_negatives = 0;
  std::uint64_t groups_hit = 0;    // groups with more than half their members predicted
  std::uint64_t groups_total = 0;
};

// Exact Jaccard over sorted element vectors.
inline double exact_jaccard(const std::vector<EdgeId>& a, const std::vector<EdgeId>& b) {
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      ++i;
    else if (b[j] < a[i])
      ++j;
    else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// The quadratic baseline: exact Jaccard for every cross pair, keeping those
// at or above tau (compared exactly at nano-unit threshold precision).
inline std::vector<std::pair<AccountId, AccountId>> brute_force_pairs(const SetFamily& fam_a,
                                                                      const SetFamily& fam_b,
                                                                      double tau) {
  if (!(tau >= 0.0)) throw ValidationError("tau must be non-negative");
  if (tau > 1.0) return {};  // no Jaccard value can qualify
  const auto tau_num = static_cast<std::int64_t>(std::llround(tau * 1e9));
  constexpr std::int64_t tau_den = 1000000000LL;

  std::vector<std::vector<std::pair<AccountId, AccountId>>> rows(fam_a.sets.size());
  parallel_for(fam_a.sets.size(), [&](std::size_t i) {
    const auto& sa = fam_a.sets[i];
    for (const auto& sb : fam_b.sets) {
      std::size_t inter = 0, x = 0, y = 0;
      while (x < sa.edges.size() && y < sb.edges.size()) {
        if (sa.edges[x] < sb.edges[y])
          ++x;
        else if (sb.edges[y] < sa.edges[x])
          ++y;
        else {
          ++inter;
          ++x;
          ++y;
        }
      }
      const std::size_t uni = sa.edges.size() + sb.edges.size() - inter;
      if (uni == 0) continue;
      // inter/uni >= tau_num/tau_den, in integers
      if (static_cast<std::int64_t>(inter) * tau_den >=
          tau_num * static_cast<std::int64_t>(uni))
        rows[i].emplace_back(sa.anchor, sb.anchor);
    }
  });

  std::vector<std::pair<AccountId, AccountId>> pairs;
  for (auto& row : rows) pairs.insert(pairs.end(), row.begin(), row.end());
  return pairs;
}

namespace detail {

inline std::optional<double> rank_auc(const std::vector<std::pair<double, bool>>& samples) {
  std::size_t positives = 0;
  for (const auto& [score, positive] : samples)
    if (positive) ++positives;
  const std::size_t negatives = samples.size() - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  std::vector<std::pair<double, bool>> sorted(samples);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (sorted[t].second) positive_rank_sum += avg_rank;
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

}  // namespace detail

// Node-level confusion metrics over all labeled accounts, plus a rank AUC
// when per-node scores are supplied (similarity mode), plus group coverage:
// a planted group counts as hit when more than half of its members are
// predicted.
inline MetricsReport score(const std::unordered_set<AccountId>& predicted_illicit,
                           const std::unordered_map<AccountId, LabelEntry>& labels,
                           const std::unordered_map<AccountId, double>* scores = nullptr) {
  for (AccountId id : predicted_illicit)
    if (!labels.contains(id))
      throw ValidationError("predicted account " + std::to_string(id) + " has no label");

  MetricsReport report;
  std::map<std::int64_t, std::pair<std::uint64_t, std::uint64_t>> group_cover;  // gid -> (members, predicted)
  for (const auto& [id, entry] : labels) {
    const bool truth = entry.label == Label::illicit;
    const bool predicted = predicted_illicit.contains(id);
    if (truth && predicted)
      ++report.true_positives;
    else if (!truth && predicted)
      ++report.false_positives;
    else if (truth && !predicted)
      ++report.false_negatives;
    else
      ++report.true_negatives;
    if (entry.group_id >= 0) {
      auto& [members, hit] = group_cover[entry.group_id];
      ++members;
      if (predicted) ++hit;
    }
  }

  const double tp = static_cast<double>(report.true_positives);
  const double fp = static_cast<double>(report.false_positives);
  const double fn = static_cast<double>(report.false_negatives);
  const double tn = static_cast<double>(report.true_negatives);
  const double total = tp + fp + fn + tn;
  report.accuracy = total > 0 ? (tp + tn) / total : 0.0;
  report.precision = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
  report.recall = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
  report.f1 = (report.precision + report.recall) > 0
                  ? 2.0 * report.precision * report.recall / (report.precision + report.recall)
                  : 0.0;

  report.groups_total = group_cover.size();
  for (const auto& [gid, cover] : group_cover)
    if (cover.second * 2 > cover.first) ++report.groups_hit;

  if (scores != nullptr) {
    std::vector<std::pair<double, bool>> samples;
    samples.reserve(labels.size());
    for (const auto& [id, entry] : labels) {
      const auto it = scores->find(id);
      samples.emplace_back(it == scores->end() ? 0.0 : it->second,
                           entry.label == Label::illicit);
    }
    report.auc = detail::rank_auc(samples);
  }
  return report;
}

// Frequency histogram of band-fingerprint repetitions: for each band, every
// fingerprint shared by c sets contributes c to bucket c; buckets are summed
// across bands. With distinctive sets the mass sits at repeat = 1.
inline std::map<std::uint64_t, std::uint64_t> band_repetition_histogram(
    const SetFamily& family, const MinHashParams& params) {
  const auto sigs = band_family(family, params);
  std::map<std::uint64_t, std::uint64_t> histogram;
  if (sigs.empty()) return histogram;
  for (std::uint32_t k = 0; k < params.num_bands(); ++k) {
    std::unordered_map<Fingerprint, std::uint64_t, FingerprintHash> counts;
    for (const auto& sig : sigs) ++counts[sig.bands[k]];
    for (const auto& [fp, c] : counts) histogram[c] += c;
  }
  return histogram;
}

}  // namespace csgm
