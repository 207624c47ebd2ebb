#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "csgm/graph.hpp"

namespace csgm {

// Synthetic two-institution dataset with planted scatter-gather groups.
//
// Each group: a source fans out to fan_width strands; every strand walks a
// few internal hops on the source side, crosses institutions exactly once,
// then walks internal hops on the destination side before gathering at the
// destination. Strand amounts ride unchanged along the strand. Background
// edges are uniform random pairs with log-normal amounts.
struct GenConfig {
  std::uint64_t num_accounts = 10000;
  std::uint64_t background_edges = 2000;
  std::uint32_t num_groups = 50;
  std::uint32_t fan_width_min = 5;
  std::uint32_t fan_width_max = 10;
  std::uint32_t layering_depth_min = 1;
  std::uint32_t layering_depth_max = 3;
  double party_balance = 0.5;  // fraction of accounts assigned to A
  double amount_mu = 5.0;      // log-normal parameters, currency units
  double amount_sigma = 1.0;
  Amount planted_amount_min = 20000;  // strand amount floor, minor units
  // Fraction of extra strands per group that cross away from the planted
  // pair (lowering the true Jaccard between the source's scatter set and
  // the destination's gather set).
  double noise_fraction = 0.0;
  std::uint64_t seed = 0;
};

inline LabeledDataset generate(const GenConfig& config) {
  if (config.num_accounts < 2) throw ValidationError("need at least two accounts");
  if (config.fan_width_min < 1 || config.fan_width_min > config.fan_width_max)
    throw ValidationError("bad fan width range");
  if (config.layering_depth_min < 1 || config.layering_depth_min > config.layering_depth_max)
    throw ValidationError("bad layering depth range");
  if (!(config.party_balance > 0.0 && config.party_balance < 1.0))
    throw ValidationError("party_balance must be in (0, 1)");
  if (!(config.noise_fraction >= 0.0 && config.noise_fraction <= 1.0))
    throw ValidationError("noise_fraction must be in [0, 1]");
  if (config.fan_width_max > config.num_accounts)
    throw ValidationError("fan width exceeds the account pool");

  std::mt19937_64 rng(config.seed);

  const auto n = config.num_accounts;
  auto n_a = static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * config.party_balance));
  n_a = std::min<std::uint64_t>(std::max<std::uint64_t>(n_a, 1), n - 1);

  LabeledDataset ds;
  ds.assignment.reserve(n);
  std::vector<AccountId> pool_a, pool_b;
  for (AccountId id = 1; id <= n; ++id) {
    const PartyId party = id <= n_a ? PartyId::A : PartyId::B;
    ds.assignment[id] = party;
    (party == PartyId::A ? pool_a : pool_b).push_back(id);
  }
  std::shuffle(pool_a.begin(), pool_a.end(), rng);
  std::shuffle(pool_b.begin(), pool_b.end(), rng);

  auto take = [](std::vector<AccountId>& pool) {
    if (pool.empty())
      throw ValidationError("generator config infeasible: account pool exhausted");
    const AccountId id = pool.back();
    pool.pop_back();
    return id;
  };

  std::lognormal_distribution<double> amount_dist(config.amount_mu, config.amount_sigma);
  auto background_amount = [&] {
    const double units = amount_dist(rng);
    return std::max<Amount>(1, static_cast<Amount>(std::llround(units * 100.0)));
  };
  auto planted_amount = [&] {
    return config.planted_amount_min + background_amount();
  };

  std::vector<Edge> edges;
  ds.labels.reserve(n);
  for (AccountId id = 1; id <= n; ++id) ds.labels[id] = Label::licit;

  auto push_edge = [&](AccountId u, AccountId v, Amount amount) {
    edges.push_back({u, v, amount, ds.assignment.at(u) != ds.assignment.at(v)});
  };

  for (std::uint32_t gi = 0; gi < config.num_groups; ++gi) {
    const bool source_in_a = gi % 2 == 0;
    auto& src_pool = source_in_a ? pool_a : pool_b;
    auto& dst_pool = source_in_a ? pool_b : pool_a;

    PlantedGroup group;
    group.source = take(src_pool);
    group.destination = take(dst_pool);
    group.members.push_back(group.source);
    group.members.push_back(group.destination);

    std::uniform_int_distribution<std::uint32_t> width_dist(config.fan_width_min,
                                                            config.fan_width_max);
    std::uniform_int_distribution<std::uint32_t> depth_dist(config.layering_depth_min,
                                                            config.layering_depth_max);
    const std::uint32_t width = width_dist(rng);

    // A strand from `from` toward `to`: d1 internal hops on the from-side,
    // one crossing, d2 internal hops on the to-side. Either endpoint may be
    // replaced by a fresh orphan account for noise strands.
    auto lay_strand = [&](AccountId from, AccountId to) {
      const std::uint32_t d1 = depth_dist(rng);
      const std::uint32_t d2 = depth_dist(rng);
      const Amount amount = planted_amount();
      AccountId prev = from;
      for (std::uint32_t h = 0; h < d1; ++h) {
        const AccountId mid = take(src_pool);
        group.members.push_back(mid);
        push_edge(prev, mid, amount);
        prev = mid;
      }
      for (std::uint32_t h = 0; h < d2; ++h) {
        const AccountId mid = take(dst_pool);
        group.members.push_back(mid);
        push_edge(prev, mid, amount);  // first of these is the crossing
        prev = mid;
      }
      push_edge(prev, to, amount);
    };

    for (std::uint32_t s = 0; s < width; ++s) lay_strand(group.source, group.destination);

    const auto noise_strands =
        static_cast<std::uint32_t>(std::llround(config.noise_fraction * width));
    for (std::uint32_t s = 0; s < noise_strands; ++s) {
      if (s % 2 == 0) {
        // Scatter-side orphan: crosses but parks at a fresh destination-side
        // sink, entering the source's scatter set only.
        const AccountId sink = take(dst_pool);
        group.members.push_back(sink);
        lay_strand(group.source, sink);
      } else {
        // Gather-side orphan: a fresh feeder whose strand gathers at the
        // destination, entering the destination's gather set only.
        const AccountId feeder = take(src_pool);
        group.members.push_back(feeder);
        lay_strand(feeder, group.destination);
      }
    }

    std::sort(group.members.begin(), group.members.end());
    for (AccountId member : group.members) ds.labels[member] = Label::illicit;
    ds.groups.push_back(std::move(group));
  }

  std::uniform_int_distribution<AccountId> node_dist(1, n);
  for (std::uint64_t e = 0; e < config.background_edges; ++e) {
    AccountId u = node_dist(rng);
    AccountId v = node_dist(rng);
    while (v == u) v = node_dist(rng);
    push_edge(u, v, background_amount());
  }

  std::vector<AccountId> all_accounts;
  all_accounts.reserve(n);
  for (AccountId id = 1; id <= n; ++id) all_accounts.push_back(id);

  ds.full = aggregate_edges(TransactionGraph::from_edges(std::move(edges), all_accounts));
  auto [view_a, view_b] = split_views(ds.full, ds.assignment);
  ds.view_a = std::move(view_a);
  ds.view_b = std::move(view_b);
  return ds;
}

}  // namespace csgm
