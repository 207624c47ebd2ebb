#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <set>
#include <unordered_map>
#include <vector>

#include "csgm/graph.hpp"
#include "csgm/parallel.hpp"
#include "csgm/rational.hpp"

namespace csgm {

// Marked ("dirty") money propagation from one candidate source node.
struct MarkedFlowState {
  AccountId source = 0;
  std::unordered_map<AccountId, Rational> marked_in;
  std::unordered_map<AccountId, Rational> marked_out;
  std::unordered_map<AccountId, Amount> total_in;
  std::unordered_map<AccountId, Amount> total_out;

  Rational marked_in_of(AccountId id) const {
    auto it = marked_in.find(id);
    return it == marked_in.end() ? Rational(0) : it->second;
  }
  Rational marked_out_of(AccountId id) const {
    auto it = marked_out.find(id);
    return it == marked_out.end() ? Rational(0) : it->second;
  }
  Amount total_in_of(AccountId id) const {
    auto it = total_in.find(id);
    return it == total_in.end() ? 0 : it->second;
  }
  Amount total_out_of(AccountId id) const {
    auto it = total_out.find(id);
    return it == total_out.end() ? 0 : it->second;
  }
};

struct FlaggedNode {
  AccountId node = 0;
  double ratio = 0.0;
};

struct SgmDetection {
  AccountId source = 0;
  std::vector<FlaggedNode> flagged;  // ratio-descending
};

// Seeds the source's entire outflow as marked money and pushes it through
// the graph. Every out-edge carries its amount-proportional share of the
// sending node's marked outflow; a node's marked outflow is its marked
// inflow scaled down when total inflow exceeds total outflow.
//
// Nodes are finalized in dependency order (all in-edges from finalized
// nodes first) so the result matches an edge-by-edge topological simulation
// exactly on acyclic graphs. Inside a cycle no such order exists; the
// pending node nearest the source (then lowest id) is finalized with
// whatever marked money has reached it, and late contributions into
// finalized nodes are dropped.
inline MarkedFlowState propagate_marked(const TransactionGraph& g, AccountId source) {
  g.require_aggregated("propagate_marked");
  if (!g.has_node(source))
    throw ValidationError("source account " + std::to_string(source) + " not in graph");

  MarkedFlowState state;
  state.source = source;
  for (const Edge& e : g.edges()) {
    state.total_out[e.src] += e.amount;
    state.total_in[e.dst] += e.amount;
  }

  // Reachable set and BFS distance from the source.
  std::unordered_map<AccountId, std::uint32_t> dist;
  dist[source] = 0;
  std::queue<AccountId> frontier;
  frontier.push(source);
  while (!frontier.empty()) {
    const AccountId v = frontier.front();
    frontier.pop();
    for (std::uint32_t ei : g.out_edges(v)) {
      const AccountId j = g.edges()[ei].dst;
      if (dist.emplace(j, dist[v] + 1).second) frontier.push(j);
    }
  }

  // In-degree inside the reachable subgraph; edges into the source are
  // irrelevant (it is finalized first and its inflow is ignored).
  std::unordered_map<AccountId, std::uint32_t> pending_in;
  for (const auto& [node, _] : dist) pending_in[node] = 0;
  for (const Edge& e : g.edges())
    if (dist.contains(e.src) && dist.contains(e.dst) && e.dst != source) ++pending_in[e.dst];

  using Key = std::pair<std::uint32_t, AccountId>;  // (distance, id)
  std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
  std::set<Key> unfinalized;
  for (const auto& [node, d] : dist)
    if (node != source) unfinalized.insert({d, node});
  ready.push({0, source});

  std::unordered_map<AccountId, Rational> accumulated;
  std::unordered_map<AccountId, bool> finalized;

  auto finalize = [&](AccountId v) {
    finalized[v] = true;
    unfinalized.erase({dist[v], v});
    Rational m_out;
    if (v == source) {
      state.marked_in[v] = 0;
      m_out = Rational(state.total_out_of(v));
    } else {
      const Rational m_in = accumulated[v];
      state.marked_in[v] = m_in;
      const Amount t_in = state.total_in_of(v);
      const Amount t_out = state.total_out_of(v);
      if (t_in > t_out)
        m_out = m_in * t_out / t_in;
      else
        m_out = std::min(m_in, Rational(t_out));
    }
    state.marked_out[v] = m_out;

    const Amount t_out = state.total_out_of(v);
    for (std::uint32_t ei : g.out_edges(v)) {
      const Edge& e = g.edges()[ei];
      if (finalized[e.dst] || e.dst == source) continue;
      if (t_out > 0 && m_out != 0)
        accumulated[e.dst] += m_out * e.amount / t_out;
      if (--pending_in[e.dst] == 0) ready.push({dist[e.dst], e.dst});
    }
  };

  std::size_t remaining = dist.size();
  while (remaining > 0) {
    AccountId v;
    if (!ready.empty()) {
      v = ready.top().second;
      ready.pop();
      if (finalized[v]) continue;
    } else {
      v = unfinalized.begin()->second;  // cycle: break at the nearest pending node
    }
    finalize(v);
    --remaining;
  }
  return state;
}

// Flags every node whose marked-inflow share of the source's outflow meets
// the threshold. An outflow-less source yields an empty detection.
inline SgmDetection detect_sgm(const TransactionGraph& g, AccountId source, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw ValidationError("threshold must be in (0, 1]");
  const MarkedFlowState state = propagate_marked(g, source);
  SgmDetection result;
  result.source = source;
  const Rational denom = state.marked_out_of(source);
  if (denom == 0) return result;

  const Rational bar = decimal_rational(threshold);
  std::vector<std::pair<Rational, AccountId>> hits;
  for (const auto& [node, m_in] : state.marked_in) {
    if (node == source) continue;
    const Rational ratio = m_in / denom;
    if (ratio >= bar) hits.emplace_back(ratio, node);
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  result.flagged.reserve(hits.size());
  for (const auto& [ratio, node] : hits)
    result.flagged.push_back({node, to_double(ratio)});
  return result;
}

// Batch driver: every node with out-degree >= 2 is a candidate source;
// detections smaller than min_group_size are dropped.
inline std::vector<SgmDetection> run_sgm_all_sources(const TransactionGraph& g, double threshold,
                                                     std::size_t min_group_size) {
  g.require_aggregated("run_sgm_all_sources");
  std::vector<AccountId> candidates;
  for (AccountId id : g.nodes())
    if (g.out_degree(id) >= 2) candidates.push_back(id);

  std::vector<SgmDetection> detections(candidates.size());
  parallel_for(candidates.size(),
               [&](std::size_t i) { detections[i] = detect_sgm(g, candidates[i], threshold); });

  std::vector<SgmDetection> kept;
  for (auto& d : detections)
    if (d.flagged.size() >= min_group_size) kept.push_back(std::move(d));
  return kept;
}

}  // namespace csgm
