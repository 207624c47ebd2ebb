#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "csgm/common.hpp"

namespace csgm {

struct Edge {
  AccountId src = 0;
  AccountId dst = 0;
  Amount amount = 0;
  bool cross = false;

  bool operator==(const Edge&) const = default;
};

// Directed transaction multigraph. Immutable after construction; adjacency is
// indexed once so traversals are allocation-free lookups.
class TransactionGraph {
 public:
  TransactionGraph() = default;

  static TransactionGraph from_edges(std::vector<Edge> edges,
                                     const std::vector<AccountId>& extra_nodes = {}) {
    TransactionGraph g;
    g.edges_ = std::move(edges);
    std::vector<AccountId> nodes;
    nodes.reserve(g.edges_.size() * 2 + extra_nodes.size());
    for (const Edge& e : g.edges_) {
      if (e.amount < 0)
        throw ValidationError("negative edge amount " + format_amount(e.amount));
      nodes.push_back(e.src);
      nodes.push_back(e.dst);
    }
    nodes.insert(nodes.end(), extra_nodes.begin(), extra_nodes.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    g.nodes_ = std::move(nodes);
    g.build_index();
    return g;
  }

  const std::vector<AccountId>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  bool has_node(AccountId id) const { return index_.contains(id); }

  std::uint32_t node_index(AccountId id) const {
    auto it = index_.find(id);
    if (it == index_.end())
      throw ValidationError("unknown account " + std::to_string(id));
    return it->second;
  }

  // Edge indices leaving / entering a node.
  std::span<const std::uint32_t> out_edges(AccountId id) const {
    return adjacency_span(out_offsets_, out_list_, node_index(id));
  }
  std::span<const std::uint32_t> in_edges(AccountId id) const {
    return adjacency_span(in_offsets_, in_list_, node_index(id));
  }
  std::span<const std::uint32_t> out_edges_by_index(std::uint32_t ni) const {
    return adjacency_span(out_offsets_, out_list_, ni);
  }
  std::span<const std::uint32_t> in_edges_by_index(std::uint32_t ni) const {
    return adjacency_span(in_offsets_, in_list_, ni);
  }

  std::size_t out_degree(AccountId id) const { return out_edges(id).size(); }

  bool aggregated() const { return aggregated_; }

  void require_aggregated(const char* where) const {
    if (!aggregated_)
      throw ValidationError(std::string(where) + " requires an aggregated graph");
  }

 private:
  static std::span<const std::uint32_t> adjacency_span(const std::vector<std::uint32_t>& offsets,
                                                       const std::vector<std::uint32_t>& list,
                                                       std::uint32_t ni) {
    return {list.data() + offsets[ni], list.data() + offsets[ni + 1]};
  }

  void build_index() {
    index_.clear();
    index_.reserve(nodes_.size());
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) index_[nodes_[i]] = i;

    const std::size_t n = nodes_.size();
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (const Edge& e : edges_) {
      ++out_offsets_[index_[e.src] + 1];
      ++in_offsets_[index_[e.dst] + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
      out_offsets_[i + 1] += out_offsets_[i];
      in_offsets_[i + 1] += in_offsets_[i];
    }
    out_list_.resize(edges_.size());
    in_list_.resize(edges_.size());
    std::vector<std::uint32_t> out_cursor(out_offsets_.begin(), out_offsets_.end() - 1);
    std::vector<std::uint32_t> in_cursor(in_offsets_.begin(), in_offsets_.end() - 1);
    for (std::uint32_t ei = 0; ei < edges_.size(); ++ei) {
      out_list_[out_cursor[index_[edges_[ei].src]]++] = ei;
      in_list_[in_cursor[index_[edges_[ei].dst]]++] = ei;
    }

    std::vector<std::pair<AccountId, AccountId>> pairs;
    pairs.reserve(edges_.size());
    for (const Edge& e : edges_) pairs.emplace_back(e.src, e.dst);
    std::sort(pairs.begin(), pairs.end());
    aggregated_ = std::adjacent_find(pairs.begin(), pairs.end()) == pairs.end();
  }

  std::vector<AccountId> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<AccountId, std::uint32_t> index_;
  std::vector<std::uint32_t> out_offsets_, out_list_;
  std::vector<std::uint32_t> in_offsets_, in_list_;
  bool aggregated_ = true;
};

// One edge per ordered (src, dst) pair: amounts summed, cross flags OR-ed.
// Output edges are in canonical (src, dst) order.
inline TransactionGraph aggregate_edges(const TransactionGraph& g) {
  std::vector<Edge> merged(g.edges());
  std::sort(merged.begin(), merged.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });
  std::vector<Edge> out;
  out.reserve(merged.size());
  for (const Edge& e : merged) {
    if (!out.empty() && out.back().src == e.src && out.back().dst == e.dst) {
      out.back().amount += e.amount;
      out.back().cross = out.back().cross || e.cross;
    } else {
      out.push_back(e);
    }
  }
  return TransactionGraph::from_edges(std::move(out), g.nodes());
}

// Keeps edges with amount >= min_amount; the node set is unchanged.
inline TransactionGraph filter_small_transactions(const TransactionGraph& g, Amount min_amount) {
  if (min_amount < 0) throw ValidationError("min_amount must be non-negative");
  std::vector<Edge> kept;
  kept.reserve(g.edges().size());
  for (const Edge& e : g.edges())
    if (e.amount >= min_amount) kept.push_back(e);
  return TransactionGraph::from_edges(std::move(kept), g.nodes());
}

// Flips every edge; node set and attributes unchanged. An involution.
inline TransactionGraph reverse(const TransactionGraph& g) {
  std::vector<Edge> flipped;
  flipped.reserve(g.edges().size());
  for (const Edge& e : g.edges())
    flipped.push_back(Edge{e.dst, e.src, e.amount, e.cross});
  return TransactionGraph::from_edges(std::move(flipped), g.nodes());
}

// One institution's holdings: its subgraph plus the overlap accounts both
// parties record (every endpoint of a cross-institution transaction).
struct InstitutionView {
  PartyId party = PartyId::A;
  TransactionGraph graph;
  std::unordered_set<AccountId> boundary;
};

// Derives the boundary from the cross flags of an already-loaded view graph.
inline InstitutionView make_view(PartyId party, TransactionGraph graph) {
  InstitutionView view;
  view.party = party;
  view.boundary.reserve(graph.num_edges() / 4 + 1);
  for (const Edge& e : graph.edges()) {
    if (e.cross) {
      view.boundary.insert(e.src);
      view.boundary.insert(e.dst);
    }
  }
  view.graph = std::move(graph);
  return view;
}

// Splits a full graph into the two institution views. Cross flags are
// recomputed from the assignment: an edge whose endpoints are held by
// different parties appears in both views with cross=true and both endpoints
// recorded in both boundaries (both institutions know the counterpart
// account of a cross-institution transaction).
inline std::pair<InstitutionView, InstitutionView> split_views(
    const TransactionGraph& full, const std::unordered_map<AccountId, PartyId>& assignment) {
  auto party_of = [&](AccountId id) {
    auto it = assignment.find(id);
    if (it == assignment.end())
      throw ValidationError("unassigned account " + std::to_string(id));
    return it->second;
  };

  std::vector<Edge> edges_a, edges_b;
  std::unordered_set<AccountId> boundary;
  for (const Edge& e : full.edges()) {
    const PartyId ps = party_of(e.src);
    const PartyId pd = party_of(e.dst);
    if (ps == pd) {
      Edge internal = e;
      internal.cross = false;
      (ps == PartyId::A ? edges_a : edges_b).push_back(internal);
    } else {
      Edge crossing = e;
      crossing.cross = true;
      edges_a.push_back(crossing);
      edges_b.push_back(crossing);
      boundary.insert(e.src);
      boundary.insert(e.dst);
    }
  }

  std::vector<AccountId> own_a, own_b;
  for (AccountId id : full.nodes())
    (party_of(id) == PartyId::A ? own_a : own_b).push_back(id);

  InstitutionView a, b;
  a.party = PartyId::A;
  b.party = PartyId::B;
  a.graph = TransactionGraph::from_edges(std::move(edges_a), own_a);
  b.graph = TransactionGraph::from_edges(std::move(edges_b), own_b);
  a.boundary = boundary;
  b.boundary = std::move(boundary);
  return {std::move(a), std::move(b)};
}

enum class Label : std::uint8_t { licit = 0, illicit = 1 };

struct PlantedGroup {
  AccountId source = 0;
  AccountId destination = 0;
  std::vector<AccountId> members;  // includes source and destination
};

// Ground-truth container produced by the synthetic generator.
struct LabeledDataset {
  TransactionGraph full;
  InstitutionView view_a;
  InstitutionView view_b;
  std::unordered_map<AccountId, PartyId> assignment;
  std::unordered_map<AccountId, Label> labels;
  std::vector<PlantedGroup> groups;
};

}  // namespace csgm
