#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "csgm/graph.hpp"
#include "csgm/parallel.hpp"

namespace csgm {

enum class Direction : std::uint8_t { scatter = 0, gather = 1 };

inline const char* direction_name(Direction d) {
  return d == Direction::scatter ? "scatter" : "gather";
}

// The cross-institution transactions scattered from (or gathered to) one
// node. Edge ids keep the original payer->payee orientation regardless of
// traversal direction, so both institutions name the same transaction
// identically.
struct CrossEdgeSet {
  AccountId anchor = 0;
  Direction direction = Direction::scatter;
  std::vector<EdgeId> edges;  // sorted, deduplicated
};

struct SetFamily {
  PartyId party = PartyId::A;
  Direction direction = Direction::scatter;
  std::vector<CrossEdgeSet> sets;  // anchor-sorted, one per surviving anchor
};

namespace detail {

// Frontier expansion step shared by scatter (out-edges) and gather
// (in-edges, i.e. the reversed graph). A cross edge is recorded and ends its
// branch; an internal edge extends the frontier. Each node expands at most
// once.
inline void expand_node(const TransactionGraph& g, Direction dir, AccountId v,
                        std::vector<EdgeId>& found, std::vector<AccountId>& next,
                        std::unordered_set<AccountId>& visited) {
  const auto edge_indices = dir == Direction::scatter ? g.out_edges(v) : g.in_edges(v);
  for (std::uint32_t ei : edge_indices) {
    const Edge& e = g.edges()[ei];
    const AccountId neighbor = dir == Direction::scatter ? e.dst : e.src;
    if (e.cross) {
      found.push_back({e.src, e.dst});
    } else if (visited.insert(neighbor).second) {
      next.push_back(neighbor);
    }
  }
}

}  // namespace detail

// Bounded-depth BFS collecting cross-institution transactions reachable from
// the anchor. Depth counts edges, so max_depth=1 inspects only the anchor's
// own transactions.
inline CrossEdgeSet discover_set(const InstitutionView& view, AccountId anchor, Direction direction,
                                 std::uint32_t max_depth) {
  const TransactionGraph& g = view.graph;
  if (!g.has_node(anchor))
    throw ValidationError("unknown anchor account " + std::to_string(anchor));
  if (max_depth < 1) throw ValidationError("max_depth must be >= 1");

  CrossEdgeSet result;
  result.anchor = anchor;
  result.direction = direction;

  std::unordered_set<AccountId> visited{anchor};
  std::vector<AccountId> frontier{anchor};
  std::vector<AccountId> next;
  for (std::uint32_t depth = 1; depth <= max_depth && !frontier.empty(); ++depth) {
    next.clear();
    for (AccountId v : frontier)
      detail::expand_node(g, direction, v, result.edges, next, visited);
    frontier.swap(next);
  }

  std::sort(result.edges.begin(), result.edges.end());
  result.edges.erase(std::unique(result.edges.begin(), result.edges.end()), result.edges.end());
  return result;
}

// Runs discover_set for every node of the view and keeps the sets with at
// least min_set_size transactions. Anchors are processed in parallel; the
// result is anchor-sorted either way.
inline SetFamily discover_family(const InstitutionView& view, Direction direction,
                                 std::uint32_t max_depth, std::size_t min_set_size) {
  view.graph.require_aggregated("discover_family");
  const auto& anchors = view.graph.nodes();

  std::vector<CrossEdgeSet> all(anchors.size());
  parallel_for(anchors.size(), [&](std::size_t i) {
    all[i] = discover_set(view, anchors[i], direction, max_depth);
  });

  SetFamily family;
  family.party = view.party;
  family.direction = direction;
  for (auto& set : all)
    if (set.edges.size() >= min_set_size) family.sets.push_back(std::move(set));
  return family;
}

// Locates the intermediate accounts of a detected group: every node lying on
// some internal-edge path from the anchor that reaches one of the target
// cross transactions within the depth budget. The anchor itself is always a
// member.
inline std::vector<AccountId> trace_members(const InstitutionView& view, AccountId anchor,
                                            Direction direction,
                                            const std::vector<EdgeId>& target_edges,
                                            std::uint32_t max_depth) {
  const TransactionGraph& g = view.graph;
  if (!g.has_node(anchor))
    throw ValidationError("unknown anchor account " + std::to_string(anchor));

  std::unordered_set<AccountId> members{anchor};
  if (!target_edges.empty() && max_depth >= 1) {
    std::vector<EdgeId> targets(target_edges);
    std::sort(targets.begin(), targets.end());

    // Forward distances from the anchor over internal edges.
    std::unordered_map<AccountId, std::uint32_t> dist_fwd{{anchor, 0}};
    // The local endpoint of a target cross edge: the node whose expansion
    // records it (src when scattering, dst when gathering).
    std::unordered_map<AccountId, std::uint32_t> dist_back;

    std::queue<AccountId> q;
    q.push(anchor);
    while (!q.empty()) {
      const AccountId v = q.front();
      q.pop();
      const std::uint32_t d = dist_fwd[v];
      if (d + 1 > max_depth) continue;
      const auto edge_indices =
          direction == Direction::scatter ? g.out_edges(v) : g.in_edges(v);
      for (std::uint32_t ei : edge_indices) {
        const Edge& e = g.edges()[ei];
        if (e.cross) continue;
        const AccountId neighbor = direction == Direction::scatter ? e.dst : e.src;
        if (dist_fwd.emplace(neighbor, d + 1).second) q.push(neighbor);
      }
    }

    // Multi-source backward distances from the target tails, over the same
    // internal edges traversed in reverse.
    std::queue<AccountId> back;
    for (const auto& [node, _] : dist_fwd) {
      const auto edge_indices =
          direction == Direction::scatter ? g.out_edges(node) : g.in_edges(node);
      for (std::uint32_t ei : edge_indices) {
        const Edge& e = g.edges()[ei];
        if (!e.cross) continue;
        if (std::binary_search(targets.begin(), targets.end(), EdgeId{e.src, e.dst})) {
          if (dist_back.emplace(node, 0).second) back.push(node);
        }
      }
    }
    while (!back.empty()) {
      const AccountId v = back.front();
      back.pop();
      const std::uint32_t d = dist_back[v];
      if (d + 2 > max_depth) continue;  // deeper tails cannot satisfy the budget
      const auto edge_indices =
          direction == Direction::scatter ? g.in_edges(v) : g.out_edges(v);
      for (std::uint32_t ei : edge_indices) {
        const Edge& e = g.edges()[ei];
        if (e.cross) continue;
        const AccountId neighbor = direction == Direction::scatter ? e.src : e.dst;
        if (dist_back.emplace(neighbor, d + 1).second) back.push(neighbor);
      }
    }

    // On a qualifying path: reachable both ways and within budget including
    // the final cross hop.
    for (const auto& [node, df] : dist_fwd) {
      auto it = dist_back.find(node);
      if (it != dist_back.end() && df + it->second + 1 <= max_depth) members.insert(node);
    }
  }

  std::vector<AccountId> out(members.begin(), members.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace csgm
