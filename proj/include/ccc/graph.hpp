#pragma once

// Snapshot representation for dynamic graph streams: validation, delta
// computation between consecutive snapshots, and k-hop influence regions.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccc {

using NodeId = std::int64_t;

/// Undirected edge stored with lo < hi.
struct Edge {
  NodeId lo = 0;
  NodeId hi = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(NodeId a, NodeId b) {
  return a < b ? Edge{a, b} : Edge{b, a};
}

/// One timestep of a dynamic graph. Node order is the storage order and is
/// the row order of every matrix aligned to this snapshot. Instances are
/// treated as immutable once built; all operations are pure functions.
struct GraphSnapshot {
  std::int64_t timestep = 0;
  std::vector<NodeId> node_ids;
  std::vector<std::vector<double>> features;   // one row per node
  std::vector<std::optional<int>> labels;      // class index, or unlabeled
  std::vector<Edge> edges;

  std::size_t num_nodes() const { return node_ids.size(); }
};

/// Added/removed node and edge sets between consecutive snapshots, plus the
/// seed set of new-snapshot nodes adjacent to any modification.
struct GraphDelta {
  std::set<NodeId> added_nodes;
  std::set<NodeId> removed_nodes;
  std::set<Edge> added_edges;
  std::set<Edge> removed_edges;
  std::set<NodeId> seed_set;

  bool empty() const {
    return added_nodes.empty() && removed_nodes.empty() &&
           added_edges.empty() && removed_edges.empty();
  }
};

/// Position lookup and adjacency lists for one snapshot.
struct SnapshotIndex {
  std::map<NodeId, std::size_t> pos;
  std::vector<std::vector<std::size_t>> adj;
};

inline SnapshotIndex build_index(const GraphSnapshot& g) {
  SnapshotIndex idx;
  for (std::size_t i = 0; i < g.node_ids.size(); ++i) idx.pos[g.node_ids[i]] = i;
  idx.adj.resize(g.node_ids.size());
  for (const Edge& e : g.edges) {
    auto a = idx.pos.find(e.lo);
    auto b = idx.pos.find(e.hi);
    if (a == idx.pos.end() || b == idx.pos.end()) continue;  // dangling; caught by validate
    idx.adj[a->second].push_back(b->second);
    idx.adj[b->second].push_back(a->second);
  }
  for (auto& nbrs : idx.adj) std::sort(nbrs.begin(), nbrs.end());
  return idx;
}

/// Reports every invariant violation found; empty result means valid.
/// Never throws: intended for rejecting untrusted input files.
inline std::vector<std::string> validate_snapshot(const GraphSnapshot& g) {
  std::vector<std::string> issues;
  if (g.timestep < 0) issues.push_back("negative timestep");

  std::set<NodeId> ids;
  for (NodeId id : g.node_ids) {
    if (!ids.insert(id).second)
      issues.push_back("duplicate node id " + std::to_string(id));
  }

  if (g.features.size() != g.node_ids.size())
    issues.push_back("feature row count " + std::to_string(g.features.size()) +
                     " != node count " + std::to_string(g.node_ids.size()));
  if (!g.features.empty()) {
    const std::size_t d = g.features.front().size();
    for (std::size_t i = 0; i < g.features.size(); ++i) {
      if (g.features[i].size() != d) {
        issues.push_back("ragged feature row at index " + std::to_string(i));
        break;
      }
    }
    for (std::size_t i = 0; i < g.features.size(); ++i) {
      bool bad = false;
      for (double v : g.features[i])
        if (!std::isfinite(v)) bad = true;
      if (bad) issues.push_back("non-finite feature at index " + std::to_string(i));
    }
  }

  if (g.labels.size() != g.node_ids.size())
    issues.push_back("label count != node count");
  for (std::size_t i = 0; i < g.labels.size(); ++i)
    if (g.labels[i] && *g.labels[i] < 0)
      issues.push_back("negative class label at index " + std::to_string(i));

  std::set<Edge> seen;
  for (const Edge& e : g.edges) {
    if (e.lo == e.hi)
      issues.push_back("self-loop at node " + std::to_string(e.lo));
    if (e.lo > e.hi)
      issues.push_back("edge endpoints out of order (" + std::to_string(e.lo) +
                       "," + std::to_string(e.hi) + ")");
    if (!ids.count(e.lo))
      issues.push_back("dangling endpoint " + std::to_string(e.lo));
    if (!ids.count(e.hi))
      issues.push_back("dangling endpoint " + std::to_string(e.hi));
    if (!seen.insert(make_edge(e.lo, e.hi)).second)
      issues.push_back("duplicate edge (" + std::to_string(e.lo) + "," +
                       std::to_string(e.hi) + ")");
  }
  return issues;
}

/// Delta between consecutive snapshots. The seed set collects, per the
/// influence-region definition, nodes of the new snapshot adjacent to a
/// modification: endpoints of added/removed edges that survive, added
/// nodes, and surviving ex-neighbors of removed nodes.
inline GraphDelta compute_delta(const GraphSnapshot& prev, const GraphSnapshot& curr) {
  if (prev.timestep + 1 != curr.timestep)
    throw std::invalid_argument("non-consecutive snapshots: " +
                                std::to_string(prev.timestep) + " -> " +
                                std::to_string(curr.timestep));

  std::set<NodeId> prev_ids(prev.node_ids.begin(), prev.node_ids.end());
  std::set<NodeId> curr_ids(curr.node_ids.begin(), curr.node_ids.end());
  std::set<Edge> prev_edges(prev.edges.begin(), prev.edges.end());
  std::set<Edge> curr_edges(curr.edges.begin(), curr.edges.end());

  GraphDelta d;
  std::set_difference(curr_ids.begin(), curr_ids.end(), prev_ids.begin(),
                      prev_ids.end(), std::inserter(d.added_nodes, d.added_nodes.end()));
  std::set_difference(prev_ids.begin(), prev_ids.end(), curr_ids.begin(),
                      curr_ids.end(), std::inserter(d.removed_nodes, d.removed_nodes.end()));
  std::set_difference(curr_edges.begin(), curr_edges.end(), prev_edges.begin(),
                      prev_edges.end(), std::inserter(d.added_edges, d.added_edges.end()));
  std::set_difference(prev_edges.begin(), prev_edges.end(), curr_edges.begin(),
                      curr_edges.end(), std::inserter(d.removed_edges, d.removed_edges.end()));

  auto seed_if_present = [&](NodeId id) {
    if (curr_ids.count(id)) d.seed_set.insert(id);
  };
  for (const Edge& e : d.added_edges) {
    seed_if_present(e.lo);
    seed_if_present(e.hi);
  }
  for (const Edge& e : d.removed_edges) {
    seed_if_present(e.lo);
    seed_if_present(e.hi);
  }
  for (NodeId id : d.added_nodes) d.seed_set.insert(id);
  for (NodeId removed : d.removed_nodes) {
    for (const Edge& e : prev_edges) {
      if (e.lo == removed) seed_if_present(e.hi);
      if (e.hi == removed) seed_if_present(e.lo);
    }
  }
  return d;
}

/// Replays a delta onto prev's node/edge sets. Used to check the delta
/// round-trip; features and labels are not part of the delta.
inline std::pair<std::set<NodeId>, std::set<Edge>> apply_delta(
    const GraphSnapshot& prev, const GraphDelta& d) {
  std::set<NodeId> nodes(prev.node_ids.begin(), prev.node_ids.end());
  std::set<Edge> edges(prev.edges.begin(), prev.edges.end());
  for (NodeId id : d.removed_nodes) nodes.erase(id);
  for (NodeId id : d.added_nodes) nodes.insert(id);
  for (const Edge& e : d.removed_edges) edges.erase(e);
  for (const Edge& e : d.added_edges) edges.insert(e);
  return {nodes, edges};
}

/// All nodes within shortest-path distance k of any seed, computed by
/// multi-source breadth-first traversal. Exact and O(V+E).
inline std::set<NodeId> khop_region(const GraphSnapshot& g,
                                    const std::set<NodeId>& seeds,
                                    std::size_t k) {
  SnapshotIndex idx = build_index(g);
  std::vector<std::int64_t> dist(g.num_nodes(), -1);
  std::deque<std::size_t> frontier;
  for (NodeId s : seeds) {
    auto it = idx.pos.find(s);
    if (it == idx.pos.end())
      throw std::invalid_argument("unknown seed node " + std::to_string(s));
    dist[it->second] = 0;
    frontier.push_back(it->second);
  }
  while (!frontier.empty()) {
    std::size_t u = frontier.front();
    frontier.pop_front();
    if (static_cast<std::size_t>(dist[u]) >= k) continue;
    for (std::size_t v : idx.adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        frontier.push_back(v);
      }
    }
  }
  std::set<NodeId> region;
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    if (dist[i] >= 0) region.insert(g.node_ids[i]);
  return region;
}

inline std::set<NodeId> neighbors(const GraphSnapshot& g, NodeId v) {
  SnapshotIndex idx = build_index(g);
  auto it = idx.pos.find(v);
  if (it == idx.pos.end())
    throw std::invalid_argument("unknown node " + std::to_string(v));
  std::set<NodeId> out;
  for (std::size_t u : idx.adj[it->second]) out.insert(g.node_ids[u]);
  return out;
}

}  // namespace ccc
