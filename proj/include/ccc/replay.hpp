#pragma once

// Selective concatenation of historical and current embeddings: current
// nodes are matched to condensed nodes by cosine similarity, and historical
// embeddings are appended only inside the structural-change region; all
// other rows get an exactly-zero historical block.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "ccc/condense.hpp"
#include "ccc/error.hpp"
#include "ccc/graph.hpp"
#include "ccc/history.hpp"
#include "ccc/matrix.hpp"
#include "ccc/nn.hpp"

namespace ccc {

struct ReplayConfig {
  std::size_t k_hops = 2;
  double match_threshold = 0.5;
  bool enabled = true;  // false = ablation arm, historical block always zero
};

using MatchMap = std::vector<std::optional<std::size_t>>;  // snapshot row -> condensed index

struct CombinedEmbeddings {
  Matrix h_combined;              // n x (d_current + d_history)
  std::vector<bool> replay_mask;  // in-region AND matched
  MatchMap match_map;
  std::size_t d_current = 0;
  std::size_t d_history = 0;
};

/// Maps each current node to the condensed node with maximal cosine
/// similarity of raw features, provided that maximum reaches the threshold.
/// Ties go to the lowest condensed index.
inline MatchMap match_nodes(const GraphSnapshot& current,
                            const CondensedGraph& condensed, double threshold) {
  MatchMap map(current.num_nodes());
  if (condensed.num_nodes() == 0) return map;
  const std::size_t d = condensed.node_features.front().size();
  for (std::size_t i = 0; i < current.num_nodes(); ++i) {
    if (current.features[i].size() != d)
      throw std::invalid_argument("match_nodes: feature dim mismatch");
    double best = -2.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < condensed.num_nodes(); ++j) {
      const double s = cosine_similarity(current.features[i], condensed.node_features[j]);
      if (s > best) {
        best = s;
        best_j = j;
      }
    }
    if (best >= threshold) map[i] = best_j;
  }
  return map;
}

/// Row v = [H_current[v] | H_historical[match[v]]] iff v lies in the region
/// and is matched; otherwise [H_current[v] | 0]. The current block is copied
/// verbatim.
inline CombinedEmbeddings combine(const Matrix& h_current, const Matrix& h_historical,
                                  const GraphSnapshot& current,
                                  const std::set<NodeId>& region,
                                  const MatchMap& match_map) {
  if (h_current.rows != current.num_nodes())
    throw std::invalid_argument("combine: embedding rows != snapshot nodes");
  if (match_map.size() != current.num_nodes())
    throw std::invalid_argument("combine: match map size mismatch");
  std::set<NodeId> ids(current.node_ids.begin(), current.node_ids.end());
  for (NodeId v : region)
    if (!ids.count(v))
      throw std::invalid_argument("combine: region node " + std::to_string(v) +
                                  " absent from snapshot");

  CombinedEmbeddings out;
  out.d_current = h_current.cols;
  out.d_history = h_historical.cols;
  out.h_combined = Matrix(h_current.rows, out.d_current + out.d_history);
  out.replay_mask.assign(h_current.rows, false);
  out.match_map = match_map;

  for (std::size_t i = 0; i < h_current.rows; ++i) {
    for (std::size_t j = 0; j < out.d_current; ++j)
      out.h_combined.at(i, j) = h_current.at(i, j);
    if (!region.count(current.node_ids[i]) || !match_map[i]) continue;
    const std::size_t src = *match_map[i];
    if (src >= h_historical.rows)
      throw std::invalid_argument("combine: match index out of range");
    for (std::size_t j = 0; j < out.d_history; ++j)
      out.h_combined.at(i, out.d_current + j) = h_historical.at(src, j);
    out.replay_mask[i] = true;
  }
  return out;
}

inline CombinedEmbeddings combine(const Matrix& h_current,
                                  const HistoryArtifacts& artifacts,
                                  const GraphSnapshot& current,
                                  const std::set<NodeId>& region,
                                  const MatchMap& match_map) {
  return combine(h_current, artifacts.historical_embeddings, current, region, match_map);
}

/// Full pipeline for one step: delta, k-hop region, current forward pass,
/// matching, concatenation. With the replay disabled the region is forced
/// empty and every historical block is zero.
inline CombinedEmbeddings selective_replay_step(const GraphSnapshot& prev,
                                                const GraphSnapshot& curr,
                                                const HistoryArtifacts& artifacts,
                                                const ModelState& model,
                                                const ReplayConfig& cfg) {
  const GraphDelta delta = compute_delta(prev, curr);
  std::set<NodeId> region;
  if (cfg.enabled) region = khop_region(curr, delta.seed_set, cfg.k_hops);

  const Matrix a_hat = normalize_adjacency(curr);
  const Matrix x = Matrix::from_rows(curr.features);
  const Matrix h_current = gcn_forward(a_hat, x, model.gcn_weights);
  const MatchMap map = match_nodes(curr, artifacts.condensed_final, cfg.match_threshold);
  return combine(h_current, artifacts, curr, region, map);
}

}  // namespace ccc
