#pragma once

// Training-free condensation of one snapshot into a small semantic graph:
// label-proportional budgeting, per-class centroid clustering, and
// cosine-threshold edge synthesis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccc/error.hpp"
#include "ccc/graph.hpp"
#include "ccc/rng.hpp"

namespace ccc {

struct CondenseConfig {
  std::size_t budget = 0;  // 0 means auto: max(10, ceil(0.1 * N))
  double sim_threshold = 0.5;
  std::size_t cluster_iters = 20;
  std::uint64_t seed = 7;
};

struct WeightedEdge {
  std::size_t i = 0;
  std::size_t j = 0;  // i < j
  double weight = 0.0;
};

struct CondensedGraph {
  std::size_t budget = 0;
  double theta = 0.0;
  std::vector<std::vector<double>> node_features;  // centroid per condensed node
  std::vector<int> node_labels;
  std::vector<WeightedEdge> weighted_edges;
  std::vector<std::vector<NodeId>> provenance;  // original ids per condensed node
  std::vector<std::string> warnings;            // e.g. zero-norm similarity hits

  std::size_t num_nodes() const { return node_features.size(); }
};

/// Label-proportional budget split. Largest-remainder rounding of
/// budget*count/total in exact integer arithmetic, remainder ties broken by
/// lower class index. Every present class receives at least one slot; when
/// rounding leaves a present class at zero, slots are taken from the classes
/// with the largest surplus over their exact quota.
inline std::map<int, std::size_t> allocate_budget(
    const std::map<int, std::size_t>& label_counts, std::size_t budget) {
  std::vector<int> classes;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& [cls, count] : label_counts) {
    if (count == 0) continue;
    classes.push_back(cls);
    counts.push_back(count);
    total += count;
  }
  if (classes.empty()) throw ConfigError("allocate_budget: no labeled nodes");
  if (budget < classes.size())
    throw ConfigError("budget too small: " + std::to_string(budget) + " < " +
                      std::to_string(classes.size()) + " classes");

  const std::size_t n = classes.size();
  std::vector<std::uint64_t> alloc(n), rem(n);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(budget) * counts[i];
    alloc[i] = num / total;
    rem[i] = num % total;
    assigned += alloc[i];
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return classes[a] < classes[b];
  });
  for (std::size_t i = 0; assigned < budget; ++i) {
    ++alloc[order[i % n]];
    ++assigned;
  }

  // Raise zero-allocated classes to one, taking from the largest surplus
  // (alloc*total - budget*count, exact), donor ties broken by lower index.
  for (std::size_t z = 0; z < n; ++z) {
    while (alloc[z] == 0) {
      std::size_t donor = n;
      __int128 best = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (alloc[i] < 2) continue;
        __int128 surplus = static_cast<__int128>(alloc[i]) * total -
                           static_cast<__int128>(budget) * counts[i];
        if (donor == n || surplus > best) {
          donor = i;
          best = surplus;
        }
      }
      if (donor == n) throw ConfigError("budget too small");
      --alloc[donor];
      ++alloc[z];
    }
  }

  std::map<int, std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) out[classes[i]] = alloc[i];
  return out;
}

struct ClusterResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;     // row -> centroid index
  std::vector<double> objective_history;   // sum of squared distances per iteration
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

/// Lloyd iterations with seeded initialization from k distinct input rows.
/// Centroids are means of assigned rows; assignment ties go to the lowest
/// centroid index; a cluster left empty is re-seeded with the point farthest
/// from its assigned centroid.
inline ClusterResult cluster_class(const std::vector<std::vector<double>>& rows,
                                   std::size_t k, std::size_t iters,
                                   std::uint64_t seed) {
  if (k == 0) throw ConfigError("cluster_class: k must be >= 1");
  if (k > rows.size())
    throw ConfigError("cluster_class: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(rows.size()) + " rows");
  const std::size_t n = rows.size();
  const std::size_t d = rows.front().size();

  Rng rng(seed);
  ClusterResult res;
  for (std::size_t idx : rng.sample_indices(n, k)) res.centroids.push_back(rows[idx]);
  res.assignment.assign(n, 0);

  for (std::size_t it = 0; it < std::max<std::size_t>(iters, 1); ++it) {
    // Assign.
    double objective = 0.0;
    std::vector<std::size_t> size(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = detail::sq_dist(rows[i], res.centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double dist = detail::sq_dist(rows[i], res.centroids[c]);
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      res.assignment[i] = best;
      objective += best_d;
      ++size[best];
    }

    // Re-seed empty clusters from the worst-served point.
    for (std::size_t c = 0; c < k; ++c) {
      if (size[c] > 0) continue;
      std::size_t farthest = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (size[res.assignment[i]] < 2) continue;
        const double dist = detail::sq_dist(rows[i], res.centroids[res.assignment[i]]);
        if (dist > far_d) {
          far_d = dist;
          farthest = i;
        }
      }
      if (farthest == n) continue;  // k <= n makes this unreachable
      --size[res.assignment[farthest]];
      res.assignment[farthest] = c;
      ++size[c];
      res.centroids[c] = rows[farthest];
    }
    res.objective_history.push_back(objective);

    // Update: mean of assigned rows, fixed summation order.
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) sums[res.assignment[i]][j] += rows[i][j];
    for (std::size_t c = 0; c < k; ++c) {
      if (size[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j)
        res.centroids[c][j] = sums[c][j] / static_cast<double>(size[c]);
    }
  }
  return res;
}

/// Cosine similarity clamped to [-1, 1]. A zero-norm side yields 0; the
/// optional counter records how often that happened.
inline double cosine_similarity(const std::vector<double>& a,
                                const std::vector<double>& b,
                                std::size_t* zero_norm_hits = nullptr) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    if (zero_norm_hits) ++*zero_norm_hits;
    return 0.0;
  }
  // sqrt(na*nb) keeps sim(a, a) exactly 1.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

/// Edge (i, j, s_ij) for every pair i < j with similarity >= theta.
inline std::vector<WeightedEdge> build_edges(
    const std::vector<std::vector<double>>& node_features, double theta,
    std::size_t* zero_norm_hits = nullptr) {
  if (theta < -1.0 || theta > 1.0)
    throw ConfigError("sim_threshold must lie in [-1, 1]");
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < node_features.size(); ++i)
    for (std::size_t j = i + 1; j < node_features.size(); ++j) {
      const double s = cosine_similarity(node_features[i], node_features[j], zero_norm_hits);
      if (s >= theta) edges.push_back({i, j, s});
    }
  return edges;
}

inline std::size_t auto_budget(std::size_t num_nodes) {
  return std::max<std::size_t>(10, static_cast<std::size_t>(
                                       std::ceil(0.1 * static_cast<double>(num_nodes))));
}

/// Condenses one snapshot. Clustering runs per class on aggregated features
/// (own feature concatenated with the 1-hop neighbor mean); the stored
/// condensed feature is the centroid of the raw features in each cluster.
/// Condensed nodes are ordered by (class ascending, cluster index).
inline CondensedGraph condense_snapshot(const GraphSnapshot& g,
                                        const CondenseConfig& cfg) {
  std::map<int, std::vector<std::size_t>> by_class;  // class -> node rows
  for (std::size_t i = 0; i < g.node_ids.size(); ++i)
    if (g.labels[i]) by_class[*g.labels[i]].push_back(i);
  if (by_class.empty()) throw ConfigError("nothing to condense: no labeled nodes");

  std::size_t labeled_total = 0;
  std::map<int, std::size_t> counts;
  for (const auto& [cls, rows] : by_class) {
    counts[cls] = rows.size();
    labeled_total += rows.size();
  }

  const std::size_t budget = cfg.budget == 0 ? auto_budget(g.num_nodes()) : cfg.budget;
  if (budget > labeled_total)
    throw ConfigError("budget " + std::to_string(budget) +
                      " exceeds labeled node count " + std::to_string(labeled_total));
  const std::map<int, std::size_t> alloc = allocate_budget(counts, budget);

  // Aggregated clustering feature: [own | mean of 1-hop neighbors].
  const SnapshotIndex idx = build_index(g);
  const std::size_t d = g.features.empty() ? 0 : g.features.front().size();
  auto aggregated = [&](std::size_t row) {
    std::vector<double> out(2 * d, 0.0);
    for (std::size_t j = 0; j < d; ++j) out[j] = g.features[row][j];
    const auto& nbrs = idx.adj[row];
    if (!nbrs.empty()) {
      for (std::size_t nb : nbrs)
        for (std::size_t j = 0; j < d; ++j) out[d + j] += g.features[nb][j];
      for (std::size_t j = 0; j < d; ++j) out[d + j] /= static_cast<double>(nbrs.size());
    }
    return out;
  };

  CondensedGraph out;
  out.budget = budget;
  out.theta = cfg.sim_threshold;

  for (const auto& [cls, rows] : by_class) {
    const std::size_t k = alloc.at(cls);
    std::vector<std::vector<double>> cluster_input;
    cluster_input.reserve(rows.size());
    for (std::size_t r : rows) cluster_input.push_back(aggregated(r));

    const ClusterResult cr = cluster_class(
        cluster_input, k, cfg.cluster_iters,
        derive_seed(cfg.seed, static_cast<std::uint64_t>(cls)));

    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> centroid(d, 0.0);
      std::vector<NodeId> members;
      for (std::size_t m = 0; m < rows.size(); ++m) {
        if (cr.assignment[m] != c) continue;
        members.push_back(g.node_ids[rows[m]]);
        for (std::size_t j = 0; j < d; ++j) centroid[j] += g.features[rows[m]][j];
      }
      for (std::size_t j = 0; j < d; ++j)
        centroid[j] /= static_cast<double>(members.size());
      std::sort(members.begin(), members.end());
      out.node_features.push_back(std::move(centroid));
      out.node_labels.push_back(cls);
      out.provenance.push_back(std::move(members));
    }
  }

  std::size_t zero_norm = 0;
  out.weighted_edges = build_edges(out.node_features, cfg.sim_threshold, &zero_norm);
  if (zero_norm > 0)
    out.warnings.push_back("zero-norm similarity treated as 0 for " +
                           std::to_string(zero_norm) + " pair(s)");
  return out;
}

/// Element-wise condensation with the seed offset by each snapshot's
/// timestep; element errors are rethrown tagged with the timestep.
inline std::vector<CondensedGraph> condense_sequence(
    const std::vector<GraphSnapshot>& snaps, const CondenseConfig& cfg) {
  if (snaps.empty()) throw ConfigError("condense_sequence: empty snapshot list");
  std::vector<CondensedGraph> out;
  out.reserve(snaps.size());
  for (const GraphSnapshot& s : snaps) {
    CondenseConfig local = cfg;
    local.seed = cfg.seed + static_cast<std::uint64_t>(s.timestep);
    try {
      out.push_back(condense_snapshot(s, local));
    } catch (const std::exception& e) {
      throw ConfigError("t=" + std::to_string(s.timestep) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ccc
