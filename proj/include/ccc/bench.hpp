#pragma once

// Synthetic dynamic-graph benchmark with controllable structural churn and
// feature drift, plus the experiment runner that compares the selective
// replay pipeline against its ablation arms.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccc/condense.hpp"
#include "ccc/error.hpp"
#include "ccc/graph.hpp"
#include "ccc/history.hpp"
#include "ccc/matrix.hpp"
#include "ccc/metrics.hpp"
#include "ccc/nn.hpp"
#include "ccc/replay.hpp"
#include "ccc/rng.hpp"

namespace ccc {

struct BenchConfig {
  std::size_t num_tasks = 5;
  std::size_t nodes_per_task = 120;
  std::size_t num_classes = 3;
  std::size_t feature_dim = 16;
  double p_in = 0.08;
  double p_out = 0.01;
  double churn_rate = 0.15;   // fraction of nodes/edges replaced per step
  double drift_rate = 0.1;    // per-step rotation angle of class centroids
  std::uint64_t seed = 42;
};

inline void validate_bench_config(const BenchConfig& c) {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (c.num_tasks < 2) throw ConfigError("num_tasks must be >= 2");
  if (c.nodes_per_task == 0) throw ConfigError("nodes_per_task must be positive");
  if (c.num_classes == 0) throw ConfigError("num_classes must be positive");
  if (c.nodes_per_task < c.num_classes)
    throw ConfigError("nodes_per_task must be >= num_classes");
  if (c.feature_dim == 0) throw ConfigError("feature_dim must be positive");
  if (!in01(c.p_in)) throw ConfigError("p_in must lie in [0,1]");
  if (!in01(c.p_out)) throw ConfigError("p_out must lie in [0,1]");
  if (c.p_in <= c.p_out) throw ConfigError("p_in must exceed p_out");
  if (!in01(c.churn_rate))
    throw ConfigError("churn_rate must lie in [0,1] (got " +
                      std::to_string(c.churn_rate) + ")");
  if (c.drift_rate < 0.0) throw ConfigError("drift_rate must be non-negative");
}

namespace detail {

constexpr double kCentroidScale = 2.5;
constexpr double kFeatureNoise = 1.0;

struct BenchWorld {
  std::vector<NodeId> ids;  // ascending
  std::map<NodeId, int> cls;
  std::map<NodeId, std::vector<double>> feat;
  std::set<Edge> edges;
  std::vector<std::vector<double>> centroids;
  std::vector<double> plane_u, plane_v;  // drift rotation plane
  NodeId next_id = 0;
  std::uint64_t class_cycle = 0;  // round-robin class assignment counter

  GraphSnapshot snapshot(std::int64_t t) const {
    GraphSnapshot s;
    s.timestep = t;
    s.node_ids = ids;
    for (NodeId id : ids) {
      s.features.push_back(feat.at(id));
      s.labels.push_back(cls.at(id));
    }
    s.edges.assign(edges.begin(), edges.end());
    return s;
  }
};

inline std::vector<double> random_unit(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  double norm = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

inline void rotate_in_plane(std::vector<double>& m, const std::vector<double>& u,
                            const std::vector<double>& v, double angle) {
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    a += m[i] * u[i];
    b += m[i] * v[i];
  }
  const double ca = std::cos(angle) - 1.0, sa = std::sin(angle);
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] += (ca * a - sa * b) * u[i] + (sa * a + ca * b) * v[i];
}

inline void add_node(BenchWorld& w, const BenchConfig& cfg, Rng& rng) {
  const int c = static_cast<int>(w.class_cycle++ % cfg.num_classes);
  const NodeId id = w.next_id++;
  std::vector<double> x(cfg.feature_dim);
  for (std::size_t j = 0; j < cfg.feature_dim; ++j)
    x[j] = w.centroids[static_cast<std::size_t>(c)][j] + kFeatureNoise * rng.normal();
  // Wire to every existing node with the block-model probability.
  for (NodeId other : w.ids) {
    const double p = (w.cls.at(other) == c) ? cfg.p_in : cfg.p_out;
    if (rng.coin(p)) w.edges.insert(make_edge(id, other));
  }
  w.ids.push_back(id);
  w.cls[id] = c;
  w.feat[id] = std::move(x);
}

inline void remove_nodes(BenchWorld& w, std::size_t count, std::size_t num_classes,
                         Rng& rng) {
  // Class-stratified removal keeps the label histogram near uniform.
  std::uint64_t cycle = 0;
  for (std::size_t r = 0; r < count && !w.ids.empty(); ++r) {
    NodeId victim = -1;
    for (std::size_t attempt = 0; attempt < num_classes; ++attempt) {
      const int target = static_cast<int>(cycle++ % num_classes);
      std::vector<NodeId> pool;
      for (NodeId id : w.ids)
        if (w.cls.at(id) == target) pool.push_back(id);
      if (pool.empty()) continue;
      victim = pool[rng.index(pool.size())];
      break;
    }
    if (victim < 0) break;
    w.ids.erase(std::find(w.ids.begin(), w.ids.end(), victim));
    w.cls.erase(victim);
    w.feat.erase(victim);
    for (auto it = w.edges.begin(); it != w.edges.end();) {
      if (it->lo == victim || it->hi == victim)
        it = w.edges.erase(it);
      else
        ++it;
    }
  }
}

inline void churn_edges(BenchWorld& w, const BenchConfig& cfg, Rng& rng) {
  const std::size_t target =
      static_cast<std::size_t>(std::llround(cfg.churn_rate * 0.5 *
                                            static_cast<double>(w.edges.size())));
  // Remove.
  std::vector<Edge> pool(w.edges.begin(), w.edges.end());
  for (std::size_t idx : rng.sample_indices(pool.size(), std::min(target, pool.size())))
    w.edges.erase(pool[idx]);
  // Add, rejection-sampled proportionally to the block-model weights.
  const std::size_t n = w.ids.size();
  if (n < 2) return;
  std::size_t added = 0;
  for (std::size_t attempts = 0; added < target && attempts < 400 * target + 1000;
       ++attempts) {
    const NodeId a = w.ids[rng.index(n)];
    const NodeId b = w.ids[rng.index(n)];
    if (a == b) continue;
    const Edge e = make_edge(a, b);
    if (w.edges.count(e)) continue;
    const double ratio = (w.cls.at(a) == w.cls.at(b)) ? 1.0 : cfg.p_out / cfg.p_in;
    if (!rng.coin(ratio)) continue;
    w.edges.insert(e);
    ++added;
  }
}

}  // namespace detail

/// T snapshots: a stochastic block model draw with Gaussian class-centroid
/// features, then per-step churn (stratified node replacement, edge rewiring)
/// and centroid drift. Node features are fixed at creation, so drift shows up
/// through the nodes added after it. Deterministic per seed.
inline std::vector<GraphSnapshot> generate_stream(const BenchConfig& cfg) {
  validate_bench_config(cfg);
  Rng rng(derive_seed(cfg.seed, 0xB3C4));

  detail::BenchWorld w;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    std::vector<double> mu = detail::random_unit(cfg.feature_dim, rng);
    for (double& x : mu) x *= detail::kCentroidScale;
    w.centroids.push_back(std::move(mu));
  }
  w.plane_u = detail::random_unit(cfg.feature_dim, rng);
  w.plane_v = detail::random_unit(cfg.feature_dim, rng);
  // Gram-Schmidt so the drift plane is orthonormal.
  double dot = 0.0;
  for (std::size_t i = 0; i < cfg.feature_dim; ++i) dot += w.plane_u[i] * w.plane_v[i];
  double norm = 0.0;
  for (std::size_t i = 0; i < cfg.feature_dim; ++i) {
    w.plane_v[i] -= dot * w.plane_u[i];
    norm += w.plane_v[i] * w.plane_v[i];
  }
  norm = std::sqrt(norm);
  for (double& x : w.plane_v) x /= norm;

  for (std::size_t i = 0; i < cfg.nodes_per_task; ++i) detail::add_node(w, cfg, rng);

  std::vector<GraphSnapshot> stream;
  stream.push_back(w.snapshot(0));
  for (std::size_t t = 1; t < cfg.num_tasks; ++t) {
    for (auto& mu : w.centroids)
      detail::rotate_in_plane(mu, w.plane_u, w.plane_v, cfg.drift_rate);
    const std::size_t node_target = static_cast<std::size_t>(
        std::llround(cfg.churn_rate * 0.5 * static_cast<double>(w.ids.size())));
    detail::remove_nodes(w, node_target, cfg.num_classes, rng);
    detail::churn_edges(w, cfg, rng);
    for (std::size_t i = 0; i < node_target; ++i) detail::add_node(w, cfg, rng);
    stream.push_back(w.snapshot(static_cast<std::int64_t>(t)));
  }

  for (const GraphSnapshot& s : stream) {
    const auto issues = validate_snapshot(s);
    if (!issues.empty())
      throw std::logic_error("generate_stream produced invalid snapshot: " + issues[0]);
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

enum class Arm { kCcc, kFinetune, kFullReplay };

inline Arm parse_arm(const std::string& name) {
  if (name == "ccc") return Arm::kCcc;
  if (name == "finetune") return Arm::kFinetune;
  if (name == "full_replay") return Arm::kFullReplay;
  throw ConfigError("unknown arm name: " + name);
}

inline std::string arm_name(Arm a) {
  switch (a) {
    case Arm::kCcc: return "ccc";
    case Arm::kFinetune: return "finetune";
    case Arm::kFullReplay: return "full_replay";
  }
  return "?";
}

struct ModelConfig {
  std::size_t hidden_dim = 32;   // d_n, current-embedding width
  std::size_t history_dim = 32;  // d_h, historical-embedding width
  std::size_t epochs = 100;      // current-model epochs per task
  double lr = 0.05;
  std::size_t history_epochs = 100;
  double history_lr = 0.01;
};

struct ExperimentConfig {
  ModelConfig model;
  ReplayConfig replay;
  CondenseConfig condense;
  std::uint64_t seed = 1234;
  bool keep_embeddings = false;  // retain per-task combined embeddings
};

struct ExperimentResult {
  std::string arm;
  MetricsReport metrics;
  std::vector<std::vector<double>> accuracy_matrix;  // [t][j], j <= t
  std::vector<CombinedEmbeddings> task_embeddings;   // when keep_embeddings
  std::optional<HistoryArtifacts> final_history;     // last task's history model
  double wall_time_ms = 0.0;
  std::string config_hash;
};

constexpr double kTrainFraction = 0.6;  // per-node split, fixed at creation

/// Persistent 60/40 membership: decided from the node id alone so a node
/// keeps its role for as long as it lives.
inline bool is_train_node(std::uint64_t split_seed, NodeId id) {
  const std::uint64_t h = hash_pair(split_seed, static_cast<std::uint64_t>(id));
  return (static_cast<double>(h >> 11) * 0x1.0p-53) < kTrainFraction;
}

namespace detail {

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 1469598103934665603ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t hash_double(double v, std::uint64_t h) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return fnv1a64(&bits, sizeof(bits), h);
}

inline std::uint64_t hash_u64(std::uint64_t v, std::uint64_t h) {
  return fnv1a64(&v, sizeof(v), h);
}

/// Deterministic fingerprint of the experiment inputs.
inline std::string experiment_hash(const std::vector<GraphSnapshot>& stream,
                                   const std::vector<Arm>& arms,
                                   const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const GraphSnapshot& s : stream) {
    h = hash_u64(static_cast<std::uint64_t>(s.timestep), h);
    for (NodeId id : s.node_ids) h = hash_u64(static_cast<std::uint64_t>(id), h);
    for (const auto& row : s.features)
      for (double v : row) h = hash_double(v, h);
    for (const auto& y : s.labels)
      h = hash_u64(y ? static_cast<std::uint64_t>(*y) + 1 : 0, h);
    for (const Edge& e : s.edges) {
      h = hash_u64(static_cast<std::uint64_t>(e.lo), h);
      h = hash_u64(static_cast<std::uint64_t>(e.hi), h);
    }
  }
  for (Arm a : arms) h = hash_u64(static_cast<std::uint64_t>(a), h);
  h = hash_u64(cfg.model.hidden_dim, h);
  h = hash_u64(cfg.model.history_dim, h);
  h = hash_u64(cfg.model.epochs, h);
  h = hash_double(cfg.model.lr, h);
  h = hash_u64(cfg.model.history_epochs, h);
  h = hash_double(cfg.model.history_lr, h);
  h = hash_u64(cfg.replay.k_hops, h);
  h = hash_double(cfg.replay.match_threshold, h);
  h = hash_u64(cfg.replay.enabled ? 1 : 0, h);
  h = hash_u64(cfg.condense.budget, h);
  h = hash_double(cfg.condense.sim_threshold, h);
  h = hash_u64(cfg.condense.cluster_iters, h);
  h = hash_u64(cfg.condense.seed, h);
  h = hash_u64(cfg.seed, h);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

struct ReplayContext {
  Matrix h_hist;         // 0 rows when inactive
  std::set<NodeId> region;
  MatchMap match;
};

struct TaskData {
  Matrix a_hat;
  Matrix x;
  std::vector<int> labels;        // -1 for unlabeled
  std::vector<bool> train_mask;
  std::set<NodeId> eval_ids;
};

}  // namespace detail

/// Runs the requested arms over the stream. Per task the model is trained on
/// that snapshot's train nodes (classifier over the combined embeddings under
/// the arm's replay policy), then every task <= t is evaluated on its held-out
/// nodes. The per-task records that feed PM/FM are each task's own-snapshot
/// evaluation taken right after training it.
inline std::vector<ExperimentResult> run_experiment(
    const std::vector<GraphSnapshot>& stream, const std::vector<Arm>& arms,
    const ExperimentConfig& cfg) {
  if (stream.size() < 2) throw ConfigError("run_experiment: stream length must be >= 2");
  for (std::size_t t = 1; t < stream.size(); ++t)
    if (stream[t - 1].timestep + 1 != stream[t].timestep)
      throw ConfigError("run_experiment: snapshots not consecutive");

  int max_label = -1;
  for (const GraphSnapshot& s : stream)
    for (const auto& y : s.labels)
      if (y) max_label = std::max(max_label, *y);
  if (max_label < 0) throw ConfigError("run_experiment: stream has no labels");
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;
  const std::size_t d = stream.front().features.empty()
                            ? 0
                            : stream.front().features.front().size();

  const std::uint64_t split_seed = derive_seed(cfg.seed, 0x5EED5);
  const std::string config_hash = detail::experiment_hash(stream, arms, cfg);

  // Per-task fixed data, shared across arms.
  std::vector<detail::TaskData> tasks;
  for (const GraphSnapshot& s : stream) {
    detail::TaskData td;
    td.a_hat = normalize_adjacency(s);
    td.x = Matrix::from_rows(s.features);
    for (std::size_t i = 0; i < s.num_nodes(); ++i) {
      const bool labeled = s.labels[i].has_value();
      td.labels.push_back(labeled ? *s.labels[i] : -1);
      const bool train = is_train_node(split_seed, s.node_ids[i]);
      td.train_mask.push_back(labeled && train);
      if (labeled && !train) td.eval_ids.insert(s.node_ids[i]);
    }
    tasks.push_back(std::move(td));
  }

  std::vector<ExperimentResult> results;
  for (Arm arm : arms) {
    const auto t_start = std::chrono::steady_clock::now();

    Rng init_rng(derive_seed(cfg.seed, 0x10DE1));
    ModelState model;
    model.gcn_weights = {glorot_init(d, cfg.model.hidden_dim, init_rng),
                         glorot_init(cfg.model.hidden_dim, cfg.model.hidden_dim, init_rng)};
    model.classifier_w = glorot_init(cfg.model.hidden_dim + cfg.model.history_dim,
                                     classes, init_rng);
    model.classifier_b.assign(classes, 0.0);

    const bool replay_active = cfg.replay.enabled && arm != Arm::kFinetune;
    std::vector<detail::ReplayContext> contexts;
    std::vector<TaskRecord> records;
    std::vector<std::vector<double>> acc_matrix;
    std::vector<CombinedEmbeddings> kept_embeddings;
    std::optional<HistoryArtifacts> last_history;

    for (std::size_t t = 0; t < stream.size(); ++t) {
      // Replay context for this task; fixed for the rest of the run.
      detail::ReplayContext ctx;
      ctx.h_hist = Matrix(0, cfg.model.history_dim);
      ctx.match.assign(stream[t].num_nodes(), std::nullopt);
      if (replay_active && t >= 1) {
        std::vector<GraphSnapshot> prefix(stream.begin(),
                                          stream.begin() + static_cast<std::ptrdiff_t>(t));
        const std::vector<CondensedGraph> condensed =
            condense_sequence(prefix, cfg.condense);
        HistoryConfig hcfg;
        hcfg.epochs = cfg.model.history_epochs;
        hcfg.lr = cfg.model.history_lr;
        hcfg.hidden_dim = cfg.model.hidden_dim;
        hcfg.embed_dim = cfg.model.history_dim;
        hcfg.seed = derive_seed(cfg.seed, 0xA12F);
        const HistoryArtifacts artifacts = train_history(condensed, hcfg);

        if (arm == Arm::kFullReplay) {
          ctx.region.insert(stream[t].node_ids.begin(), stream[t].node_ids.end());
        } else {
          const GraphDelta delta = compute_delta(stream[t - 1], stream[t]);
          ctx.region = khop_region(stream[t], delta.seed_set, cfg.replay.k_hops);
        }
        ctx.match = match_nodes(stream[t], artifacts.condensed_final,
                                cfg.replay.match_threshold);
        ctx.h_hist = artifacts.historical_embeddings;
        last_history = artifacts;
      }
      contexts.push_back(std::move(ctx));
      const detail::ReplayContext& c = contexts.back();
      const detail::TaskData& td = tasks[t];

      // Train on this task.
      for (std::size_t epoch = 0; epoch < cfg.model.epochs; ++epoch) {
        GcnCache cache;
        const Matrix h_cur = gcn_forward(td.a_hat, td.x, model.gcn_weights, &cache);
        const CombinedEmbeddings comb =
            combine(h_cur, c.h_hist, stream[t], c.region, c.match);
        const Matrix logits =
            linear_forward(comb.h_combined, model.classifier_w, model.classifier_b);
        const XentResult xr = softmax_xent(logits, td.labels, td.train_mask);
        if (!std::isfinite(xr.loss))
          throw NumericError("run_experiment: non-finite loss, arm " + arm_name(arm));

        const LinearBackward lb =
            linear_backward(comb.h_combined, model.classifier_w, xr.grad);
        Matrix d_h(h_cur.rows, h_cur.cols);  // historical block is constant
        for (std::size_t i = 0; i < h_cur.rows; ++i)
          for (std::size_t j = 0; j < h_cur.cols; ++j)
            d_h.at(i, j) = lb.d_input.at(i, j);
        const GcnBackward gb = gcn_backward(cache, td.a_hat, model.gcn_weights, d_h);

        ModelGrads grads;
        grads.gcn_weights = gb.d_weights;
        grads.classifier_w = lb.d_w;
        grads.classifier_b = lb.d_b;
        model = sgd_step(std::move(model), grads, cfg.model.lr);
      }

      // Evaluate every task seen so far with the current parameters.
      std::vector<double> row;
      for (std::size_t j = 0; j <= t; ++j) {
        const detail::TaskData& ej = tasks[j];
        const detail::ReplayContext& cj = contexts[j];
        const Matrix h = gcn_forward(ej.a_hat, ej.x, model.gcn_weights);
        const CombinedEmbeddings comb =
            combine(h, cj.h_hist, stream[j], cj.region, cj.match);
        const Matrix logits =
            linear_forward(comb.h_combined, model.classifier_w, model.classifier_b);
        const TaskRecord rec = evaluate_task(logits, ej.labels, stream[j].node_ids,
                                             ej.eval_ids, j);
        row.push_back(rec.accuracy);
        if (j == t) {
          records.push_back(rec);
          if (cfg.keep_embeddings) kept_embeddings.push_back(comb);
        }
      }
      acc_matrix.push_back(std::move(row));
    }

    ExperimentResult res;
    res.arm = arm_name(arm);
    res.metrics = build_metrics_report(records);
    res.accuracy_matrix = std::move(acc_matrix);
    res.task_embeddings = std::move(kept_embeddings);
    res.final_history = std::move(last_history);
    res.config_hash = config_hash;
    res.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t_start)
                           .count();
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace ccc
