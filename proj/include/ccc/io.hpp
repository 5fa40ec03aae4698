#pragma once

// JSON file formats and configuration parsing. Serialization uses ordered
// JSON with fixed key order so identical inputs produce identical bytes.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccc/bench.hpp"
#include "ccc/condense.hpp"
#include "ccc/error.hpp"
#include "ccc/graph.hpp"
#include "ccc/history.hpp"
#include "ccc/metrics.hpp"
#include "ccc/nn.hpp"
#include "ccc/replay.hpp"

namespace ccc {

using njson = nlohmann::ordered_json;

namespace jsonio {

inline void check_keys(const njson& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError("unknown key: " + where + "." + it.key());
  }
}

template <typename T>
T get_field(const njson& obj, const std::string& where, const char* key, T def) {
  if (!obj.contains(key)) return def;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for " + where + "." + key);
  }
}

}  // namespace jsonio

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (!path.parent_path().empty())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline njson parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return njson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Snapshot files
// ---------------------------------------------------------------------------

inline std::string snapshot_filename(std::int64_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%04lld.json",
                static_cast<long long>(t));
  return buf;
}

inline njson snapshot_to_json(const GraphSnapshot& g) {
  njson j;
  j["timestep"] = g.timestep;
  njson nodes = njson::array();
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    njson node;
    node["id"] = g.node_ids[i];
    node["x"] = g.features[i];
    if (g.labels[i])
      node["y"] = *g.labels[i];
    else
      node["y"] = nullptr;
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  njson edges = njson::array();
  for (const Edge& e : g.edges) edges.push_back(njson::array({e.lo, e.hi}));
  j["edges"] = std::move(edges);
  return j;
}

inline GraphSnapshot snapshot_from_json(const njson& j, const std::string& where) {
  jsonio::check_keys(j, where, {"timestep", "nodes", "edges"});
  if (!j.contains("timestep") || !j.contains("nodes") || !j.contains("edges"))
    throw ConfigError(where + ": missing timestep/nodes/edges");
  GraphSnapshot g;
  try {
    g.timestep = j.at("timestep").get<std::int64_t>();
    for (const njson& node : j.at("nodes")) {
      jsonio::check_keys(node, where + ".nodes[]", {"id", "x", "y"});
      g.node_ids.push_back(node.at("id").get<NodeId>());
      g.features.push_back(node.at("x").get<std::vector<double>>());
      if (node.contains("y") && !node.at("y").is_null())
        g.labels.emplace_back(node.at("y").get<int>());
      else
        g.labels.emplace_back(std::nullopt);
    }
    for (const njson& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        throw ConfigError(where + ": edge entries must be [lo, hi]");
      g.edges.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": schema error: " + e.what());
  }
  return g;
}

/// Loads one snapshot file, rejecting schema violations and any snapshot
/// invariant violation reported by validate_snapshot.
inline GraphSnapshot load_snapshot(const std::filesystem::path& path) {
  const GraphSnapshot g = snapshot_from_json(parse_json_file(path), path.string());
  const std::vector<std::string> issues = validate_snapshot(g);
  if (!issues.empty()) {
    std::string msg = "invalid snapshot " + path.string() + ":";
    for (const std::string& s : issues) msg += " [" + s + "]";
    throw ConfigError(msg);
  }
  return g;
}

inline void save_snapshot(const std::filesystem::path& path, const GraphSnapshot& g) {
  write_text_file(path, snapshot_to_json(g).dump(2) + "\n");
}

/// Loads every snapshot_*.json in a directory, ordered by timestep.
inline std::vector<GraphSnapshot> load_stream(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw MissingInputError("stream directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("snapshot_", 0) == 0 && name.size() > 5 &&
        name.substr(name.size() - 5) == ".json")
      files.push_back(entry.path());
  }
  if (files.empty())
    throw MissingInputError("no snapshot files in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<GraphSnapshot> stream;
  for (const auto& f : files) stream.push_back(load_snapshot(f));
  std::sort(stream.begin(), stream.end(),
            [](const GraphSnapshot& a, const GraphSnapshot& b) {
              return a.timestep < b.timestep;
            });
  return stream;
}

// ---------------------------------------------------------------------------
// Condensed graphs
// ---------------------------------------------------------------------------

inline njson condensed_to_json(const CondensedGraph& gc) {
  njson j;
  j["budget"] = gc.budget;
  j["theta"] = gc.theta;
  njson nodes = njson::array();
  for (std::size_t i = 0; i < gc.num_nodes(); ++i) {
    njson node;
    node["id"] = i;
    node["x"] = gc.node_features[i];
    node["y"] = gc.node_labels[i];
    node["provenance"] = gc.provenance[i];
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  njson edges = njson::array();
  for (const WeightedEdge& e : gc.weighted_edges)
    edges.push_back(njson::array({e.i, e.j, e.weight}));
  j["edges"] = std::move(edges);
  return j;
}

inline CondensedGraph condensed_from_json(const njson& j, const std::string& where) {
  jsonio::check_keys(j, where, {"budget", "theta", "nodes", "edges"});
  CondensedGraph gc;
  try {
    gc.budget = j.at("budget").get<std::size_t>();
    gc.theta = j.at("theta").get<double>();
    for (const njson& node : j.at("nodes")) {
      gc.node_features.push_back(node.at("x").get<std::vector<double>>());
      gc.node_labels.push_back(node.at("y").get<int>());
      gc.provenance.push_back(node.at("provenance").get<std::vector<NodeId>>());
    }
    for (const njson& e : j.at("edges"))
      gc.weighted_edges.push_back({e.at(0).get<std::size_t>(),
                                   e.at(1).get<std::size_t>(),
                                   e.at(2).get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": schema error: " + e.what());
  }
  return gc;
}

// ---------------------------------------------------------------------------
// Model checkpoints
// ---------------------------------------------------------------------------

namespace jsonio {

inline njson matrix_values(const Matrix& m) { return njson(m.data); }

inline void put_param(njson& shapes, njson& values, const std::string& name,
                      const Matrix& m) {
  shapes[name] = njson::array({m.rows, m.cols});
  values[name] = matrix_values(m);
}

inline Matrix take_param(const njson& shapes, const njson& values,
                         const std::string& name) {
  const auto shape = shapes.at(name).get<std::vector<std::size_t>>();
  Matrix m(shape.at(0), shape.at(1));
  m.data = values.at(name).get<std::vector<double>>();
  if (m.data.size() != m.rows * m.cols)
    throw ConfigError("checkpoint value size mismatch for " + name);
  return m;
}

}  // namespace jsonio

inline njson model_state_to_json(const ModelState& s) {
  njson j;
  j["version"] = 1;
  njson shapes = njson::object();
  njson values = njson::object();
  for (std::size_t l = 0; l < s.gcn_weights.size(); ++l)
    jsonio::put_param(shapes, values, "gcn." + std::to_string(l), s.gcn_weights[l]);
  for (std::size_t l = 0; l < s.gru.size(); ++l) {
    const std::string p = "gru." + std::to_string(l) + ".";
    jsonio::put_param(shapes, values, p + "u_update", s.gru[l].u_update);
    jsonio::put_param(shapes, values, p + "v_update", s.gru[l].v_update);
    jsonio::put_param(shapes, values, p + "b_update", s.gru[l].b_update);
    jsonio::put_param(shapes, values, p + "u_reset", s.gru[l].u_reset);
    jsonio::put_param(shapes, values, p + "v_reset", s.gru[l].v_reset);
    jsonio::put_param(shapes, values, p + "b_reset", s.gru[l].b_reset);
    jsonio::put_param(shapes, values, p + "u_cand", s.gru[l].u_cand);
    jsonio::put_param(shapes, values, p + "v_cand", s.gru[l].v_cand);
    jsonio::put_param(shapes, values, p + "b_cand", s.gru[l].b_cand);
  }
  jsonio::put_param(shapes, values, "classifier.w", s.classifier_w);
  shapes["classifier.b"] = njson::array({1, s.classifier_b.size()});
  values["classifier.b"] = njson(s.classifier_b);
  j["shapes"] = std::move(shapes);
  j["values"] = std::move(values);
  return j;
}

inline ModelState model_state_from_json(const njson& j) {
  try {
    if (j.at("version").get<int>() != 1)
      throw ConfigError("unsupported checkpoint version");
    const njson& shapes = j.at("shapes");
    const njson& values = j.at("values");
    ModelState s;
    for (std::size_t l = 0; shapes.contains("gcn." + std::to_string(l)); ++l)
      s.gcn_weights.push_back(jsonio::take_param(shapes, values,
                                                 "gcn." + std::to_string(l)));
    for (std::size_t l = 0; shapes.contains("gru." + std::to_string(l) + ".u_update");
         ++l) {
      const std::string p = "gru." + std::to_string(l) + ".";
      GruGates g;
      g.u_update = jsonio::take_param(shapes, values, p + "u_update");
      g.v_update = jsonio::take_param(shapes, values, p + "v_update");
      g.b_update = jsonio::take_param(shapes, values, p + "b_update");
      g.u_reset = jsonio::take_param(shapes, values, p + "u_reset");
      g.v_reset = jsonio::take_param(shapes, values, p + "v_reset");
      g.b_reset = jsonio::take_param(shapes, values, p + "b_reset");
      g.u_cand = jsonio::take_param(shapes, values, p + "u_cand");
      g.v_cand = jsonio::take_param(shapes, values, p + "v_cand");
      g.b_cand = jsonio::take_param(shapes, values, p + "b_cand");
      s.gru.push_back(std::move(g));
    }
    s.classifier_w = jsonio::take_param(shapes, values, "classifier.w");
    s.classifier_b = values.at("classifier.b").get<std::vector<double>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint schema error: ") + e.what());
  }
}

inline njson matrix_to_json(const Matrix& m) {
  njson rows = njson::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    njson row = njson::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const njson& j) {
  std::vector<std::vector<double>> rows;
  for (const njson& r : j) rows.push_back(r.get<std::vector<double>>());
  return Matrix::from_rows(rows);
}

inline njson history_artifacts_to_json(const HistoryArtifacts& art) {
  njson j;
  j["checkpoint"] = model_state_to_json(art.final_state);
  j["embeddings"] = matrix_to_json(art.historical_embeddings);
  j["condensed_final"] = condensed_to_json(art.condensed_final);
  return j;
}

// ---------------------------------------------------------------------------
// Metrics and results
// ---------------------------------------------------------------------------

inline njson metrics_report_to_json(const MetricsReport& rep) {
  njson j;
  njson per_task = njson::array();
  for (const TaskRecord& r : rep.per_task) {
    njson t;
    t["i"] = r.task_index;
    t["a_i"] = r.accuracy;
    t["|C|"] = r.correct.size();
    t["|E|"] = r.wrong.size();
    per_task.push_back(std::move(t));
  }
  j["per_task"] = std::move(per_task);
  njson fm = njson::array();
  for (const FmValue& v : rep.pairwise_fm) fm.push_back(v.value);
  j["pairwise_fm"] = std::move(fm);
  j["pm"] = rep.pm;
  j["fm_mean"] = rep.fm_mean;
  j["flags"] = rep.flags;
  return j;
}

inline njson experiment_result_to_json(const ExperimentResult& res) {
  njson j;
  j["arm"] = res.arm;
  j["config_hash"] = res.config_hash;
  j["wall_time_ms"] = res.wall_time_ms;
  j["metrics"] = metrics_report_to_json(res.metrics);
  j["accuracy_matrix"] = res.accuracy_matrix;
  return j;
}

inline njson combined_embeddings_to_json(const CombinedEmbeddings& c,
                                         const GraphSnapshot& snap) {
  njson j;
  j["task"] = snap.timestep;
  j["d_current"] = c.d_current;
  j["d_history"] = c.d_history;
  j["node_ids"] = snap.node_ids;
  njson mask = njson::array();
  for (bool b : c.replay_mask) mask.push_back(b ? 1 : 0);
  j["replay_mask"] = std::move(mask);
  njson match = njson::array();
  for (const auto& m : c.match_map) {
    if (m)
      match.push_back(*m);
    else
      match.push_back(nullptr);
  }
  j["match_map"] = std::move(match);
  j["h_combined"] = matrix_to_json(c.h_combined);
  return j;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  BenchConfig bench;
  CondenseConfig condense;
  ModelConfig model;
  ReplayConfig replay;
  std::uint64_t seed = 1234;  // model init and split membership
  std::string run_id;         // empty = derive from config hash
};

inline RunConfig run_config_from_json(const njson& j) {
  jsonio::check_keys(j, "config", {"bench", "condense", "model", "replay", "run"});
  RunConfig cfg;
  using jsonio::get_field;
  if (j.contains("bench")) {
    const njson& b = j.at("bench");
    jsonio::check_keys(b, "bench",
                       {"num_tasks", "nodes_per_task", "num_classes", "feature_dim",
                        "p_in", "p_out", "churn_rate", "drift_rate", "seed"});
    cfg.bench.num_tasks = get_field(b, "bench", "num_tasks", cfg.bench.num_tasks);
    cfg.bench.nodes_per_task =
        get_field(b, "bench", "nodes_per_task", cfg.bench.nodes_per_task);
    cfg.bench.num_classes = get_field(b, "bench", "num_classes", cfg.bench.num_classes);
    cfg.bench.feature_dim = get_field(b, "bench", "feature_dim", cfg.bench.feature_dim);
    cfg.bench.p_in = get_field(b, "bench", "p_in", cfg.bench.p_in);
    cfg.bench.p_out = get_field(b, "bench", "p_out", cfg.bench.p_out);
    cfg.bench.churn_rate = get_field(b, "bench", "churn_rate", cfg.bench.churn_rate);
    cfg.bench.drift_rate = get_field(b, "bench", "drift_rate", cfg.bench.drift_rate);
    cfg.bench.seed = get_field(b, "bench", "seed", cfg.bench.seed);
  }
  if (j.contains("condense")) {
    const njson& c = j.at("condense");
    jsonio::check_keys(c, "condense", {"budget", "theta", "cluster_iters", "seed"});
    cfg.condense.budget = get_field(c, "condense", "budget", cfg.condense.budget);
    cfg.condense.sim_threshold = get_field(c, "condense", "theta",
                                           cfg.condense.sim_threshold);
    cfg.condense.cluster_iters =
        get_field(c, "condense", "cluster_iters", cfg.condense.cluster_iters);
    cfg.condense.seed = get_field(c, "condense", "seed", cfg.condense.seed);
  }
  if (j.contains("model")) {
    const njson& m = j.at("model");
    jsonio::check_keys(m, "model",
                       {"hidden_dim", "history_dim", "epochs", "lr", "history_epochs",
                        "history_lr"});
    cfg.model.hidden_dim = get_field(m, "model", "hidden_dim", cfg.model.hidden_dim);
    cfg.model.history_dim = get_field(m, "model", "history_dim", cfg.model.history_dim);
    cfg.model.epochs = get_field(m, "model", "epochs", cfg.model.epochs);
    cfg.model.lr = get_field(m, "model", "lr", cfg.model.lr);
    cfg.model.history_epochs =
        get_field(m, "model", "history_epochs", cfg.model.history_epochs);
    cfg.model.history_lr = get_field(m, "model", "history_lr", cfg.model.history_lr);
  }
  if (j.contains("replay")) {
    const njson& r = j.at("replay");
    jsonio::check_keys(r, "replay", {"k_hops", "match_threshold", "enabled"});
    cfg.replay.k_hops = get_field(r, "replay", "k_hops", cfg.replay.k_hops);
    cfg.replay.match_threshold =
        get_field(r, "replay", "match_threshold", cfg.replay.match_threshold);
    cfg.replay.enabled = get_field(r, "replay", "enabled", cfg.replay.enabled);
  }
  if (j.contains("run")) {
    const njson& r = j.at("run");
    jsonio::check_keys(r, "run", {"seed", "run_id"});
    cfg.seed = get_field(r, "run", "seed", cfg.seed);
    cfg.run_id = get_field<std::string>(r, "run", "run_id", cfg.run_id);
  }
  if (cfg.condense.sim_threshold < -1.0 || cfg.condense.sim_threshold > 1.0)
    throw ConfigError("condense.theta must lie in [-1, 1]");
  if (cfg.replay.match_threshold < -1.0 || cfg.replay.match_threshold > 1.0)
    throw ConfigError("replay.match_threshold must lie in [-1, 1]");
  return cfg;
}

inline njson run_config_to_json(const RunConfig& cfg) {
  njson j;
  j["bench"] = {{"num_tasks", cfg.bench.num_tasks},
                {"nodes_per_task", cfg.bench.nodes_per_task},
                {"num_classes", cfg.bench.num_classes},
                {"feature_dim", cfg.bench.feature_dim},
                {"p_in", cfg.bench.p_in},
                {"p_out", cfg.bench.p_out},
                {"churn_rate", cfg.bench.churn_rate},
                {"drift_rate", cfg.bench.drift_rate},
                {"seed", cfg.bench.seed}};
  j["condense"] = {{"budget", cfg.condense.budget},
                   {"theta", cfg.condense.sim_threshold},
                   {"cluster_iters", cfg.condense.cluster_iters},
                   {"seed", cfg.condense.seed}};
  j["model"] = {{"hidden_dim", cfg.model.hidden_dim},
                {"history_dim", cfg.model.history_dim},
                {"epochs", cfg.model.epochs},
                {"lr", cfg.model.lr},
                {"history_epochs", cfg.model.history_epochs},
                {"history_lr", cfg.model.history_lr}};
  j["replay"] = {{"k_hops", cfg.replay.k_hops},
                 {"match_threshold", cfg.replay.match_threshold},
                 {"enabled", cfg.replay.enabled}};
  j["run"] = {{"seed", cfg.seed}, {"run_id", cfg.run_id}};
  return j;
}

/// Applies a dotted-path override like "replay.k_hops=3" onto the raw config
/// tree. The value is parsed as JSON when possible, else taken as a string.
inline void apply_config_override(njson& tree, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  njson value;
  try {
    value = njson::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;  // unquoted strings
  }
  njson* node = &tree;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("bad override path: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

// ---------------------------------------------------------------------------
// Predictions files (eval subcommand)
// ---------------------------------------------------------------------------

/// {"tasks": [{"i": 0, "nodes": [{"id", "label", "pred"}, ...]}, ...]}
inline std::vector<TaskRecord> task_records_from_predictions(const njson& j) {
  jsonio::check_keys(j, "predictions", {"tasks"});
  std::vector<TaskRecord> records;
  try {
    for (const njson& task : j.at("tasks")) {
      jsonio::check_keys(task, "predictions.tasks[]", {"i", "nodes"});
      TaskRecord rec;
      rec.task_index = task.at("i").get<std::size_t>();
      for (const njson& node : task.at("nodes")) {
        jsonio::check_keys(node, "predictions.tasks[].nodes[]",
                           {"id", "label", "pred"});
        const NodeId id = node.at("id").get<NodeId>();
        if (node.at("label").get<int>() == node.at("pred").get<int>())
          rec.correct.insert(id);
        else
          rec.wrong.insert(id);
      }
      const std::size_t total = rec.correct.size() + rec.wrong.size();
      if (total == 0) throw ConfigError("predictions: empty task " +
                                        std::to_string(rec.task_index));
      rec.accuracy = static_cast<double>(rec.correct.size()) /
                     static_cast<double>(total);
      records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("predictions schema error: ") + e.what());
  }
  if (records.empty()) throw ConfigError("predictions: no tasks");
  return records;
}

}  // namespace ccc
