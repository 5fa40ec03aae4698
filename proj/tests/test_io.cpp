#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "ccc/io.hpp"
#include "ccc/rng.hpp"

using namespace ccc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("ccc_io_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

GraphSnapshot sample_snapshot() {
  GraphSnapshot g;
  g.timestep = 3;
  g.node_ids = {1, 2, 5};
  g.features = {{0.5, -1.0}, {2.0, 0.25}, {0.0, 0.125}};
  g.labels = {0, std::nullopt, 1};
  g.edges = {{1, 2}, {2, 5}};
  return g;
}

}  // namespace

TEST_CASE("snapshot JSON round-trips exactly") {
  const GraphSnapshot g = sample_snapshot();
  const njson j = snapshot_to_json(g);
  const GraphSnapshot back = snapshot_from_json(j, "test");
  CHECK(back.timestep == g.timestep);
  CHECK(back.node_ids == g.node_ids);
  CHECK(back.features == g.features);
  CHECK(back.labels == g.labels);
  CHECK(back.edges == g.edges);
}

TEST_CASE("load_snapshot rejects invalid files with the right error types") {
  const fs::path dir = temp_dir("snap");

  CHECK_THROWS_AS(load_snapshot(dir / "nope.json"), MissingInputError);

  write_text_file(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(load_snapshot(dir / "bad.json"), ConfigError);

  // Schema-valid JSON but a dangling edge endpoint.
  write_text_file(dir / "dangling.json",
                  R"({"timestep":0,"nodes":[{"id":1,"x":[0.0],"y":0}],"edges":[[1,2]]})");
  CHECK_THROWS_WITH(load_snapshot(dir / "dangling.json"),
                    Catch::Matchers::ContainsSubstring("dangling"));

  // Duplicate edge in the raw file.
  write_text_file(dir / "dup.json",
                  R"({"timestep":0,"nodes":[{"id":1,"x":[0.0],"y":0},{"id":2,"x":[0.0],"y":null}],"edges":[[1,2],[1,2]]})");
  CHECK_THROWS_WITH(load_snapshot(dir / "dup.json"),
                    Catch::Matchers::ContainsSubstring("duplicate edge"));

  // Unknown key.
  write_text_file(dir / "extra.json",
                  R"({"timestep":0,"nodes":[],"edges":[],"bogus":1})");
  CHECK_THROWS_WITH(load_snapshot(dir / "extra.json"),
                    Catch::Matchers::ContainsSubstring("unknown key"));
}

TEST_CASE("save and load a stream directory ordered by timestep") {
  const fs::path dir = temp_dir("stream");
  for (std::int64_t t = 0; t < 3; ++t) {
    GraphSnapshot g = sample_snapshot();
    g.timestep = t;
    save_snapshot(dir / snapshot_filename(t), g);
  }
  const auto stream = load_stream(dir);
  REQUIRE(stream.size() == 3);
  for (std::int64_t t = 0; t < 3; ++t) CHECK(stream[t].timestep == t);

  CHECK_THROWS_AS(load_stream(dir / "missing"), MissingInputError);
}

TEST_CASE("condensed graph serialization carries provenance and weights") {
  CondensedGraph gc;
  gc.budget = 2;
  gc.theta = 0.25;
  gc.node_features = {{1.0, 0.0}, {0.5, 0.5}};
  gc.node_labels = {0, 1};
  gc.provenance = {{1, 2}, {5}};
  gc.weighted_edges = {{0, 1, 0.7071}};
  const njson j = condensed_to_json(gc);
  const CondensedGraph back = condensed_from_json(j, "test");
  CHECK(back.budget == 2);
  CHECK(back.theta == 0.25);
  CHECK(back.node_features == gc.node_features);
  CHECK(back.node_labels == gc.node_labels);
  CHECK(back.provenance == gc.provenance);
  REQUIRE(back.weighted_edges.size() == 1);
  CHECK(back.weighted_edges[0].weight == 0.7071);
}

TEST_CASE("model checkpoints round-trip bitwise") {
  Rng rng(71);
  ModelState s;
  s.gcn_weights = {glorot_init(4, 6, rng), glorot_init(6, 5, rng)};
  s.gru = {init_gru_gates(4, 6, rng), init_gru_gates(6, 5, rng)};
  s.classifier_w = glorot_init(5, 3, rng);
  s.classifier_b = {0.5, -0.25, 0.125};
  const njson j = model_state_to_json(s);
  CHECK(j.at("version") == 1);
  const ModelState back = model_state_from_json(j);
  REQUIRE(back.gcn_weights.size() == 2);
  REQUIRE(back.gru.size() == 2);
  CHECK(back.gcn_weights[0].data == s.gcn_weights[0].data);
  CHECK(back.gcn_weights[1].data == s.gcn_weights[1].data);
  CHECK(back.gru[1].u_cand.data == s.gru[1].u_cand.data);
  CHECK(back.classifier_w.data == s.classifier_w.data);
  CHECK(back.classifier_b == s.classifier_b);
}

TEST_CASE("run config parsing applies defaults and rejects unknown keys") {
  const njson empty = njson::object();
  const RunConfig defaults = run_config_from_json(empty);
  CHECK(defaults.bench.num_tasks == 5);
  CHECK(defaults.bench.nodes_per_task == 120);
  CHECK(defaults.condense.sim_threshold == 0.5);
  CHECK(defaults.replay.k_hops == 2);
  CHECK(defaults.model.hidden_dim == 32);

  njson bad = njson::object();
  bad["bench"] = {{"num_tasks", 3}, {"typo_field", 1}};
  CHECK_THROWS_WITH(run_config_from_json(bad),
                    Catch::Matchers::ContainsSubstring("bench.typo_field"));

  njson wrong_type = njson::object();
  wrong_type["replay"] = {{"k_hops", "two"}};
  CHECK_THROWS_WITH(run_config_from_json(wrong_type),
                    Catch::Matchers::ContainsSubstring("replay.k_hops"));
}

TEST_CASE("config overrides follow dotted paths") {
  njson tree = njson::object();
  apply_config_override(tree, "replay.k_hops=3");
  apply_config_override(tree, "bench.p_in=0.25");
  apply_config_override(tree, "run.run_id=trial-a");
  const RunConfig cfg = run_config_from_json(tree);
  CHECK(cfg.replay.k_hops == 3);
  CHECK(cfg.bench.p_in == 0.25);
  CHECK(cfg.run_id == "trial-a");
  CHECK_THROWS(apply_config_override(tree, "no-equals-sign"));
}

TEST_CASE("predictions files build task records") {
  const njson j = njson::parse(R"({
    "tasks": [
      {"i": 0, "nodes": [{"id": 1, "label": 0, "pred": 0},
                          {"id": 2, "label": 1, "pred": 0}]},
      {"i": 1, "nodes": [{"id": 1, "label": 0, "pred": 1}]}
    ]})");
  const auto records = task_records_from_predictions(j);
  REQUIRE(records.size() == 2);
  CHECK(records[0].correct == std::set<NodeId>{1});
  CHECK(records[0].wrong == std::set<NodeId>{2});
  CHECK_THAT(records[0].accuracy, Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK(records[1].wrong == std::set<NodeId>{1});

  CHECK_THROWS(task_records_from_predictions(njson::parse(R"({"tasks":[]})")));
}

TEST_CASE("history artifacts serialize checkpoint, embeddings and condensed") {
  Rng rng(81);
  HistoryArtifacts art;
  art.final_state.gcn_weights = {glorot_init(2, 3, rng), glorot_init(3, 2, rng)};
  art.final_state.classifier_w = glorot_init(2, 2, rng);
  art.final_state.classifier_b = {0.0, 1.0};
  art.historical_embeddings = Matrix(2, 2, 0.5);
  art.condensed_final.budget = 2;
  art.condensed_final.node_features = {{1.0}, {2.0}};
  art.condensed_final.node_labels = {0, 1};
  art.condensed_final.provenance = {{1}, {2}};
  const njson j = history_artifacts_to_json(art);
  CHECK(j.contains("checkpoint"));
  CHECK(j.contains("embeddings"));
  CHECK(j.contains("condensed_final"));
  const Matrix emb = matrix_from_json(j.at("embeddings"));
  CHECK(emb.data == art.historical_embeddings.data);
}
