#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <vector>

#include "ccc/bench.hpp"
#include "ccc/io.hpp"

using namespace ccc;

namespace {

// Small, fast experiment configuration for tests.
ExperimentConfig small_experiment(std::uint64_t seed) {
  ExperimentConfig e;
  e.model.hidden_dim = 16;
  e.model.history_dim = 16;
  e.model.epochs = 30;
  e.model.lr = 0.05;
  e.model.history_epochs = 30;
  e.seed = seed;
  return e;
}

BenchConfig small_bench(std::uint64_t seed) {
  BenchConfig b;
  b.num_tasks = 3;
  b.nodes_per_task = 60;
  b.seed = seed;
  return b;
}

}  // namespace

TEST_CASE("generate_stream validates its config") {
  BenchConfig c;
  c.churn_rate = 1.5;
  CHECK_THROWS_WITH(generate_stream(c),
                    Catch::Matchers::ContainsSubstring("churn_rate"));
  BenchConfig t;
  t.num_tasks = 1;
  CHECK_THROWS(generate_stream(t));
  BenchConfig p;
  p.p_out = 0.5;
  p.p_in = 0.2;
  CHECK_THROWS_WITH(generate_stream(p), Catch::Matchers::ContainsSubstring("p_in"));
}

TEST_CASE("generate_stream with zero churn and drift is constant") {
  BenchConfig c = small_bench(3);
  c.churn_rate = 0.0;
  c.drift_rate = 0.0;
  const auto stream = generate_stream(c);
  REQUIRE(stream.size() == 3);
  for (std::size_t t = 1; t < stream.size(); ++t) {
    CHECK(stream[t].node_ids == stream[0].node_ids);
    CHECK(stream[t].edges == stream[0].edges);
    CHECK(stream[t].features == stream[0].features);
  }
}

TEST_CASE("generate_stream snapshots all validate") {
  const auto stream = generate_stream(small_bench(4));
  for (const auto& s : stream) CHECK(validate_snapshot(s).empty());
}

TEST_CASE("generate_stream with churn produces nonempty deltas") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BenchConfig c = small_bench(seed);
    c.num_tasks = 2;
    const auto stream = generate_stream(c);
    const GraphDelta d = compute_delta(stream[0], stream[1]);
    CHECK_FALSE(d.empty());
    CHECK_FALSE(d.seed_set.empty());
  }
}

TEST_CASE("generate_stream keeps label histograms near uniform") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto stream = generate_stream(small_bench(seed));
    for (const auto& s : stream) {
      std::map<int, double> hist;
      for (const auto& y : s.labels) ++hist[*y];
      const double uniform = static_cast<double>(s.num_nodes()) / 3.0;
      for (const auto& [cls, count] : hist)
        CHECK(std::fabs(count - uniform) <= 0.1 * static_cast<double>(s.num_nodes()));
    }
  }
}

TEST_CASE("generate_stream is deterministic per seed") {
  const auto a = generate_stream(small_bench(9));
  const auto b = generate_stream(small_bench(9));
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t)
    CHECK(snapshot_to_json(a[t]).dump() == snapshot_to_json(b[t]).dump());
}

TEST_CASE("run_experiment rejects unknown arms and short streams") {
  CHECK_THROWS_WITH(parse_arm("bogus"),
                    Catch::Matchers::ContainsSubstring("unknown arm"));
  const auto stream = generate_stream(small_bench(1));
  CHECK_THROWS(run_experiment({stream[0]}, {Arm::kCcc}, small_experiment(1)));
}

TEST_CASE("run_experiment emits one result per arm with full metrics") {
  const auto stream = generate_stream(small_bench(11));
  const auto results = run_experiment(
      stream, {Arm::kCcc, Arm::kFinetune, Arm::kFullReplay}, small_experiment(11));
  REQUIRE(results.size() == 3);
  for (const auto& res : results) {
    CHECK(res.metrics.per_task.size() == stream.size());
    CHECK(res.metrics.pairwise_fm.size() == stream.size() - 1);
    CHECK(res.metrics.pm >= 0.0);
    CHECK(res.metrics.pm <= 1.0);
    CHECK(res.metrics.fm_mean >= 0.0);
    CHECK(res.metrics.fm_mean <= 1.0);
    CHECK(res.accuracy_matrix.size() == stream.size());
    for (std::size_t t = 0; t < res.accuracy_matrix.size(); ++t)
      CHECK(res.accuracy_matrix[t].size() == t + 1);
    CHECK_FALSE(res.config_hash.empty());
  }
}

TEST_CASE("run_experiment is reproducible modulo wall time") {
  const auto stream = generate_stream(small_bench(13));
  const auto a = run_experiment(stream, {Arm::kCcc}, small_experiment(13));
  const auto b = run_experiment(stream, {Arm::kCcc}, small_experiment(13));
  njson ja = experiment_result_to_json(a[0]);
  njson jb = experiment_result_to_json(b[0]);
  ja.erase("wall_time_ms");
  jb.erase("wall_time_ms");
  CHECK(ja.dump() == jb.dump());
}

TEST_CASE("ccc with replay disabled equals the finetune arm exactly") {
  const auto stream = generate_stream(small_bench(17));
  ExperimentConfig cfg = small_experiment(17);
  cfg.replay.enabled = false;
  const auto disabled = run_experiment(stream, {Arm::kCcc}, cfg);
  cfg.replay.enabled = true;
  const auto finetune = run_experiment(stream, {Arm::kFinetune}, cfg);
  njson a = metrics_report_to_json(disabled[0].metrics);
  njson b = metrics_report_to_json(finetune[0].metrics);
  CHECK(a.dump() == b.dump());
  CHECK(disabled[0].accuracy_matrix == finetune[0].accuracy_matrix);
}

TEST_CASE("train/eval split is disjoint and persistent per node") {
  const auto stream = generate_stream(small_bench(19));
  const std::uint64_t split_seed = derive_seed(19, 0x5EED5);
  std::map<NodeId, bool> first_seen;
  std::size_t train_total = 0, all_total = 0;
  for (const auto& s : stream) {
    for (NodeId id : s.node_ids) {
      const bool train = is_train_node(split_seed, id);
      if (first_seen.count(id))
        CHECK(first_seen[id] == train);  // persistent membership
      else
        first_seen[id] = train;
      ++all_total;
      if (train) ++train_total;
    }
  }
  const double frac = static_cast<double>(train_total) / all_total;
  CHECK(frac > 0.4);
  CHECK(frac < 0.8);
}

TEST_CASE("zero-churn stream shows negligible forgetting under finetune") {
  for (std::uint64_t seed : {5ULL, 6ULL}) {
    BenchConfig b = small_bench(seed);
    b.churn_rate = 0.0;
    b.drift_rate = 0.0;
    const auto stream = generate_stream(b);
    const auto results =
        run_experiment(stream, {Arm::kFinetune}, small_experiment(seed));
    CHECK(results[0].metrics.fm_mean <= 0.05);
  }
}
