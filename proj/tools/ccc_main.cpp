// Experiment CLI: stream generation, pipeline runs, standalone condensation,
// gradient verification, and metric recomputation from prediction files.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ccc/ccc.hpp"

namespace fs = std::filesystem;

namespace {

ccc::njson load_config_tree(const std::string& config_path,
                            const std::vector<std::string>& overrides) {
  ccc::njson tree = ccc::njson::object();
  if (!config_path.empty()) tree = ccc::parse_json_file(config_path);
  for (const std::string& o : overrides) ccc::apply_config_override(tree, o);
  return tree;
}

int cmd_generate(const std::string& config_path,
                 const std::vector<std::string>& overrides,
                 const std::string& out_dir) {
  const ccc::RunConfig cfg =
      ccc::run_config_from_json(load_config_tree(config_path, overrides));
  const std::vector<ccc::GraphSnapshot> stream = ccc::generate_stream(cfg.bench);

  ccc::njson manifest;
  manifest["num_tasks"] = cfg.bench.num_tasks;
  manifest["seed"] = cfg.bench.seed;
  ccc::njson files = ccc::njson::array();
  for (const ccc::GraphSnapshot& s : stream) {
    const std::string name = ccc::snapshot_filename(s.timestep);
    ccc::save_snapshot(fs::path(out_dir) / name, s);
    files.push_back(name);
  }
  manifest["files"] = std::move(files);
  manifest["config"] = ccc::run_config_to_json(cfg)["bench"];
  ccc::write_text_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << stream.size() << " snapshots to " << out_dir << "\n";
  return ccc::kExitOk;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& stream_dir, const std::string& arms_csv,
            const std::string& out_dir, const std::string& run_id_flag,
            bool dump_embeddings) {
  const ccc::RunConfig cfg =
      ccc::run_config_from_json(load_config_tree(config_path, overrides));

  std::vector<ccc::Arm> arms;
  std::string token;
  for (char ch : arms_csv + ",") {
    if (ch == ',') {
      if (!token.empty()) arms.push_back(ccc::parse_arm(token));
      token.clear();
    } else {
      token += ch;
    }
  }
  if (arms.empty()) throw ccc::ConfigError("no arms requested");

  const std::vector<ccc::GraphSnapshot> stream = ccc::load_stream(stream_dir);

  ccc::ExperimentConfig ecfg;
  ecfg.model = cfg.model;
  ecfg.replay = cfg.replay;
  ecfg.condense = cfg.condense;
  ecfg.seed = cfg.seed;
  ecfg.keep_embeddings = dump_embeddings;

  const std::vector<ccc::ExperimentResult> results =
      ccc::run_experiment(stream, arms, ecfg);

  std::string run_id = !run_id_flag.empty() ? run_id_flag
                       : !cfg.run_id.empty() ? cfg.run_id
                                             : results.front().config_hash;
  const fs::path run_dir = fs::path(out_dir) / run_id;

  ccc::njson summary;
  summary["run_id"] = run_id;
  summary["config"] = ccc::run_config_to_json(cfg);
  ccc::njson arm_list = ccc::njson::array();
  for (const ccc::ExperimentResult& res : results) {
    ccc::write_text_file(run_dir / res.arm / "result.json",
                         ccc::experiment_result_to_json(res).dump(2) + "\n");
    if (res.final_history) {
      ccc::write_text_file(
          run_dir / res.arm / "history_artifacts.json",
          ccc::history_artifacts_to_json(*res.final_history).dump(2) + "\n");
    }
    if (dump_embeddings) {
      for (std::size_t t = 0; t < res.task_embeddings.size(); ++t) {
        char name[48];
        std::snprintf(name, sizeof(name), "embeddings_task_%04zu.json", t);
        ccc::write_text_file(
            run_dir / res.arm / name,
            ccc::combined_embeddings_to_json(res.task_embeddings[t], stream[t])
                    .dump(2) +
                "\n");
      }
    }
    arm_list.push_back(res.arm);
  }
  summary["arms"] = std::move(arm_list);
  ccc::write_text_file(run_dir / "summary.json", summary.dump(2) + "\n");

  std::printf("%-12s %10s %10s\n", "arm", "PM", "FM-mean");
  for (const ccc::ExperimentResult& res : results)
    std::printf("%-12s %10.4f %10.4f\n", res.arm.c_str(), res.metrics.pm,
                res.metrics.fm_mean);
  std::cout << "results under " << run_dir.string() << "\n";
  return ccc::kExitOk;
}

int cmd_condense(const std::string& config_path,
                 const std::vector<std::string>& overrides,
                 const std::string& snapshot_path, const std::string& out_path) {
  const ccc::RunConfig cfg =
      ccc::run_config_from_json(load_config_tree(config_path, overrides));
  const ccc::GraphSnapshot snap = ccc::load_snapshot(snapshot_path);
  const ccc::CondensedGraph gc = ccc::condense_snapshot(snap, cfg.condense);
  for (const std::string& w : gc.warnings) std::cerr << "warning: " << w << "\n";
  ccc::write_text_file(out_path, ccc::condensed_to_json(gc).dump(2) + "\n");
  std::cout << "condensed " << snap.num_nodes() << " nodes into " << gc.num_nodes()
            << " (" << gc.weighted_edges.size() << " edges) -> " << out_path << "\n";
  return ccc::kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t instances, double inject_fault) {
  ccc::GradCheckOptions opt;
  opt.seed = seed;
  opt.instances = instances;
  opt.inject_fault = inject_fault;
  const ccc::GradCheckReport rep = ccc::run_gradcheck(opt);
  std::printf("%-24s %14s  %s\n", "op", "max-rel-err", "status");
  for (const ccc::GradCheckOpReport& r : rep.ops)
    std::printf("%-24s %14.3e  %s\n", r.op.c_str(), r.max_rel_err,
                r.pass ? "pass" : "FAIL");
  if (!rep.pass) {
    std::cerr << "gradient check failed\n";
    return ccc::kExitNumeric;
  }
  std::cout << "all gradient checks passed (" << instances << " instances)\n";
  return ccc::kExitOk;
}

int cmd_eval(const std::string& predictions_path, const std::string& out_path) {
  const ccc::njson preds = ccc::parse_json_file(predictions_path);
  const std::vector<ccc::TaskRecord> records =
      ccc::task_records_from_predictions(preds);
  const ccc::MetricsReport rep = ccc::build_metrics_report(records);
  const std::string text = ccc::metrics_report_to_json(rep).dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    ccc::write_text_file(out_path, text);
  return ccc::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual learning on dynamic graphs via condensation and "
               "selective concatenation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "stream", stream_dir, out_results = "results";
  std::string snapshot_path, condensed_out = "condensed.json";
  std::string arms_csv = "ccc,finetune,full_replay";
  std::string run_id, predictions_path, eval_out;
  std::vector<std::string> overrides;
  std::uint64_t gradcheck_seed = 99;
  std::size_t gradcheck_instances = 20;
  double gradcheck_fault = 0.0;
  bool dump_embeddings = false;

  CLI::App* gen = app.add_subcommand("generate", "Generate a synthetic snapshot stream");
  gen->add_option("--config", config_path, "JSON config file");
  gen->add_option("--out", out_dir, "Output directory for snapshot files");
  gen->add_option("--set", overrides, "Override config keys, e.g. bench.seed=7");

  CLI::App* run = app.add_subcommand("run", "Run the experiment arms over a stream");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--stream", stream_dir, "Directory of snapshot files")->required();
  run->add_option("--arms", arms_csv, "Comma-separated arms");
  run->add_option("--out", out_results, "Results directory");
  run->add_option("--run-id", run_id, "Run identifier (default: config hash)");
  run->add_option("--set", overrides, "Override config keys");
  run->add_flag("--dump-embeddings", dump_embeddings,
                "Write combined embeddings per task");

  CLI::App* cond = app.add_subcommand("condense", "Condense one snapshot file");
  cond->add_option("--config", config_path, "JSON config file");
  cond->add_option("--snapshot", snapshot_path, "Snapshot JSON file")->required();
  cond->add_option("--out", condensed_out, "Output condensed graph file");
  cond->add_option("--set", overrides, "Override config keys");

  CLI::App* grad = app.add_subcommand("gradcheck", "Run the finite-difference suite");
  grad->add_option("--seed", gradcheck_seed, "Base seed");
  grad->add_option("--instances", gradcheck_instances, "Random instances per op");
  grad->add_option("--inject-fault", gradcheck_fault,
                   "Perturb one analytic gradient (negative-control hook)");

  CLI::App* ev = app.add_subcommand("eval", "Recompute metrics from predictions");
  ev->add_option("--predictions", predictions_path, "Predictions JSON file")
      ->required();
  ev->add_option("--out", eval_out, "Write metrics JSON here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(config_path, overrides, out_dir);
    if (run->parsed())
      return cmd_run(config_path, overrides, stream_dir, arms_csv, out_results,
                     run_id, dump_embeddings);
    if (cond->parsed())
      return cmd_condense(config_path, overrides, snapshot_path, condensed_out);
    if (grad->parsed())
      return cmd_gradcheck(gradcheck_seed, gradcheck_instances, gradcheck_fault);
    if (ev->parsed()) return cmd_eval(predictions_path, eval_out);
  } catch (const ccc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ccc::kExitConfig;
  } catch (const ccc::MissingInputError& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return ccc::kExitMissingInput;
  } catch (const ccc::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return ccc::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ccc::kExitFailure;
  }
  return ccc::kExitOk;
}
