#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "engage/checkpoint.hpp"
#include "engage/dataset.hpp"
#include "engage/errors.hpp"
#include "engage/gradcheck.hpp"
#include "engage/model.hpp"
#include "engage/text.hpp"
#include "engage/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace engage;

namespace {

// Relative output paths are resolved against ENGAGE_OUT_ROOT when it is set.
std::string resolve_out(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  const char* root = std::getenv("ENGAGE_OUT_ROOT");
  if (root == nullptr || *root == '\0') return path;
  return (fs::path(root) / path).string();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_text(const std::string& path, const std::string& content) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

ordered_json metrics_to_json(const MetricsReport& r) {
  return {{"n_samples", r.n_samples}, {"accuracy", r.accuracy}, {"macro_f1", r.macro_f1},
          {"auc", r.auc},             {"precision", r.precision}, {"recall", r.recall},
          {"confusion", r.confusion}};
}

void print_metrics_table(const MetricsReport& r, const std::vector<std::string>& label_names) {
  std::cout << "samples   " << r.n_samples << "\n";
  std::cout << "accuracy  " << format_double(r.accuracy) << "\n";
  std::cout << "macro_f1  " << format_double(r.macro_f1) << "\n";
  std::cout << "auc       " << format_double(r.auc) << "\n";
  for (size_t c = 0; c < r.precision.size(); ++c) {
    const std::string name =
        c < label_names.size() ? label_names[c] : "class_" + std::to_string(c);
    std::cout << name << "  precision " << format_double(r.precision[c]) << "  recall "
              << format_double(r.recall[c]) << "\n";
  }
  std::cout << "confusion (rows = true, cols = predicted)\n";
  for (const auto& row : r.confusion) {
    std::cout << " ";
    for (long long v : row) std::cout << " " << v;
    std::cout << "\n";
  }
}

// ---------------------------------------------------------------------------
// Train configuration resolution: defaults, then config file, then flags.

const char* kTaskNames[] = {"binary", "ternary"};

struct ResolvedRun {
  TrainConfig train;
  std::string task = "binary";
};

ordered_json run_to_json(const ResolvedRun& run) {
  const TrainConfig& c = run.train;
  return {{"task", run.task},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"dropout", c.dropout},
          {"lambda", c.lambda},
          {"hyper_layers", c.hyper_layers},
          {"graph_layers", c.graph_layers},
          {"hidden_dim", c.hidden_dim},
          {"seed", c.seed},
          {"attention_enabled", c.attention_enabled},
          {"attention_per_layer", c.attention_per_layer},
          {"ablation", ablation_name(c.ablation)},
          {"train_fraction", c.train_fraction},
          {"subsample_fraction", c.subsample_fraction},
          {"max_students", c.max_students}};
}

void apply_config_file(ResolvedRun& run, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError("config '" + path + "': " + e.what());
  }
  try {
    for (const auto& [key, value] : j.items()) {
      TrainConfig& c = run.train;
      if (key == "task")
        run.task = value.get<std::string>();
      else if (key == "learning_rate")
        c.learning_rate = value.get<double>();
      else if (key == "epochs")
        c.epochs = value.get<int>();
      else if (key == "batch_size")
        c.batch_size = value.get<int>();
      else if (key == "dropout")
        c.dropout = value.get<double>();
      else if (key == "lambda")
        c.lambda = value.get<double>();
      else if (key == "hyper_layers")
        c.hyper_layers = value.get<int>();
      else if (key == "graph_layers")
        c.graph_layers = value.get<int>();
      else if (key == "hidden_dim")
        c.hidden_dim = value.get<int>();
      else if (key == "seed")
        c.seed = value.get<std::uint64_t>();
      else if (key == "attention_enabled")
        c.attention_enabled = value.get<bool>();
      else if (key == "attention_per_layer")
        c.attention_per_layer = value.get<bool>();
      else if (key == "ablation")
        c.ablation = parse_ablation(value.get<std::string>());
      else if (key == "train_fraction")
        c.train_fraction = value.get<double>();
      else if (key == "subsample_fraction")
        c.subsample_fraction = value.get<double>();
      else if (key == "max_students")
        c.max_students = value.get<int>();
      else
        throw ValidationError("config '" + path + "': unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config '" + path + "': " + e.what());
  }
}

void check_task(const std::string& task, const DatasetManifest& manifest) {
  int want = 0;
  if (task == "binary")
    want = 2;
  else if (task == "ternary")
    want = 3;
  else
    throw ValidationError("unknown task '" + task + "' (expected binary or ternary)");
  if (manifest.n_classes != want)
    throw ValidationError("task " + task + " needs " + std::to_string(want) +
                          " classes, dataset has " + std::to_string(manifest.n_classes));
}

void check_compatibility(const ModelConfig& config, const DatasetManifest& manifest) {
  if (config.n_students != manifest.students_per_snapshot)
    throw ValidationError("checkpoint expects " + std::to_string(config.n_students) +
                          " students per snapshot, dataset has " +
                          std::to_string(manifest.students_per_snapshot));
  if (config.n_classes != manifest.n_classes)
    throw ValidationError("checkpoint expects " + std::to_string(config.n_classes) +
                          " classes, dataset has " + std::to_string(manifest.n_classes));
  const auto enabled = config.enabled_types();
  for (int t = 0; t < kNumFeatureTypes; ++t)
    if (enabled[t] && config.feature_dims[t] != manifest.feature_dims[t])
      throw ValidationError(std::string("checkpoint expects ") + feature_type_name(t) +
                            " dimension " + std::to_string(config.feature_dims[t]) +
                            ", dataset has " + std::to_string(manifest.feature_dims[t]));
}

// ---------------------------------------------------------------------------
// Subcommand argument bundles.

struct SynthArgs {
  int students = 6;
  int snapshots = 1000;
  int classes = 2;
  std::vector<double> rho = {0.7};
  double noise = 0.3;
  std::uint64_t seed = 0;
  std::vector<int> dims = {512, 49, 34};
  std::string out = "dataset.jsonl";
};

struct TrainArgs {
  std::string data;
  std::string task;
  std::string config;
  std::string ablation;
  std::string out = "run";
  bool have_task = false, have_ablation = false, have_epochs = false, have_lr = false,
       have_seed = false;
  int epochs = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
};

struct GradCheckArgs {
  std::uint64_t seed = 0;
  int students = 3;
  int dh = 8;
  int hyper_layers = 2;
  int graph_layers = 2;
  bool no_attention = false;
  std::string corrupt_group;
  double corrupt_delta = 0.0;
};

struct SweepArgs {
  std::string mode;
  std::string data;
  std::string config;
  std::string out = "sweep";
  int max_l = 6;
  int max_k = 6;
  std::vector<double> fractions = {0.2, 0.4, 0.6, 0.8};
  int trials = 5;
};

// ---------------------------------------------------------------------------

int run_synth(const SynthArgs& a) {
  SynthConfig c;
  c.n_students = a.students;
  c.n_snapshots = a.snapshots;
  c.n_classes = a.classes;
  c.rho_choices = a.rho;
  c.noise = a.noise;
  c.seed = a.seed;
  if (a.dims.size() != kNumFeatureTypes)
    throw ValidationError("--dims needs exactly 3 comma-separated values");
  for (int t = 0; t < kNumFeatureTypes; ++t) c.feature_dims[t] = a.dims[t];
  Dataset ds = generate_synthetic(c);
  const std::string path = resolve_out(a.out);
  ensure_parent(path);
  save_dataset(ds, path);
  load_dataset(path);  // written files must always load back
  std::cout << "wrote " << path << "\n";
  std::cout << "snapshots " << ds.manifest.n_snapshots << " students "
            << ds.manifest.students_per_snapshot << " classes " << ds.manifest.n_classes
            << "\n";
  std::cout << "dims " << ds.manifest.feature_dims[0] << " " << ds.manifest.feature_dims[1]
            << " " << ds.manifest.feature_dims[2] << " seed " << ds.manifest.seed << "\n";
  std::cout << "rho";
  for (double r : c.rho_choices) std::cout << " " << format_double(r);
  std::cout << " noise " << format_double(c.noise) << "\n";
  return 0;
}

int run_train(const TrainArgs& a) {
  Dataset ds = load_dataset(a.data);
  ResolvedRun run;
  if (!a.config.empty()) apply_config_file(run, a.config);
  if (a.have_task) run.task = a.task;
  if (a.have_ablation) run.train.ablation = parse_ablation(a.ablation);
  if (a.have_epochs) run.train.epochs = a.epochs;
  if (a.have_lr) run.train.learning_rate = a.lr;
  if (a.have_seed) run.train.seed = a.seed;
  check_task(run.task, ds.manifest);

  const fs::path out_dir = resolve_out(a.out);
  fs::create_directories(out_dir);
  write_text((out_dir / "config.json").string(), run_to_json(run).dump(2) + "\n");

  TrainResult result = train(run.train, ds);

  std::ostringstream csv;
  csv << "epoch,train_loss,train_accuracy,test_accuracy\n";
  for (const EpochLog& e : result.log) {
    csv << e.epoch << "," << format_double(e.train_loss) << ","
        << format_double(e.train_accuracy) << "," << format_double(e.test_accuracy) << "\n";
    std::cout << "epoch " << e.epoch << " train_loss " << format_double(e.train_loss)
              << " train_acc " << format_double(e.train_accuracy) << " test_acc "
              << format_double(e.test_accuracy) << "\n";
  }
  write_text((out_dir / "epochs.csv").string(), csv.str());

  save_checkpoint(result.params, (out_dir / "checkpoint.txt").string());

  ordered_json metrics = {{"ablation", ablation_name(run.train.ablation)},
                          {"class_weights", result.class_weights},
                          {"train_snapshots", result.split.train_ids.size()},
                          {"test_snapshots", result.split.test_ids.size()},
                          {"train", metrics_to_json(result.train_metrics)},
                          {"test", result.test_metrics.n_samples > 0
                                       ? metrics_to_json(result.test_metrics)
                                       : ordered_json()}};
  write_text((out_dir / "metrics.json").string(), metrics.dump(2) + "\n");

  std::cout << "train accuracy " << format_double(result.train_metrics.accuracy) << "\n";
  if (result.test_metrics.n_samples > 0)
    std::cout << "test accuracy " << format_double(result.test_metrics.accuracy) << "\n";
  std::cout << "artifacts in " << out_dir.string() << "\n";
  return 0;
}

int run_eval(const EvalArgs& a) {
  ModelParameters params = load_checkpoint(a.checkpoint);
  Dataset ds = load_dataset(a.data);
  check_compatibility(params.config, ds.manifest);
  std::vector<int> ids;
  for (int i = 0; i < static_cast<int>(ds.snapshots.size()); ++i) ids.push_back(i);
  MetricsReport report = evaluate(params, ds, ids);
  print_metrics_table(report, ds.manifest.label_names);
  if (!a.out.empty())
    write_text(resolve_out(a.out), metrics_to_json(report).dump(2) + "\n");
  return 0;
}

int run_gradcheck(const GradCheckArgs& a) {
  if (a.students < 1 || a.students > 4)
    throw ValidationError("--students must be in [1, 4] to keep finite differences tractable");
  if (a.dh < 1 || a.dh > 8)
    throw ValidationError("--dh must be in [1, 8] to keep finite differences tractable");
  GradCheckConfig c;
  c.seed = a.seed;
  c.n_students = a.students;
  c.hidden_dim = a.dh;
  c.hyper_layers = a.hyper_layers;
  c.graph_layers = a.graph_layers;
  c.attention_enabled = !a.no_attention;
  c.corrupt_group = a.corrupt_group;
  c.corrupt_delta = a.corrupt_delta;
  std::vector<GradCheckGroup> groups = run_gradcheck(c);
  bool ok = true;
  for (const GradCheckGroup& g : groups) {
    if (!g.applicable) {
      std::cout << g.name << " not-applicable\n";
      continue;
    }
    const bool pass = g.max_rel_error <= 1e-4;
    ok = ok && pass;
    std::cout << g.name << " max_rel_error " << format_double(g.max_rel_error) << " "
              << (pass ? "pass" : "FAIL") << "\n";
  }
  std::cout << (ok ? "gradcheck passed" : "gradcheck FAILED") << "\n";
  return ok ? 0 : 3;
}

int run_sweep(const SweepArgs& a) {
  Dataset ds = load_dataset(a.data);
  ResolvedRun run;
  if (!a.config.empty()) apply_config_file(run, a.config);
  check_task(run.task, ds.manifest);
  const fs::path out_dir = resolve_out(a.out);
  fs::create_directories(out_dir);
  write_text((out_dir / "config.json").string(), run_to_json(run).dump(2) + "\n");

  if (a.mode == "layers") {
    LayerSweepResult grid = sweep_layers(run.train, ds, a.max_l, a.max_k);
    std::ostringstream tsv;
    tsv << "L\\K";
    for (int k : grid.k_values) tsv << "\t" << k;
    tsv << "\n";
    for (size_t li = 0; li < grid.l_values.size(); ++li) {
      tsv << grid.l_values[li];
      for (double acc : grid.test_accuracy[li]) tsv << "\t" << format_double(acc);
      tsv << "\n";
    }
    write_text((out_dir / "layers_grid.tsv").string(), tsv.str());
    std::cout << tsv.str();
  } else if (a.mode == "datascale") {
    std::vector<DataScaleRow> rows = sweep_data_scale(run.train, ds, a.fractions, a.trials);
    std::ostringstream tsv;
    tsv << "fraction\tmean_accuracy\tstd_accuracy";
    for (int t = 0; t < a.trials; ++t) tsv << "\ttrial_" << t;
    tsv << "\n";
    for (const DataScaleRow& row : rows) {
      tsv << format_double(row.fraction) << "\t" << format_double(row.mean_accuracy) << "\t"
          << format_double(row.std_accuracy);
      for (double acc : row.per_trial) tsv << "\t" << format_double(acc);
      tsv << "\n";
    }
    write_text((out_dir / "datascale.tsv").string(), tsv.str());
    std::cout << tsv.str();
  } else {
    throw ValidationError("unknown sweep mode '" + a.mode + "' (expected layers or datascale)");
  }
  std::cout << "artifacts in " << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-stream hypergraph network for classroom engagement classification"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--students", synth.students, "Students per snapshot");
  synth_cmd->add_option("--snapshots", synth.snapshots, "Number of snapshots");
  synth_cmd->add_option("--classes", synth.classes, "Number of classes");
  synth_cmd->add_option("--rho", synth.rho, "Contagion strengths sampled per snapshot")
      ->delimiter(',');
  synth_cmd->add_option("--noise", synth.noise, "Per-channel noise level");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--dims", synth.dims, "Feature dimensions d_e,d_a,d_u")
      ->delimiter(',');
  synth_cmd->add_option("--out", synth.out, "Output dataset path");

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model and write run artifacts");
  train_cmd->add_option("--data", train_args.data, "Dataset path")->required();
  CLI::Option* opt_task =
      train_cmd->add_option("--task", train_args.task, "binary or ternary");
  train_cmd->add_option("--config", train_args.config, "JSON training config");
  CLI::Option* opt_ablation =
      train_cmd->add_option("--ablation", train_args.ablation, "Model variant to train");
  train_cmd->add_option("--out", train_args.out, "Output directory");
  CLI::Option* opt_epochs = train_cmd->add_option("--epochs", train_args.epochs, "Epochs");
  CLI::Option* opt_lr = train_cmd->add_option("--lr", train_args.lr, "Learning rate");
  CLI::Option* opt_seed = train_cmd->add_option("--seed", train_args.seed, "Run seed");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint path")->required();
  eval_cmd->add_option("--data", eval_args.data, "Dataset path")->required();
  eval_cmd->add_option("--out", eval_args.out, "Optional metrics JSON path");

  GradCheckArgs gc_args;
  CLI::App* gc_cmd =
      app.add_subcommand("gradcheck", "Compare analytic and numeric gradients per group");
  gc_cmd->add_option("--seed", gc_args.seed, "Seed");
  gc_cmd->add_option("--students", gc_args.students, "Students (<= 4)");
  gc_cmd->add_option("--dh", gc_args.dh, "Hidden dimension (<= 8)");
  gc_cmd->add_option("--hyper-layers", gc_args.hyper_layers, "Hypergraph stream depth");
  gc_cmd->add_option("--graph-layers", gc_args.graph_layers, "Pair-graph stream depth");
  gc_cmd->add_flag("--no-attention", gc_args.no_attention, "Disable hyperedge attention");
  gc_cmd->add_option("--corrupt-group", gc_args.corrupt_group,
                     "Test hook: group whose gradient gets perturbed");
  gc_cmd->add_option("--corrupt-delta", gc_args.corrupt_delta,
                     "Test hook: perturbation magnitude");

  SweepArgs sweep_args;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Depth or data-scale sweep");
  sweep_cmd->add_option("--mode", sweep_args.mode, "layers or datascale")->required();
  sweep_cmd->add_option("--data", sweep_args.data, "Dataset path")->required();
  sweep_cmd->add_option("--config", sweep_args.config, "JSON training config");
  sweep_cmd->add_option("--out", sweep_args.out, "Output directory");
  sweep_cmd->add_option("--max-l", sweep_args.max_l, "Max hypergraph depth (layers mode)");
  sweep_cmd->add_option("--max-k", sweep_args.max_k, "Max pair-graph depth (layers mode)");
  sweep_cmd->add_option("--fractions", sweep_args.fractions,
                        "Training-set fractions (datascale mode)")
      ->delimiter(',');
  sweep_cmd->add_option("--trials", sweep_args.trials, "Trials per fraction (datascale mode)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  train_args.have_task = opt_task->count() > 0;
  train_args.have_ablation = opt_ablation->count() > 0;
  train_args.have_epochs = opt_epochs->count() > 0;
  train_args.have_lr = opt_lr->count() > 0;
  train_args.have_seed = opt_seed->count() > 0;

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (gc_cmd->parsed()) return run_gradcheck(gc_args);
    if (sweep_cmd->parsed()) return run_sweep(sweep_args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
