// Command-line front end: simulate | generate | train | evaluate | predict.
// Every subcommand is deterministic given its flags and seed, and each run
// writes its resolved configuration to a run log next to its outputs (no
// timestamps, so reruns are byte-identical).
//
// Exit codes: 0 success (including gate rejections), 1 I/O, 2 validation or
// usage, 3 numeric failure.

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "msf/evaluate.hpp"
#include "msf/nn/sgd.hpp"

namespace {

using namespace msf;
using nlohmann::ordered_json;

std::string default_out_dir() {
  const char* env = std::getenv("MSF_OUT_DIR");
  return env && *env ? env : ".";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir + "/" + name;
}

void write_run_log(const std::string& path, const std::string& command,
                   const ordered_json& flags) {
  ordered_json j;
  j["command"] = command;
  j["flags"] = flags;
  write_text_file(path, j.dump(2) + "\n");
}

ordered_json measures_json_value(const PatternMeasures& m) {
  // Same encoding as the measures file (string "inf" for an unbeaten main
  // lobe) so CLI output and artifacts agree.
  return ordered_json::parse(measures_to_json(m));
}

void print_measures(const PatternMeasures& m) {
  std::printf("directivity_db  %s\n", fmt9(m.directivity_db).c_str());
  std::printf("pslr_db         %s\n", std::isfinite(m.pslr_db)
                                          ? fmt9(m.pslr_db).c_str()
                                          : "inf");
  std::printf("theta_max_deg   %s\n", fmt9(m.theta_max_deg).c_str());
  std::printf("phi_max_deg     %s\n", fmt9(m.phi_max_deg).c_str());
  std::printf("hpbw_deg        %s\n", fmt9(m.hpbw_deg).c_str());
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::string out_dir = default_out_dir();
  double grid_res = 1.0;
  bool export_pattern = false;
};

int run_simulate(const SimulateArgs& a) {
  const MsfConfig config = load_config(a.config_path);
  const PhysicalParams params;
  const AngularGrid grid = AngularGrid::uniform(a.grid_res, a.grid_res);
  const RadiationPattern pattern = compute_pattern_fast(config, params, grid);
  const PatternMeasures m = extract_measures(pattern);

  ensure_dir(a.out_dir);
  save_measures(m, join_path(a.out_dir, "measures.json"));
  if (a.export_pattern)
    write_pattern_csv(pattern, join_path(a.out_dir, "pattern.csv"));

  ordered_json flags;
  flags["config"] = a.config_path;
  flags["out"] = a.out_dir;
  flags["grid_res"] = a.grid_res;
  flags["export_pattern"] = a.export_pattern;
  write_run_log(join_path(a.out_dir, "run_simulate.json"), "simulate", flags);

  print_measures(m);
  return 0;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string filter_mode = "tag_only";
  double min_directivity = FilterCriteria{}.min_directivity_db;
  double min_pslr = FilterCriteria{}.min_pslr_db;
  double theta_max = 60.0;
  double grid_res = 1.0;
  bool resume = false;
};

int run_generate(const GenerateArgs& a) {
  const FilterMode mode = filter_mode_from_name(a.filter_mode);
  const FilterCriteria criteria{a.min_directivity, a.min_pslr};
  const PhysicalParams params;
  const AngularGrid grid = AngularGrid::uniform(a.grid_res, a.grid_res);

  Dataset prev;
  const std::vector<SampleRecord>* resume_from = nullptr;
  if (a.resume && std::filesystem::exists(a.out_path)) {
    prev = load_dataset_jsonl(a.out_path);
    if (prev.seed != a.seed || prev.filter_mode != mode ||
        prev.criteria.min_directivity_db != criteria.min_directivity_db ||
        prev.criteria.min_pslr_db != criteria.min_pslr_db ||
        prev.theta_target_max_deg != a.theta_max ||
        prev.theta_step_deg != a.grid_res || prev.phi_step_deg != a.grid_res)
      throw validation_error(
          "existing corpus was generated with different settings; refusing "
          "to resume");
    resume_from = &prev.records;
    std::fprintf(stderr, "resuming from %zu existing records\n",
                 prev.records.size());
  }

  std::uint64_t last_printed = 0;
  const auto progress = [&](std::uint64_t done, std::uint64_t total) {
    if (done == total || done - last_printed >= 1000) {
      std::fprintf(stderr, "generated %llu / %llu\r",
                   static_cast<unsigned long long>(done),
                   static_cast<unsigned long long>(total));
      if (done == total) std::fputc('\n', stderr);
      last_printed = done;
    }
  };

  const Dataset ds =
      generate_dataset(a.count, a.seed, params, grid, criteria, mode,
                       a.theta_max, resume_from, progress);
  save_dataset_jsonl(ds, a.out_path);

  ordered_json flags;
  flags["count"] = a.count;
  flags["seed"] = a.seed;
  flags["out"] = a.out_path;
  flags["filter_mode"] = filter_mode_name(mode);
  flags["min_directivity"] = a.min_directivity;
  flags["min_pslr"] = a.min_pslr;
  flags["theta_max"] = a.theta_max;
  flags["grid_res"] = a.grid_res;
  write_run_log(a.out_path + ".run.json", "generate", flags);

  std::printf("wrote %zu records (%zu train / %zu validation / %zu test)\n",
              ds.records.size(), ds.count_split("train"),
              ds.count_split("validation"), ds.count_split("test"));
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string dataset_path;
  std::string model_kind;
  std::string out_path;
  double lambda = 0.8;
  std::vector<double> cv_lambdas;
  std::string l2_mode = "sum";
  std::vector<int> hidden = {100, 100};
  std::uint64_t seed = 0;
  int batch_size = 32;
  int max_epochs = 500;
  int max_iterations = 1000;
  int patience = 20;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double decay = 1e-4;
  double mse_goal = 1e-11;
  double sigma = 1.0;
  int max_centers = 0;
  std::size_t cv_subsample = 10000;
};

int run_train(const TrainArgs& a) {
  const Dataset ds = load_dataset_jsonl(a.dataset_path);
  const SplitMatrices train = split_matrices(ds, "train");
  const SplitMatrices val = split_matrices(ds, "validation");
  if (train.X.rows == 0) throw validation_error("corpus has no train rows");
  if (train.n_dropped + val.n_dropped > 0)
    std::fprintf(stderr, "dropped %zu rows with non-finite targets\n",
                 train.n_dropped + val.n_dropped);

  nn::TrainConfig cfg;
  cfg.learning_rate = a.learning_rate;
  cfg.momentum = a.momentum;
  cfg.lr_decay = a.decay;
  cfg.batch_size = a.batch_size;
  cfg.max_epochs = a.max_epochs;
  cfg.max_iterations = a.max_iterations;
  cfg.patience = a.patience;
  cfg.l2_lambda = a.lambda;
  cfg.l2_mode = nn::l2_mode_from_name(a.l2_mode);
  cfg.mse_goal = a.mse_goal;
  cfg.rbf_sigma = a.sigma;
  cfg.max_centers = a.max_centers;
  cfg.seed = a.seed;
  cfg.validate();

  nn::ModelFile model;
  model.kind = a.model_kind;
  model.input_kind = "state_scale";
  model.input_divisor = double(ds.n_states - 1);
  model.target_mean.assign(ds.normalization.mean.begin(),
                           ds.normalization.mean.end());
  model.target_scale.assign(ds.normalization.scale.begin(),
                            ds.normalization.scale.end());
  model.meta.seed = a.seed;
  model.meta.l2_mode = a.l2_mode;

  SeededRng rng(a.seed);
  nn::TrainResult result;

  if (a.model_kind == "mlp") {
    std::vector<int> sizes;
    sizes.push_back(train.X.cols);
    sizes.insert(sizes.end(), a.hidden.begin(), a.hidden.end());
    sizes.push_back(5);

    double lambda = a.lambda;
    if (!a.cv_lambdas.empty()) {
      const CvResult cv = cross_validate_lambda(
          train.X, train.Y, a.cv_lambdas, cfg, sizes, a.cv_subsample);
      std::fputs(cv_table_text(cv).c_str(), stdout);
      lambda = cv.best_lambda;
    }
    cfg.l2_lambda = lambda;

    SeededRng init = rng.child("init", 0);
    nn::MlpModel net = nn::MlpModel::create(sizes, init);
    result = nn::train_scg(net, train.X, train.Y, val.X, val.Y, cfg);
    model.mlp = std::move(net);
    model.meta.optimizer = "scg";
    model.meta.l2_lambda = lambda;
  } else if (a.model_kind == "cnn") {
    nn::CnnConfig cc;  // reference architecture; input size from the corpus
    cc.input_h = ds.n_rows;
    cc.input_w = ds.n_cols;
    SeededRng init = rng.child("init", 0);
    nn::CnnModel net = nn::CnnModel::create(cc, init);
    result = nn::train_sgd(net, train.X, train.Y, val.X, val.Y, cfg);
    model.cnn = std::move(net);
    model.meta.optimizer = "sgd";
    model.meta.l2_lambda = 0.0;
  } else if (a.model_kind == "rbf") {
    nn::RbfTrainReport rep;
    nn::RbfModel net = train_rbf(train.X, train.Y, cfg, &rep);
    // Validation MSE of the final model, for parity with the other kinds.
    result.best_val_mse =
        val.X.rows > 0 ? nn::mse_of(net.forward(val.X), val.Y) : rep.final_mse;
    result.steps_run = rep.n_centers;
    result.best_step = rep.n_centers;
    result.stop_reason = rep.stop_reason;
    for (std::size_t i = 0; i < rep.mse_history.size(); ++i)
      result.history.push_back(
          {static_cast<int>(i), rep.mse_history[i], rep.mse_history[i],
           0.0, 0.0});
    model.rbf = std::move(net);
    model.meta.optimizer = "least_squares";
    model.meta.l2_lambda = 0.0;
  } else {
    throw validation_error("unknown model kind: " + a.model_kind);
  }

  model.meta.steps = result.steps_run;
  model.meta.best_val_mse = result.best_val_mse;
  model.meta.final_train_loss =
      result.history.empty() ? 0.0 : result.history.back().train_loss;

  nn::save_model(model, a.out_path);
  nn::write_history_csv(result.history, a.out_path + ".history.csv");

  ordered_json flags;
  flags["dataset"] = a.dataset_path;
  flags["model"] = a.model_kind;
  flags["out"] = a.out_path;
  flags["lambda"] = model.meta.l2_lambda;
  flags["cv_lambda"] = a.cv_lambdas;
  flags["l2_mode"] = a.l2_mode;
  flags["hidden"] = a.hidden;
  flags["seed"] = a.seed;
  flags["batch_size"] = a.batch_size;
  flags["max_epochs"] = a.max_epochs;
  flags["max_iterations"] = a.max_iterations;
  flags["patience"] = a.patience;
  flags["learning_rate"] = a.learning_rate;
  flags["momentum"] = a.momentum;
  flags["decay"] = a.decay;
  flags["mse_goal"] = a.mse_goal;
  flags["sigma"] = a.sigma;
  flags["max_centers"] = a.max_centers;
  flags["cv_subsample"] = a.cv_subsample;
  write_run_log(a.out_path + ".run.json", "train", flags);

  std::printf("trained %s: steps %d, best step %d, best val MSE %s, stop %s\n",
              a.model_kind.c_str(), result.steps_run, result.best_step,
              fmt9(result.best_val_mse).c_str(), result.stop_reason.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string dataset_path;
  std::string model_path;
  std::string out_dir = default_out_dir();
  std::string split = "test";
  bool curves = false;
  bool self_test = false;
};

int run_evaluate(const EvaluateArgs& a) {
  const Dataset ds = load_dataset_jsonl(a.dataset_path);
  const ToleranceSpec spec;

  SplitPrediction sp;
  std::string model_desc;
  std::string model_kind;
  if (a.self_test) {
    // Perfect predictor: every accuracy must come out exactly 1.
    const SplitMatrices m = split_matrices(ds, a.split);
    sp.target = Matrix(m.X.rows, 5);
    for (int i = 0; i < m.X.rows; ++i)
      for (int j = 0; j < 5; ++j)
        sp.target.at(i, j) =
            m.Y.at(i, j) * ds.normalization.scale[j] + ds.normalization.mean[j];
    sp.pred = sp.target;
    model_desc = "self-test (perfect predictor)";
    model_kind = "self-test";
  } else {
    if (a.model_path.empty())
      throw validation_error("--model is required unless --self-test");
    const nn::ModelFile model = nn::load_model(a.model_path);
    sp = predict_split(model, ds, a.split);
    model_kind = model.kind;
    model_desc = model.kind + " (" + model.meta.optimizer + ", seed " +
                 std::to_string(model.meta.seed) + ")";
  }

  AccuracyReport report = tolerance_accuracy(sp.pred, sp.target, spec);
  report.model_desc = model_desc;
  attach_reference(report, model_kind);

  ensure_dir(a.out_dir);
  write_text_file(join_path(a.out_dir, "accuracy.json"),
                  accuracy_report_json(report));
  const std::string text = accuracy_report_text(report);
  write_text_file(join_path(a.out_dir, "accuracy.txt"), text);
  if (a.curves)
    emit_curves(sp.pred, sp.target, model_kind,
                join_path(a.out_dir, "curves.csv"));

  ordered_json flags;
  flags["dataset"] = a.dataset_path;
  flags["model"] = a.model_path;
  flags["out"] = a.out_dir;
  flags["split"] = a.split;
  flags["curves"] = a.curves;
  flags["self_test"] = a.self_test;
  write_run_log(join_path(a.out_dir, "run_evaluate.json"), "evaluate", flags);

  std::fputs(text.c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string config_path;
  std::string model_path;
  bool no_gate = false;
  double min_directivity = FilterCriteria{}.min_directivity_db;
  double min_pslr = FilterCriteria{}.min_pslr_db;
  double grid_res = 1.0;
};

int run_predict(const PredictArgs& a) {
  const MsfConfig config = load_config(a.config_path);
  const nn::ModelFile model = nn::load_model(a.model_path);

  ordered_json out;
  if (a.no_gate) {
    out["status"] = "ok";
    out["prediction"] = measures_json_value(model.predict_measures(config));
    out["analytical"] = nullptr;
  } else {
    const FilterCriteria criteria{a.min_directivity, a.min_pslr};
    const AngularGrid grid = AngularGrid::uniform(a.grid_res, a.grid_res);
    const GatedPrediction g =
        predict_gated(config, model, criteria, PhysicalParams{}, grid);
    out["status"] = g.accepted ? "ok" : "rejected";
    out["prediction"] =
        g.accepted ? measures_json_value(g.predicted) : ordered_json(nullptr);
    out["analytical"] = measures_json_value(g.analytical);
  }

  ordered_json flags;
  flags["config"] = a.config_path;
  flags["model"] = a.model_path;
  flags["no_gate"] = a.no_gate;
  flags["min_directivity"] = a.min_directivity;
  flags["min_pslr"] = a.min_pslr;
  flags["grid_res"] = a.grid_res;
  const std::string out_dir = default_out_dir();
  ensure_dir(out_dir);
  write_run_log(join_path(out_dir, "run_predict.json"), "predict", flags);

  std::printf("%s\n", out.dump().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Coding-metasurface toolkit: analytical far-field patterns, beam "
      "measures, dataset generation and neural surrogates"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads; 1 gives the bit-reproducible reference "
                 "path (0 = all cores) [toolkit default]")
      ->check(CLI::NonNegativeNumber);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand(
      "simulate", "compute the pattern and measures of one configuration");
  c_sim->add_option("--config", sim.config_path, "configuration JSON file")
      ->required();
  c_sim->add_option("--out", sim.out_dir,
                    "output directory (default: MSF_OUT_DIR or .)");
  c_sim->add_option("--grid-res", sim.grid_res,
                    "angular grid step in degrees, default 1 [toolkit default]")
      ->check(CLI::PositiveNumber);
  c_sim->add_flag("--export-pattern", sim.export_pattern,
                  "also write the full pattern as CSV");

  GenerateArgs gen;
  auto* c_gen =
      app.add_subcommand("generate", "generate a training corpus (JSONL)");
  c_gen->add_option("--count", gen.count, "number of samples")
      ->required()
      ->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", gen.seed, "corpus seed, default 0");
  c_gen->add_option("--out", gen.out_path, "output JSONL file")->required();
  c_gen->add_option("--filter-mode", gen.filter_mode,
                    "tag_only | reject, default tag_only [toolkit default]");
  c_gen->add_option("--min-directivity", gen.min_directivity,
                    "gate threshold in dB, default 15 [reference]");
  c_gen->add_option("--min-pslr", gen.min_pslr,
                    "gate threshold in dB, default 3 [reference]");
  c_gen->add_option("--theta-max", gen.theta_max,
                    "steering-target elevation cap in degrees, default 60 "
                    "[reference]")
      ->check(CLI::PositiveNumber);
  c_gen->add_option("--grid-res", gen.grid_res,
                    "measure grid step in degrees, default 1 [toolkit default]")
      ->check(CLI::PositiveNumber);
  c_gen->add_flag("--resume", gen.resume,
                  "extend an existing corpus with the same settings");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "train a surrogate on a corpus");
  c_tr->add_option("--dataset", tr.dataset_path, "corpus JSONL")->required();
  c_tr->add_option("--model", tr.model_kind, "mlp | cnn | rbf")
      ->required()
      ->check(CLI::IsMember({"mlp", "cnn", "rbf"}));
  c_tr->add_option("--out", tr.out_path, "model file to write")->required();
  c_tr->add_option("--lambda", tr.lambda,
                   "weight-penalty factor, default 0.8 [reference]");
  c_tr->add_option("--cv-lambda", tr.cv_lambdas,
                   "candidate penalties for 10-fold selection (overrides "
                   "--lambda; candidate set is a toolkit choice)")
      ->delimiter(',');
  c_tr->add_option("--l2-mode", tr.l2_mode,
                   "sum | mean: penalty is lambda*sum(w^2) or "
                   "lambda*mean(w^2), default sum [toolkit default]")
      ->check(CLI::IsMember({"sum", "mean"}));
  c_tr->add_option("--hidden", tr.hidden,
                   "hidden layer sizes for mlp, default 100,100 [reference]")
      ->delimiter(',');
  c_tr->add_option("--seed", tr.seed, "training seed, default 0");
  c_tr->add_option("--batch-size", tr.batch_size,
                   "SGD batch size, default 32 [toolkit default]")
      ->check(CLI::PositiveNumber);
  c_tr->add_option("--max-epochs", tr.max_epochs,
                   "SGD epoch cap, default 500 [toolkit default]")
      ->check(CLI::PositiveNumber);
  c_tr->add_option("--max-iterations", tr.max_iterations,
                   "SCG iteration cap, default 1000 [toolkit default]")
      ->check(CLI::PositiveNumber);
  c_tr->add_option("--patience", tr.patience,
                   "non-improving validation checks tolerated, default 20 "
                   "[toolkit default]")
      ->check(CLI::NonNegativeNumber);
  c_tr->add_option("--learning-rate", tr.learning_rate,
                   "SGD learning rate, default 0.001 [reference]")
      ->check(CLI::PositiveNumber);
  c_tr->add_option("--momentum", tr.momentum,
                   "SGD momentum, default 0.9 [reference]");
  c_tr->add_option("--decay", tr.decay,
                   "SGD learning-rate decay, default 1e-4 [reference]");
  c_tr->add_option("--mse-goal", tr.mse_goal,
                   "rbf stop goal, default 1e-11 [reference]");
  c_tr->add_option("--sigma", tr.sigma,
                   "rbf spread, default 1 [reference]")
      ->check(CLI::PositiveNumber);
  c_tr->add_option("--max-centers", tr.max_centers,
                   "rbf center cap, 0 = sample count [toolkit default]")
      ->check(CLI::NonNegativeNumber);
  c_tr->add_option("--cv-subsample", tr.cv_subsample,
                   "rows used for cross-validation, default 10000 "
                   "[toolkit default]");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand(
      "evaluate", "tolerance-accuracy report for a trained model");
  c_ev->add_option("--dataset", ev.dataset_path, "corpus JSONL")->required();
  c_ev->add_option("--model", ev.model_path, "trained model file");
  c_ev->add_option("--out", ev.out_dir,
                   "report directory (default: MSF_OUT_DIR or .)");
  c_ev->add_option("--split", ev.split,
                   "corpus split to score, default test");
  c_ev->add_flag("--curves", ev.curves,
                 "also write the fine accuracy-vs-tolerance sweep");
  c_ev->add_flag("--self-test", ev.self_test,
                 "score the perfect predictor instead of a model");

  PredictArgs pr;
  auto* c_pr = app.add_subcommand(
      "predict", "gated single-configuration prediction");
  c_pr->add_option("--config", pr.config_path, "configuration JSON file")
      ->required();
  c_pr->add_option("--model", pr.model_path, "trained model file")
      ->required();
  c_pr->add_flag("--no-gate", pr.no_gate, "skip the analytical gate");
  c_pr->add_option("--min-directivity", pr.min_directivity,
                   "gate threshold in dB, default 15 [reference]");
  c_pr->add_option("--min-pslr", pr.min_pslr,
                   "gate threshold in dB, default 3 [reference]");
  c_pr->add_option("--grid-res", pr.grid_res,
                   "gate grid step in degrees, default 1 [toolkit default]")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_gen->parsed()) return run_generate(gen);
    if (c_tr->parsed()) return run_train(tr);
    if (c_ev->parsed()) return run_evaluate(ev);
    if (c_pr->parsed()) return run_predict(pr);
    return 2;
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const parse_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const validation_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
