#include "commands.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nodef/data.hpp"
#include "nodef/eval.hpp"
#include "nodef/model.hpp"
#include "nodef/text.hpp"

namespace nodef::cli {
namespace {

using json = nlohmann::json;

/// Signals a usage problem discovered after CLI11 parsing succeeded.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainFlags {
  std::string data;
  std::optional<std::int64_t> snapshot;
  std::string kind = "nodef";
  std::size_t L = 40;
  double lambda_w = 0.01;
  double lambda_V = 0.01;
  int max_iters = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  double init_jitter = 0.0;
  unsigned threads = 1;
  std::string time_transform = "log1p_maxscale";
  bool no_standardize = false;
  std::optional<double> bandwidth;
  std::string output;
};

void add_train_options(CLI::App& app, TrainFlags& f) {
  app.add_option("--kind", f.kind, "Model kind: nodef, dfm or naive")
      ->check(CLI::IsMember({"nodef", "dfm", "naive"}));
  app.add_option("--L", f.L, "Number of pseudo-points")->check(CLI::Range(2, 100000));
  app.add_option("--lambda_w", f.lambda_w, "L2 strength for conversion weights")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--lambda_V", f.lambda_V, "L2 strength for intensity weights")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--max_iters", f.max_iters, "Maximum EM iterations")->check(CLI::PositiveNumber);
  app.add_option("--tol", f.tol, "Stop when Q improves by less than this")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", f.seed, "Seed for the optional initial jitter");
  app.add_option("--init_jitter", f.init_jitter, "Std. dev. of initial weight jitter")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--threads", f.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--time_transform", f.time_transform, "identity, log1p_maxscale or max_scale")
      ->check(CLI::IsMember({"identity", "log1p_maxscale", "max_scale"}));
  app.add_flag("--no-standardize", f.no_standardize, "Skip feature z-scoring");
  app.add_option("--bandwidth", f.bandwidth, "Override the half-spacing kernel bandwidth")
      ->check(CLI::PositiveNumber);
}

TrainOptions to_train_options(const TrainFlags& f) {
  TrainOptions o;
  o.config.L = f.L;
  o.config.lambda_w = f.lambda_w;
  o.config.lambda_V = f.lambda_V;
  o.config.max_iters = f.max_iters;
  o.config.tol = f.tol;
  o.config.seed = f.seed;
  o.config.init_jitter = f.init_jitter;
  o.config.threads = f.threads;
  o.prep.standardize = !f.no_standardize;
  o.prep.time_kind = *parse_time_transform(f.time_transform);
  o.bandwidth = f.bandwidth;
  return o;
}

json to_json(const MetricsReport& r) {
  return {{"n", r.n}, {"log_loss", r.log_loss}, {"accuracy", r.accuracy}, {"auc", r.auc}};
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (auto tok : text::split(s, ',')) {
    const auto v = text::parse_double(tok);
    if (!v) throw UsageError("bad number '" + std::string(tok) + "' in list '" + s + "'");
    out.push_back(*v);
  }
  return out;
}

// Appends `--key value` for every config-file entry whose option is not
// already on the command line.
void merge_config(CLI::App& sub, std::vector<std::string>& args, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key(text::trim(t.substr(0, eq)));
    const std::string value(text::trim(t.substr(eq + 1)));
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (opt == nullptr || key == "config") {
      throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (opt->get_expected_max() == 0) {
      if (value == "1" || value == "true") args.push_back(flag);
    } else {
      args.push_back(flag);
      args.push_back(value);
    }
  }
}

// ---------------------------------------------------------------------------

int cmd_synth(std::uint64_t seed, const std::string& mode_text, const std::string& output,
              std::ostream& err) {
  const auto mode = parse_synthetic_mode(mode_text);
  if (!mode) throw UsageError("invalid mode '" + mode_text + "'");
  const Dataset data = generate_synthetic(seed, *mode);
  std::ostringstream csv;
  write_log_csv(csv, to_log_table(data));
  write_text(output, csv.str());
  std::size_t observed = 0;
  for (const auto& s : data) observed += s.y() ? 1 : 0;
  for (std::size_t k = 0; k < kSyntheticPatterns.size(); ++k) {
    err << "pattern " << k + 1 << ": " << kSyntheticPatterns[k].count << " samples\n";
  }
  err << "observed conversions: " << observed << " of " << data.size() << '\n';
  err << "snapshot_ts=" << static_cast<std::int64_t>(kSyntheticElapsed * kSecondsPerDay) << '\n';
  return kExitOk;
}

int cmd_train(const TrainFlags& f, std::ostream& err) {
  const Dataset raw = load_csv(f.data, f.snapshot);
  const TrainedModel model = train_model(raw, *parse_model_kind(f.kind), to_train_options(f));
  for (std::size_t j = 0; j < model.q_trace.size(); ++j) {
    err << "iter " << j + 1 << " Q=" << text::format_double(model.q_trace[j]) << '\n';
  }
  err << "kind=" << f.kind << " iterations=" << model.iterations
      << " converged=" << (model.converged ? "true" : "false") << '\n';
  save_model(f.output, model);
  return kExitOk;
}

std::optional<double> parse_horizon(const std::string& text) {
  if (text == "inf") return std::nullopt;
  const auto v = text::parse_double(text);
  if (!v || !(*v >= 0.0)) throw UsageError("horizon must be a nonnegative number or 'inf'");
  return v;
}

void check_dimension(const TrainedModel& model, const std::vector<Vector>& xs) {
  for (const auto& x : xs) {
    if (static_cast<std::size_t>(x.size()) != model.prep.raw_dim) {
      throw std::runtime_error("dimension mismatch: model expects M=" +
                               std::to_string(model.prep.raw_dim) + " features, data has " +
                               std::to_string(x.size()));
    }
  }
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& horizon_text, const std::string& output, std::ostream& out) {
  const auto horizon = parse_horizon(horizon_text);
  const TrainedModel model = load_model(std::filesystem::path(model_path));
  const auto xs = read_feature_csv(data_path);
  check_dimension(model, xs);
  std::ostringstream buf;
  for (const auto& x : xs) buf << text::format_double(predict(model, x, horizon)) << '\n';
  if (output.empty() || output == "-") {
    out << buf.str();
  } else {
    write_text(output, buf.str());
  }
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             std::optional<std::int64_t> snapshot, const std::string& report_path,
             std::ostream& out) {
  const TrainedModel model = load_model(std::filesystem::path(model_path));
  const Dataset raw = load_csv(data_path, snapshot);
  if (raw.dim() != model.prep.raw_dim) {
    throw std::runtime_error("dimension mismatch: model expects M=" +
                             std::to_string(model.prep.raw_dim) + " features, data has " +
                             std::to_string(raw.dim()));
  }
  const auto labels = observed_labels(raw);
  const MetricsReport window =
      evaluate(predict_dataset(model, raw, PredictionMode::window), labels);
  const MetricsReport eventual =
      evaluate(predict_dataset(model, raw, PredictionMode::eventual), labels);
  const MetricsReport limit = evaluate(predict_dataset(model, raw, PredictionMode::limit), labels);
  out << "mode=window " << to_key_value(window) << '\n';
  out << "mode=eventual " << to_key_value(eventual) << '\n';
  out << "mode=limit " << to_key_value(limit) << '\n';
  if (!report_path.empty()) {
    const json report = {{"model_kind", to_string(model.kind)},
                         {"window", to_json(window)},
                         {"eventual", to_json(eventual)},
                         {"limit", to_json(limit)}};
    write_text(report_path, report.dump(2) + "\n");
  }
  return kExitOk;
}

struct DensityFlags {
  std::string model;
  std::string features;
  double t_min = 0.0;
  std::optional<double> t_max;
  std::size_t points = 201;
  bool pooled = false;
  std::string output;
};

int cmd_density(const DensityFlags& f, std::ostream& out) {
  const TrainedModel model = load_model(std::filesystem::path(f.model));
  if (!model.has_delay_model()) {
    throw std::runtime_error("no delay model: density needs a nodef or dfm model");
  }
  const auto xs = read_feature_csv(f.features);
  if (xs.empty()) throw std::runtime_error("feature file has no rows");
  check_dimension(model, xs);
  const double t_max = f.t_max.value_or(model_time_horizon(model));
  if (!(t_max > f.t_min) || f.t_min < 0.0) throw UsageError("need 0 <= t_min < t_max");
  const auto times = linspace(f.t_min, t_max, f.points);

  std::ostringstream buf;
  buf << "curve,time,density,normalized\n";
  auto emit = [&](const std::string& name, const DensityCurve& c) {
    for (std::size_t k = 0; k < c.time.size(); ++k) {
      buf << name << ',' << text::format_double(c.time[k]) << ','
          << text::format_double(c.density[k]) << ',' << text::format_double(c.normalized[k])
          << '\n';
    }
  };
  for (std::size_t i = 0; i < xs.size(); ++i) {
    emit(std::to_string(i), density_curve(model, xs[i], times));
  }
  if (f.pooled) emit("pooled", pooled_density(model, xs, times));
  if (f.output.empty() || f.output == "-") {
    out << buf.str();
  } else {
    write_text(f.output, buf.str());
  }
  return kExitOk;
}

struct GridFlags {
  TrainFlags train;
  double train_days = 3.0;
  double validation_days = 1.0;
  double test_days = 1.0;
  std::string L_grid = "10,20,30";
  std::string lambda_w_grid = "1,0.1,0.01";
  std::string lambda_V_grid = "1,0.1,0.01";
  std::string report;
};

int cmd_gridsearch(const GridFlags& f, std::ostream& out, std::ostream& err) {
  const LogTable table = read_log_csv(std::filesystem::path(f.train.data));
  const SplitSpec spec{f.train_days, f.validation_days, f.test_days};
  const Splits splits = split_by_click_date(table, spec);
  GridSpec grid;
  grid.L.clear();
  for (double v : parse_list(f.L_grid)) {
    if (!(v >= 2.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw UsageError("L grid entries must be integers >= 2");
    }
    grid.L.push_back(static_cast<std::size_t>(v));
  }
  grid.lambda_w = parse_list(f.lambda_w_grid);
  grid.lambda_V = parse_list(f.lambda_V_grid);

  const ModelKind kind = *parse_model_kind(f.train.kind);
  const TrainOptions base = to_train_options(f.train);
  const auto points = enumerate_grid(grid, kind, base.config);
  err << "searching " << points.size() << " grid points (train=" << splits.train.size()
      << " validation=" << splits.validation.size() << " test=" << splits.test.size() << ")\n";
  const GridSearchResult result = grid_search(
      splits.train, splits.validation, points, kind, base,
      [&](const std::string& msg) { err << "warning: " << msg << '\n'; });

  const auto test_labels = observed_labels(splits.test);
  const MetricsReport test_window =
      evaluate(predict_dataset(result.model, splits.test, PredictionMode::window), test_labels);
  const MetricsReport test_eventual =
      evaluate(predict_dataset(result.model, splits.test, PredictionMode::eventual), test_labels);

  out << "best L=" << result.best.L << " lambda_w=" << text::format_double(result.best.lambda_w)
      << " lambda_V=" << text::format_double(result.best.lambda_V) << '\n';
  out << "split=validation mode=window " << to_key_value(result.validation) << '\n';
  out << "split=test mode=window " << to_key_value(test_window) << '\n';
  out << "split=test mode=eventual " << to_key_value(test_eventual) << '\n';

  if (!f.train.output.empty()) save_model(f.train.output, result.model);
  if (!f.report.empty()) {
    json evaluated = json::array();
    for (const auto& ev : result.evaluated) {
      evaluated.push_back({{"L", ev.point.L},
                           {"lambda_w", ev.point.lambda_w},
                           {"lambda_V", ev.point.lambda_V},
                           {"validation", to_json(ev.validation)}});
    }
    const json report = {
        {"model_kind", f.train.kind},
        {"best", {{"L", result.best.L}, {"lambda_w", result.best.lambda_w},
                  {"lambda_V", result.best.lambda_V}}},
        {"validation", to_json(result.validation)},
        {"test", {{"window", to_json(test_window)}, {"eventual", to_json(test_eventual)}}},
        {"evaluated", evaluated},
        {"failed", result.failed}};
    write_text(f.report, report.dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& input_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonparametric delayed-feedback conversion model", "nodef"};
  app.require_subcommand(1);

  // synth
  std::uint64_t synth_seed = 0;
  std::string synth_mode = "consistent";
  std::string synth_output;
  CLI::App* synth = app.add_subcommand("synth", "Generate the three-pattern synthetic log");
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--mode", synth_mode, "random_labels or consistent")
      ->check(CLI::IsMember({"random_labels", "consistent"}));
  synth->add_option("-o,--output", synth_output, "Output CSV")->required();

  // train
  TrainFlags train_flags;
  std::string train_config;
  CLI::App* train = app.add_subcommand("train", "Fit a model to a conversion log");
  train->add_option("--data", train_flags.data, "Conversion log CSV")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--snapshot", train_flags.snapshot,
                    "Observation time (epoch seconds) for elapsed times");
  add_train_options(*train, train_flags);
  train->add_option("--config", train_config, "key=value file supplying any flag");
  train->add_option("-o,--output", train_flags.output, "Model file")->required();

  // predict
  std::string pred_model, pred_data, pred_horizon = "inf", pred_output;
  CLI::App* pred = app.add_subcommand("predict", "Score feature rows with a trained model");
  pred->add_option("--model", pred_model, "Model file")->required()->check(CLI::ExistingFile);
  pred->add_option("--data", pred_data, "CSV with f1..fM columns")
      ->required()
      ->check(CLI::ExistingFile);
  pred->add_option("--horizon", pred_horizon, "Horizon in days, or 'inf' for eventual");
  pred->add_option("-o,--output", pred_output, "Output file (default stdout)");

  // eval
  std::string eval_model, eval_data, eval_report;
  std::optional<std::int64_t> eval_snapshot;
  CLI::App* eval = app.add_subcommand("eval", "Log loss, accuracy and AUC on a labelled log");
  eval->add_option("--model", eval_model, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "Conversion log CSV")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--snapshot", eval_snapshot, "Observation time (epoch seconds)");
  eval->add_option("--report", eval_report, "Write a JSON report here");

  // density
  DensityFlags dens;
  CLI::App* density = app.add_subcommand("density", "Export delay density curves");
  density->add_option("--model", dens.model, "Model file")->required()->check(CLI::ExistingFile);
  density->add_option("--features", dens.features, "CSV with f1..fM columns")
      ->required()
      ->check(CLI::ExistingFile);
  density->add_option("--t_min", dens.t_min, "First time point (days)");
  density->add_option("--t_max", dens.t_max, "Last time point (default: model horizon)");
  density->add_option("--points", dens.points, "Number of time points")
      ->check(CLI::Range(2, 10000000));
  density->add_flag("--pooled", dens.pooled, "Also emit the mean curve over all rows");
  density->add_option("-o,--output", dens.output, "Output CSV (default stdout)");

  // gridsearch
  GridFlags grid_flags;
  std::string grid_config;
  CLI::App* gs = app.add_subcommand("gridsearch", "Select hyperparameters on a validation split");
  gs->add_option("--data", grid_flags.train.data, "Conversion log CSV")
      ->required()
      ->check(CLI::ExistingFile);
  add_train_options(*gs, grid_flags.train);
  gs->add_option("--train_days", grid_flags.train_days, "Training window length (days)")
      ->check(CLI::PositiveNumber);
  gs->add_option("--validation_days", grid_flags.validation_days, "Validation window (days)")
      ->check(CLI::PositiveNumber);
  gs->add_option("--test_days", grid_flags.test_days, "Test window (days)")
      ->check(CLI::PositiveNumber);
  gs->add_option("--L_grid", grid_flags.L_grid, "Comma-separated L values");
  gs->add_option("--lambda_w_grid", grid_flags.lambda_w_grid, "Comma-separated lambda_w values");
  gs->add_option("--lambda_V_grid", grid_flags.lambda_V_grid, "Comma-separated lambda_V values");
  gs->add_option("--report", grid_flags.report, "Write a JSON report here");
  gs->add_option("--config", grid_config, "key=value file supplying any flag");
  gs->add_option("-o,--output", grid_flags.train.output, "Write the selected model here");

  try {
    std::vector<std::string> args = input_args;
    // Config files are folded into the argument list before parsing.
    if (!args.empty() && (args[0] == "train" || args[0] == "gridsearch")) {
      CLI::App* sub = args[0] == "train" ? train : gs;
      for (std::size_t k = 1; k < args.size(); ++k) {
        std::string path;
        if (args[k] == "--config" && k + 1 < args.size()) {
          path = args[k + 1];
        } else if (args[k].rfind("--config=", 0) == 0) {
          path = args[k].substr(9);
        }
        if (!path.empty()) {
          merge_config(*sub, args, path);
          break;
        }
      }
    }
    std::vector<const char*> argv{"nodef"};
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_seed, synth_mode, synth_output, err);
    if (train->parsed()) return cmd_train(train_flags, err);
    if (pred->parsed()) return cmd_predict(pred_model, pred_data, pred_horizon, pred_output, out);
    if (eval->parsed()) return cmd_eval(eval_model, eval_data, eval_snapshot, eval_report, out);
    if (density->parsed()) return cmd_density(dens, out);
    if (gs->parsed()) return cmd_gridsearch(grid_flags, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace nodef::cli
