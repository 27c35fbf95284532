#include "nodef/model.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nodef/delay_model.hpp"
#include "nodef/kernel.hpp"
#include "nodef/numeric.hpp"
#include "nodef/text.hpp"

namespace nodef {

std::optional<ModelKind> parse_model_kind(std::string_view text) {
  if (text == "nodef") return ModelKind::nodef;
  if (text == "dfm") return ModelKind::dfm;
  if (text == "naive") return ModelKind::naive;
  return std::nullopt;
}

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::nodef:
      return "nodef";
    case ModelKind::dfm:
      return "dfm";
    case ModelKind::naive:
      return "naive";
  }
  return "unknown";
}

TrainedModel train_model(const Dataset& raw_train, ModelKind kind, const TrainOptions& options) {
  if (raw_train.empty()) throw std::invalid_argument("train: empty training set");
  const TrainConfig& cfg = options.config;
  cfg.validate();

  TrainedModel model;
  model.kind = kind;
  model.lambda_w = cfg.lambda_w;
  model.lambda_V = cfg.lambda_V;

  PreprocessOptions prep = options.prep;
  if (kind == ModelKind::dfm) {
    prep.time_kind = TimeTransformKind::max_scale;
    prep.scale_by_delays = true;
  } else if (kind == ModelKind::naive) {
    prep.time_kind = TimeTransformKind::identity;
  }
  model.prep = fit_preprocessor(raw_train, prep);
  const Dataset train = model.prep.apply(raw_train);

  LbfgsOptions inner;
  inner.max_iterations = cfg.inner_iters;
  inner.memory = cfg.lbfgs_memory;
  inner.gradient_tolerance = cfg.inner_grad_tol;

  switch (kind) {
    case ModelKind::nodef: {
      const auto times = collect_times(train);
      const double t_max = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
      PseudoGrid grid = make_grid(cfg.L, t_max);
      if (options.bandwidth) grid = grid.with_bandwidth(*options.bandwidth);
      FitResult r = fit(train, cfg, grid);
      model.grid = std::move(grid);
      model.nodef = std::move(r.params);
      model.iterations = r.iterations;
      model.converged = r.converged;
      model.q_trace = std::move(r.q_trace);
      break;
    }
    case ModelKind::dfm: {
      DfmFitResult r =
          fit_dfm(train, {cfg.lambda_w, cfg.lambda_V}, cfg.max_iters, cfg.tol, inner, cfg.threads);
      model.dfm = std::move(r.params);
      model.iterations = r.iterations;
      model.converged = r.converged;
      model.q_trace = std::move(r.q_trace);
      break;
    }
    case ModelKind::naive: {
      model.nodef.w = fit_naive(train, cfg.lambda_w, inner, cfg.threads);
      model.nodef.V = Matrix(0, model.nodef.w.size());
      model.iterations = 1;
      model.converged = true;
      break;
    }
  }
  return model;
}

double predict(const TrainedModel& model, const Vector& raw_x,
               std::optional<double> horizon_days) {
  if (horizon_days && !(*horizon_days >= 0.0)) {
    throw std::invalid_argument("predict: horizon must be nonnegative");
  }
  const Vector x = model.prep.features(raw_x);
  switch (model.kind) {
    case ModelKind::nodef:
      if (!horizon_days) return predict_eventual(x, model.nodef.w);
      return predict_by_time(x, model.prep.time.apply(*horizon_days), model.nodef, *model.grid);
    case ModelKind::dfm: {
      std::optional<double> horizon;
      if (horizon_days) horizon = model.prep.time.apply(*horizon_days);
      return dfm_predict(x, model.dfm, horizon);
    }
    case ModelKind::naive:
      return sigmoid(model.nodef.w.dot(x));
  }
  return 0.0;
}

double predict_ever(const TrainedModel& model, const Vector& raw_x) {
  if (model.kind != ModelKind::nodef) return predict(model, raw_x, std::nullopt);
  return predict_limit(model.prep.features(raw_x), model.nodef, *model.grid);
}

std::vector<double> predict_dataset(const TrainedModel& model, const Dataset& raw,
                                    PredictionMode mode) {
  std::vector<double> out;
  out.reserve(raw.size());
  for (const auto& s : raw) {
    switch (mode) {
      case PredictionMode::window:
        out.push_back(predict(model, s.x(), s.elapsed()));
        break;
      case PredictionMode::eventual:
        out.push_back(predict(model, s.x(), std::nullopt));
        break;
      case PredictionMode::limit:
        out.push_back(predict_ever(model, s.x()));
        break;
    }
  }
  return out;
}

namespace {

double raw_density(const TrainedModel& model, const Vector& x, double t) {
  const double u = model.prep.time.apply(t);
  const double jac = model.prep.time.derivative(t);
  if (model.kind == ModelKind::nodef) {
    return delay_density(u, x, model.nodef.V, *model.grid) * jac;
  }
  return dfm_delay_density(u, x, model.dfm) * jac;
}

void normalize(DensityCurve& c) {
  const double peak =
      c.density.empty() ? 0.0 : *std::max_element(c.density.begin(), c.density.end());
  c.normalized.resize(c.density.size());
  for (std::size_t k = 0; k < c.density.size(); ++k) {
    c.normalized[k] = peak > 0.0 ? c.density[k] / peak : 0.0;
  }
}

}  // namespace

DensityCurve density_curve(const TrainedModel& model, const Vector& raw_x,
                           std::span<const double> times) {
  if (!model.has_delay_model()) {
    throw std::invalid_argument("density: model has no delay model");
  }
  const Vector x = model.prep.features(raw_x);
  DensityCurve c;
  c.time.assign(times.begin(), times.end());
  c.density.reserve(times.size());
  for (double t : times) c.density.push_back(raw_density(model, x, t));
  normalize(c);
  return c;
}

DensityCurve pooled_density(const TrainedModel& model, std::span<const Vector> raw_xs,
                            std::span<const double> times) {
  if (!model.has_delay_model()) {
    throw std::invalid_argument("density: model has no delay model");
  }
  if (raw_xs.empty()) throw std::invalid_argument("density: no feature vectors");
  DensityCurve c;
  c.time.assign(times.begin(), times.end());
  c.density.assign(times.size(), 0.0);
  for (const auto& raw_x : raw_xs) {
    const Vector x = model.prep.features(raw_x);
    for (std::size_t k = 0; k < times.size(); ++k) c.density[k] += raw_density(model, x, times[k]);
  }
  for (double& v : c.density) v /= static_cast<double>(raw_xs.size());
  normalize(c);
  return c;
}

std::vector<double> linspace(double t_min, double t_max, std::size_t count) {
  if (count < 2 || !(t_max > t_min)) {
    throw std::invalid_argument("linspace: need count >= 2 and t_max > t_min");
  }
  std::vector<double> out(count);
  const double step = (t_max - t_min) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) out[k] = t_min + static_cast<double>(k) * step;
  out.back() = t_max;
  return out;
}

double model_time_horizon(const TrainedModel& model) {
  if (model.kind == ModelKind::nodef) return model.prep.time.inverse(model.grid->points().back());
  return model.prep.time.inverse(1.0);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string join(const double* data, Eigen::Index n) {
  std::string out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += text::format_double(data[i]);
  }
  return out;
}

std::string join(const Vector& v) { return join(v.data(), v.size()); }

std::string join(const std::vector<double>& v) {
  return join(v.data(), static_cast<Eigen::Index>(v.size()));
}

class KeyValues {
 public:
  explicit KeyValues(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) {
        throw std::runtime_error("model file line " + std::to_string(lineno) + ": expected key=value");
      }
      values_[std::string(text::trim(t.substr(0, eq)))] = std::string(text::trim(t.substr(eq + 1)));
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("model file: missing key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const {
    const auto v = text::parse_double(get(key));
    if (!v) throw std::runtime_error("model file: '" + key + "' is not a number");
    return *v;
  }

  std::int64_t integer(const std::string& key) const {
    const auto v = text::parse_int(get(key));
    if (!v) throw std::runtime_error("model file: '" + key + "' is not an integer");
    return *v;
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    const std::string& s = get(key);
    if (text::trim(s).empty()) return out;
    for (auto tok : text::split(s, ' ')) {
      if (text::trim(tok).empty()) continue;
      const auto v = text::parse_double(tok);
      if (!v) throw std::runtime_error("model file: bad number in '" + key + "'");
      out.push_back(*v);
    }
    return out;
  }

  Vector vector(const std::string& key, std::size_t expected) const {
    const auto v = list(key);
    if (v.size() != expected) {
      throw std::runtime_error("model file: '" + key + "' has " + std::to_string(v.size()) +
                               " entries, expected " + std::to_string(expected));
    }
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model) {
  out << "format=nodef-model\n";
  out << "version=" << kModelFormatVersion << '\n';
  out << "kind=" << to_string(model.kind) << '\n';
  out << "raw_dim=" << model.prep.raw_dim << '\n';
  out << "dim=" << model.prep.model_dim() << '\n';
  out << "standardize=" << (model.prep.standardizer ? 1 : 0) << '\n';
  if (model.prep.standardizer) {
    out << "feature_mean=" << join(model.prep.standardizer->mean) << '\n';
    out << "feature_scale=" << join(model.prep.standardizer->scale) << '\n';
  }
  out << "time_transform=" << to_string(model.prep.time.kind()) << '\n';
  out << "time_scale=" << text::format_double(model.prep.time.scale()) << '\n';
  out << "lambda_w=" << text::format_double(model.lambda_w) << '\n';
  out << "lambda_V=" << text::format_double(model.lambda_V) << '\n';
  out << "iterations=" << model.iterations << '\n';
  out << "converged=" << (model.converged ? 1 : 0) << '\n';
  switch (model.kind) {
    case ModelKind::nodef: {
      const Matrix& V = model.nodef.V;
      out << "L=" << model.grid->size() << '\n';
      out << "bandwidth=" << text::format_double(model.grid->bandwidth()) << '\n';
      out << "grid=" << join(model.grid->points()) << '\n';
      out << "w=" << join(model.nodef.w) << '\n';
      // row-major
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = V;
      out << "V=" << join(rm.data(), rm.size()) << '\n';
      break;
    }
    case ModelKind::dfm:
      out << "wc=" << join(model.dfm.wc) << '\n';
      out << "wd=" << join(model.dfm.wd) << '\n';
      break;
    case ModelKind::naive:
      out << "w=" << join(model.nodef.w) << '\n';
      break;
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  save_model(out, model);
  if (!out) throw std::runtime_error("failed writing model file " + path.string());
}

TrainedModel load_model(std::istream& in) {
  const KeyValues kv(in);
  if (kv.get("format") != "nodef-model") throw std::runtime_error("not a nodef model file");
  if (kv.integer("version") != kModelFormatVersion) {
    throw std::runtime_error("unsupported model file version " + kv.get("version"));
  }
  TrainedModel m;
  const auto kind = parse_model_kind(kv.get("kind"));
  if (!kind) throw std::runtime_error("model file: unknown kind '" + kv.get("kind") + "'");
  m.kind = *kind;

  const auto raw_dim = kv.integer("raw_dim");
  if (raw_dim < 1) throw std::runtime_error("model file: raw_dim must be positive");
  m.prep.raw_dim = static_cast<std::size_t>(raw_dim);
  if (kv.integer("dim") != raw_dim + 1) throw std::runtime_error("model file: dim != raw_dim + 1");
  const std::size_t dim = m.prep.model_dim();
  if (kv.integer("standardize") != 0) {
    m.prep.standardizer = Standardizer{kv.vector("feature_mean", m.prep.raw_dim),
                                       kv.vector("feature_scale", m.prep.raw_dim)};
  }
  const auto tk = parse_time_transform(kv.get("time_transform"));
  if (!tk) throw std::runtime_error("model file: unknown time_transform");
  m.prep.time = TimeTransform(*tk, kv.number("time_scale"));
  m.lambda_w = kv.number("lambda_w");
  m.lambda_V = kv.number("lambda_V");
  m.iterations = static_cast<int>(kv.integer("iterations"));
  m.converged = kv.integer("converged") != 0;

  switch (m.kind) {
    case ModelKind::nodef: {
      const auto L = kv.integer("L");
      if (L < 1) throw std::runtime_error("model file: L must be positive");
      auto points = kv.list("grid");
      if (points.size() != static_cast<std::size_t>(L)) {
        throw std::runtime_error("model file: grid does not have L points");
      }
      m.grid = PseudoGrid(std::move(points), kv.number("bandwidth"));
      m.nodef.w = kv.vector("w", dim);
      const Vector flat = kv.vector("V", static_cast<std::size_t>(L) * dim);
      m.nodef.V = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::RowMajor>>(
          flat.data(), static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(dim));
      m.nodef.validate(dim, static_cast<std::size_t>(L));
      break;
    }
    case ModelKind::dfm:
      m.dfm.wc = kv.vector("wc", dim);
      m.dfm.wd = kv.vector("wd", dim);
      m.dfm.validate(dim);
      break;
    case ModelKind::naive:
      m.nodef.w = kv.vector("w", dim);
      m.nodef.V = Matrix(0, static_cast<Eigen::Index>(dim));
      break;
  }
  return m;
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace nodef
