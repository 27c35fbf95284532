#include "nodef/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "nodef/text.hpp"

namespace nodef {

// ---------------------------------------------------------------------------
// Synthetic

std::optional<SyntheticMode> parse_synthetic_mode(std::string_view text) {
  if (text == "random_labels") return SyntheticMode::random_labels;
  if (text == "consistent") return SyntheticMode::consistent;
  return std::nullopt;
}

const char* to_string(SyntheticMode mode) noexcept {
  return mode == SyntheticMode::consistent ? "consistent" : "random_labels";
}

double sample_truncated_normal(std::mt19937_64& rng, double mean, double sd, double lo,
                               double hi) {
  if (!(sd > 0.0) || !(lo < hi)) {
    throw std::invalid_argument("truncated normal: need sd > 0 and lo < hi");
  }
  std::normal_distribution<double> normal(mean, sd);
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const double v = normal(rng);
    if (v >= lo && v <= hi) return v;
  }
  throw std::runtime_error("truncated normal: acceptance region too small for rejection");
}

Dataset generate_synthetic(std::uint64_t seed, SyntheticMode mode) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<Sample> samples;
  for (const auto& pattern : kSyntheticPatterns) {
    std::normal_distribution<double> feature(pattern.feature_mean, 1.0);
    for (std::size_t n = 0; n < pattern.count; ++n) {
      Vector x(static_cast<Eigen::Index>(kSyntheticDim));
      for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = feature(rng);
      const double d =
          sample_truncated_normal(rng, pattern.delay_mean, 1.0, 0.0, kSyntheticDelayMax);
      const bool observed = mode == SyntheticMode::consistent || coin(rng);
      samples.push_back(observed ? Sample::observed(std::move(x), d, kSyntheticElapsed)
                                 : Sample::unobserved(std::move(x), kSyntheticElapsed));
    }
  }
  return Dataset(kSyntheticDim, std::move(samples));
}

// ---------------------------------------------------------------------------
// CSV

LogTable read_log_csv(std::istream& in) {
  LogTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (!have_header) {
      if (fields.size() < 2 || text::trim(fields[0]) != "click_ts" ||
          text::trim(fields[1]) != "conv_ts") {
        throw CsvError("header must start with click_ts,conv_ts", lineno);
      }
      for (std::size_t j = 2; j < fields.size(); ++j) {
        if (text::trim(fields[j]) != "f" + std::to_string(j - 1)) {
          throw CsvError("expected feature column f" + std::to_string(j - 1), lineno);
        }
      }
      table.dim = fields.size() - 2;
      have_header = true;
      continue;
    }
    if (fields.size() != table.dim + 2) {
      throw CsvError("expected " + std::to_string(table.dim + 2) + " fields, got " +
                         std::to_string(fields.size()),
                     lineno);
    }
    LogRecord rec;
    rec.line = lineno;
    const auto click = text::parse_int(fields[0]);
    if (!click) throw CsvError("click_ts is not an integer", lineno);
    rec.click_ts = *click;
    if (!text::trim(fields[1]).empty()) {
      const auto conv = text::parse_int(fields[1]);
      if (!conv) throw CsvError("conv_ts is not an integer", lineno);
      if (*conv < rec.click_ts) throw CsvError("conversion precedes click (negative delay)", lineno);
      rec.conv_ts = *conv;
    }
    rec.features.resize(static_cast<Eigen::Index>(table.dim));
    for (std::size_t j = 0; j < table.dim; ++j) {
      const auto v = text::parse_double(fields[j + 2]);
      if (!v || !std::isfinite(*v)) {
        throw CsvError("feature f" + std::to_string(j + 1) + " is not a finite number", lineno);
      }
      rec.features[static_cast<Eigen::Index>(j)] = *v;
    }
    table.rows.push_back(std::move(rec));
  }
  if (!have_header) throw CsvError("missing header", 0);
  return table;
}

LogTable read_log_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path.string(), 0);
  return read_log_csv(in);
}

void write_log_csv(std::ostream& out, const LogTable& table) {
  out << "click_ts,conv_ts";
  for (std::size_t j = 1; j <= table.dim; ++j) out << ",f" << j;
  out << '\n';
  for (const auto& rec : table.rows) {
    out << rec.click_ts << ',';
    if (rec.conv_ts) out << *rec.conv_ts;
    for (Eigen::Index j = 0; j < rec.features.size(); ++j) {
      out << ',' << text::format_double(rec.features[j]);
    }
    out << '\n';
  }
}

std::vector<Vector> read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path.string(), 0);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::size_t> columns;
  std::vector<Vector> out;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (!have_header) {
      // f1..fM in order, wherever they appear
      for (std::size_t want = 1;; ++want) {
        const std::string name = "f" + std::to_string(want);
        auto it = std::find_if(fields.begin(), fields.end(),
                               [&](std::string_view f) { return text::trim(f) == name; });
        if (it == fields.end()) break;
        columns.push_back(static_cast<std::size_t>(it - fields.begin()));
      }
      if (columns.empty()) throw CsvError("no feature columns f1..fM in header", lineno);
      have_header = true;
      continue;
    }
    Vector x(static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto v = columns[j] < fields.size() ? text::parse_double(fields[columns[j]])
                                                : std::nullopt;
      if (!v) throw CsvError("feature f" + std::to_string(j + 1) + " is not a number", lineno);
      x[static_cast<Eigen::Index>(j)] = *v;
    }
    out.push_back(std::move(x));
  }
  if (!have_header) throw CsvError("missing header", 0);
  return out;
}

Dataset to_dataset(const LogTable& table, std::int64_t snapshot_ts) {
  std::vector<Sample> samples;
  samples.reserve(table.rows.size());
  for (const auto& rec : table.rows) {
    if (rec.click_ts > snapshot_ts) throw CsvError("click after snapshot time", rec.line);
    const double e = static_cast<double>(snapshot_ts - rec.click_ts) / kSecondsPerDay;
    if (rec.conv_ts && *rec.conv_ts <= snapshot_ts) {
      const double d = static_cast<double>(*rec.conv_ts - rec.click_ts) / kSecondsPerDay;
      samples.push_back(Sample::observed(rec.features, d, e));
    } else {
      samples.push_back(Sample::unobserved(rec.features, e));
    }
  }
  return Dataset(table.dim, std::move(samples));
}

Dataset load_csv(const std::filesystem::path& path, std::optional<std::int64_t> snapshot_ts) {
  if (!snapshot_ts) throw CsvError("a snapshot timestamp is required to compute elapsed times", 0);
  return to_dataset(read_log_csv(path), *snapshot_ts);
}

LogTable to_log_table(const Dataset& dataset) {
  LogTable table;
  table.dim = dataset.dim();
  table.rows.reserve(dataset.size());
  for (const auto& s : dataset) {
    LogRecord rec;
    rec.click_ts = 0;
    if (s.delay()) rec.conv_ts = std::llround(*s.delay() * kSecondsPerDay);
    rec.features = s.x();
    table.rows.push_back(std::move(rec));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Time transforms

std::optional<TimeTransformKind> parse_time_transform(std::string_view text) {
  if (text == "identity") return TimeTransformKind::identity;
  if (text == "log1p_maxscale") return TimeTransformKind::log1p_maxscale;
  if (text == "max_scale") return TimeTransformKind::max_scale;
  return std::nullopt;
}

const char* to_string(TimeTransformKind kind) noexcept {
  switch (kind) {
    case TimeTransformKind::identity:
      return "identity";
    case TimeTransformKind::log1p_maxscale:
      return "log1p_maxscale";
    case TimeTransformKind::max_scale:
      return "max_scale";
  }
  return "unknown";
}

TimeTransform::TimeTransform(TimeTransformKind kind, double scale) : kind_(kind), scale_(scale) {
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    throw std::invalid_argument("time transform: scale must be positive");
  }
}

double TimeTransform::apply(double t) const {
  switch (kind_) {
    case TimeTransformKind::identity:
      return t;
    case TimeTransformKind::log1p_maxscale:
      return std::log1p(t) / scale_;
    case TimeTransformKind::max_scale:
      return t / scale_;
  }
  return t;
}

double TimeTransform::inverse(double u) const {
  switch (kind_) {
    case TimeTransformKind::identity:
      return u;
    case TimeTransformKind::log1p_maxscale:
      return std::expm1(u * scale_);
    case TimeTransformKind::max_scale:
      return u * scale_;
  }
  return u;
}

double TimeTransform::derivative(double t) const {
  switch (kind_) {
    case TimeTransformKind::identity:
      return 1.0;
    case TimeTransformKind::log1p_maxscale:
      return 1.0 / ((1.0 + t) * scale_);
    case TimeTransformKind::max_scale:
      return 1.0 / scale_;
  }
  return 1.0;
}

TimeTransform fit_time_transform(std::span<const double> times, TimeTransformKind kind) {
  if (kind == TimeTransformKind::identity) return TimeTransform();
  double t_max = 0.0;
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw std::invalid_argument("fit_time_transform: times must be finite and nonnegative");
    }
    t_max = std::max(t_max, t);
  }
  if (!(t_max > 0.0)) {
    throw std::invalid_argument("fit_time_transform: need at least one positive time");
  }
  return TimeTransform(kind, kind == TimeTransformKind::log1p_maxscale ? std::log1p(t_max) : t_max);
}

std::vector<double> collect_times(const Dataset& dataset, bool delays_only) {
  std::vector<double> out;
  for (const auto& s : dataset) {
    if (s.delay()) out.push_back(*s.delay());
    if (!delays_only) out.push_back(s.elapsed());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

void SplitSpec::validate() const {
  if (!(train_days > 0.0) || !(validation_days > 0.0) || !(test_days > 0.0)) {
    throw std::invalid_argument("split: window lengths must be positive");
  }
}

Splits split_by_click_date(const LogTable& table, const SplitSpec& spec,
                           std::optional<std::int64_t> origin_ts) {
  spec.validate();
  if (!origin_ts) {
    if (table.rows.empty()) throw std::invalid_argument("split: no rows");
    origin_ts = std::min_element(table.rows.begin(), table.rows.end(),
                                 [](const LogRecord& a, const LogRecord& b) {
                                   return a.click_ts < b.click_ts;
                                 })
                    ->click_ts;
  }
  const double origin = static_cast<double>(*origin_ts);
  const std::array<const char*, 3> names{"train", "validation", "test"};
  std::array<double, 4> edges{};
  edges[0] = origin;
  edges[1] = edges[0] + spec.train_days * kSecondsPerDay;
  edges[2] = edges[1] + spec.validation_days * kSecondsPerDay;
  edges[3] = edges[2] + spec.test_days * kSecondsPerDay;
  std::array<std::int64_t, 4> bounds{};
  for (std::size_t k = 0; k < 4; ++k) bounds[k] = std::llround(edges[k]);

  std::array<std::vector<Sample>, 3> parts;
  for (const auto& rec : table.rows) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (rec.click_ts < bounds[k] || rec.click_ts >= bounds[k + 1]) continue;
      const std::int64_t end = bounds[k + 1];
      const double e = static_cast<double>(end - rec.click_ts) / kSecondsPerDay;
      if (rec.conv_ts && *rec.conv_ts <= end) {
        const double d = static_cast<double>(*rec.conv_ts - rec.click_ts) / kSecondsPerDay;
        parts[k].push_back(Sample::observed(rec.features, d, e));
      } else {
        parts[k].push_back(Sample::unobserved(rec.features, e));
      }
      break;
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    if (parts[k].empty()) {
      throw std::invalid_argument(std::string("split: ") + names[k] + " window is empty");
    }
  }
  return {Dataset(table.dim, std::move(parts[0])), Dataset(table.dim, std::move(parts[1])),
          Dataset(table.dim, std::move(parts[2]))};
}

// ---------------------------------------------------------------------------
// Preprocessing

Standardizer Standardizer::fit(const Dataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("standardizer: empty dataset");
  const auto M = static_cast<Eigen::Index>(dataset.dim());
  Vector mean = Vector::Zero(M);
  for (const auto& s : dataset) mean += s.x();
  mean /= static_cast<double>(dataset.size());
  Vector var = Vector::Zero(M);
  for (const auto& s : dataset) var += (s.x() - mean).cwiseAbs2();
  var /= static_cast<double>(dataset.size());
  Vector scale = var.cwiseSqrt();
  for (Eigen::Index j = 0; j < M; ++j) {
    if (!(scale[j] > 1e-12)) scale[j] = 1.0;  // constant column
  }
  return {std::move(mean), std::move(scale)};
}

Vector Preprocessor::features(const Vector& raw_x) const {
  if (static_cast<std::size_t>(raw_x.size()) != raw_dim) {
    throw std::invalid_argument("preprocessor: expected " + std::to_string(raw_dim) +
                                " features, got " + std::to_string(raw_x.size()));
  }
  Vector out(static_cast<Eigen::Index>(raw_dim + 1));
  out.head(static_cast<Eigen::Index>(raw_dim)) =
      standardizer ? standardizer->apply(raw_x) : raw_x;
  out[static_cast<Eigen::Index>(raw_dim)] = 1.0;
  return out;
}

Dataset Preprocessor::apply(const Dataset& raw) const {
  std::vector<Sample> samples;
  samples.reserve(raw.size());
  for (const auto& s : raw) {
    const double e = time.apply(s.elapsed());
    if (s.delay()) {
      samples.push_back(Sample::observed(features(s.x()), std::min(time.apply(*s.delay()), e), e));
    } else {
      samples.push_back(Sample::unobserved(features(s.x()), e));
    }
  }
  return Dataset(model_dim(), std::move(samples));
}

Preprocessor fit_preprocessor(const Dataset& raw_train, const PreprocessOptions& options) {
  Preprocessor p;
  p.raw_dim = raw_train.dim();
  if (options.standardize) p.standardizer = Standardizer::fit(raw_train);
  const auto times = collect_times(raw_train, options.scale_by_delays);
  p.time = fit_time_transform(times, options.time_kind);
  return p;
}

}  // namespace nodef
