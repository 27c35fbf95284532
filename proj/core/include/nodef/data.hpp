#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nodef/types.hpp"

namespace nodef {

inline constexpr double kSecondsPerDay = 86400.0;

// ---------------------------------------------------------------------------
// Synthetic three-pattern dataset

enum class SyntheticMode {
  random_labels,  // labels drawn uniformly at random
  consistent,      // every sample observed as converted
};

std::optional<SyntheticMode> parse_synthetic_mode(std::string_view text);
const char* to_string(SyntheticMode mode) noexcept;

struct SyntheticPattern {
  std::size_t count;
  double feature_mean;
  double delay_mean;
};

/// Patterns in generation order; samples of pattern k occupy a contiguous
/// block of the generated dataset.
inline constexpr std::array<SyntheticPattern, 3> kSyntheticPatterns{{
    {100, -3.0, 1.0},
    {70, 0.0, 4.0},
    {30, 3.0, 7.0},
}};
inline constexpr std::size_t kSyntheticDim = 10;
inline constexpr double kSyntheticElapsed = 10.0;
inline constexpr double kSyntheticDelayMax = 10.0;

/// Normal(mean, sd) restricted to [lo, hi], by rejection.
double sample_truncated_normal(std::mt19937_64& rng, double mean, double sd, double lo, double hi);

/// 200 samples, 10 raw features, times in days, elapsed time 10 for all.
Dataset generate_synthetic(std::uint64_t seed, SyntheticMode mode);

// ---------------------------------------------------------------------------
// Conversion-log CSV: header `click_ts,conv_ts,f1,...,fM`, integer epoch
// seconds, empty conv_ts for no conversion.

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct LogRecord {
  std::int64_t click_ts = 0;
  std::optional<std::int64_t> conv_ts;
  Vector features;
  std::size_t line = 0;  // 1-based source line, 0 when not read from a file
};

struct LogTable {
  std::size_t dim = 0;
  std::vector<LogRecord> rows;
};

LogTable read_log_csv(std::istream& in);
LogTable read_log_csv(const std::filesystem::path& path);
void write_log_csv(std::ostream& out, const LogTable& table);

/// Reads only the `f1..fM` columns of a CSV (other columns are ignored).
std::vector<Vector> read_feature_csv(const std::filesystem::path& path);

/// Turns log rows into samples observed at `snapshot_ts`. Times are in days.
/// Conversions after the snapshot count as unobserved.
Dataset to_dataset(const LogTable& table, std::int64_t snapshot_ts);

/// read_log_csv + to_dataset. Throws CsvError when snapshot_ts is missing.
Dataset load_csv(const std::filesystem::path& path, std::optional<std::int64_t> snapshot_ts);

/// Exports a dataset (times in days) with click_ts = 0 and conv_ts derived
/// from the delay, rounded to whole seconds. Elapsed times are not stored; a
/// reader recovers them from the snapshot flag.
LogTable to_log_table(const Dataset& dataset);

// ---------------------------------------------------------------------------
// Time transforms

enum class TimeTransformKind { identity, log1p_maxscale, max_scale };

std::optional<TimeTransformKind> parse_time_transform(std::string_view text);
const char* to_string(TimeTransformKind kind) noexcept;

/// Strictly increasing map with transform(0) = 0.
class TimeTransform {
 public:
  TimeTransform() = default;
  TimeTransform(TimeTransformKind kind, double scale);

  TimeTransformKind kind() const noexcept { return kind_; }
  /// Normalising constant: T_max for max_scale, log1p(T_max) for
  /// log1p_maxscale, 1 for identity.
  double scale() const noexcept { return scale_; }

  double apply(double t) const;
  double inverse(double u) const;
  /// d apply / dt, used to carry densities back to raw time.
  double derivative(double t) const;

 private:
  TimeTransformKind kind_ = TimeTransformKind::identity;
  double scale_ = 1.0;
};

/// Fits the normalising constant to the largest time in `times`. Scaled
/// kinds reject inputs whose maximum is not positive.
TimeTransform fit_time_transform(std::span<const double> times, TimeTransformKind kind);

/// All delays and elapsed times in a dataset (delays only if requested).
std::vector<double> collect_times(const Dataset& dataset, bool delays_only = false);

// ---------------------------------------------------------------------------
// Click-date splits

struct SplitSpec {
  double train_days = 3.0;
  double validation_days = 1.0;
  double test_days = 1.0;
  void validate() const;
};

struct Splits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Consecutive half-open click windows starting at `origin_ts` (default: the
/// earliest click). Each sample is observed at the end of its window:
/// elapsed = window_end - click and conversions after window_end become
/// unobserved. Clicks outside every window are dropped.
Splits split_by_click_date(const LogTable& table, const SplitSpec& spec,
                           std::optional<std::int64_t> origin_ts = std::nullopt);

// ---------------------------------------------------------------------------
// Feature and time preprocessing applied before training and scoring.

struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Dataset& dataset);
  Vector apply(const Vector& x) const { return (x - mean).cwiseQuotient(scale); }
};

/// Optional z-scoring, then a constant 1 appended as the last feature; times
/// mapped through a TimeTransform.
struct Preprocessor {
  std::size_t raw_dim = 0;
  std::optional<Standardizer> standardizer;
  TimeTransform time;

  std::size_t model_dim() const noexcept { return raw_dim + 1; }
  Vector features(const Vector& raw_x) const;
  Dataset apply(const Dataset& raw) const;
};

struct PreprocessOptions {
  bool standardize = true;
  TimeTransformKind time_kind = TimeTransformKind::log1p_maxscale;
  /// Fit the time scale on observed delays only (exponential baseline).
  bool scale_by_delays = false;
};

Preprocessor fit_preprocessor(const Dataset& raw_train, const PreprocessOptions& options);

}  // namespace nodef
