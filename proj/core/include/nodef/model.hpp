#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nodef/baselines.hpp"
#include "nodef/data.hpp"
#include "nodef/trainer.hpp"
#include "nodef/types.hpp"

namespace nodef {

enum class ModelKind { nodef, dfm, naive };

std::optional<ModelKind> parse_model_kind(std::string_view text);
const char* to_string(ModelKind kind) noexcept;

/// A fitted model together with the preprocessing that maps raw features and
/// times (days) into its units.
struct TrainedModel {
  ModelKind kind = ModelKind::nodef;
  Preprocessor prep;
  std::optional<PseudoGrid> grid;  // nodef only
  NoDeFParams nodef;               // nodef: w and V; naive: w only
  DfmParams dfm;                   // dfm only

  double lambda_w = 0.0;
  double lambda_V = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> q_trace;

  bool has_delay_model() const noexcept { return kind != ModelKind::naive; }
};

struct TrainOptions {
  TrainConfig config;
  PreprocessOptions prep;
  /// Replaces the half-spacing bandwidth rule when set.
  std::optional<double> bandwidth;
};

/// Fits the preprocessing on `raw_train` and trains the requested model.
/// The exponential baseline always scales times by the largest observed
/// delay; naive ignores times.
TrainedModel train_model(const Dataset& raw_train, ModelKind kind, const TrainOptions& options);

/// Conversion probability for raw features. `horizon_days` empty means
/// eventual conversion; naive models ignore the horizon.
double predict(const TrainedModel& model, const Vector& raw_x,
               std::optional<double> horizon_days);

/// Probability that a conversion is ever observed: predict_limit for NoDeF,
/// which folds in the delay model's never-converting mass. Equals the
/// eventual prediction for the exponential and naive models.
double predict_ever(const TrainedModel& model, const Vector& raw_x);

enum class PredictionMode {
  window,    // horizon = each sample's own elapsed time
  eventual,  // no horizon
  limit,     // infinite horizon through the delay model (see predict_limit)
};

std::vector<double> predict_dataset(const TrainedModel& model, const Dataset& raw,
                                    PredictionMode mode);

struct DensityCurve {
  std::vector<double> time;        // raw time (days)
  std::vector<double> density;     // delay density per raw time unit
  std::vector<double> normalized;  // density / max(density)
};

/// Delay density given eventual conversion, evaluated at raw times.
/// Throws std::invalid_argument for a model without a delay component.
DensityCurve density_curve(const TrainedModel& model, const Vector& raw_x,
                           std::span<const double> times);

/// Mean of the per-vector densities, then max-normalised.
DensityCurve pooled_density(const TrainedModel& model, std::span<const Vector> raw_xs,
                            std::span<const double> times);

/// Evenly spaced points from t_min to t_max inclusive.
std::vector<double> linspace(double t_min, double t_max, std::size_t count);

/// Largest raw time covered by the model's pseudo-grid (or delay scale).
double model_time_horizon(const TrainedModel& model);

// Model files are flat `key=value` text, doubles in shortest round-trip form.
inline constexpr int kModelFormatVersion = 1;

void save_model(std::ostream& out, const TrainedModel& model);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(std::istream& in);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace nodef
