// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "nodef/baselines.hpp"
#include "nodef/data.hpp"
#include "nodef/delay_model.hpp"
#include "nodef/eval.hpp"
#include "nodef/kernel.hpp"
#include "nodef/model.hpp"
#include "nodef/trainer.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace nodef;
using nodef::oracle::integrate;
using nodef::oracle::integrate_piecewise;
using nodef::oracle::rel_error;
using nodef::oracle::separated_modes;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Shared by criteria 1 and 2.
struct TrimodalFit {
  TrainedModel model;
  std::vector<Vector> raw_xs;
  std::vector<Vector> pattern_means;
  std::vector<double> delays;
};

TrimodalFit fit_trimodal(std::uint64_t seed) {
  TrimodalFit f;
  const Dataset raw = generate_synthetic(seed, SyntheticMode::consistent);
  TrainOptions opts;
  opts.config.L = 40;
  opts.config.lambda_w = 0.01;
  opts.config.lambda_V = 0.01;
  opts.prep.time_kind = TimeTransformKind::identity;
  f.model = train_model(raw, ModelKind::nodef, opts);
  std::size_t start = 0;
  for (const auto& pattern : kSyntheticPatterns) {
    Vector mean = Vector::Zero(static_cast<Eigen::Index>(raw.dim()));
    for (std::size_t i = start; i < start + pattern.count; ++i) mean += raw[i].x();
    f.pattern_means.push_back(mean / static_cast<double>(pattern.count));
    start += pattern.count;
  }
  for (const auto& s : raw) {
    f.raw_xs.push_back(s.x());
    if (s.y()) f.delays.push_back(*s.delay());
  }
  return f;
}

constexpr std::uint64_t kTrimodalSeed = 0;

const TrimodalFit& trimodal_fit() {
  static const TrimodalFit fit = fit_trimodal(kTrimodalSeed);
  return fit;
}

constexpr double kModeSeparation = 1.5;

std::vector<double> curve_times() { return linspace(0.0, 10.0, 2001); }

std::vector<double> pattern_argmax(const TrimodalFit& f, const std::vector<double>& times) {
  std::vector<double> out;
  for (const auto& mean : f.pattern_means) {
    const DensityCurve c = density_curve(f.model, mean, times);
    const auto it = std::max_element(c.density.begin(), c.density.end());
    out.push_back(c.time[static_cast<std::size_t>(it - c.density.begin())]);
  }
  return out;
}

bool modes_recovered(const std::vector<double>& argmax) {
  for (std::size_t k = 0; k < kSyntheticPatterns.size(); ++k) {
    if (std::abs(argmax[k] - kSyntheticPatterns[k].delay_mean) > 0.75) return false;
  }
  return true;
}

Outcome trimodal_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const TrimodalFit& f = trimodal_fit();
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto times = curve_times();

  const auto argmax = pattern_argmax(f, times);
  std::string detail = "seed=" + std::to_string(kTrimodalSeed) +
                       " converged=" + (f.model.converged ? "yes" : "no") + " argmax=[";
  for (std::size_t k = 0; k < argmax.size(); ++k) detail += (k ? " " : "") + fmt(argmax[k]);
  const DensityCurve pooled = pooled_density(f.model, f.raw_xs, times);
  const auto modes = separated_modes(pooled.time, pooled.density, kModeSeparation);
  const bool pass = f.model.converged && modes_recovered(argmax) && modes.size() >= 3 &&
                    seconds < 120.0;
  detail += "] pooled_modes=" + std::to_string(modes.size()) + " fit_s=" + fmt(seconds);

  // Not gating: with 30-100 samples per pattern the argmax moves with the
  // draw, so report how often the same check holds across other seeds.
  int hits = 0;
  const int sweep = 20;
  for (int seed = 1; seed <= sweep; ++seed) {
    hits += modes_recovered(pattern_argmax(fit_trimodal(static_cast<std::uint64_t>(seed)), times))
                ? 1
                : 0;
  }
  detail += " other_seeds_within_tol=" + std::to_string(hits) + "/" + std::to_string(sweep);
  return {pass, detail};
}

Outcome exponential_contrast() {
  const TrimodalFit& f = trimodal_fit();
  double mean = 0.0;
  for (double d : f.delays) mean += d;
  mean /= static_cast<double>(f.delays.size());
  const double rate = 1.0 / mean;  // exponential MLE
  const auto times = curve_times();
  std::vector<double> expo;
  for (double t : times) expo.push_back(rate * std::exp(-rate * t));
  const auto expo_modes = separated_modes(times, expo, kModeSeparation);
  const DensityCurve pooled = pooled_density(f.model, f.raw_xs, times);
  const auto nodef_modes = separated_modes(pooled.time, pooled.density, kModeSeparation);
  const bool pass = expo_modes.size() == 1 && expo_modes[0] == 0.0 &&
                    nodef_modes.size() > expo_modes.size();
  return {pass, "exponential_modes=" + std::to_string(expo_modes.size()) +
                    " nodef_modes=" + std::to_string(nodef_modes.size())};
}

Outcome gradient_check() {
  std::mt19937_64 rng(31337);
  const std::size_t dim = 5, L = 8;
  const Dataset data = oracle::random_dataset(rng, 30, dim);
  const PseudoGrid grid = make_grid(L, 8.0);
  const double lw = 0.05, lv = 0.05;
  const double step = 1e-5;
  double worst = 0.0;
  for (int draw = 0; draw < 50; ++draw) {
    NoDeFParams p{oracle::random_vector(rng, dim, 0.5), oracle::random_matrix(rng, L, dim, 0.5)};
    const Posteriors post = e_step(data, p, grid);
    const Vector gw = grad_w(data, p, post, lw);
    const Matrix gV = grad_V(data, p, post, grid, lv);
    for (Eigen::Index i = 0; i < p.w.size(); ++i) {
      const double fd = oracle::central_difference(
          [&](double v) {
            NoDeFParams q = p;
            q.w[i] = v;
            return q_objective(data, q, post, grid, lw, lv);
          },
          p.w[i], step);
      worst = std::max(worst, rel_error(gw[i], fd));
    }
    for (Eigen::Index r = 0; r < p.V.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.V.cols(); ++c) {
        const double fd = oracle::central_difference(
            [&](double v) {
              NoDeFParams q = p;
              q.V(r, c) = v;
              return q_objective(data, q, post, grid, lw, lv);
            },
            p.V(r, c), step);
        worst = std::max(worst, rel_error(gV(r, c), fd));
      }
    }
  }
  return {worst < 1e-5, "max_rel_error=" + fmt(worst)};
}

Outcome em_monotonicity() {
  double worst_drop = 0.0;
  bool flagged = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const Dataset data = oracle::random_dataset(rng, 40, 4);
    TrainConfig cfg;
    cfg.L = 10;
    cfg.lambda_w = 0.01;
    cfg.lambda_V = 0.01;
    cfg.max_iters = 30;
    const FitResult r = fit(data, cfg, make_grid(cfg.L, 8.0));
    flagged = flagged || r.q_decreased;
    for (std::size_t j = 1; j < r.q_trace.size(); ++j) {
      worst_drop = std::max(worst_drop, r.q_trace[j - 1] - r.q_trace[j]);
    }
  }
  return {worst_drop <= 1e-8 && !flagged,
          "largest_drop=" + fmt(worst_drop) + " flagged=" + (flagged ? "yes" : "no")};
}

Outcome survival_identities() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double hazard_err = 0.0, survival_err = 0.0, kernel_err = 0.0;

  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t L = 3 + trial % 8, dim = 4;
    const PseudoGrid grid = make_grid(L, 2.0 + 8.0 * u(rng));
    const Vector x = oracle::random_vector(rng, dim);
    const Matrix V = oracle::random_matrix(rng, L, dim);
    const double d = 10.0 * u(rng);
    const double h = hazard(d, x, V, grid);
    const double f = delay_density(d, x, V, grid);
    const double s = survival(d, x, V, grid);
    hazard_err = std::max(hazard_err, oracle::strict_rel_error(h, f / s));
    const double cum = integrate_piecewise([&](double t) { return hazard(t, x, V, grid); }, 0.0, d,
                                           grid.points());
    survival_err = std::max(survival_err, oracle::strict_rel_error(s, std::exp(-cum)));
  }

  for (int trial = 0; trial < 1000; ++trial) {
    const double a = 20.0 * u(rng);
    const double t = -2.0 + 22.0 * u(rng);
    const double bw = 0.05 + 3.0 * u(rng);
    auto k = [&](double tau) { return gauss_kernel(t, tau, bw); };
    const double lower = integrate_piecewise(k, 0.0, a, {t});
    // [a, inf) as [a, far] with the remaining tail below 1e-300.
    const double far = std::max(a, t) + 40.0 * bw;
    const double upper = integrate_piecewise(k, a, far, {t});
    kernel_err = std::max({kernel_err, rel_error(lower, kernel_integral_0_to(a, t, bw)),
                           rel_error(upper, kernel_integral_to_inf(a, t, bw))});
  }
  const bool pass = hazard_err <= 1e-12 && survival_err <= 1e-6 && kernel_err <= 1e-8;
  return {pass, "hazard_rel=" + fmt(hazard_err) + " survival_rel=" + fmt(survival_err) +
                    " kernel_rel=" + fmt(kernel_err)};
}

Outcome predict_by_time_structure() {
  std::mt19937_64 rng(4242);
  bool monotone = true, zero_start = true, bounded = true;
  double limit_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t L = 2 + trial % 15, dim = 3;
    const PseudoGrid grid = make_grid(L, 10.0);
    NoDeFParams p{oracle::random_vector(rng, dim), oracle::random_matrix(rng, L, dim)};
    const Vector x = oracle::random_vector(rng, dim);
    const double eventual = predict_eventual(x, p.w);
    zero_start = zero_start && predict_by_time(x, 0.0, p, grid) == 0.0;
    double prev = 0.0;
    for (int k = 1; k <= 400; ++k) {
      const double v = predict_by_time(x, 0.05 * k, p, grid);
      monotone = monotone && v >= prev;
      bounded = bounded && v <= eventual;
      prev = v;
    }
    const double ceiling = eventual * (1.0 - survival_limit(x, p.V, grid));
    limit_err = std::max(limit_err, std::abs(predict_by_time(x, 1e6, p, grid) - ceiling));
  }
  const bool pass = monotone && zero_start && bounded && limit_err <= 1e-10;
  return {pass, std::string("monotone=") + (monotone ? "yes" : "no") +
                    " zero_at_0=" + (zero_start ? "yes" : "no") +
                    " bounded=" + (bounded ? "yes" : "no") + " limit_err=" + fmt(limit_err)};
}

// Synthetic delayed-feedback task. Cluster k has feature mean m_k in every
// coordinate and delays TN(mu_k, 1) on [0, 10]; eventual conversion follows
// a fixed logistic law. Clicks are uniform over an 8-day window observed at
// its end.
struct DelayedTask {
  Dataset train;
  std::vector<Vector> test_x;
  std::vector<int> test_c;
  double censored_fraction = 0.0;
};

DelayedTask make_delayed_task(std::uint64_t seed) {
  constexpr std::size_t dim = 5;
  const double cluster_mean[3] = {-3.0, 0.0, 3.0};
  const double delay_mean[3] = {1.0, 4.0, 7.0};
  const double cluster_prob[3] = {0.5, 0.35, 0.15};
  Vector w_true(dim);
  w_true << 0.8, -0.6, 0.4, 0.3, -0.2;
  const double b_true = 0.3;
  const double window = 8.0;

  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick({cluster_prob[0], cluster_prob[1], cluster_prob[2]});
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&](int& cluster) {
    cluster = pick(rng);
    Vector x(dim);
    for (std::size_t j = 0; j < dim; ++j) x[j] = cluster_mean[cluster] + noise(rng);
    const bool c = u(rng) < 1.0 / (1.0 + std::exp(-(w_true.dot(x) + b_true)));
    return std::pair{x, c};
  };

  DelayedTask task;
  std::vector<Sample> train;
  std::size_t converted = 0, censored = 0;
  for (int i = 0; i < 2000; ++i) {
    int k = 0;
    auto [x, c] = draw(k);
    const double e = window - window * u(rng);
    if (c) {
      ++converted;
      const double d = sample_truncated_normal(rng, delay_mean[k], 1.0, 0.0, 10.0);
      if (d <= e) {
        train.push_back(Sample::observed(std::move(x), d, e));
        continue;
      }
      ++censored;
    }
    train.push_back(Sample::unobserved(std::move(x), e));
  }
  task.train = Dataset(dim, std::move(train));
  task.censored_fraction = static_cast<double>(censored) / static_cast<double>(converted);
  for (int i = 0; i < 2000; ++i) {
    int k = 0;
    auto [x, c] = draw(k);
    task.test_x.push_back(std::move(x));
    task.test_c.push_back(c ? 1 : 0);
  }
  return task;
}

Outcome delayed_feedback_advantage() {
  double nodef_total = 0.0, flag_total = 0.0, naive_total = 0.0, min_censored = 1.0;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    const DelayedTask task = make_delayed_task(500 + static_cast<std::uint64_t>(s));
    min_censored = std::min(min_censored, task.censored_fraction);
    TrainOptions opts;
    opts.config.L = 20;
    opts.config.lambda_w = 0.01;
    opts.config.lambda_V = 0.01;
    const TrainedModel nodef_model = train_model(task.train, ModelKind::nodef, opts);
    const TrainedModel naive_model = train_model(task.train, ModelKind::naive, opts);
    // The true label is "converts at some point", which NoDeF scores as the
    // infinite-horizon limit; sigmoid(w.x) alone is reported for reference.
    std::vector<double> pn, pc, pb;
    for (const auto& x : task.test_x) {
      pn.push_back(predict_ever(nodef_model, x));
      pc.push_back(predict(nodef_model, x, std::nullopt));
      pb.push_back(predict_ever(naive_model, x));
    }
    nodef_total += log_loss(pn, task.test_c);
    flag_total += log_loss(pc, task.test_c);
    naive_total += log_loss(pb, task.test_c);
  }
  const double nodef_ll = nodef_total / seeds, naive_ll = naive_total / seeds;
  const bool pass = min_censored >= 0.30 && naive_ll - nodef_ll >= 0.01;
  return {pass, "nodef_logloss=" + fmt(nodef_ll) + " naive_logloss=" + fmt(naive_ll) +
                    " nodef_flag_only_logloss=" + fmt(flag_total / seeds) +
                    " min_censored=" + fmt(min_censored)};
}

Outcome auc_oracle() {
  std::mt19937_64 rng(8080);
  std::uniform_int_distribution<int> size(2, 300);
  std::uniform_int_distribution<int> levels(1, 20);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int used = 0;
  while (used < 200) {
    const int n = size(rng);
    // Coarse levels force ties in most instances.
    const int q = used % 2 == 0 ? levels(rng) : 0;
    std::vector<double> p(static_cast<std::size_t>(n));
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      p[i] = q > 0 ? std::floor(u(rng) * q) / q : u(rng);
      y[i] = u(rng) < 0.4 ? 1 : 0;
    }
    if (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0) {
      continue;
    }
    worst = std::max(worst, std::abs(auc(p, y) - oracle::pairwise_auc(p, y)));
    ++used;
  }
  return {worst <= 1e-12, "max_abs_diff=" + fmt(worst)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "nodef_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = (dir / "syn.csv").string();
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) { return cli::run(args, sink, sink); };

  bool ok = run({"synth", "--seed", "11", "--mode", "consistent", "-o", data}) == 0;
  std::string models[2], reports[2], stdouts[2];
  for (int k = 0; k < 2; ++k) {
    const std::string model = (dir / ("model" + std::to_string(k) + ".txt")).string();
    const std::string report = (dir / ("report" + std::to_string(k) + ".json")).string();
    ok = ok && run({"train", "--data", data, "--snapshot", "864000", "--L", "20", "--seed", "5",
                    "--init_jitter", "0.01", "--threads", "1", "-o", model}) == 0;
    // Observing at day 5 relabels the later conversions, so both classes
    // are present for AUC.
    std::ostringstream out, err;
    ok = ok && cli::run({"eval", "--model", model, "--data", data, "--snapshot", "432000",
                         "--report", report},
                        out, err) == 0;
    models[k] = slurp(model);
    reports[k] = slurp(report);
    stdouts[k] = out.str();
  }
  const bool same = ok && !models[0].empty() && models[0] == models[1] &&
                    reports[0] == reports[1] && stdouts[0] == stdouts[1];
  fs::remove_all(dir);
  return {same, std::string("commands_ok=") + (ok ? "yes" : "no") +
                    " model_bytes=" + std::to_string(models[0].size()) +
                    " identical=" + (same ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"trimodal density recovery", trimodal_recovery},
      {"exponential fit contrast", exponential_contrast},
      {"gradient correctness", gradient_check},
      {"EM monotonicity", em_monotonicity},
      {"survival identities", survival_identities},
      {"predict_by_time structure", predict_by_time_structure},
      {"delayed-feedback advantage", delayed_feedback_advantage},
      {"AUC oracle equivalence", auc_oracle},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].name << ": "
              << o.detail << " (" << fmt(s) << "s)" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
