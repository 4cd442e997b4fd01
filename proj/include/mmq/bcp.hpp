#pragma once

// Brownian control problem benchmark: drift and covariance per regime, the LP
// value function, the optimal reflected workload W*, and Monte Carlo J*.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmq/cost.hpp"
#include "mmq/env_chain.hpp"
#include "mmq/model.hpp"
#include "mmq/random.hpp"
#include "mmq/skorohod.hpp"
#include "mmq/stats.hpp"

namespace mmq {

struct BrownianSpec {
  Vector drift;       // theta_i = mu*_i b_i
  Matrix covariance;  // Sigma
  RegimeCase regime_case = RegimeCase::Case1a;
};

inline BrownianSpec brownian_spec(const NetworkModel& model, const CovarianceMatrix& lambda_cov,
                                  const HeavyTrafficReport& report) {
  const auto regime = model.regime().regime_case();
  if (!regime) {
    throw std::invalid_argument("(nu, alpha) = (" + format_double(model.regime().nu) + ", " +
                                format_double(model.regime().alpha) + ") is not one of the covered regimes");
  }
  const auto k = static_cast<Eigen::Index>(model.classes());
  if (report.b.size() != k || report.lambda_star.size() != k || report.mu_star.size() != k) {
    throw std::invalid_argument("heavy-traffic report is missing b, lambda* or mu*");
  }
  if (!report.b.allFinite() || !report.lambda_star.allFinite()) {
    throw std::invalid_argument("heavy-traffic report has nonfinite entries");
  }
  if (lambda_cov.lambda_cov.rows() != k || lambda_cov.lambda_cov.cols() != k) {
    throw std::invalid_argument("covariance matrix has the wrong dimension");
  }
  BrownianSpec spec;
  spec.regime_case = *regime;
  spec.drift = report.mu_star.cwiseProduct(report.b);
  const Matrix poisson = Matrix(Vector(2.0 * report.lambda_star).asDiagonal());
  switch (*regime) {
    case RegimeCase::Case1a:
    case RegimeCase::Case1b: spec.covariance = poisson; break;
    case RegimeCase::Case2: spec.covariance = poisson + lambda_cov.lambda_cov; break;
    case RegimeCase::Case3: spec.covariance = lambda_cov.lambda_cov; break;
  }
  return spec;
}

// One-dimensional workload parameters: drift sum_i theta_i / mu*_i and variance
// (1/mu*)' Sigma (1/mu*).
struct WorkloadParameters {
  double drift = 0.0;
  double variance = 0.0;
};

inline WorkloadParameters workload_parameters(const BrownianSpec& spec, const Vector& mu_star) {
  const Vector inv = mu_star.cwiseInverse();
  WorkloadParameters p{spec.drift.dot(inv), inv.dot(spec.covariance * inv)};
  if (!std::isfinite(p.drift) || !std::isfinite(p.variance)) throw std::invalid_argument("nonfinite Brownian spec");
  // Rounding can push a singular covariance a hair below zero.
  if (p.variance < 0.0 && p.variance > -1e-12) p.variance = 0.0;
  if (p.variance < 0.0) throw std::invalid_argument("workload variance is negative");
  return p;
}

struct LpSolution {
  double value = 0.0;
  Vector q;  // minimizer: all mass in class sigma(K)
};

// min c.q subject to sum_i q_i / mu*_i = w, q >= 0.
inline LpSolution lp_solution(double w, const Vector& c, const Vector& mu_star) {
  if (!(w >= 0.0)) throw std::invalid_argument("lp value needs w >= 0");
  const auto order = cmu_star_ordering(c, mu_star);
  const auto last = static_cast<Eigen::Index>(order.sigma.back());
  LpSolution out;
  out.q = Vector::Zero(c.size());
  out.q(last) = mu_star(last) * w;
  out.value = c(last) * mu_star(last) * w;
  return out;
}

inline double lp_value(double w, const Vector& c, const Vector& mu_star) { return lp_solution(w, c, mu_star).value; }

enum class Reflection {
  Bridge,  // reflect at the exact minimum of the Brownian bridge in each step
  Grid,    // reflect at grid points only
};

inline const char* to_string(Reflection r) { return r == Reflection::Bridge ? "bridge" : "grid"; }

struct WorkloadStarPath {
  std::vector<double> times;
  std::vector<double> w;     // W*
  std::vector<double> idle;  // I*
  std::size_t classes = 0;
  std::vector<double> x;    // X, row-major
  std::vector<double> q;    // Q*, row-major
  std::vector<double> eta;  // eta*, row-major
};

namespace detail {

// Symmetric square root of a PSD covariance (negative rounding eigenvalues clipped).
inline Matrix covariance_root(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw std::invalid_argument("covariance eigen-decomposition failed");
  const Vector root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
}

// Minimum of a Brownian bridge from a to b over a step of variance v = sigma^2 dt.
inline double bridge_minimum(double a, double b, double v, double u) {
  return 0.5 * (a + b - std::sqrt((b - a) * (b - a) - 2.0 * v * std::log(u)));
}

inline std::size_t grid_steps(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("dt and horizon must be positive");
  return static_cast<std::size_t>(std::llround(std::ceil(horizon / dt - 1e-9)));
}

}  // namespace detail

// K-dimensional sample of (X, W*, I*, Q*, eta*) on the grid k dt, k = 0..ceil(horizon/dt).
inline WorkloadStarPath sample_workload_star(const BrownianSpec& spec, const Vector& mu_star, const Vector& c,
                                             double dt, double horizon, std::uint64_t seed,
                                             std::uint64_t replication = 0,
                                             Reflection reflection = Reflection::Bridge) {
  const auto k = static_cast<Eigen::Index>(mu_star.size());
  if (spec.drift.size() != k || spec.covariance.rows() != k || c.size() != k) {
    throw std::invalid_argument("Brownian spec dimension mismatch");
  }
  if (!spec.drift.allFinite() || !spec.covariance.allFinite()) throw std::invalid_argument("nonfinite Brownian spec");
  const auto params = workload_parameters(spec, mu_star);
  const std::size_t steps = detail::grid_steps(dt, horizon);
  const Matrix root = detail::covariance_root(spec.covariance) * std::sqrt(dt);
  const Vector inv = mu_star.cwiseInverse();
  const auto order = cmu_star_ordering(c, mu_star);
  const auto last = static_cast<Eigen::Index>(order.sigma.back());

  CounterRng gauss(seed, replication, Stream::Gaussian);
  CounterRng bridge(seed, replication, Stream::Bridge);
  WorkloadStarPath path;
  path.classes = static_cast<std::size_t>(k);
  Vector x = Vector::Zero(k);
  Vector z(k);
  double workload_x = 0.0;
  double idle = 0.0;
  auto record = [&](double t) {
    const double w = workload_x + idle;
    path.times.push_back(t);
    path.w.push_back(w);
    path.idle.push_back(idle);
    for (Eigen::Index i = 0; i < k; ++i) {
      path.x.push_back(x(i));
      path.q.push_back(i == last ? mu_star(i) * w : 0.0);
      path.eta.push_back(i == last ? w - x(i) * inv(i) : -x(i) * inv(i));
    }
  };
  record(0.0);
  for (std::size_t step = 1; step <= steps; ++step) {
    for (Eigen::Index i = 0; i < k; ++i) z(i) = gauss.normal();
    x += spec.drift * dt + root * z;
    const double previous = workload_x;
    workload_x = x.dot(inv);
    double low = workload_x;
    if (reflection == Reflection::Bridge) {
      low = detail::bridge_minimum(previous, workload_x, params.variance * dt, bridge.uniform());
    }
    idle = std::max(idle, -low);
    record(static_cast<double>(step) * dt);
  }
  return path;
}

struct JStarOptions {
  std::size_t replications = 10000;
  double dt = 1e-3;
  double horizon = 5.0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  Reflection reflection = Reflection::Bridge;
};

struct JStarEstimate {
  DiscountedCostEstimate estimate;  // policy "BCP"
  double dt = 0.0;
  WorkloadParameters workload;
  double cost_rate = 0.0;  // c_{sigma(K)} mu*_{sigma(K)}
};

// One-dimensional W* on the dt-grid, fed to fn(step, t, W*) for every grid point.
template <class Fn>
void walk_workload_star(const WorkloadParameters& p, double dt, double horizon, std::uint64_t seed,
                        std::uint64_t replication, Reflection reflection, Fn&& fn) {
  const std::size_t steps = detail::grid_steps(dt, horizon);
  const double mean = p.drift * dt;
  const double sd = std::sqrt(p.variance * dt);
  const double v = p.variance * dt;
  CounterRng gauss(seed, replication, Stream::Gaussian);
  CounterRng bridge(seed, replication, Stream::Bridge);
  double x = 0.0;
  double idle = 0.0;
  fn(std::size_t{0}, 0.0, 0.0);
  for (std::size_t step = 1; step <= steps; ++step) {
    const double next = x + mean + sd * gauss.normal();
    const double low =
        (reflection == Reflection::Bridge && v > 0.0) ? detail::bridge_minimum(x, next, v, bridge.uniform()) : next;
    x = next;
    idle = std::max(idle, -low);
    fn(step, static_cast<double>(step) * dt, x + idle);
  }
}

// Mean of W*(t) over replications (grid-refinement diagnostics).
inline SampleSummary workload_star_mean(const WorkloadParameters& p, double t, const JStarOptions& options) {
  std::vector<double> values(options.replications, 0.0);
  const std::size_t target = detail::grid_steps(options.dt, t);
  for_each_replication(options.replications, options.threads, [&](std::size_t r) {
    walk_workload_star(p, options.dt, t, options.seed, r, options.reflection, [&](std::size_t step, double, double w) {
      if (step == target) values[r] = w;
    });
  });
  return summarize(values);
}

// J* = E int_0^inf e^{-gamma t} V(W*(t)) dt, trapezoidal on the dt-grid up to the
// horizon, plus a tail bound from the empirical growth of E sup W*.
inline JStarEstimate estimate_J_star(const BrownianSpec& spec, const NetworkModel& model, const JStarOptions& options) {
  const auto limits = limit_rates(model);
  const auto params = workload_parameters(spec, limits.mu);
  const Vector& c = model.holding_costs();
  const double gamma = model.discount();
  const double rate = lp_value(1.0, c, limits.mu);
  if (options.replications < 2) throw std::invalid_argument("J* needs at least 2 replications");

  const std::size_t checkpoints = static_cast<std::size_t>(std::max(1.0, std::floor(options.horizon)));
  std::vector<double> samples(options.replications, 0.0);
  std::vector<std::vector<double>> sups(options.replications, std::vector<double>(checkpoints, 0.0));
  for_each_replication(options.replications, options.threads, [&](std::size_t r) {
    NeumaierSum integral;
    double prev_value = 0.0;
    double prev_t = 0.0;
    double running_sup = 0.0;
    auto& sup_row = sups[r];
    walk_workload_star(params, options.dt, options.horizon, options.seed, r, options.reflection,
                       [&](std::size_t step, double t, double w) {
                         const double value = std::exp(-gamma * t) * rate * w;
                         if (step > 0) integral.add(0.5 * (value + prev_value) * (t - prev_t));
                         prev_value = value;
                         prev_t = t;
                         running_sup = std::max(running_sup, w);
                         const auto j = static_cast<std::size_t>(std::max(0.0, std::ceil(t - 1e-12) - 1.0));
                         if (j < checkpoints) sup_row[j] = std::max(sup_row[j], running_sup);
                       });
    // Checkpoints without a grid point inherit the running sup.
    for (std::size_t j = 1; j < checkpoints; ++j) sup_row[j] = std::max(sup_row[j], sup_row[j - 1]);
    samples[r] = integral.value();
  });

  JStarEstimate out;
  out.dt = options.dt;
  out.workload = params;
  out.cost_rate = rate;
  auto& e = out.estimate;
  e.policy = "BCP";
  e.n = 0;
  e.nu = model.regime().nu;
  e.alpha = model.regime().alpha;
  e.replications = samples.size();
  e.horizon = options.horizon;
  const auto s = summarize(samples);
  e.mean = s.mean;
  e.std_error = s.std_error;
  e.ci_low = s.ci_low;
  e.ci_high = s.ci_high;
  double growth = 0.0;
  for (std::size_t j = 0; j < checkpoints; ++j) {
    std::vector<double> column;
    column.reserve(sups.size());
    for (const auto& row : sups) column.push_back(row[j]);
    growth = std::max(growth, summarize(column).mean / (static_cast<double>(j) + 2.0));
  }
  e.growth_constant = growth;
  e.truncation_bound = truncation_bound(gamma, options.horizon, growth, rate);
  e.samples = std::move(samples);
  return out;
}

struct BCPSolution {
  BrownianSpec spec;
  WorkloadParameters workload;
  PriorityOrder order;
  JStarEstimate j_star;
};

inline BCPSolution solve_bcp(const NetworkModel& model, const CovarianceMatrix& lambda_cov,
                             const HeavyTrafficReport& report, const JStarOptions& options) {
  BCPSolution out;
  out.spec = brownian_spec(model, lambda_cov, report);
  out.workload = workload_parameters(out.spec, report.mu_star);
  out.order = cmu_star_ordering(model.holding_costs(), report.mu_star);
  out.j_star = estimate_J_star(out.spec, model, options);
  return out;
}

}  // namespace mmq
