#pragma once

// Fluid and diffusion scaled views of simulated paths, streaming sup statistics,
// and the diffusion netput decomposition of a full trace.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmq/model.hpp"
#include "mmq/simulator.hpp"
#include "mmq/skorohod.hpp"
#include "mmq/trace.hpp"

namespace mmq {

enum class ScaleKind { Fluid, Diffusion };

// Right-continuous step path in scaled time: values at times[k] hold until times[k + 1].
struct ScaledPath {
  ScaleKind kind = ScaleKind::Fluid;
  std::size_t classes = 0;
  std::uint64_t n = 1;
  double exponent = 1.0;  // space divisor is n^exponent
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<double> values;  // row-major
  std::vector<double> idle;    // empty for queue-only paths
  std::vector<double> busy;    // fluid-scaled T, row-major; empty for queue-only paths

  std::size_t size() const { return times.size(); }
  double value(std::size_t k, std::size_t i) const { return values[k * classes + i]; }

  // sup over records with time <= limit of component i (or of the l1 norm when i == classes).
  double sup(std::size_t i, double limit) const {
    double best = 0.0;
    for (std::size_t k = 0; k < size() && times[k] <= limit; ++k) {
      double v = 0.0;
      if (i == classes) {
        for (std::size_t j = 0; j < classes; ++j) v += std::abs(value(k, j));
      } else {
        v = std::abs(value(k, i));
      }
      best = std::max(best, v);
    }
    return best;
  }
};

namespace detail {

inline ScaledPath scale_queue_path(const QueuePath& path, std::uint64_t n, double exponent, ScaleKind kind) {
  ScaledPath out;
  out.kind = kind;
  out.classes = path.classes;
  out.n = n;
  out.exponent = exponent;
  out.horizon = path.horizon;
  const double space = std::pow(static_cast<double>(n), exponent);
  const double time = static_cast<double>(n);
  out.times.reserve(path.size());
  out.values.reserve(path.queues.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    out.times.push_back(path.times[k] / time);
    for (const auto q : path.queue_vector(k)) out.values.push_back(static_cast<double>(q) / space);
  }
  return out;
}

inline void check_index(const QueuePath& path, std::uint64_t n) {
  if (path.n != n) {
    throw std::invalid_argument("path was generated at n = " + std::to_string(path.n) + ", not " + std::to_string(n));
  }
}

inline void check_alpha(const QueuePath& path, double alpha) {
  if (std::abs(path.regime.alpha - alpha) > kRegimeTolerance) {
    throw std::invalid_argument("alpha " + format_double(alpha) + " is inconsistent with the regime alpha " +
                                format_double(path.regime.alpha));
  }
}

inline void add_trace_columns(ScaledPath& out, const PathTrace& trace, double space) {
  const double time = static_cast<double>(trace.n);
  out.idle.reserve(trace.size());
  out.busy.reserve(trace.busy.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out.idle.push_back(trace.idle[k] / space);
    for (const auto b : trace.busy_vector(k)) out.busy.push_back(b / time);
  }
}

}  // namespace detail

// Qbar(t) = Q(nt) / n.
inline ScaledPath fluid_scale(const QueuePath& path, std::uint64_t n) {
  detail::check_index(path, n);
  return detail::scale_queue_path(path, n, 1.0, ScaleKind::Fluid);
}

inline ScaledPath fluid_scale(const PathTrace& trace, std::uint64_t n) {
  auto out = fluid_scale(static_cast<const QueuePath&>(trace), n);
  detail::add_trace_columns(out, trace, static_cast<double>(n));
  return out;
}

// Qhat(t) = Q(nt) / n^alpha, Ihat(t) = I(nt) / n^alpha.
inline ScaledPath diffusion_scale(const QueuePath& path, std::uint64_t n, double alpha) {
  detail::check_index(path, n);
  detail::check_alpha(path, alpha);
  return detail::scale_queue_path(path, n, alpha, ScaleKind::Diffusion);
}

inline ScaledPath diffusion_scale(const PathTrace& trace, std::uint64_t n, double alpha) {
  auto out = diffusion_scale(static_cast<const QueuePath&>(trace), n, alpha);
  detail::add_trace_columns(out, trace, std::pow(static_cast<double>(n), alpha));
  return out;
}

// Sample a step path on the grid 0, delta, 2 delta, ... <= horizon. Sup statistics
// should be taken on the undecimated path.
inline ScaledPath decimate(const ScaledPath& path, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("grid spacing must be positive");
  ScaledPath out = path;
  out.times.clear();
  out.values.clear();
  out.idle.clear();
  out.busy.clear();
  const auto steps = static_cast<std::size_t>(std::floor(path.horizon / delta + 1e-9));
  std::size_t k = 0;
  for (std::size_t j = 0; j <= steps && path.size() > 0; ++j) {
    const double t = static_cast<double>(j) * delta;
    while (k + 1 < path.size() && path.times[k + 1] <= t) ++k;
    out.times.push_back(t);
    for (std::size_t i = 0; i < path.classes; ++i) out.values.push_back(path.value(k, i));
    if (!path.idle.empty()) out.idle.push_back(path.idle[k]);
    if (!path.busy.empty()) {
      for (std::size_t i = 0; i < path.classes; ++i) out.busy.push_back(path.busy[k * path.classes + i]);
    }
  }
  return out;
}

// Streaming sup over scaled t <= limit of Q_i(nt) / n^exponent, per class and for
// the l1 norm. Works on any engine's events.
class SupAccumulator {
 public:
  SupAccumulator(std::size_t classes, std::uint64_t n, double exponent, double limit)
      : cutoff_(static_cast<double>(n) * limit),
        scale_(1.0 / std::pow(static_cast<double>(n), exponent)),
        per_class_(classes, 0.0) {}

  void on_event(const EventView& e) {
    if (e.time > cutoff_) return;
    double total = 0.0;
    for (std::size_t i = 0; i < per_class_.size(); ++i) {
      const double v = static_cast<double>(e.queues[i]) * scale_;
      per_class_[i] = std::max(per_class_[i], v);
      total += v;
    }
    total_ = std::max(total_, total);
  }

  const std::vector<double>& per_class() const { return per_class_; }
  double total() const { return total_; }

 private:
  double cutoff_;
  double scale_;
  std::vector<double> per_class_;
  double total_ = 0.0;
};

struct DiffusionNetput {
  std::size_t classes = 0;
  std::uint64_t n = 1;
  double alpha = 0.5;
  Vector mu_n_star;

  std::vector<double> times;  // scaled
  // Row-major per-record K-vectors.
  std::vector<double> xhat;
  std::vector<double> etahat;
  std::vector<double> qhat;
  // xhat = arrival_noise - service_noise + arrival_env - service_env + drift
  std::vector<double> arrival_noise;  // (A - int lambda(Y)) / n^alpha
  std::vector<double> service_noise;  // (D - int mu(Y) dT) / n^alpha
  std::vector<double> arrival_env;    // int (lambda(Y) - lambda^{n,*}) / n^alpha
  std::vector<double> service_env;    // int (mu(Y) - mu^{n,*}) dT / n^alpha
  std::vector<double> drift;          // mu^{n,*} n^{1-alpha} (lambda^{n,*}/mu^{n,*} - lambda*/mu*) t
  std::vector<double> workload;       // sum_i qhat_i / mu^{n,*}_i
  std::vector<double> idle_hat;

  std::size_t size() const { return times.size(); }
  double at(const std::vector<double>& series, std::size_t k, std::size_t i) const {
    return series[k * classes + i];
  }

  // max over records and classes of |qhat - (xhat + mu^{n,*} etahat)|
  double decomposition_error() const {
    double worst = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
      for (std::size_t i = 0; i < classes; ++i) {
        const double rebuilt = at(xhat, k, i) + mu_n_star(static_cast<Eigen::Index>(i)) * at(etahat, k, i);
        worst = std::max(worst, std::abs(at(qhat, k, i) - rebuilt));
      }
    }
    return worst;
  }

  // sum_i xhat_i / mu^{n,*}_i on the record grid.
  std::vector<double> workload_netput() const {
    std::vector<double> out(size(), 0.0);
    for (std::size_t k = 0; k < size(); ++k) {
      for (std::size_t i = 0; i < classes; ++i) out[k] += at(xhat, k, i) / mu_n_star(static_cast<Eigen::Index>(i));
    }
    return out;
  }

  // max over records of |What - Gamma(sum_i xhat_i / mu^{n,*}_i)|. The map runs on
  // the record grid with left limits inserted, since x falls linearly through an
  // idle period and then jumps up at the arrival that ends it.
  double workload_identity_error() const {
    const auto x = workload_netput();
    if (x.empty()) return 0.0;
    std::vector<double> grid;
    std::vector<double> target;
    grid.reserve(2 * x.size());
    target.reserve(2 * x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k > 0) {
        // Queue jumps pass one for one into x; eta is continuous.
        grid.push_back(x[k] - (workload[k] - workload[k - 1]));
        target.push_back(workload[k - 1]);
      }
      grid.push_back(x[k]);
      target.push_back(workload[k]);
    }
    // Rounding can leave x(0) a few ulps below 0; the map needs x(0) >= 0.
    if (grid[0] < 0.0 && grid[0] > -1e-12) grid[0] = 0.0;
    const auto reflected = skorohod_map(grid);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) worst = std::max(worst, std::abs(target[k] - reflected.z[k]));
    return worst;
  }
};

inline DiffusionNetput diffusion_netput(const PathTrace& trace, const NetworkModel& model, std::uint64_t n) {
  detail::check_index(trace, n);
  if (!trace.occupation_exact) throw std::invalid_argument("diffusion netput needs exact environment occupation");
  detail::check_alpha(trace, model.regime().alpha);
  if (trace.classes != model.classes()) throw std::invalid_argument("trace and model class counts differ");

  const std::size_t k_classes = trace.classes;
  const double alpha = model.regime().alpha;
  const double nd = static_cast<double>(n);
  const double space = std::pow(nd, alpha);
  const double growth = std::pow(nd, 1.0 - alpha);
  const auto lambda = model.arrival_rates(n);
  const auto mu = model.service_rates(n);
  const auto at_n = averaged_rates(model, n);
  const auto limits = limit_rates(model);

  DiffusionNetput out;
  out.classes = k_classes;
  out.n = n;
  out.alpha = alpha;
  out.mu_n_star = at_n.mu;
  const std::size_t records = trace.size();
  for (auto* series : {&out.xhat, &out.etahat, &out.qhat, &out.arrival_noise, &out.service_noise, &out.arrival_env,
                       &out.service_env, &out.drift}) {
    series->reserve(records * k_classes);
  }

  std::vector<NeumaierSum> lambda_integral(k_classes), mu_integral(k_classes);
  for (std::size_t k = 0; k < records; ++k) {
    if (k > 0) {
      const double dt = trace.times[k] - trace.times[k - 1];
      const auto y = static_cast<std::size_t>(trace.env[k - 1]);
      const auto a = trace.alloc_vector(k - 1);
      for (std::size_t i = 0; i < k_classes; ++i) {
        lambda_integral[i].add(lambda(y, i) * dt);
        if (a[i] != 0.0) mu_integral[i].add(mu(y, i) * a[i] * dt);
      }
    }
    const double tau = trace.times[k];
    const double t = tau / nd;
    out.times.push_back(t);
    const auto q = trace.queue_vector(k);
    const auto arr = trace.arrival_vector(k);
    const auto dep = trace.departure_vector(k);
    const auto busy = trace.busy_vector(k);
    double w = 0.0;
    for (std::size_t i = 0; i < k_classes; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double lam = lambda_integral[i].value();
      const double ser = mu_integral[i].value();
      const double an = (static_cast<double>(arr[i]) - lam) / space;
      const double sn = (static_cast<double>(dep[i]) - ser) / space;
      const double ae = (lam - at_n.lambda(ii) * tau) / space;
      const double se = (ser - at_n.mu(ii) * busy[i]) / space;
      const double dr =
          at_n.mu(ii) * growth * (at_n.lambda(ii) / at_n.mu(ii) - limits.lambda(ii) / limits.mu(ii)) * t;
      const double qh = static_cast<double>(q[i]) / space;
      out.arrival_noise.push_back(an);
      out.service_noise.push_back(sn);
      out.arrival_env.push_back(ae);
      out.service_env.push_back(se);
      out.drift.push_back(dr);
      out.xhat.push_back(an - sn + ae - se + dr);
      out.etahat.push_back(growth * (limits.lambda(ii) * t / limits.mu(ii) - busy[i] / nd));
      out.qhat.push_back(qh);
      w += qh / at_n.mu(ii);
    }
    out.workload.push_back(w);
    out.idle_hat.push_back(trace.idle[k] / space);
  }
  return out;
}

}  // namespace mmq
