#pragma once

// Phi_i(t) = n^{-1/2} int_0^{nt} (f_i(Y_s) - f*_i) dT_i(s), integrated exactly over
// the event partition (environment and allocation are constant between records).

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mmq/model.hpp"
#include "mmq/simulator.hpp"
#include "mmq/trace.hpp"

namespace mmq {

struct PhiPath {
  std::size_t classes = 0;
  std::vector<double> times;   // scaled
  std::vector<double> values;  // row-major
  double value(std::size_t k, std::size_t i) const { return values[k * classes + i]; }
};

// Streams Phi over explicit-engine events and tracks sup_{t <= limit} max_i |Phi_i(t)|.
class PhiAccumulator {
 public:
  PhiAccumulator(const RateFunction& f, const StationaryDistribution& pi, std::uint64_t n, double limit)
      : centered_(f.values()),
        cutoff_(static_cast<double>(n) * limit),
        scale_(1.0 / std::sqrt(static_cast<double>(n))),
        sums_(f.classes()),
        per_class_sup_(f.classes(), 0.0) {
    const Vector mean = f.average(pi);
    for (Eigen::Index i = 0; i < centered_.cols(); ++i) centered_.col(i).array() -= mean(i);
  }

  void on_event(const EventView& e) {
    if (e.alloc.empty()) throw std::invalid_argument("Phi needs allocation data (explicit engine)");
    if (started_ && last_time_ < cutoff_) {
      const double end = std::min(e.time, cutoff_);
      const double dt = end - last_time_;
      for (std::size_t i = 0; i < sums_.size(); ++i) {
        if (last_alloc_[i] != 0.0) {
          sums_[i].add(centered_(last_env_, static_cast<Eigen::Index>(i)) * last_alloc_[i] * dt);
        }
      }
      observe();
    } else if (!started_) {
      observe();
    }
    started_ = true;
    last_time_ = e.time;
    last_env_ = e.env;
    last_alloc_.assign(e.alloc.begin(), e.alloc.end());
  }

  double current(std::size_t i) const { return sums_[i].value() * scale_; }
  double sup() const { return sup_; }
  const std::vector<double>& per_class_sup() const { return per_class_sup_; }

 private:
  void observe() {
    for (std::size_t i = 0; i < sums_.size(); ++i) {
      const double v = std::abs(current(i));
      per_class_sup_[i] = std::max(per_class_sup_[i], v);
      sup_ = std::max(sup_, v);
    }
  }

  Matrix centered_;
  double cutoff_;
  double scale_;
  std::vector<NeumaierSum> sums_;
  std::vector<double> per_class_sup_;
  double sup_ = 0.0;
  bool started_ = false;
  double last_time_ = 0.0;
  Eigen::Index last_env_ = 0;
  std::vector<double> last_alloc_;
};

// Phi on the trace's record grid, with f^* = pi^n(f).
inline PhiPath ergodic_phi(const PathTrace& trace, const RateFunction& f, const NetworkModel& model) {
  if (!trace.occupation_exact) throw std::invalid_argument("Phi needs a trace with exact environment occupation");
  if (std::abs(trace.regime.nu - model.regime().nu) > kRegimeTolerance ||
      std::abs(trace.regime.alpha - model.regime().alpha) > kRegimeTolerance) {
    throw std::invalid_argument("trace and model regimes differ");
  }
  if (f.states() != model.states() || f.classes() != trace.classes) {
    throw std::invalid_argument("rate function dimensions do not match the trace");
  }
  const auto pi = model.stationary(trace.n);
  PhiAccumulator acc(f, pi, trace.n, std::numeric_limits<double>::infinity());
  PhiPath out;
  out.classes = trace.classes;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    acc.on_event(trace.view(k));
    out.times.push_back(trace.times[k] / static_cast<double>(trace.n));
    for (std::size_t i = 0; i < trace.classes; ++i) out.values.push_back(acc.current(i));
  }
  return out;
}

}  // namespace mmq
