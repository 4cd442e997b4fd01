#pragma once

// One-sided Skorohod reflection at 0 on a sampled path.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmq {

struct SkorohodDecomposition {
  std::vector<double> z;  // reflected path, z = x + y >= 0
  std::vector<double> y;  // regulator, nondecreasing from 0
};

// y_k = max(0, -min_{j<=k} x_j), z = x + y. Where y increases, z is exactly 0.
inline SkorohodDecomposition skorohod_map(std::span<const double> x) {
  SkorohodDecomposition out;
  if (x.empty()) return out;
  if (x[0] < 0.0) throw std::invalid_argument("skorohod map needs x(0) >= 0");
  out.z.resize(x.size());
  out.y.resize(x.size());
  double y = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    y = std::max(y, -x[k]);
    out.y[k] = y;
    out.z[k] = x[k] + y;
  }
  return out;
}

// sum_k z_k (y_k - y_{k-1}); zero for an exact solution.
inline double complementarity(const SkorohodDecomposition& d) {
  double total = 0.0;
  for (std::size_t k = 1; k < d.y.size(); ++k) total += d.z[k] * (d.y[k] - d.y[k - 1]);
  return total;
}

// Checks that the candidate regulator y' gives a feasible pair (x + y' >= 0, y'
// nondecreasing from 0) and returns whether x + y' dominates the reflected path
// everywhere. Minimality of the map means this is always true.
inline bool feasible_dominance_check(std::span<const double> x, std::span<const double> candidate_y) {
  if (x.size() != candidate_y.size()) throw std::invalid_argument("candidate and path lengths differ");
  if (x.empty()) return true;
  if (candidate_y[0] != 0.0) throw std::invalid_argument("infeasible candidate: y'(0) != 0");
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k && candidate_y[k] < candidate_y[k - 1]) {
      throw std::invalid_argument("infeasible candidate: y' decreases at grid point " + std::to_string(k));
    }
    if (x[k] + candidate_y[k] < 0.0) {
      throw std::invalid_argument("infeasible candidate: x + y' < 0 at grid point " + std::to_string(k));
    }
  }
  const auto reflected = skorohod_map(x);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] + candidate_y[k] < reflected.z[k]) return false;
  }
  return true;
}

}  // namespace mmq
