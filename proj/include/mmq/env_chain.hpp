#pragma once

// Finite-state environment chain: generator validation, stationary law, exact jump
// sampling, exact transition-kernel sampling, the centered Poisson equation and the
// covariance of integrated centered rates.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "mmq/errors.hpp"
#include "mmq/random.hpp"

namespace mmq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline std::string state_list(const std::vector<std::size_t>& states) {
  std::string out = "{";
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (k) out += ", ";
    out += std::to_string(states[k] + 1);
  }
  return out + "}";
}

inline std::vector<bool> reachable(const Matrix& rates, std::size_t from, bool reverse) {
  const auto size = static_cast<std::size_t>(rates.rows());
  std::vector<bool> seen(size, false);
  std::vector<std::size_t> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    const std::size_t y = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < size; ++j) {
      if (j == y || seen[j]) continue;
      const double rate = reverse ? rates(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(y))
                                  : rates(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(j));
      if (rate > 0.0) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace detail

// Entrywise checks shared by the generator type and the config loader. Throws
// ModelError naming the failing row.
inline void check_generator_entries(const Matrix& rates) {
  if (rates.rows() == 0 || rates.rows() != rates.cols()) {
    throw ModelError("generator must be a non-empty square matrix, got " + std::to_string(rates.rows()) + "x" +
                     std::to_string(rates.cols()));
  }
  for (Eigen::Index y = 0; y < rates.rows(); ++y) {
    double scale = 1.0;
    double sum = 0.0;
    for (Eigen::Index j = 0; j < rates.cols(); ++j) {
      const double q = rates(y, j);
      if (!std::isfinite(q)) {
        throw ModelError("generator row " + std::to_string(y + 1) + " has a non-finite entry");
      }
      if (j != y && q < 0.0) {
        throw ModelError("generator row " + std::to_string(y + 1) + " has negative off-diagonal entry in column " +
                         std::to_string(j + 1));
      }
      scale = std::max(scale, std::abs(q));
      sum += q;
    }
    if (rates(y, y) > 0.0) {
      throw ModelError("generator row " + std::to_string(y + 1) + " has a positive diagonal entry");
    }
    if (std::abs(sum) > 1e-12 * scale) {
      throw ModelError("generator row " + std::to_string(y + 1) + " does not sum to zero (sum = " +
                       std::to_string(sum) + ")");
    }
  }
}

// Rate matrix of a finite irreducible CTMC, in units of the unaccelerated chain.
class GeneratorMatrix {
 public:
  explicit GeneratorMatrix(Matrix rates) : rates_(std::move(rates)) {
    check_generator_entries(rates_);
    const auto forward = detail::reachable(rates_, 0, false);
    const auto backward = detail::reachable(rates_, 0, true);
    std::vector<std::size_t> missing;
    for (std::size_t y = 0; y < forward.size(); ++y) {
      if (!forward[y] || !backward[y]) missing.push_back(y);
    }
    if (!missing.empty()) {
      throw ReducibleGenerator("generator is reducible: states " + detail::state_list(missing) +
                               " do not communicate with state 1");
    }
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(rates_.rows()); }
  const Matrix& rates() const noexcept { return rates_; }
  double operator()(std::size_t y, std::size_t j) const {
    return rates_(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(j));
  }
  double exit_rate(std::size_t y) const { return -(*this)(y, y); }
  double max_exit_rate() const { return (-rates_.diagonal()).maxCoeff(); }

 private:
  Matrix rates_;
};

class StationaryDistribution {
 public:
  explicit StationaryDistribution(Vector probs) : probs_(std::move(probs)) {}

  std::size_t size() const noexcept { return static_cast<std::size_t>(probs_.size()); }
  const Vector& probs() const noexcept { return probs_; }
  double operator[](std::size_t y) const { return probs_(static_cast<Eigen::Index>(y)); }

  // pi(f) for a function on the state space.
  double expect(const Vector& f) const { return probs_.dot(f); }

 private:
  Vector probs_;
};

// L x K table of per-state, per-class rates.
class RateFunction {
 public:
  RateFunction() = default;
  explicit RateFunction(Matrix values) : values_(std::move(values)) {
    for (Eigen::Index y = 0; y < values_.rows(); ++y) {
      for (Eigen::Index i = 0; i < values_.cols(); ++i) {
        if (!std::isfinite(values_(y, i)) || values_(y, i) < 0.0) {
          throw ModelError("rate for state " + std::to_string(y + 1) + ", class " + std::to_string(i + 1) +
                           " must be finite and nonnegative");
        }
      }
    }
  }

  std::size_t states() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t classes() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  const Matrix& values() const noexcept { return values_; }
  double operator()(std::size_t y, std::size_t i) const {
    return values_(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(i));
  }
  Vector column(std::size_t i) const { return values_.col(static_cast<Eigen::Index>(i)); }

  // Per-class averages under pi.
  Vector average(const StationaryDistribution& pi) const { return values_.transpose() * pi.probs(); }

  bool strictly_positive() const { return values_.size() == 0 || values_.minCoeff() > 0.0; }
  bool state_independent() const {
    for (Eigen::Index y = 1; y < values_.rows(); ++y) {
      if (values_.row(y) != values_.row(0)) return false;
    }
    return true;
  }

 private:
  Matrix values_;
};

// Centered solution of Q h = pi(f) 1 - f, one column per class.
struct PoissonEquationSolution {
  Matrix hat;
};

struct CovarianceMatrix {
  Matrix lambda_cov;

  double min_eigenvalue() const {
    if (lambda_cov.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(lambda_cov, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }
};

inline StationaryDistribution stationary_distribution(const GeneratorMatrix& q) {
  const auto size = static_cast<Eigen::Index>(q.size());
  if (size == 1) return StationaryDistribution(Vector::Ones(1));
  Matrix system = q.rates().transpose();
  system.row(size - 1).setOnes();
  Vector rhs = Vector::Zero(size);
  rhs(size - 1) = 1.0;
  const auto lu = system.fullPivLu();
  Vector pi = lu.solve(rhs);
  pi += lu.solve(rhs - system * pi);
  for (Eigen::Index y = 0; y < size; ++y) {
    if (pi(y) < 0.0) {
      if (pi(y) < -1e-12) throw InvariantViolation("stationary solve produced a negative probability");
      pi(y) = 0.0;
    }
  }
  pi /= pi.sum();
  const double residual = (pi.transpose() * q.rates()).cwiseAbs().maxCoeff();
  if (residual > 1e-10) {
    throw InvariantViolation("stationary residual " + std::to_string(residual) + " exceeds 1e-10");
  }
  return StationaryDistribution(std::move(pi));
}

struct JumpDraw {
  double holding_time;
  std::size_t next;
};

// One jump of the chain from state y, holding time in units of the generator.
inline JumpDraw next_jump(const GeneratorMatrix& q, std::size_t y, CounterRng& rng) {
  const double exit = q.exit_rate(y);
  if (exit <= 0.0) {
    if (q.size() > 1) throw InvariantViolation("absorbing state in a chain declared irreducible");
    return {std::numeric_limits<double>::infinity(), y};
  }
  const double holding = rng.exponential(exit);
  const double target = rng.uniform() * exit;
  double cumulative = 0.0;
  std::size_t last = y;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (j == y) continue;
    const double rate = q(y, j);
    if (rate <= 0.0) continue;
    last = j;
    cumulative += rate;
    if (target < cumulative) return {holding, j};
  }
  return {holding, last};
}

inline PoissonEquationSolution solve_poisson_equation(const GeneratorMatrix& q, const RateFunction& f,
                                                      const StationaryDistribution& pi) {
  if (f.states() != q.size() || pi.size() != q.size()) {
    throw std::invalid_argument("poisson equation: state-space dimensions disagree");
  }
  const auto size = static_cast<Eigen::Index>(q.size());
  // (1 pi - Q) is invertible for irreducible Q and maps the centered solution to f - pi(f).
  const Matrix system = Vector::Ones(size) * pi.probs().transpose() - q.rates();
  const auto lu = system.fullPivLu();
  if (!lu.isInvertible()) throw InvariantViolation("poisson equation: singular augmented system");

  Matrix hat(size, static_cast<Eigen::Index>(f.classes()));
  for (std::size_t i = 0; i < f.classes(); ++i) {
    const Vector column = f.column(i);
    const Vector rhs = column - Vector::Constant(size, pi.expect(column));
    Vector h = lu.solve(rhs);
    h += lu.solve(rhs - system * h);
    hat.col(static_cast<Eigen::Index>(i)) = h;
  }
  return {std::move(hat)};
}

inline CovarianceMatrix covariance_lambda(const GeneratorMatrix& q, const RateFunction& lambda,
                                          const StationaryDistribution& pi) {
  if (lambda.states() != q.size() || pi.size() != q.size()) {
    throw std::invalid_argument("covariance: state-space dimensions disagree");
  }
  const auto hat = solve_poisson_equation(q, lambda, pi).hat;
  const Vector mean = lambda.average(pi);
  const auto classes = static_cast<Eigen::Index>(lambda.classes());
  // cross(i, j) = sum_y pi(y) (lambda_i(y) - lambda_i*) hat_j(y)
  Matrix centered = lambda.values();
  for (Eigen::Index i = 0; i < classes; ++i) centered.col(i).array() -= mean(i);
  const Matrix cross = centered.transpose() * pi.probs().asDiagonal() * hat;
  Matrix cov(classes, classes);
  for (Eigen::Index i = 0; i < classes; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      cov(i, j) = cross(i, j) + cross(j, i);
      cov(j, i) = cov(i, j);
    }
  }
  return {std::move(cov)};
}

// Exact sampler for Y(t + dt) given Y(t), for the chain with generator speed * Q.
// Uses the spectral form of exp(speed * Q * dt); falls back to Pade exponentials
// when the eigenvector basis is ill-conditioned.
class TransitionKernel {
 public:
  TransitionKernel(const GeneratorMatrix& q, double speed) : rates_(q.rates() * speed), size_(q.size()) {
    if (size_ == 1) return;
    Eigen::EigenSolver<Matrix> solver(rates_);
    if (solver.info() != Eigen::Success) {
      spectral_ = false;
      return;
    }
    const Eigen::MatrixXcd vectors = solver.eigenvectors();
    const Eigen::VectorXcd values = solver.eigenvalues();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(vectors);
    if (!lu.isInvertible() || lu.rcond() < 1e-8) {
      spectral_ = false;
      return;
    }
    const Eigen::MatrixXcd inverse = lu.inverse();
    const double error = (vectors * values.asDiagonal() * inverse - rates_.cast<std::complex<double>>())
                             .cwiseAbs()
                             .maxCoeff();
    if (error > 1e-9 * std::max(1.0, rates_.cwiseAbs().maxCoeff())) {
      spectral_ = false;
      return;
    }
    const auto n = static_cast<Eigen::Index>(size_);
    real_ = values.imag().cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, values.cwiseAbs().maxCoeff());
    eigen_ = values;
    real_eigen_ = values.real();
    coeff_.resize(size_);
    real_coeff_.resize(size_);
    for (Eigen::Index y = 0; y < n; ++y) {
      Eigen::MatrixXcd c(n, n);  // c(k, j) = V(y, k) * W(k, j)
      for (Eigen::Index k = 0; k < n; ++k) c.row(k) = vectors(y, k) * inverse.row(k);
      coeff_[static_cast<std::size_t>(y)] = c;
      real_coeff_[static_cast<std::size_t>(y)] = c.real();
    }
  }

  std::size_t size() const noexcept { return size_; }

  // Row y of exp(speed * Q * dt).
  Vector row(std::size_t y, double dt) const {
    const auto n = static_cast<Eigen::Index>(size_);
    if (size_ == 1) return Vector::Ones(1);
    if (!spectral_) {
      const Matrix p = (rates_ * dt).exp();
      return p.row(static_cast<Eigen::Index>(y)).transpose();
    }
    if (real_) {
      Vector weights(n);
      for (Eigen::Index k = 0; k < n; ++k) weights(k) = std::exp(real_eigen_(k) * dt);
      return real_coeff_[y].transpose() * weights;
    }
    Eigen::VectorXcd weights(n);
    for (Eigen::Index k = 0; k < n; ++k) weights(k) = std::exp(eigen_(k) * dt);
    return (coeff_[y].transpose() * weights).real();
  }

  std::size_t sample(std::size_t y, double dt, CounterRng& rng) const {
    if (size_ == 1) return 0;
    const double u = rng.uniform();
    if (spectral_ && real_) {
      // Allocation-free path for the simulator's inner loop.
      thread_local std::vector<double> weights;
      thread_local std::vector<double> probs;
      weights.resize(size_);
      probs.resize(size_);
      for (std::size_t k = 0; k < size_; ++k) weights[k] = std::exp(real_eigen_(static_cast<Eigen::Index>(k)) * dt);
      const Matrix& c = real_coeff_[y];
      double total = 0.0;
      for (std::size_t j = 0; j < size_; ++j) {
        double p = 0.0;
        for (std::size_t k = 0; k < size_; ++k) {
          p += c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * weights[k];
        }
        probs[j] = std::max(p, 0.0);
        total += probs[j];
      }
      return pick(probs.data(), u * total);
    }
    const Vector p = row(y, dt).cwiseMax(0.0);
    return pick(p.data(), u * p.sum());
  }

 private:
  std::size_t pick(const double* probs, double target) const {
    double cumulative = 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < size_; ++j) {
      if (probs[j] <= 0.0) continue;
      last = j;
      cumulative += probs[j];
      if (target < cumulative) return j;
    }
    return last;
  }

  Matrix rates_;
  std::size_t size_;
  bool spectral_ = true;
  bool real_ = false;
  Eigen::VectorXcd eigen_;
  Vector real_eigen_;
  std::vector<Eigen::MatrixXcd> coeff_;
  std::vector<Matrix> real_coeff_;
};

}  // namespace mmq
