#pragma once

// Reference models used by the tests, the acceptance suite and the shipped configs.

#include "mmq/model.hpp"

namespace mmq {

// Two classes, two environment states, pi = (1/3, 2/3), c = (20, 25), gamma = 2.
//   lambda_1(y) = 1   + 3y / (5 sqrt n)    mu_1(y) = 5/2  + 3y / sqrt n
//   lambda_2(y) = 3/2 + 3y / (5 sqrt n)    mu_2(y) = 3y/2 + 3y / sqrt n
inline NetworkModel two_class_modulated_model(ScalingRegime regime = {1.0, 0.5}) {
  Matrix q(2, 2);
  q << -2.0, 2.0, 1.0, -1.0;
  Matrix lambda_base(2, 2), lambda_slope(2, 2), mu_base(2, 2), mu_slope(2, 2);
  lambda_base << 1.0, 1.5, 1.0, 1.5;
  lambda_slope << 0.6, 0.6, 1.2, 1.2;
  mu_base << 2.5, 1.5, 2.5, 3.0;
  mu_slope << 3.0, 3.0, 6.0, 6.0;
  Vector costs(2);
  costs << 20.0, 25.0;
  return NetworkModel(GeneratorFamily(GeneratorMatrix(q)), RateFamily::affine(lambda_base, lambda_slope),
                      RateFamily::affine(mu_base, mu_slope), costs, 2.0, regime);
}

// Single class, single environment state: M/M/1 with the given rates.
inline NetworkModel single_server_model(double lambda, double mu, double cost = 1.0, double discount = 1.0) {
  Matrix q = Matrix::Zero(1, 1);
  Matrix l(1, 1), m(1, 1);
  l << lambda;
  m << mu;
  Vector c(1);
  c << cost;
  return NetworkModel(GeneratorFamily(GeneratorMatrix(q)), RateFamily::constant(l), RateFamily::constant(m), c,
                      discount, ScalingRegime{1.0, 0.5});
}

}  // namespace mmq
