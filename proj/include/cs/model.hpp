#pragma once

#include "cs/common.hpp"
#include "cs/operators.hpp"
#include "cs/rng.hpp"

namespace cs {

// Bernoulli-Gaussian prior: entries zero w.p. 1-rho_x, else standard
// (complex or real) Gaussian.
struct SignalPrior {
  double rho_x = 0.15;
  Field field = Field::Complex;
};

struct ProblemInstance {
  CVec x0;
  CVec y;
  double sigma0_sq = 0.0;
  const MeasurementOperator* op = nullptr;
};

CVec sample_signal(const SignalPrior& prior, int n, Rng& rng);

// y = A x0 + sigma0 w
ProblemInstance generate_instance(const MeasurementOperator& op,
                                  const SignalPrior& prior, double sigma0_sq,
                                  Rng& rng);

}  // namespace cs
