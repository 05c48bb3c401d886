#pragma once

#include <vector>

#include "cs/common.hpp"
#include "cs/operators.hpp"

namespace cs {

enum class StepRule { FixedSafe, Backtracking };

struct LassoConfig {
  double lambda = 0.1;
  int max_iters = 5000;
  double rel_tol = 1e-8;
  StepRule step_rule = StepRule::FixedSafe;
  Field field = Field::Complex;
  bool track_objective = false;
};

struct LassoResult {
  CVec x_hat;
  int iterations = 0;
  double final_objective = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;
};

// prox of the (complex) l1 norm: (x/|x|)(|x| - t)_+, exactly 0 when |x| <= t
cdouble soft_threshold(cdouble x, double t);

// (1/lambda) ||y - A x||^2 + sum_i |x_i|
double objective(const CVec& y, const MeasurementOperator& op, const CVec& x,
                 double lambda);

// proximal gradient on the objective above; gradient of the smooth part is
// (2/lambda) A^H (A x - y), FixedSafe step = lambda / (2 ||A||^2)
LassoResult solve(const CVec& y, const MeasurementOperator& op,
                  const LassoConfig& config);

// ||x0 - x_hat||^2 / N
double empirical_mse(const CVec& x0, const CVec& x_hat);

}  // namespace cs
