#include "cs/lasso.hpp"

#include <cmath>
#include <stdexcept>

namespace cs {

cdouble soft_threshold(cdouble x, double t) {
  double a = std::abs(x);
  if (a <= t) return 0.0;
  return x * ((a - t) / a);
}

namespace {

double l1_norm(const CVec& x) {
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += std::abs(x[i]);
  return s;
}

}  // namespace

double objective(const CVec& y, const MeasurementOperator& op, const CVec& x,
                 double lambda) {
  CVec r = op.apply(x) - y;
  return r.squaredNorm() / lambda + l1_norm(x);
}

LassoResult solve(const CVec& y, const MeasurementOperator& op,
                  const LassoConfig& config) {
  if (config.lambda <= 0) throw std::invalid_argument("lambda must be positive");
  if (config.rel_tol <= 0) throw std::invalid_argument("rel_tol must be positive");
  if (config.field != op.spec().field)
    throw std::invalid_argument("config field does not match operator field");

  // Power iteration can only under-estimate the top eigenvalue; the small
  // inflation keeps the fixed step on the safe side of 1/L.
  double lip = 2.0 / config.lambda * (1.02 * op.operator_norm_sq(1e-4));
  double step = 1.0 / lip;

  LassoResult res;
  res.x_hat = CVec::Zero(op.n_bar());
  CVec x = res.x_hat;
  CVec r = -y;  // A x - y at x = 0
  double f_smooth = r.squaredNorm() / config.lambda;
  double f = f_smooth;  // ||0||_1 = 0
  if (config.track_objective) res.objective_trace.push_back(f);

  for (int it = 1; it <= config.max_iters; ++it) {
    CVec grad = (2.0 / config.lambda) * op.adjoint(r);
    CVec x_new(x.size());
    CVec r_new;
    double f_smooth_new = 0.0;
    for (;;) {
      for (int i = 0; i < x.size(); ++i)
        x_new[i] = soft_threshold(x[i] - step * grad[i], step);
      r_new = op.apply(x_new) - y;
      f_smooth_new = r_new.squaredNorm() / config.lambda;
      if (config.step_rule == StepRule::FixedSafe) break;
      // sufficient decrease for the smooth part at the current step
      CVec d = x_new - x;
      double quad = f_smooth + grad.dot(d).real() + d.squaredNorm() / (2 * step);
      if (f_smooth_new <= quad + 1e-12 * std::abs(quad) || step < 1e3 / lip * 1e-12)
        break;
      step *= 0.5;
    }
    double f_new = f_smooth_new + l1_norm(x_new);
    double dx = (x_new - x).norm();
    double xs = x_new.norm();
    x.swap(x_new);
    r.swap(r_new);
    f_smooth = f_smooth_new;
    f = f_new;
    res.iterations = it;
    if (config.track_objective) res.objective_trace.push_back(f);
    if (dx <= config.rel_tol * std::max(xs, 1e-30)) {
      res.converged = true;
      break;
    }
  }
  res.x_hat = x;
  res.final_objective = f;
  return res;
}

double empirical_mse(const CVec& x0, const CVec& x_hat) {
  if (x0.size() != x_hat.size())
    throw std::invalid_argument("empirical_mse: length mismatch");
  return (x0 - x_hat).squaredNorm() / static_cast<double>(x0.size());
}

}  // namespace cs
