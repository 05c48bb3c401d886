#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cs/lasso.hpp"
#include "cs/model.hpp"
#include "cs/rng.hpp"

using namespace cs;

namespace {

// independently coded cyclic coordinate descent on the dense matrix
CVec cd_solve(const CMat& a, const CVec& y, double lambda, int sweeps) {
  CVec x = CVec::Zero(a.cols());
  CVec r = y;
  for (int s = 0; s < sweeps; ++s) {
    for (int i = 0; i < a.cols(); ++i) {
      double aii = a.col(i).squaredNorm();
      cdouble ci = a.col(i).dot(r) + aii * x[i];
      cdouble xi = soft_threshold(ci / aii, lambda / (2.0 * aii));
      r += a.col(i) * (x[i] - xi);
      x[i] = xi;
    }
  }
  return x;
}

double kkt_violation(const CMat& a, const CVec& y, const CVec& x,
                     double lambda) {
  CVec g = (2.0 / lambda) * (a.adjoint() * (a * x - y));
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double v = x[i] != cdouble(0.0) ? std::abs(g[i] + x[i] / std::abs(x[i]))
                                    : std::max(0.0, std::abs(g[i]) - 1.0);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace

TEST_CASE("soft_threshold") {
  CHECK(std::abs(soft_threshold(cdouble(3.0, 4.0), 1.0) - cdouble(2.4, 3.2)) <
        1e-15);
  CHECK(soft_threshold(cdouble(0.5, 0.0), 1.0) == cdouble(0.0));
  CHECK(soft_threshold(cdouble(-2.0, 0.0), 0.5) == cdouble(-1.5, 0.0));
  CHECK(soft_threshold(cdouble(0.0, 0.0), 1.0) == cdouble(0.0));
  CHECK(soft_threshold(cdouble(1.0, -1.0), 0.0) == cdouble(1.0, -1.0));
  cdouble z = soft_threshold(cdouble(0.0, 2.0), 0.5);
  CHECK(std::abs(z - cdouble(0.0, 1.5)) < 1e-15);
}

TEST_CASE("objective matches a direct dense evaluation") {
  MeasurementOperator op(gaussian_spec(12, 20), 1);
  Rng rng(2);
  CVec x(20), y(12);
  for (auto& v : x) v = rng.cnormal();
  for (auto& v : y) v = rng.cnormal();
  double lambda = 0.3;
  double direct =
      (y - op.dense() * x).squaredNorm() / lambda + x.cwiseAbs().sum();
  CHECK(objective(y, op, x, lambda) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("large lambda drives the solution to exactly zero") {
  MeasurementOperator op(gaussian_spec(8, 16), 3);
  Rng rng(4);
  CVec y(8);
  for (auto& v : y) v = rng.cnormal();
  // zero is optimal iff (2/lambda) ||A^H y||_inf <= 1
  double lambda = 2.5 * (op.dense().adjoint() * y).cwiseAbs().maxCoeff();
  LassoConfig cfg;
  cfg.lambda = lambda;
  LassoResult res = solve(y, op, cfg);
  CHECK(res.converged);
  CHECK(res.x_hat.norm() == 0.0);
}

TEST_CASE("matches coordinate descent on small dense instances") {
  for (int trial = 0; trial < 20; ++trial) {
    MeasurementOperator op(gaussian_spec(8, 16), 100 + trial);
    Rng rng(200 + trial);
    ProblemInstance inst = generate_instance(op, {0.25, Field::Complex}, 0.1,
                                             rng);
    LassoConfig cfg;
    cfg.lambda = 0.2;
    cfg.rel_tol = 1e-13;
    cfg.max_iters = 200000;
    LassoResult res = solve(inst.y, op, cfg);
    CHECK(res.converged);
    CVec xcd = cd_solve(op.dense(), inst.y, cfg.lambda, 4000);
    CHECK((res.x_hat - xcd).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(kkt_violation(op.dense(), inst.y, res.x_hat, cfg.lambda) < 1e-5);
  }
}

TEST_CASE("backtracking agrees with the fixed step") {
  MeasurementOperator op(gaussian_spec(8, 16), 5);
  Rng rng(6);
  ProblemInstance inst = generate_instance(op, {0.25, Field::Complex}, 0.1,
                                           rng);
  LassoConfig cfg;
  cfg.lambda = 0.2;
  cfg.rel_tol = 1e-13;
  cfg.max_iters = 200000;
  LassoResult fixed = solve(inst.y, op, cfg);
  cfg.step_rule = StepRule::Backtracking;
  LassoResult bt = solve(inst.y, op, cfg);
  CHECK(bt.converged);
  CHECK((fixed.x_hat - bt.x_hat).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("objective decreases monotonically") {
  MeasurementOperator op(type_b_spec(256, 0.75, 0.375), 7);
  Rng rng(8);
  ProblemInstance inst = generate_instance(op, {0.15, Field::Complex}, 0.1,
                                           rng);
  for (StepRule rule : {StepRule::FixedSafe, StepRule::Backtracking}) {
    LassoConfig cfg;
    cfg.lambda = 0.1;
    cfg.rel_tol = 1e-10;
    cfg.step_rule = rule;
    cfg.track_objective = true;
    LassoResult res = solve(inst.y, op, cfg);
    CHECK(res.converged);
    REQUIRE(res.objective_trace.size() > 2);
    for (size_t k = 1; k < res.objective_trace.size(); ++k)
      CHECK(res.objective_trace[k] <=
            res.objective_trace[k - 1] + 1e-12 * res.objective_trace[0]);
    CHECK(res.final_objective ==
          doctest::Approx(res.objective_trace.back()).epsilon(1e-12));
  }
}

TEST_CASE("real mode on a DCT operator matches the complex solver") {
  EnsembleSpec spec = type_b_spec(256, 0.75, 0.375, BaseTransform::DCT);
  spec.field = Field::Real;
  MeasurementOperator op(spec, 9);
  Rng rng(10);
  ProblemInstance inst = generate_instance(op, {0.15, Field::Real}, 0.1, rng);
  LassoConfig cfg;
  cfg.lambda = 0.1;
  cfg.rel_tol = 1e-12;
  cfg.field = Field::Real;
  LassoResult re = solve(inst.y, op, cfg);
  EnsembleSpec cspec = spec;
  cspec.field = Field::Complex;
  MeasurementOperator cop(cspec, 9);  // same seed, same realization
  cfg.field = Field::Complex;
  LassoResult cx = solve(inst.y, cop, cfg);
  CHECK(re.converged);
  CHECK(re.x_hat.imag().norm() == 0.0);
  CHECK((re.x_hat - cx.x_hat).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("solution is invariant to re-ordering the row blocks") {
  EnsembleSpec s;
  s.base_n = 128;
  s.l_r = 2;
  s.l_c = 2;
  s.nu = {0.5, 0.25};
  s.mu = {0.75, 0.5};
  s.gains = uniform_gain_grid(s.nu, s.mu);
  MeasurementOperator op(s, 11);

  EnsembleSpec t = s;
  std::swap(t.nu[0], t.nu[1]);
  std::swap(t.gains[0], t.gains[1]);
  // reuse the realization of op with the row blocks swapped
  MeasurementOperator swapped(
      t, 11, [&](int q, int p) { return uint64_t((1 - q) * s.l_c + p); });

  Rng rng(12);
  ProblemInstance inst = generate_instance(op, {0.15, Field::Complex}, 0.05,
                                           rng);
  int m0 = op.spec().m_q(0);
  CVec y2(op.m_bar());
  y2 << inst.y.tail(op.m_bar() - m0), inst.y.head(m0);
  CHECK((swapped.apply(inst.x0).head(op.m_bar() - m0) -
         op.apply(inst.x0).tail(op.m_bar() - m0))
            .norm() < 1e-14);

  LassoConfig cfg;
  cfg.lambda = 0.1;
  cfg.rel_tol = 1e-12;
  LassoResult a = solve(inst.y, op, cfg);
  LassoResult b = solve(y2, swapped, cfg);
  CHECK(a.converged);
  CHECK((a.x_hat - b.x_hat).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("empirical_mse") {
  CVec x0(4), xh(4);
  x0 << 1.0, 0.0, cdouble(0, 1), 2.0;
  xh << 1.0, 0.0, cdouble(0, 1), 0.0;
  CHECK(empirical_mse(x0, xh) == doctest::Approx(1.0).epsilon(1e-15));
}
