#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "cs/operators.hpp"
#include "cs/rng.hpp"

using namespace cs;

namespace {

CVec random_cvec(int n, uint64_t seed) {
  Rng rng(seed);
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.cnormal();
  return v;
}

// independently coded base unitaries for the dense oracle
CMat naive_dft(int n) {
  CMat w(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      w(k, j) = std::polar(1.0 / std::sqrt(static_cast<double>(n)),
                           -2.0 * M_PI * k * j / n);
  return w;
}

CMat naive_dct(int n) {
  CMat w(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      double c = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      w(k, j) = c * std::cos(M_PI * (j + 0.5) * k / n);
    }
  return w;
}

// assemble the block matrix directly from the realization state
CMat oracle_matrix(const MeasurementOperator& op) {
  const EnsembleSpec& s = op.spec();
  CMat a = CMat::Zero(op.m_bar(), op.n_bar());
  int row_off = 0;
  for (int q = 0; q < s.l_r; ++q) {
    int col_off = 0;
    for (int p = 0; p < s.l_c; ++p) {
      if (s.gains[q][p] > 0) {
        CMat base;
        switch (s.base_transform) {
          case BaseTransform::DFT: base = naive_dft(s.base_n); break;
          case BaseTransform::DCT: base = naive_dct(s.base_n); break;
          case BaseTransform::HaarRandom: base = op.haar_base(q, p); break;
        }
        const auto& rp = op.row_perm(q, p);
        const auto& cp = op.col_perm(q, p);
        double g = std::sqrt(s.gains[q][p]);
        for (int i = 0; i < s.m_q(q); ++i)
          for (int j = 0; j < s.n_p(p); ++j)
            a(row_off + i, col_off + j) = g * base(rp[i], cp[j]);
      }
      col_off += s.n_p(p);
    }
    row_off += s.m_q(q);
  }
  return a;
}

EnsembleSpec grid_spec(BaseTransform base) {
  EnsembleSpec s;
  s.base_n = 64;
  s.l_r = 2;
  s.l_c = 2;
  s.nu = {0.5, 0.25};
  s.mu = {0.75, 0.5};
  s.gains = uniform_gain_grid(s.nu, s.mu);
  s.gains[1][0] = 0.0;  // exercise a zero block
  s.base_transform = base;
  s.field = base == BaseTransform::DCT ? Field::Real : Field::Complex;
  return s;
}

}  // namespace

TEST_CASE("Type-A rows are orthonormal: A A^H = I") {
  MeasurementOperator op(type_a_spec(256, 0.5), 1);
  CMat a = op.materialize();
  CHECK((a * a.adjoint() - CMat::Identity(128, 128)).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("Type-B gain 1/mu meets the power constraint exactly") {
  MeasurementOperator op(type_b_spec(256, 0.75, 0.375), 2);
  CMat a = op.materialize();
  double tr = (a * a.adjoint()).trace().real();
  CHECK(tr == doctest::Approx(op.m_bar()).epsilon(1e-12));
}

TEST_CASE("uniform gain meets the power constraint for full-column grids") {
  // every block has mu_p = 1, so the selected rows keep unit norm and the
  // trace is exact, not just in expectation
  EnsembleSpec s;
  s.base_n = 64;
  s.l_r = 2;
  s.l_c = 3;
  s.nu = {0.5, 0.25};
  s.mu = {1.0, 1.0, 1.0};
  s.gains = uniform_gain_grid(s.nu, s.mu);
  MeasurementOperator op(s, 3);
  CMat a = op.materialize();
  CHECK((a * a.adjoint()).trace().real() ==
        doctest::Approx(op.m_bar()).epsilon(1e-10));
}

TEST_CASE("Gaussian baseline trace concentrates at M") {
  MeasurementOperator op(gaussian_spec(512, 1024), 4);
  double tr = (op.dense() * op.dense().adjoint()).trace().real();
  CHECK(tr / op.m_bar() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("apply matches the independently assembled dense matrix") {
  for (BaseTransform base :
       {BaseTransform::DFT, BaseTransform::DCT, BaseTransform::HaarRandom}) {
    CAPTURE(static_cast<int>(base));
    MeasurementOperator op(grid_spec(base), 5);
    CMat oracle = oracle_matrix(op);
    CMat mat = op.materialize();
    CHECK((mat - oracle).cwiseAbs().maxCoeff() < 1e-12);
    CVec x = random_cvec(op.n_bar(), 6);
    CHECK((op.apply(x) - oracle * x).norm() / (oracle * x).norm() < 1e-10);
    CVec y = random_cvec(op.m_bar(), 7);
    CHECK((op.adjoint(y) - oracle.adjoint() * y).norm() /
              (oracle.adjoint() * y).norm() <
          1e-10);
  }
}

TEST_CASE("apply basics") {
  MeasurementOperator op(type_b_spec(64, 0.75, 0.5), 8);
  CHECK(op.apply(CVec::Zero(op.n_bar())).norm() == 0.0);
  CMat mat = op.materialize();
  CVec e = CVec::Zero(op.n_bar());
  e[5] = 1.0;
  CHECK((op.apply(e) - mat.col(5)).norm() < 1e-12);
  CHECK_THROWS_AS(op.apply(CVec::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(op.adjoint(CVec::Zero(3)), std::invalid_argument);
}

TEST_CASE("linearity and adjoint identity") {
  for (BaseTransform base :
       {BaseTransform::DFT, BaseTransform::DCT, BaseTransform::HaarRandom}) {
    MeasurementOperator op(grid_spec(base), 9);
    CVec x = random_cvec(op.n_bar(), 10), z = random_cvec(op.n_bar(), 11);
    cdouble al(0.7, -0.2), be(-1.3, 0.4);
    CVec lhs = op.apply(al * x + be * z);
    CVec rhs = al * op.apply(x) + be * op.apply(z);
    CHECK((lhs - rhs).norm() / rhs.norm() < 1e-12);
    for (int k = 0; k < 100; ++k) {
      CVec xx = random_cvec(op.n_bar(), 100 + k);
      CVec yy = random_cvec(op.m_bar(), 200 + k);
      cdouble a1 = yy.dot(op.apply(xx));
      cdouble a2 = op.adjoint(yy).dot(xx);
      CHECK(std::abs(a1 - a2) / std::abs(a1) < 1e-10);
    }
  }
}

TEST_CASE("full-column single-row-block operators satisfy A A^H = I") {
  EnsembleSpec s;
  s.base_n = 128;
  s.nu = {0.5};
  s.mu = {1.0};
  s.gains = {{1.0}};
  MeasurementOperator op(s, 12);
  CVec y = random_cvec(op.m_bar(), 13);
  CHECK((op.apply(op.adjoint(y)) - y).norm() / y.norm() < 1e-12);
}

TEST_CASE("operator_norm_sq") {
  MeasurementOperator ta(type_a_spec(256, 0.5), 14);
  CHECK(ta.operator_norm_sq(1e-6) == doctest::Approx(1.0).epsilon(1e-5));

  MeasurementOperator g(gaussian_spec(128, 256), 15);
  Eigen::SelfAdjointEigenSolver<CMat> es(g.dense() * g.dense().adjoint());
  CHECK(g.operator_norm_sq(1e-8) ==
        doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-6));
}

TEST_CASE("rebuilding with the same seed is bit-identical") {
  EnsembleSpec s = grid_spec(BaseTransform::DFT);
  MeasurementOperator a(s, 16), b(s, 16), c(s, 17);
  CHECK(a.row_perm(0, 0) == b.row_perm(0, 0));
  CHECK(a.col_perm(1, 1) == b.col_perm(1, 1));
  CHECK((a.materialize() - b.materialize()).norm() == 0.0);
  CHECK((a.materialize() - c.materialize()).norm() > 0.0);
}

TEST_CASE("spec validation") {
  EnsembleSpec s = type_b_spec(100, 0.75, 0.375);  // 0.375*100 not integral
  CHECK_THROWS_AS(MeasurementOperator(s, 1), std::invalid_argument);
  EnsembleSpec d = type_b_spec(64, 0.75, 0.5);
  d.field = Field::Real;  // DFT base needs complex
  CHECK_THROWS_AS(MeasurementOperator(d, 1), std::invalid_argument);
  EnsembleSpec big = type_b_spec(1 << 14, 0.75, 0.5);
  MeasurementOperator op(big, 1);
  CHECK_THROWS_AS(op.materialize(), std::invalid_argument);
}

TEST_CASE("fast apply beats a direct dense multiply at N = 2^14") {
  const int n = 1 << 14;
  MeasurementOperator op(type_b_spec(n, 0.75, 0.5), 18);
  CVec x = random_cvec(op.n_bar(), 19);
  op.apply(x);  // warm the plan cache
  auto t0 = std::chrono::steady_clock::now();
  const int reps = 10;
  for (int r = 0; r < reps; ++r) op.apply(x);
  double t_fast =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count() /
      reps;

  // direct O(N^2) transform timed on a slice of rows and scaled up
  const int rows = 64;
  CVec z = random_cvec(n, 20);
  t0 = std::chrono::steady_clock::now();
  cdouble sink = 0;
  for (int k = 0; k < rows; ++k) {
    cdouble acc = 0;
    for (int j = 0; j < n; ++j)
      acc += std::polar(1.0, -2.0 * M_PI * k * j / n) * z[j];
    sink += acc;
  }
  double t_dense =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count() *
      (static_cast<double>(n) / rows);
  CAPTURE(t_fast);
  CAPTURE(t_dense);
  CHECK(std::abs(sink) >= 0.0);
  CHECK(t_dense > 10 * t_fast);
}
