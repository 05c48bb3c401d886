#include "cs/operators.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "cs/rng.hpp"

namespace cs {

namespace {

// FFTW plan creation is not thread-safe; execution via the new-array
// interface is.  Plans are made with FFTW_UNALIGNED on scratch buffers so
// they can run in-place on any caller array.
struct PlanCache {
  std::mutex mtx;
  std::map<int, fftw_plan> dft_fwd, dft_bwd, dct2, dct3;

  fftw_plan get(std::map<int, fftw_plan>& table, int n, bool r2r,
                int kind_or_sign) {
    std::lock_guard<std::mutex> lock(mtx);
    auto it = table.find(n);
    if (it != table.end()) return it->second;
    fftw_plan plan;
    if (r2r) {
      double* buf = fftw_alloc_real(n);
      plan = fftw_plan_r2r_1d(n, buf, buf, static_cast<fftw_r2r_kind>(kind_or_sign),
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
      fftw_free(buf);
    } else {
      fftw_complex* buf = fftw_alloc_complex(n);
      plan = fftw_plan_dft_1d(n, buf, buf, kind_or_sign,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
      fftw_free(buf);
    }
    table[n] = plan;
    return plan;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

// z <- W z with W the unitary DFT
void dft_unitary(CVec& z, bool adjoint) {
  int n = static_cast<int>(z.size());
  auto& tab = adjoint ? cache().dft_bwd : cache().dft_fwd;
  fftw_plan plan = cache().get(tab, n, false,
                               adjoint ? FFTW_BACKWARD : FFTW_FORWARD);
  auto* buf = reinterpret_cast<fftw_complex*>(z.data());
  fftw_execute_dft(plan, buf, buf);
  z *= 1.0 / std::sqrt(static_cast<double>(n));
}

// one real channel of the orthonormal DCT-II (or its transpose)
void dct_unitary_real(double* v, int n, bool adjoint) {
  double s = 1.0 / std::sqrt(2.0 * n);
  if (adjoint) {
    v[0] *= 1.0 / std::sqrt(static_cast<double>(n));
    for (int k = 1; k < n; ++k) v[k] *= s;
    fftw_plan plan = cache().get(cache().dct3, n, true, FFTW_REDFT01);
    fftw_execute_r2r(plan, v, v);
  } else {
    fftw_plan plan = cache().get(cache().dct2, n, true, FFTW_REDFT10);
    fftw_execute_r2r(plan, v, v);
    v[0] *= 0.5 / std::sqrt(static_cast<double>(n));
    for (int k = 1; k < n; ++k) v[k] *= s;
  }
}

void dct_unitary(CVec& z, bool adjoint) {
  int n = static_cast<int>(z.size());
  std::vector<double> re(n), im(n);
  for (int i = 0; i < n; ++i) {
    re[i] = z[i].real();
    im[i] = z[i].imag();
  }
  dct_unitary_real(re.data(), n, adjoint);
  dct_unitary_real(im.data(), n, adjoint);
  for (int i = 0; i < n; ++i) z[i] = cdouble(re[i], im[i]);
}

CMat sample_haar_unitary(int n, Field field, Rng& rng) {
  CMat g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      g(i, j) = field == Field::Complex ? rng.cnormal()
                                        : cdouble(rng.normal(), 0.0);
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ();
  CMat r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    cdouble d = r(j, j);
    double a = std::abs(d);
    q.col(j) *= a > 0 ? d / a : cdouble(1.0, 0.0);
  }
  return q;
}

std::vector<int> sample_permutation(int n, Rng& rng) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(p[i], p[static_cast<int>(rng.below(i + 1))]);
  return p;
}

int checked_count(double rate, int n, const char* what) {
  double exact = rate * n;
  int r = static_cast<int>(std::lround(exact));
  if (std::abs(exact - r) > 1e-9)
    throw std::invalid_argument(std::string(what) +
                                " * base_n is not an integer");
  return r;
}

}  // namespace

int EnsembleSpec::m_q(int q) const { return checked_count(nu.at(q), base_n, "nu"); }
int EnsembleSpec::n_p(int p) const { return checked_count(mu.at(p), base_n, "mu"); }

int EnsembleSpec::m_bar() const {
  int m = 0;
  for (int q = 0; q < l_r; ++q) m += m_q(q);
  return m;
}

int EnsembleSpec::n_bar() const {
  int n = 0;
  for (int p = 0; p < l_c; ++p) n += n_p(p);
  return n;
}

void EnsembleSpec::validate() const {
  if (base_n < 1) throw std::invalid_argument("base_n must be >= 1");
  if (l_r < 1 || l_c < 1) throw std::invalid_argument("block grid must be nonempty");
  if (static_cast<int>(nu.size()) != l_r || static_cast<int>(mu.size()) != l_c)
    throw std::invalid_argument("nu/mu sizes must match the block grid");
  if (static_cast<int>(gains.size()) != l_r)
    throw std::invalid_argument("gains grid must be l_r x l_c");
  for (const auto& row : gains) {
    if (static_cast<int>(row.size()) != l_c)
      throw std::invalid_argument("gains grid must be l_r x l_c");
    for (double r : row)
      if (r < 0) throw std::invalid_argument("gains must be nonnegative");
  }
  for (double v : nu)
    if (v <= 0 || v > 1) throw std::invalid_argument("nu rates must lie in (0,1]");
  for (double v : mu)
    if (v <= 0 || v > 1) throw std::invalid_argument("mu rates must lie in (0,1]");
  for (int q = 0; q < l_r; ++q) (void)m_q(q);
  for (int p = 0; p < l_c; ++p) (void)n_p(p);
  if (base_transform == BaseTransform::DFT && field != Field::Complex)
    throw std::invalid_argument("DFT base requires the complex field");
}

double uniform_gain(const std::vector<double>& nu, const std::vector<double>& mu) {
  double nu_tot = 0, cross = 0;
  for (double v : nu) nu_tot += v;
  for (double v : nu)
    for (double u : mu) cross += v * u;
  return nu_tot / cross;
}

std::vector<std::vector<double>> uniform_gain_grid(const std::vector<double>& nu,
                                                   const std::vector<double>& mu) {
  double r = uniform_gain(nu, mu);
  return std::vector<std::vector<double>>(nu.size(),
                                          std::vector<double>(mu.size(), r));
}

EnsembleSpec type_a_spec(int base_n, double nu, double R, BaseTransform base) {
  EnsembleSpec s;
  s.base_n = base_n;
  s.nu = {nu};
  s.mu = {1.0};
  s.gains = {{R}};
  s.base_transform = base;
  s.field = base == BaseTransform::DCT ? Field::Real : Field::Complex;
  return s;
}

EnsembleSpec type_b_spec(int base_n, double mu, double nu, BaseTransform base) {
  EnsembleSpec s;
  s.base_n = base_n;
  s.nu = {nu};
  s.mu = {mu};
  s.gains = {{1.0 / mu}};
  s.base_transform = base;
  s.field = base == BaseTransform::DCT ? Field::Real : Field::Complex;
  return s;
}

EnsembleSpec gaussian_spec(int m_bar, int n_bar, Field field) {
  EnsembleSpec s;
  s.kind = OperatorKind::GaussianIID;
  s.base_n = n_bar;
  s.nu = {static_cast<double>(m_bar) / n_bar};
  s.mu = {1.0};
  s.gains = {{1.0}};
  s.field = field;
  return s;
}

long MeasurementOperator::materialize_cap = 4096L * 4096L;

MeasurementOperator::MeasurementOperator(EnsembleSpec spec, uint64_t seed,
                                         std::function<uint64_t(int, int)> block_stream)
    : spec_(std::move(spec)), seed_(seed) {
  spec_.validate();
  m_bar_ = spec_.m_bar();
  n_bar_ = spec_.n_bar();
  if (spec_.kind == OperatorKind::GaussianIID) {
    Rng rng(seed_, 0);
    double scale = 1.0 / std::sqrt(static_cast<double>(n_bar_));
    dense_.resize(m_bar_, n_bar_);
    for (int j = 0; j < n_bar_; ++j)
      for (int i = 0; i < m_bar_; ++i)
        dense_(i, j) = scale * (spec_.field == Field::Complex
                                    ? rng.cnormal()
                                    : cdouble(rng.normal(), 0.0));
    return;
  }
  blocks_.resize(spec_.l_r * spec_.l_c);
  for (int q = 0; q < spec_.l_r; ++q)
    for (int p = 0; p < spec_.l_c; ++p) {
      Block& b = blocks_[q * spec_.l_c + p];
      uint64_t stream = block_stream ? block_stream(q, p)
                                     : static_cast<uint64_t>(q) * spec_.l_c + p;
      Rng rng(seed_, stream);
      b.rperm = sample_permutation(spec_.base_n, rng);
      b.cperm = sample_permutation(spec_.base_n, rng);
      if (spec_.base_transform == BaseTransform::HaarRandom)
        b.haar = sample_haar_unitary(spec_.base_n, spec_.field, rng);
    }
}

const std::vector<int>& MeasurementOperator::row_perm(int q, int p) const {
  return block(q, p).rperm;
}
const std::vector<int>& MeasurementOperator::col_perm(int q, int p) const {
  return block(q, p).cperm;
}
const CMat& MeasurementOperator::haar_base(int q, int p) const {
  return block(q, p).haar;
}

CVec MeasurementOperator::apply(const CVec& x) const {
  if (x.size() != n_bar_) throw std::invalid_argument("apply: length mismatch");
  if (spec_.kind == OperatorKind::GaussianIID) return dense_ * x;
  int n = spec_.base_n;
  CVec y = CVec::Zero(m_bar_);
  int row_off = 0;
  for (int q = 0; q < spec_.l_r; ++q) {
    int mq = spec_.m_q(q);
    int col_off = 0;
    for (int p = 0; p < spec_.l_c; ++p) {
      int np = spec_.n_p(p);
      double R = spec_.gains[q][p];
      if (R > 0) {
        const Block& b = block(q, p);
        CVec z = CVec::Zero(n);
        for (int j = 0; j < np; ++j) z[b.cperm[j]] = x[col_off + j];
        switch (spec_.base_transform) {
          case BaseTransform::DFT: dft_unitary(z, false); break;
          case BaseTransform::DCT: dct_unitary(z, false); break;
          case BaseTransform::HaarRandom: z = b.haar * z; break;
        }
        double s = std::sqrt(R);
        for (int i = 0; i < mq; ++i) y[row_off + i] += s * z[b.rperm[i]];
      }
      col_off += np;
    }
    row_off += mq;
  }
  return y;
}

CVec MeasurementOperator::adjoint(const CVec& y) const {
  if (y.size() != m_bar_) throw std::invalid_argument("adjoint: length mismatch");
  if (spec_.kind == OperatorKind::GaussianIID) return dense_.adjoint() * y;
  int n = spec_.base_n;
  CVec x = CVec::Zero(n_bar_);
  int row_off = 0;
  for (int q = 0; q < spec_.l_r; ++q) {
    int mq = spec_.m_q(q);
    int col_off = 0;
    for (int p = 0; p < spec_.l_c; ++p) {
      int np = spec_.n_p(p);
      double R = spec_.gains[q][p];
      if (R > 0) {
        const Block& b = block(q, p);
        CVec z = CVec::Zero(n);
        for (int i = 0; i < mq; ++i) z[b.rperm[i]] = y[row_off + i];
        switch (spec_.base_transform) {
          case BaseTransform::DFT: dft_unitary(z, true); break;
          case BaseTransform::DCT: dct_unitary(z, true); break;
          case BaseTransform::HaarRandom: z = b.haar.adjoint() * z; break;
        }
        double s = std::sqrt(R);
        for (int j = 0; j < np; ++j) x[col_off + j] += s * z[b.cperm[j]];
      }
      col_off += np;
    }
    row_off += mq;
  }
  return x;
}

CMat MeasurementOperator::materialize() const {
  if (static_cast<long>(m_bar_) * n_bar_ > materialize_cap)
    throw std::invalid_argument("materialize: size cap exceeded");
  if (spec_.kind == OperatorKind::GaussianIID) return dense_;
  CMat a(m_bar_, n_bar_);
  CVec e = CVec::Zero(n_bar_);
  for (int j = 0; j < n_bar_; ++j) {
    e[j] = 1.0;
    a.col(j) = apply(e);
    e[j] = 0.0;
  }
  return a;
}

double MeasurementOperator::operator_norm_sq(double tol, bool* converged) const {
  Rng rng(0x9d2c5680u, 71);
  CVec v(n_bar_);
  for (int i = 0; i < n_bar_; ++i) v[i] = rng.cnormal();
  v /= v.norm();
  double lam = 0.0;
  bool ok = false;
  for (int it = 0; it < 2000; ++it) {
    CVec w = adjoint(apply(v));
    double lam_new = w.norm();
    if (lam_new == 0.0) {
      lam = 0.0;
      ok = true;
      break;
    }
    v = w / lam_new;
    if (std::abs(lam_new - lam) <= tol * lam_new) {
      lam = lam_new;
      ok = true;
      break;
    }
    lam = lam_new;
  }
  if (converged) *converged = ok;
  return lam;
}

}  // namespace cs
