#include "cs/replica.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

namespace cs {

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace {

void check_zeta(double z) {
  if (!(z > 0)) throw std::invalid_argument("zeta must be positive");
}

constexpr double kZetaFloor = 1e-300;

}  // namespace

double g_c(double z) {
  check_zeta(z);
  if (z < kZetaFloor) return 0.0;
  return z * std::exp(-1.0 / (4 * z)) -
         std::sqrt(M_PI * z) * q_function(1.0 / std::sqrt(2 * z));
}

double g_c_prime(double z) {
  check_zeta(z);
  if (z < kZetaFloor) return 0.0;
  return std::exp(-1.0 / (4 * z)) -
         std::sqrt(M_PI / (4 * z)) * q_function(1.0 / std::sqrt(2 * z));
}

double g_r(double z) {
  check_zeta(z);
  if (z < kZetaFloor) return 0.0;
  return -2.0 * (std::sqrt(z / (2 * M_PI)) * std::exp(-1.0 / (2 * z)) -
                 (1 + z) * q_function(1.0 / std::sqrt(z)));
}

double g_r_prime(double z) {
  check_zeta(z);
  if (z < kZetaFloor) return 0.0;
  return 2.0 * q_function(1.0 / std::sqrt(z));
}

double ReplicaSpec::mu_tot() const {
  double s = 0;
  for (double v : mu) s += v;
  return s;
}

double ReplicaSpec::nu_tot() const {
  double s = 0;
  for (double v : nu) s += v;
  return s;
}

void ReplicaSpec::validate() const {
  if (l_r < 1 || l_c < 1) throw std::invalid_argument("block grid must be nonempty");
  if (static_cast<int>(nu.size()) != l_r || static_cast<int>(mu.size()) != l_c)
    throw std::invalid_argument("nu/mu sizes must match the block grid");
  if (static_cast<int>(gains.size()) != l_r)
    throw std::invalid_argument("gains grid must be l_r x l_c");
  for (const auto& row : gains)
    if (static_cast<int>(row.size()) != l_c)
      throw std::invalid_argument("gains grid must be l_r x l_c");
  if (lambda <= 0) throw std::invalid_argument("lambda must be positive");
  if (sigma0_sq < 0) throw std::invalid_argument("sigma0_sq must be nonnegative");
  if (rho_x < 0 || rho_x > 1) throw std::invalid_argument("rho_x must lie in [0,1]");
}

void scalar_channel_mse(double m_hat, double chi_hat, double rho_x, double mu_p,
                        double mu_tot, Field field, double* m_p, double* Q_p,
                        double* mse_p) {
  if (!(m_hat > 0) || !(chi_hat > 0))
    throw std::invalid_argument("m_hat and chi_hat must be positive");
  auto g = field == Field::Complex ? g_c : g_r;
  auto gp = field == Field::Complex ? g_c_prime : g_r_prime;
  double zs = m_hat * m_hat + chi_hat;
  double m = mu_p * rho_x * gp(zs);
  double Q = mu_p * ((1 - rho_x) * g(chi_hat) + rho_x * g(zs)) / (m_hat * m_hat);
  if (m_p) *m_p = m;
  if (Q_p) *Q_p = Q;
  if (mse_p) *mse_p = (mu_p * rho_x - 2 * m + Q) / mu_tot;
}

namespace {

struct StepOut {
  RVec chi_new, chih_new;
  std::vector<double> m, Q, m_hat, mse_p;
  std::vector<double> gamma_star, delta;  // l_r x l_c row-major
  double total_mse = 0;
  std::string err;
};

// One evaluation of the fixed-point map chi, chi_hat -> chi', chi_hat'.
// Returns false (with err set) when the state leaves the physical region.
bool step_general(const ReplicaSpec& s, const RVec& chi, const RVec& chih,
                  StepOut& out) {
  const int lr = s.l_r, lc = s.l_c;
  auto g = s.field == Field::Complex ? g_c : g_r;
  auto gp = s.field == Field::Complex ? g_c_prime : g_r_prime;
  out.err.clear();

  for (int p = 0; p < lc; ++p)
    if (!(chi[p] > 0) || !(chih[p] > 0)) {
      out.err = "nonpositive state";
      return false;
    }

  // per row-block: jointly solve Gamma*_{q,p} = (1 - Delta_{q,p})/chi_p with
  // Delta_{q,p} = nu_q (R/Gamma*) / (lambda + sum_l R/Gamma*)
  std::vector<double> gs(lr * lc), dl(lr * lc, 0.0);
  for (int q = 0; q < lr; ++q) {
    RVec gq(lc);
    for (int p = 0; p < lc; ++p) gq[p] = 1.0 / chi[p];
    bool inner_ok = false;
    for (int k = 0; k < 2000; ++k) {
      double den = s.lambda;
      for (int p = 0; p < lc; ++p)
        if (s.gains[q][p] > 0) den += s.gains[q][p] / gq[p];
      double rmax = 0;
      for (int p = 0; p < lc; ++p) {
        double d = s.gains[q][p] > 0 ? s.nu[q] * (s.gains[q][p] / gq[p]) / den : 0.0;
        double gnew = (1.0 - d) / chi[p];
        rmax = std::max(rmax, std::abs(gnew - gq[p]) / std::abs(gq[p]));
        gq[p] = 0.5 * (gnew + gq[p]);
        dl[q * lc + p] = d;
      }
      if (!(rmax < 1e30)) {
        out.err = "inner loop diverged";
        return false;
      }
      if (rmax < 1e-14) {
        inner_ok = true;
        break;
      }
    }
    if (!inner_ok) {
      out.err = "inner loop did not converge";
      return false;
    }
    // consistent (Delta, Gamma*) pair at exit
    double den = s.lambda;
    for (int p = 0; p < lc; ++p)
      if (s.gains[q][p] > 0) den += s.gains[q][p] / gq[p];
    for (int p = 0; p < lc; ++p) {
      dl[q * lc + p] =
          s.gains[q][p] > 0 ? s.nu[q] * (s.gains[q][p] / gq[p]) / den : 0.0;
      gs[q * lc + p] = gq[p];
    }
  }

  out.m_hat.assign(lc, 0.0);
  for (int p = 0; p < lc; ++p) {
    for (int q = 0; q < lr; ++q) out.m_hat[p] += dl[q * lc + p];
    out.m_hat[p] /= chi[p];
    if (!(out.m_hat[p] > 0)) {
      out.err = "nonpositive m_hat";
      return false;
    }
  }

  double mu_tot = s.mu_tot();
  out.m.assign(lc, 0.0);
  out.Q.assign(lc, 0.0);
  out.mse_p.assign(lc, 0.0);
  out.chi_new.resize(lc);
  std::vector<double> msebar(lc);  // mu_p rho - 2 m_p + Q_p, un-normalized
  for (int p = 0; p < lc; ++p) {
    double mh = out.m_hat[p], zs = mh * mh + chih[p];
    out.m[p] = s.mu[p] * s.rho_x * gp(zs);
    out.Q[p] = s.mu[p] * ((1 - s.rho_x) * g(chih[p]) + s.rho_x * g(zs)) / (mh * mh);
    msebar[p] = s.mu[p] * s.rho_x - 2 * out.m[p] + out.Q[p];
    out.mse_p[p] = msebar[p] / mu_tot;
    out.chi_new[p] =
        s.mu[p] * ((1 - s.rho_x) * gp(chih[p]) + s.rho_x * gp(zs)) / mh;
  }

  out.chih_new = RVec::Zero(lc);
  for (int q = 0; q < lr; ++q) {
    double su = 1.0;
    for (int p = 0; p < lc; ++p) {
      double d = dl[q * lc + p];
      if (d >= 0.5 - 1e-12) {
        out.err = "delta >= 1/2 at block (" + std::to_string(q) + "," +
                  std::to_string(p) + ")";
        return false;
      }
      su += d * d / (1 - 2 * d) / s.nu[q];
    }
    // Gamma'_{q,p,r} via the matrix inversion lemma (outer-product form)
    RVec v(lc);
    for (int p = 0; p < lc; ++p) {
      double d = dl[q * lc + p];
      v[p] = d * gs[q * lc + p] / (1 - 2 * d);
    }
    for (int p = 0; p < lc; ++p) {
      double acc = 0;
      for (int r = 0; r < lc; ++r) {
        double gpp = v[p] * v[r] / (s.nu[q] * su);
        if (r == p) {
          double d = dl[q * lc + p];
          gpp -= gs[q * lc + p] * gs[q * lc + p] / (1 - 2 * d);
        }
        acc += (msebar[r] - s.sigma0_sq * chi[r] / s.lambda) * gpp;
      }
      out.chih_new[p] += acc + msebar[p] / (chi[p] * chi[p]) -
                         s.sigma0_sq / s.lambda * gs[q * lc + p];
    }
  }

  out.gamma_star = gs;
  out.delta = dl;
  out.total_mse = 0;
  for (int p = 0; p < lc; ++p) out.total_mse += out.mse_p[p];
  for (int p = 0; p < lc; ++p)
    if (!std::isfinite(out.chi_new[p]) || !std::isfinite(out.chih_new[p])) {
      out.err = "non-finite update";
      return false;
    }
  return true;
}

// Closed-form single-block map (Type-A/B).
bool step_type_b(double mu, double nu, double R, double lambda, double sigma0_sq,
                 double rho_x, Field field, const RVec& chi_v, const RVec& chih_v,
                 StepOut& out) {
  out.err.clear();
  double chi = chi_v[0], chih = chih_v[0];
  if (!(chi > 0) || !(chih > 0)) {
    out.err = "nonpositive state";
    return false;
  }
  auto g = field == Field::Complex ? g_c : g_r;
  auto gp = field == Field::Complex ? g_c_prime : g_r_prime;

  double D = (lambda + R * chi) * (lambda + R * chi) - 4 * lambda * nu * R * chi;
  if (D < -1e-12) {
    out.err = "no real saddle point (negative discriminant)";
    return false;
  }
  double sq = std::sqrt(std::max(D, 0.0));
  double mh = (lambda + R * chi - sq) / (2 * lambda * chi);
  double Gs = (lambda - R * chi + sq) / (2 * lambda * chi);
  double d = 1.0 - Gs * chi;
  if (d >= 0.5 - 1e-12) {
    out.err = "delta >= 1/2 at block (0,0)";
    return false;
  }
  double Gp = (d * d * Gs * Gs) / (nu * (1 - 2 * d) * (1 - 2 * d)) /
                  (1 + d * d / (nu * (1 - 2 * d))) -
              Gs * Gs / (1 - 2 * d);
  if (!(mh > 0)) {
    out.err = "nonpositive m_hat";
    return false;
  }

  double zs = mh * mh + chih;
  double m = mu * rho_x * gp(zs);
  double Q = mu * ((1 - rho_x) * g(chih) + rho_x * g(zs)) / (mh * mh);
  double msebar = mu * rho_x - 2 * m + Q;

  out.chi_new = RVec::Constant(1, mu * ((1 - rho_x) * gp(chih) + rho_x * gp(zs)) / mh);
  out.chih_new = RVec::Constant(1, msebar * (Gp + 1.0 / (chi * chi)) -
                                       sigma0_sq / lambda * (chi * Gp + Gs));
  out.m = {m};
  out.Q = {Q};
  out.m_hat = {mh};
  out.mse_p = {msebar / mu};
  out.gamma_star = {Gs};
  out.delta = {d};
  out.total_mse = msebar / mu;
  return std::isfinite(out.chih_new[0]) && std::isfinite(out.chi_new[0]);
}

using StepFn = std::function<bool(const RVec&, const RVec&, StepOut&)>;

ReplicaSolution finish(int lc, const RVec& chi, const RVec& chih, StepFn step,
                       double residual, int iterations) {
  StepOut out;
  if (!step(chi, chih, out))
    throw std::runtime_error("replica solution rejected: " + out.err);
  ReplicaSolution sol;
  sol.chi.assign(chi.data(), chi.data() + lc);
  sol.chi_hat.assign(chih.data(), chih.data() + lc);
  sol.m = out.m;
  sol.Q = out.Q;
  sol.m_hat = out.m_hat;
  sol.mse_p = out.mse_p;
  sol.gamma_star = out.gamma_star;
  sol.delta = out.delta;
  sol.total_mse = out.total_mse;
  sol.residual = residual;
  sol.iterations = iterations;
  sol.converged = true;
  return sol;
}

// Damped fixed-point iteration with a Newton fallback on
// u = (log chi, log chi_hat); the plain iteration is not contractive
// everywhere even though a physical fixed point exists.
ReplicaSolution drive(int lc, const RVec& chi0, StepFn raw_step) {
  const int n = 2 * lc;
  double damp = 0.5;
  int halvings = 0;
  RVec chi = chi0, chih = RVec::Ones(lc);
  StepOut out;
  double prev_res = 1e300;
  int total_iters = 0;
  std::string last_err;
  long evals = 0, delta_fails = 0;
  StepFn step = [&](const RVec& c, const RVec& ch, StepOut& o) {
    bool ok = raw_step(c, ch, o);
    ++evals;
    if (!ok && o.err.rfind("delta", 0) == 0) ++delta_fails;
    return ok;
  };
  for (int it = 0; it < 3000; ++it) {
    ++total_iters;
    if (!step(chi, chih, out)) {
      last_err = out.err;
      break;
    }
    double res = 0;
    for (int p = 0; p < lc; ++p) {
      res = std::max(res, std::abs(out.chi_new[p] - chi[p]) / chi[p]);
      res = std::max(res, std::abs(out.chih_new[p] - chih[p]) / chih[p]);
    }
    if (res < 1e-12) return finish(lc, chi, chih, step, res, total_iters);
    if (res > prev_res && halvings < 4) {
      damp *= 0.5;
      ++halvings;
    }
    if (res > 1e6) break;  // clearly outside the basin, switch to Newton
    chi = damp * out.chi_new + (1 - damp) * chi;
    chih = damp * out.chih_new + (1 - damp) * chih;
    prev_res = res;
  }

  // Newton in log space over a deterministic ladder of starts
  auto residual_fn = [&](const RVec& u, RVec& f) -> bool {
    RVec c(lc), ch(lc);
    for (int p = 0; p < lc; ++p) {
      c[p] = std::exp(u[p]);
      ch[p] = std::exp(u[lc + p]);
    }
    StepOut o;
    if (!step(c, ch, o)) {
      last_err = o.err;
      return false;
    }
    for (int p = 0; p < lc; ++p) {
      if (!(o.chi_new[p] > 0) || !(o.chih_new[p] > 0)) return false;
      f[p] = std::log(o.chi_new[p]) - u[p];
      f[lc + p] = std::log(o.chih_new[p]) - u[lc + p];
    }
    return true;
  };

  std::vector<RVec> starts;
  if (chi.minCoeff() > 0 && chih.minCoeff() > 0) {  // damped end state first
    RVec u0(n);
    for (int p = 0; p < lc; ++p) {
      u0[p] = std::log(chi[p]);
      u0[lc + p] = std::log(chih[p]);
    }
    starts.push_back(u0);
  }
  for (double c0 : {-1.5, -3.0, -0.5, 0.5}) {
    RVec u0(n);
    for (int p = 0; p < lc; ++p) {
      u0[p] = c0;
      u0[lc + p] = -1.0;
    }
    starts.push_back(u0);
  }
  for (const RVec& start : starts) {
    RVec u = start;
    RVec f(n);
    if (!residual_fn(u, f)) continue;
    double lm = 1e-3;
    bool ok = true;
    for (int it = 0; it < 300 && ok; ++it) {
      ++total_iters;
      if (f.lpNorm<Eigen::Infinity>() < 1e-11) {
        RVec c(lc), ch(lc);
        for (int p = 0; p < lc; ++p) {
          c[p] = std::exp(u[p]);
          ch[p] = std::exp(u[lc + p]);
        }
        return finish(lc, c, ch, step, f.lpNorm<Eigen::Infinity>(), total_iters);
      }
      RMat jac(n, n);
      for (int j = 0; j < n; ++j) {
        double h = 1e-7 * std::max(1.0, std::abs(u[j]));
        RVec up = u;
        up[j] += h;
        RVec fp(n);
        if (!residual_fn(up, fp)) {
          ok = false;
          break;
        }
        jac.col(j) = (fp - f) / h;
      }
      if (!ok) break;
      RMat jtj = jac.transpose() * jac;
      RVec jtf = jac.transpose() * f;
      bool accepted = false;
      for (int k = 0; k < 40; ++k) {
        RMat m = jtj;
        m.diagonal().array() += lm;
        RVec d = m.ldlt().solve(-jtf);
        RVec ut = u + d;
        RVec ft(n);
        if (d.allFinite() && residual_fn(ut, ft) &&
            ft.squaredNorm() < f.squaredNorm()) {
          u = ut;
          f = ft;
          lm = std::max(lm * 0.3, 1e-12);
          accepted = true;
          break;
        }
        lm *= 10;
        if (lm > 1e12) break;
      }
      if (!accepted) break;
    }
  }

  ReplicaSolution sol;
  sol.converged = false;
  sol.residual = prev_res;
  sol.iterations = total_iters;
  sol.chi.assign(lc, 0.0);
  sol.chi_hat.assign(lc, 0.0);
  sol.m.assign(lc, 0.0);
  sol.Q.assign(lc, 0.0);
  sol.m_hat.assign(lc, 0.0);
  sol.mse_p.assign(lc, 0.0);
  sol.total_mse = std::nan("");
  // the whole state space hit the singular Gamma' denominator: surface the
  // block rather than reporting a bland non-convergence
  if (evals > 0 && delta_fails == evals)
    throw std::runtime_error("replica solver: " + last_err);
  return sol;
}

}  // namespace

ReplicaSolution solve_general(const ReplicaSpec& spec) {
  spec.validate();
  auto step = [&spec](const RVec& chi, const RVec& chih, StepOut& out) {
    return step_general(spec, chi, chih, out);
  };
  RVec chi0(spec.l_c);
  for (int p = 0; p < spec.l_c; ++p) chi0[p] = spec.mu[p];
  return drive(spec.l_c, chi0, step);
}

ReplicaSolution solve_type_b(double alpha, double mu, double nu, double R,
                             double lambda, double sigma0_sq, double rho_x,
                             Field field) {
  if (!(mu > 0 && mu <= 1) || !(nu > 0 && nu <= 1) || !(R > 0))
    throw std::invalid_argument("invalid Type-B rates");
  if (std::abs(alpha - nu / mu) > 1e-9)
    throw std::invalid_argument("alpha must equal nu/mu");
  auto step = [=](const RVec& chi, const RVec& chih, StepOut& out) {
    return step_type_b(mu, nu, R, lambda, sigma0_sq, rho_x, field, chi, chih, out);
  };
  return drive(1, RVec::Constant(1, mu), step);
}

ReplicaSolution solve_type_a(double alpha, TypeARMode mode, double lambda,
                             double sigma0_sq, double rho_x, Field field) {
  if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("invalid alpha");
  double R = mode == TypeARMode::PowerNorm ? 1.0 : 1.0 / alpha;
  return solve_type_b(alpha, 1.0, alpha, R, lambda, sigma0_sq, rho_x, field);
}

}  // namespace cs
