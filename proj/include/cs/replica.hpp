#pragma once

#include <vector>

#include "cs/common.hpp"

namespace cs {

// Gaussian upper-tail probability
double q_function(double x);

// scalar MSE kernels of the asymptotic analysis (complex and real fields)
double g_c(double zeta);
double g_c_prime(double zeta);
double g_r(double zeta);
double g_r_prime(double zeta);

struct ReplicaSpec {
  int l_r = 1, l_c = 1;
  std::vector<double> nu, mu;
  std::vector<std::vector<double>> gains;
  double lambda = 0.1;
  double sigma0_sq = 1e-2;
  double rho_x = 0.15;
  Field field = Field::Complex;

  double mu_tot() const;
  double nu_tot() const;
  double alpha() const { return nu_tot() / mu_tot(); }
  void validate() const;
};

struct ReplicaSolution {
  std::vector<double> m, Q, chi, m_hat, chi_hat, mse_p;  // per column block p
  std::vector<double> gamma_star, delta;                 // l_r x l_c row-major
  double total_mse = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;

  double total_mse_db() const { return to_db(total_mse); }
};

// Fixed point of the full block-structured system.  Damped iteration with a
// Newton fallback in log-space (the plain iteration is not contractive
// everywhere).
ReplicaSolution solve_general(const ReplicaSpec& spec);

// Closed-form single-block solver (rows and columns selected from one base).
ReplicaSolution solve_type_b(double alpha, double mu, double nu, double R,
                             double lambda, double sigma0_sq, double rho_x,
                             Field field = Field::Complex);

enum class TypeARMode { PowerNorm, LegacyScale };  // R=1 vs R=1/alpha

ReplicaSolution solve_type_a(double alpha, TypeARMode mode, double lambda,
                             double sigma0_sq, double rho_x,
                             Field field = Field::Complex);

// Equivalent scalar channel moments for one column block:
//   m_p = mu_p rho_x g'(m_hat^2 + chi_hat)
//   Q_p = mu_p [(1-rho_x) g(chi_hat) + rho_x g(m_hat^2 + chi_hat)] / m_hat^2
//   mse_p = (mu_p rho_x - 2 m_p + Q_p) / mu_tot
void scalar_channel_mse(double m_hat, double chi_hat, double rho_x, double mu_p,
                        double mu_tot, Field field, double* m_p, double* Q_p,
                        double* mse_p);

}  // namespace cs
