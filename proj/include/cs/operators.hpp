#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cs/common.hpp"

namespace cs {

enum class OperatorKind { Structured, GaussianIID };
enum class BaseTransform { DFT, DCT, HaarRandom };

// Declarative description of a block-structured measurement matrix: an
// l_r x l_c grid of independently scrambled partial orthonormal blocks
// (or a dense i.i.d. Gaussian baseline).
struct EnsembleSpec {
  OperatorKind kind = OperatorKind::Structured;
  int base_n = 0;                         // N, base unitary size
  int l_r = 1, l_c = 1;                   // block grid
  std::vector<double> nu;                 // row selection rates, size l_r
  std::vector<double> mu;                 // column selection rates, size l_c
  std::vector<std::vector<double>> gains; // R_{q,p}, l_r x l_c, 0 = zero block
  BaseTransform base_transform = BaseTransform::DFT;
  Field field = Field::Complex;

  int m_q(int q) const;  // nu[q] * base_n, checked integral
  int n_p(int p) const;
  int m_bar() const;
  int n_bar() const;
  void validate() const;  // throws std::invalid_argument
};

// Uniform gain over nonzero blocks making tr(AA^H) = M-bar:
// R = nu_tot / sum_{q,p} nu_q mu_p.
double uniform_gain(const std::vector<double>& nu, const std::vector<double>& mu);
std::vector<std::vector<double>> uniform_gain_grid(const std::vector<double>& nu,
                                                   const std::vector<double>& mu);

// Convenience constructors for the standard ensembles.
EnsembleSpec type_a_spec(int base_n, double nu, double R = 1.0,
                         BaseTransform base = BaseTransform::DFT);
EnsembleSpec type_b_spec(int base_n, double mu, double nu,
                         BaseTransform base = BaseTransform::DFT);
EnsembleSpec gaussian_spec(int m_bar, int n_bar, Field field = Field::Complex);

class MeasurementOperator {
 public:
  // block_stream maps (q,p) to the rng stream used for that block's
  // realization; the default is the row-major block index.  Overriding it
  // lets a re-ordered grid reuse the realization of another operator.
  MeasurementOperator(EnsembleSpec spec, uint64_t seed,
                      std::function<uint64_t(int, int)> block_stream = {});

  CVec apply(const CVec& x) const;
  CVec adjoint(const CVec& y) const;
  CMat materialize() const;
  double operator_norm_sq(double tol = 1e-6, bool* converged = nullptr) const;

  const EnsembleSpec& spec() const { return spec_; }
  int m_bar() const { return m_bar_; }
  int n_bar() const { return n_bar_; }
  uint64_t seed() const { return seed_; }

  // realization state, exposed so tests can rebuild blocks independently
  const std::vector<int>& row_perm(int q, int p) const;
  const std::vector<int>& col_perm(int q, int p) const;
  const CMat& haar_base(int q, int p) const;
  const CMat& dense() const { return dense_; }

  static long materialize_cap;  // default 4096*4096 entries

 private:
  struct Block {
    std::vector<int> rperm, cperm;  // permutations of 0..N-1
    CMat haar;                      // base unitary, HaarRandom only
  };
  const Block& block(int q, int p) const { return blocks_[q * spec_.l_c + p]; }

  EnsembleSpec spec_;
  uint64_t seed_;
  int m_bar_ = 0, n_bar_ = 0;
  std::vector<Block> blocks_;
  CMat dense_;  // GaussianIID only
};

}  // namespace cs
