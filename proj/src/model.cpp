#include "cs/model.hpp"

#include <stdexcept>

namespace cs {

CVec sample_signal(const SignalPrior& prior, int n, Rng& rng) {
  if (prior.rho_x < 0.0 || prior.rho_x > 1.0)
    throw std::invalid_argument("rho_x must lie in [0,1]");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  CVec x = CVec::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (rng.uniform() < prior.rho_x)
      x[i] = prior.field == Field::Complex ? rng.cnormal()
                                           : cdouble(rng.normal(), 0.0);
  }
  return x;
}

ProblemInstance generate_instance(const MeasurementOperator& op,
                                  const SignalPrior& prior, double sigma0_sq,
                                  Rng& rng) {
  if (prior.field != op.spec().field)
    throw std::invalid_argument("prior field does not match operator field");
  ProblemInstance inst;
  inst.x0 = sample_signal(prior, op.n_bar(), rng);
  inst.y = op.apply(inst.x0);
  if (sigma0_sq > 0.0) {
    double sigma0 = std::sqrt(sigma0_sq);
    for (int i = 0; i < inst.y.size(); ++i) {
      cdouble w = prior.field == Field::Complex ? rng.cnormal()
                                                : cdouble(rng.normal(), 0.0);
      inst.y[i] += sigma0 * w;
    }
  }
  inst.sigma0_sq = sigma0_sq;
  inst.op = &op;
  return inst;
}

}  // namespace cs
