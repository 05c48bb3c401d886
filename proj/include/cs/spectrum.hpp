#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "cs/common.hpp"
#include "cs/operators.hpp"

namespace cs {

// Analytic eigenvalue law: continuous density on [a_minus, a_plus] plus
// point atoms.
struct SpectralDensity {
  std::function<double(double)> density;
  double a_minus = 0.0, a_plus = 0.0;
  std::vector<std::pair<double, double>> atoms;  // (location, weight)

  double continuous_mass() const;
  double total_mass() const;
  double cdf(double x) const;  // right-continuous, atoms included
};

// Limiting law of the min(M,N) largest eigenvalues of AA^H for a
// doubly-selected orthonormal base with gain R.
SpectralDensity haar_density(double mu, double nu, double R);

// Marchenko-Pastur law for the Gaussian baseline at measurement ratio alpha.
SpectralDensity mp_density(double alpha);

// Eigenvalues of AA^H, descending, truncated to min(M,N).
std::vector<double> empirical_spectrum(const MeasurementOperator& op);

enum class DistanceMetric { KS, L1Hist };

double density_distance(const std::vector<double>& samples,
                        const SpectralDensity& law, DistanceMetric metric);

}  // namespace cs
