#include "cs/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace cs {

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double whole,
                        double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6 * (fa + 4 * flm + fm);
  double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15 * tol)
    return left + right + (left + right - whole) / 15;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (b <= a) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double SpectralDensity::continuous_mass() const {
  double width = a_plus - a_minus;
  if (!(width > 0)) return 0.0;
  // substitute x = a_- + width sin^2(t): removes the inverse-sqrt endpoint
  // singularities the laws can have at 0 or at the gain point
  auto h = [&](double t) {
    t = std::clamp(t, 1e-12, M_PI / 2 - 1e-12);
    double s = std::sin(t), c = std::cos(t);
    double x = a_minus + width * s * s;
    return density(x) * width * 2 * s * c;
  };
  return integrate(h, 0.0, M_PI / 2, 1e-10);
}

double SpectralDensity::total_mass() const {
  double m = continuous_mass();
  for (const auto& [loc, w] : atoms) m += w;
  return m;
}

double SpectralDensity::cdf(double x) const {
  double acc = 0.0;
  double width = a_plus - a_minus;
  if (width > 0 && x > a_minus) {
    double xc = std::min(x, a_plus);
    double t_hi = std::asin(std::sqrt(std::clamp((xc - a_minus) / width, 0.0, 1.0)));
    auto h = [&](double t) {
      t = std::clamp(t, 1e-12, M_PI / 2 - 1e-12);
      double s = std::sin(t), c = std::cos(t);
      double u = a_minus + width * s * s;
      return density(u) * width * 2 * s * c;
    };
    acc += integrate(h, 0.0, t_hi, 1e-10);
  }
  for (const auto& [loc, w] : atoms)
    if (loc <= x) acc += w;
  return acc;
}

SpectralDensity haar_density(double mu, double nu, double R) {
  if (!(mu > 0 && mu <= 1) || !(nu > 0 && nu <= 1) || !(R > 0))
    throw std::invalid_argument("haar_density: parameters out of range");
  double am = R * std::pow(std::sqrt((1 - mu) * nu) - std::sqrt((1 - nu) * mu), 2);
  double ap = R * std::pow(std::sqrt((1 - mu) * nu) + std::sqrt((1 - nu) * mu), 2);
  double k = std::min(mu, nu);  // 1 - max{1-nu, 1-mu}
  SpectralDensity law;
  law.a_minus = am;
  law.a_plus = ap;
  law.density = [am, ap, R, k](double x) {
    double num = (x - am) * (ap - x);
    if (num <= 0) return 0.0;
    return std::sqrt(num) / (2 * M_PI * x * (R - x) * k);
  };
  double w = std::max(nu + mu - 1.0, 0.0) / k;
  if (w > 0) law.atoms.emplace_back(R, w);
  return law;
}

SpectralDensity mp_density(double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("mp_density: alpha must be positive");
  double bm = std::pow(1 - std::sqrt(alpha), 2);
  double bp = std::pow(1 + std::sqrt(alpha), 2);
  SpectralDensity law;
  law.a_minus = bm;
  law.a_plus = bp;
  law.density = [bm, bp, alpha](double x) {
    double num = (x - bm) * (bp - x);
    if (num <= 0) return 0.0;
    return std::sqrt(num) / (2 * M_PI * x * alpha);
  };
  double w = std::max(1.0 - 1.0 / alpha, 0.0);
  if (w > 0) law.atoms.emplace_back(0.0, w);
  return law;
}

std::vector<double> empirical_spectrum(const MeasurementOperator& op) {
  CMat a = op.materialize();
  CMat gram = a * a.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> es(gram, Eigen::EigenvaluesOnly);
  RVec ev = es.eigenvalues();  // ascending
  int keep = std::min(op.m_bar(), op.n_bar());
  std::vector<double> out;
  out.reserve(keep);
  for (int i = 0; i < keep; ++i) out.push_back(ev[ev.size() - 1 - i]);
  return out;
}

double density_distance(const std::vector<double>& samples,
                        const SpectralDensity& law, DistanceMetric metric) {
  if (samples.empty()) throw std::invalid_argument("density_distance: empty samples");
  std::vector<double> s = samples;
  std::sort(s.begin(), s.end());
  size_t n = s.size();
  if (metric == DistanceMetric::KS) {
    // snap samples to atom locations so fp noise in repeated eigenvalues
    // does not smear the jump of the law's cdf
    for (auto& v : s)
      for (const auto& [loc, w] : law.atoms)
        if (std::abs(v - loc) <= 1e-8 * std::max(1.0, std::abs(loc))) v = loc;
    std::sort(s.begin(), s.end());
    double ks = 0.0;
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && s[j + 1] == s[i]) ++j;
      double F = law.cdf(s[i]);
      double F_left = F;
      for (const auto& [loc, w] : law.atoms)
        if (loc == s[i]) F_left -= w;
      ks = std::max(ks, std::abs((j + 1.0) / n - F));
      ks = std::max(ks, std::abs(static_cast<double>(i) / n - F_left));
      i = j + 1;
    }
    return ks;
  }
  // L1Hist: 100 uniform bins over [0, 1.05 max(a_+, max sample)]
  int bins = 100;
  double hi = 1.05 * std::max(law.a_plus, s.back());
  if (!(hi > 0)) hi = 1.0;
  double d = 0.0;
  double prev_cdf = 0.0;  // first bin picks up any atom at 0
  size_t idx = 0;
  for (int b = 1; b <= bins; ++b) {
    double edge = hi * b / bins;
    double c = law.cdf(edge);
    double p_law = c - prev_cdf;
    prev_cdf = c;
    size_t start = idx;
    while (idx < n && s[idx] <= edge) ++idx;
    double p_emp = static_cast<double>(idx - start) / n;
    d += std::abs(p_emp - p_law);
  }
  return d;
}

}  // namespace cs
