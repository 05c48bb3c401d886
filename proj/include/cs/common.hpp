#pragma once

#include <complex>
#include <Eigen/Dense>

namespace cs {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using cdouble = std::complex<double>;

enum class Field { Complex, Real };

inline double to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace cs
