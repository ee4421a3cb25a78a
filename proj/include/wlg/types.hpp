#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace wlg {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;

// Minkowski pairing x^t I_{1,m-1} y on column vectors of equal size.
inline cplx lorentz_dot(const cvec& x, const cvec& y) {
  cplx s = -x(0) * y(0);
  for (Eigen::Index k = 1; k < x.size(); ++k) s += x(k) * y(k);
  return s;
}

inline double sup_norm(const cmat& a) { return a.cwiseAbs().maxCoeff(); }

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wlg
