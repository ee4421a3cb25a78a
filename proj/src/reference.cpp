#include "wlg/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace wlg {

rvec example_s6(cplx z, cplx lambda) {
  const cplx zb = std::conj(z);
  const cplx li = cplx(1, 0) / lambda;
  const cplx I(0, 1);
  const double r2 = std::norm(z);
  const double r4 = r2 * r2, r6 = r4 * r2, r8 = r4 * r4;
  const double den = 1 + r2 + 1.25 * r4 + 4.0 * r6 / 9.0 + r8 / 36.0;

  rvec y(7);
  y(0) = 1 - r2 - 0.75 * r4 + 4.0 * r6 / 9.0 - r8 / 36.0;
  y(1) = (-I * (z - zb) * (1 + r6 / 9.0)).real();
  y(2) = ((z + zb) * (1 + r6 / 9.0)).real();
  y(3) = (-I * (li * z * z - lambda * zb * zb) * (1 - r4 / 12.0)).real();
  y(4) = ((li * z * z + lambda * zb * zb) * (1 - r4 / 12.0)).real();
  y(5) = (-I * 0.5 * r2 * (li * z - lambda * zb) * (1 + 4.0 * r2 / 3.0)).real();
  y(6) = (0.5 * r2 * (li * z + lambda * zb) * (1 + 4.0 * r2 / 3.0)).real();
  return y / den;
}

rmat rotation_D(cplx lambda) {
  if (std::abs(std::abs(lambda) - 1.0) > 1e-8)
    throw std::invalid_argument("rotation_D: lambda must lie on the unit circle");
  const double c = ((lambda + 1.0 / lambda) / 2.0).real();
  const double s = ((lambda - 1.0 / lambda) / cplx(0, 2)).real();
  rmat d = rmat::Identity(7, 7);
  d(3, 3) = c;
  d(3, 4) = -s;
  d(4, 3) = s;
  d(4, 4) = c;
  d(5, 5) = c;
  d(5, 6) = -s;
  d(6, 5) = s;
  d(6, 6) = c;
  return d;
}

rvec cylinder_immersion(double u, double v, double a, double b) {
  if (std::abs(a * a + b * b - 1.0) > 1e-12)
    throw std::invalid_argument("cylinder_immersion: a^2 + b^2 = 1 required");
  rvec y(5);
  y << std::sinh(a * v), std::cos(u) * std::cos(b * v),
      std::cos(u) * std::sin(b * v), std::sin(u) * std::cos(b * v),
      std::sin(u) * std::sin(b * v);
  return y / std::cosh(a * v);
}

rvec ejiri_immersion(double u, double v, double b) {
  if (!(b > 0))
    throw std::invalid_argument("ejiri_immersion: b > 0 required");
  const double s3 = std::sqrt(3.0);
  rvec y(6);
  y << std::cos(u) * std::cos(v / s3), std::cos(u) * std::sin(v / s3),
      std::sin(u) * std::cos(v / s3), std::sin(u) * std::sin(v / s3),
      std::sqrt(2.0) * b * std::cos(v / (s3 * b)),
      std::sqrt(2.0) * b * std::sin(v / (s3 * b));
  return y / std::sqrt(1.0 + 2.0 * b * b);
}

}  // namespace wlg
