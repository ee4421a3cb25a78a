#pragma once

#include "wlg/types.hpp"

namespace wlg {

// Closed-form associated family of the isotropic Willmore two-sphere in S^6,
// evaluated literally; lambda on the unit circle.
rvec example_s6(cplx z, cplx lambda);

// SO(7) rotation with example_s6(z, lambda) = rotation_D(lambda) * example_s6(z, 1).
// Throws when lambda is off the unit circle.
rmat rotation_D(cplx lambda);

// Projective class of the cylinder lift normalized to S^4; a^2 + b^2 = 1.
rvec cylinder_immersion(double u, double v, double a, double b);

// Homogeneous torus family scaled from S^5(sqrt(1+2b^2)) to the unit sphere.
rvec ejiri_immersion(double u, double v, double b);

}  // namespace wlg
