#pragma once

#include "wlg/frame_field.hpp"
#include "wlg/potential.hpp"
#include "wlg/surface.hpp"

namespace wlg {

// Coefficient blocks of a constant potential lambda^{-1} B + A.
struct ConstantBlocks {
  cmat off;   // lambda^{-1} part, off-diagonal blocks
  cmat diag;  // lambda^0 part, diagonal blocks
};

// Extracts the two coefficient matrices; rejects z-dependent entries and
// powers outside {-1, 0}.
ConstantBlocks constant_blocks(const Potential& p);

struct HomogeneityReport {
  double mixed_bracket = 0.0;     // |[B, conj A]|
  double balanced_bracket = 0.0;  // |[B, conj B] + [A, conj A]|
  bool ok = false;                // both residuals below tolerance
  // Sum of the two A-block entries whose non-vanishing makes the frame
  // project to an immersion, recorded for both index origins since the
  // closing condition is stated positionally.
  cplx watch_one_based{0, 0};   // A(0,2) + A(1,2)
  cplx watch_zero_based{0, 0};  // A(1,3) + A(2,3)
};

// Checks the commutation conditions under which exp(z(lambda^{-1}B + A))
// already solves the construction. Throws std::invalid_argument when the
// blocks do not have the potential shape (B off-diagonal, A diagonal, both
// in the complexified algebra).
HomogeneityReport validate_homogeneous(const cmat& eta_m1, const cmat& eta_0,
                                       double tol = 1e-10);
HomogeneityReport validate_homogeneous(const Potential& p, double tol = 1e-10);

// Extended frame exp(z(lambda^{-1}B + A) + conj(z)(lambda conj(B) + conj(A)))
// sampled on the circle and reassembled into coefficients. Throws when
// validate_homogeneous fails.
TwistedLoop homogeneous_frame(const Potential& eta, cplx z);

// Same frame evaluated at a single loop parameter.
cmat homogeneous_frame_at(const Potential& eta, cplx z, cplx lambda);

// Fixed-lambda sweep of the frame over a grid, projected to surface points.
// The two commuting direction matrices are eigen-decomposed once, so each
// grid point costs two diagonal flows and a product.
SurfaceGrid homogeneous_surface(const Potential& eta, const GridSpec& grid,
                                cplx lambda = cplx(1, 0));

// max |y(z) - y(z + delta)| over scattered probe points; a closing test for
// a candidate translation period.
double period_defect(const Potential& eta, cplx delta, cplx lambda = cplx(1, 0),
                     int probes = 5);

enum class VacuumClass { reduces_lorentz, reduces_compact, invalid };
const char* to_string(VacuumClass c);

struct VacuumReport {
  VacuumClass cls = VacuumClass::invalid;
  int rank = 0;
  cvec generator;                // v0 with all columns of B1 in span{v0}
  double hermitian_pairing = 0;  // -|v0_0|^2 + sum |v0_j|^2
  double isotropy_defect = 0.0;  // |B1^t I13 B1|
  double bracket_defect = 0.0;   // |[B, conj B]| for the assembled block matrix
};

// Classifies the reduction of a vacuum block B1 (4 x n). Rank above one is
// invalid; rank one branches on the Hermitian pairing of the generating
// column direction. The bilinear pairing vanishes identically on admissible
// generators, so it cannot be the branching quantity.
VacuumReport vacuum_classify(const cmat& B1, double tol = 1e-10);

// Constant potential of the cylinder family over S^4; requires a^2 + b^2 = 1.
// a = 1 degenerates to the round sphere, a = 0 to the Clifford torus.
Potential cylinder_potential(double a, double b);

// Constant potential of the homogeneous torus family in S^5, b > 0.
Potential ejiri_potential(double b);

struct TorusEnergy {
  double quadrature = 0.0;
  double closed_form = 0.0;
};

// Willmore energy of the b = l/j member over one fundamental domain
// [0, 2pi] x [0, 2pi l sqrt(3)]: Simpson quadrature of the constant density
// 4(|k1|^2 + |k2|^2) read off the potential, next to the closed form
// (16 pi^2 sqrt(3) / 9)(l + j^2 / (8l)).
TorusEnergy torus_energy(int j, int l);

}  // namespace wlg
