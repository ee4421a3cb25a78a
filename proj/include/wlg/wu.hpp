#pragma once

#include "wlg/potential.hpp"

#include <nlohmann/json_fwd.hpp>
#include <vector>

namespace wlg {

// Matrix of truncated double power series in (z, conj z) about 0, kept up to
// a maximum total degree.
struct BivariateTaylor {
  int rows = 0;
  int cols = 0;
  int degree = 0;
  std::vector<cmat> c;  // coefficient of z^a zbar^b at index a*(degree+1)+b
  double fit_residual = 0.0;

  BivariateTaylor() = default;
  BivariateTaylor(int rows_, int cols_, int degree_)
      : rows(rows_), cols(cols_), degree(degree_),
        c((degree_ + 1) * (degree_ + 1), cmat::Zero(rows_, cols_)) {}

  cmat& coeff(int a, int b) { return c.at(a * (degree + 1) + b); }
  const cmat& coeff(int a, int b) const { return c.at(a * (degree + 1) + b); }

  cmat eval(cplx z, cplx zbar) const;
  cmat eval(cplx z) const { return eval(z, std::conj(z)); }
};

// Coefficients of the conj-z-free part, index = power of z.
std::vector<cmat> holomorphic_part(const BivariateTaylor& t);

// Least-squares fit over arbitrary sample points (scaled Vandermonde with a
// rank guard that lowers the degree when the basis degenerates).
BivariateTaylor fit_bivariate_taylor(const std::vector<cplx>& zs,
                                     const std::vector<cmat>& vals, int degree);

// Fit for samples on full polar rings: Fourier analysis per ring isolates
// the modes, leaving small well-conditioned radial solves.
BivariateTaylor fit_polar_taylor(const std::vector<double>& radii, int angles,
                                 const std::vector<cmat>& vals, int degree);

// Conjugation formula: solves F0' = F0 d0 in the series ring from the
// holomorphic parts of the connection data, then returns the normalized
// potential with lambda^{-1} coefficient F0 d1 F0^{-1}, truncated to the
// given z-degree. Throws std::domain_error when the inputs violate the
// block structure (alpha_k block-diagonal, alpha_p off-diagonal).
Potential wu_normalized_potential(const BivariateTaylor& alpha_k,
                                  const BivariateTaylor& alpha_p, int degree);

// Connection data sampled from the constructed frame of a potential: the
// lambda^0 and lambda^{-1} coefficients of F^{-1} dF/dz on polar rings,
// differentiated with fourth-order central stencils of step h.
struct McData {
  int n = 0;
  std::vector<cplx> zs;
  std::vector<cmat> alpha_k, alpha_p;
  std::vector<double> radii;  // non-empty when samples lie on full rings
  int angles = 0;
};

McData extract_mc_data(const Potential& p, double radius, int rings, int angles,
                       double h = 1e-2);

nlohmann::json mc_to_json(const McData& d);
McData mc_from_json(const nlohmann::json& j);

// Fit (polar when the ring layout is present) and apply the conjugation
// formula.
Potential wu_from_mc(const McData& d, int degree);

}  // namespace wlg
