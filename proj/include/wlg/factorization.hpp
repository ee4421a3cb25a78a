#pragma once

#include "wlg/loop.hpp"

#include <optional>

namespace wlg {

struct BigCellViolation : NumericError {
  using NumericError::NumericError;
};
struct CellBoundary : NumericError {
  using NumericError::NumericError;
};
struct NotInCell : NumericError {
  using NumericError::NumericError;
};

enum class Cell { identity_cell, second_cell, boundary, unknown };
const char* to_string(Cell c);

struct FactorizationReport {
  double residual = 0.0;        // sup over unit-circle samples of product defect
  double condition = 0.0;       // 1-norm condition estimate of the linear solve
  double reality_defect = 0.0;  // Iwasawa only: ||tau(f) - f||
  double newton_residual = 0.0; // Iwasawa only: constant-term normalization
  Cell cell = Cell::unknown;
  bool orthochronous = true;    // Iwasawa only: f(1) in the identity component
};

struct BirkhoffOptions {
  int depth = -1;               // negative-power truncation; -1 = automatic
  double cond_threshold = 1e12;
};

// g = g_minus * g_plus with g_minus(inf) = I. Throws BigCellViolation when the
// block-Toeplitz system is numerically singular.
std::tuple<TwistedLoop, TwistedLoop, FactorizationReport> birkhoff(
    const TwistedLoop& g, const BirkhoffOptions& opt = {});

struct IwasawaOptions {
  int depth = -1;     // Birkhoff truncation for W = tau(g)^{-1} g; -1 = automatic
  int samples = -1;   // unit-circle sample count (power of two); -1 = automatic
  double cond_threshold = 1e12;
};

struct IwasawaResult {
  TwistedLoop f;       // real loop, g * v_plus = f
  TwistedLoop v_plus;  // plus loop with v_plus(0) in the solvable complement
  FactorizationReport report;
  cmat vp0;            // v_plus at lambda = 0
};

IwasawaResult iwasawa(const TwistedLoop& g, const IwasawaOptions& opt = {});

// Sample-level Iwasawa used by the grid pipeline: input/output are values at
// the N-th roots of unity. Cheaper than the coefficient API when only
// pointwise frame values and v_plus(0) are needed.
struct IwasawaSamples {
  std::vector<cmat> f;  // frame samples at the roots of unity
  cmat vp0;
  double condition = 0.0, reality_defect = 0.0, newton_residual = 0.0;
  bool orthochronous = true;
};

IwasawaSamples iwasawa_from_samples(const std::vector<cmat>& g_samples, int n,
                                    int depth, double cond_threshold = 1e12);

// Constant-term normalization k0 = k_real * s with k_real in
// SO+(1,3) x SO(n) and s in the solvable complement S1 x S2. Throws NotInCell.
std::pair<rmat, cmat> k_factor_normalize(const cmat& k0, int n,
                                         double* newton_residual = nullptr);

// Closed-form chart of the Lorentz solvable factor S1.
cmat s1_chart(double a12, double a34, cplx a13, cplx a23);

// Newton solve k0L = k_real * s over the S1 chart; nullopt when no solution
// is found (the chart misses part of SO(1,3,C)).
std::optional<std::pair<rmat, cmat>> lorentz_normalize(const cmat& k0L);

// SO(n,C) = SO(n) * S2 by Gram-Schmidt against the real form (Cholesky in a
// null basis).
std::pair<cmat, cmat> compact_normalize(const cmat& k0O);

// Distance of a block-diagonal matrix from the solvable complement S1 x S2;
// +inf when the Lorentz block is not reachable by the chart.
double s_membership_defect(const cmat& s, int n);

Cell cell_classify(const TwistedLoop& g);

// Second-cell representative diag(-1,1,1,1,-1,1,...,1).
rmat second_cell_representative(int n);

}  // namespace wlg
