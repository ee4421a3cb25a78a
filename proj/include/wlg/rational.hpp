#pragma once

#include <string>
#include <vector>

#include "wlg/types.hpp"

namespace wlg {

// Polynomial in one complex variable, coefficients in ascending powers.
class Poly {
 public:
  std::vector<cplx> c;

  Poly() : c{cplx(0, 0)} {}
  explicit Poly(cplx value) : c{value} {}
  explicit Poly(std::vector<cplx> coeffs);

  static Poly variable();

  int degree() const;  // -1 for the zero polynomial
  bool is_zero() const { return degree() < 0; }
  cplx eval(cplx z) const;
  Poly derivative() const;
  void trim();
  double coeff_scale() const;
};

Poly operator+(const Poly& a, const Poly& b);
Poly operator-(const Poly& a, const Poly& b);
Poly operator*(const Poly& a, const Poly& b);
Poly operator-(const Poly& a);
Poly pow(const Poly& a, int e);

// Roots via the companion matrix of the trimmed, monic polynomial.
std::vector<cplx> poly_roots(const Poly& p);

// Quotient of polynomials. The denominator is kept monic; constant
// denominators are folded into the numerator.
struct RationalExpr {
  Poly num;
  Poly den;

  RationalExpr() : num(), den(cplx(1, 0)) {}
  RationalExpr(Poly n, Poly d);
  static RationalExpr constant(cplx v);
  static RationalExpr variable();

  bool is_polynomial() const { return den.degree() == 0; }
  bool is_constant() const { return is_polynomial() && num.degree() <= 0; }
  cplx eval(cplx z) const;  // throws NumericError at a pole
  RationalExpr derivative() const;
  std::vector<cplx> poles() const;
};

RationalExpr operator+(const RationalExpr& a, const RationalExpr& b);
RationalExpr operator-(const RationalExpr& a, const RationalExpr& b);
RationalExpr operator*(const RationalExpr& a, const RationalExpr& b);
RationalExpr operator/(const RationalExpr& a, const RationalExpr& b);
RationalExpr operator-(const RationalExpr& a);
RationalExpr pow(const RationalExpr& a, int e);

std::string to_string(const RationalExpr& r);

struct RationalMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<RationalExpr> entries;

  RationalMatrix() = default;
  RationalMatrix(int r, int c) : rows(r), cols(c), entries(r * c) {}

  RationalExpr& at(int r, int c) { return entries[r * cols + c]; }
  const RationalExpr& at(int r, int c) const { return entries[r * cols + c]; }

  cmat eval(cplx z) const;
  RationalMatrix derivative() const;
  bool is_constant() const;
  std::vector<cplx> poles() const;
};

}  // namespace wlg
