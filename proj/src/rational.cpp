#include "wlg/rational.hpp"

#include <Eigen/Eigenvalues>
#include <charconv>
#include <sstream>

namespace wlg {

Poly::Poly(std::vector<cplx> coeffs) : c(std::move(coeffs)) {
  if (c.empty()) c.push_back(cplx(0, 0));
}

Poly Poly::variable() { return Poly(std::vector<cplx>{cplx(0, 0), cplx(1, 0)}); }

int Poly::degree() const {
  for (int k = int(c.size()) - 1; k >= 0; --k)
    if (c[k] != cplx(0, 0)) return k;
  return -1;
}

cplx Poly::eval(cplx z) const {
  cplx acc(0, 0);
  for (int k = int(c.size()) - 1; k >= 0; --k) acc = acc * z + c[k];
  return acc;
}

Poly Poly::derivative() const {
  if (c.size() <= 1) return Poly();
  std::vector<cplx> d(c.size() - 1);
  for (size_t k = 1; k < c.size(); ++k) d[k - 1] = double(k) * c[k];
  return Poly(std::move(d));
}

void Poly::trim() {
  while (c.size() > 1 && c.back() == cplx(0, 0)) c.pop_back();
}

double Poly::coeff_scale() const {
  double s = 0.0;
  for (const cplx& v : c) s = std::max(s, std::abs(v));
  return s;
}

Poly operator+(const Poly& a, const Poly& b) {
  std::vector<cplx> c(std::max(a.c.size(), b.c.size()), cplx(0, 0));
  for (size_t k = 0; k < a.c.size(); ++k) c[k] += a.c[k];
  for (size_t k = 0; k < b.c.size(); ++k) c[k] += b.c[k];
  Poly p(std::move(c));
  p.trim();
  return p;
}

Poly operator-(const Poly& a) {
  Poly p = a;
  for (cplx& v : p.c) v = -v;
  return p;
}

Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }

Poly operator*(const Poly& a, const Poly& b) {
  if (a.is_zero() || b.is_zero()) return Poly();
  std::vector<cplx> c(a.c.size() + b.c.size() - 1, cplx(0, 0));
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) c[i + j] += a.c[i] * b.c[j];
  Poly p(std::move(c));
  p.trim();
  return p;
}

Poly pow(const Poly& a, int e) {
  if (e < 0) throw std::domain_error("pow: negative exponent on a polynomial");
  Poly out(cplx(1, 0));
  Poly base = a;
  while (e > 0) {
    if (e & 1) out = out * base;
    base = base * base;
    e >>= 1;
  }
  return out;
}

std::vector<cplx> poly_roots(const Poly& p) {
  Poly q = p;
  q.trim();
  int d = q.degree();
  if (d <= 0) return {};
  cmat comp = cmat::Zero(d, d);
  for (int k = 1; k < d; ++k) comp(k, k - 1) = 1.0;
  for (int k = 0; k < d; ++k) comp(k, d - 1) = -q.c[k] / q.c[d];
  Eigen::ComplexEigenSolver<cmat> es(comp, false);
  std::vector<cplx> roots(d);
  for (int k = 0; k < d; ++k) roots[k] = es.eigenvalues()(k);
  return roots;
}

RationalExpr::RationalExpr(Poly n, Poly d) : num(std::move(n)), den(std::move(d)) {
  num.trim();
  den.trim();
  if (den.is_zero()) throw NumericError("rational expression with zero denominator");
  cplx lead = den.c[den.degree()];
  for (cplx& v : num.c) v /= lead;
  for (cplx& v : den.c) v /= lead;
  if (den.degree() == 0) den = Poly(cplx(1, 0));
}

RationalExpr RationalExpr::constant(cplx v) { return RationalExpr(Poly(v), Poly(cplx(1, 0))); }

RationalExpr RationalExpr::variable() {
  return RationalExpr(Poly::variable(), Poly(cplx(1, 0)));
}

cplx RationalExpr::eval(cplx z) const {
  if (is_polynomial()) return num.eval(z);
  cplx d = den.eval(z);
  double scale = std::max(1.0, den.coeff_scale());
  if (std::abs(d) < 1e-13 * scale)
    throw NumericError("rational expression evaluated at a pole");
  return num.eval(z) / d;
}

RationalExpr RationalExpr::derivative() const {
  if (is_polynomial()) return RationalExpr(num.derivative(), Poly(cplx(1, 0)));
  return RationalExpr(num.derivative() * den - num * den.derivative(), den * den);
}

std::vector<cplx> RationalExpr::poles() const {
  if (is_polynomial()) return {};
  return poly_roots(den);
}

RationalExpr operator+(const RationalExpr& a, const RationalExpr& b) {
  return RationalExpr(a.num * b.den + b.num * a.den, a.den * b.den);
}

RationalExpr operator-(const RationalExpr& a) { return RationalExpr(-a.num, a.den); }

RationalExpr operator-(const RationalExpr& a, const RationalExpr& b) { return a + (-b); }

RationalExpr operator*(const RationalExpr& a, const RationalExpr& b) {
  return RationalExpr(a.num * b.num, a.den * b.den);
}

RationalExpr operator/(const RationalExpr& a, const RationalExpr& b) {
  if (b.num.is_zero()) throw NumericError("division by the zero expression");
  return RationalExpr(a.num * b.den, a.den * b.num);
}

RationalExpr pow(const RationalExpr& a, int e) {
  if (e >= 0) return RationalExpr(pow(a.num, e), pow(a.den, e));
  return RationalExpr(pow(a.den, -e), pow(a.num, -e));
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// One complex coefficient as a grammar-conformant factor.
std::string fmt_coeff(cplx v, bool leading_factor) {
  double re = v.real(), im = v.imag();
  if (im == 0.0) return fmt_double(re);
  if (re == 0.0) {
    if (im == 1.0) return "i";
    if (im == -1.0) return "-i";
    return fmt_double(im) + "*i";
  }
  std::string s = fmt_double(re) + (im < 0 ? " - " : " + ");
  double ai = std::abs(im);
  s += (ai == 1.0) ? "i" : fmt_double(ai) + "*i";
  return leading_factor ? "(" + s + ")" : s;
}

std::string poly_to_string(const Poly& p) {
  int d = p.degree();
  if (d < 0) return "0";
  std::ostringstream out;
  bool first = true;
  for (int k = 0; k <= d; ++k) {
    cplx v = p.c[k];
    if (v == cplx(0, 0)) continue;
    if (!first) out << " + ";
    first = false;
    if (k == 0) {
      out << fmt_coeff(v, false);
      continue;
    }
    bool unit = v == cplx(1, 0);
    if (!unit) out << fmt_coeff(v, true) << "*";
    out << "z";
    if (k > 1) out << "^" << k;
  }
  return out.str();
}

}  // namespace

std::string to_string(const RationalExpr& r) {
  if (r.is_polynomial()) return poly_to_string(r.num);
  return "(" + poly_to_string(r.num) + ") / (" + poly_to_string(r.den) + ")";
}

cmat RationalMatrix::eval(cplx z) const {
  cmat out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = at(r, c).eval(z);
  return out;
}

RationalMatrix RationalMatrix::derivative() const {
  RationalMatrix out(rows, cols);
  for (size_t k = 0; k < entries.size(); ++k) out.entries[k] = entries[k].derivative();
  return out;
}

bool RationalMatrix::is_constant() const {
  for (const RationalExpr& e : entries)
    if (!e.is_constant()) return false;
  return true;
}

std::vector<cplx> RationalMatrix::poles() const {
  std::vector<cplx> out;
  for (const RationalExpr& e : entries) {
    auto p = e.poles();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace wlg
