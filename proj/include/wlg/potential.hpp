#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wlg/loop.hpp"
#include "wlg/rational.hpp"

namespace wlg {

enum class PotentialKind { normalized, holomorphic, constant };
const char* to_string(PotentialKind k);

struct ParseError : std::runtime_error {
  int line;
  int column;
  ParseError(const std::string& msg, int l, int c)
      : std::runtime_error(msg + " at line " + std::to_string(l) + ", column " +
                           std::to_string(c)),
        line(l),
        column(c) {}
};

struct NullConditionViolated : NumericError {
  using NumericError::NumericError;
};

// Meromorphic 1-form coefficient data: eta = sum_j lambda^j * terms[j](z) dz.
struct Potential {
  int n = 0;
  PotentialKind kind = PotentialKind::normalized;
  cplx basepoint{0, 0};
  std::map<int, RationalMatrix> terms;

  int size() const { return n + 4; }
  int min_power() const;
  int max_power() const;
  cmat eval(int power, cplx z) const;
  TwistedLoop value_at(cplx z) const;
  std::vector<cplx> poles() const;
};

Potential parse_potential(const std::string& text);
std::string serialize_potential(const Potential& p);
Potential load_potential(const std::string& path);

struct PotentialValidation {
  double null_condition = 0.0;  // max |B1^t I13 B1| over samples
  double nilpotency = 0.0;      // max |eta_{-1}^3|
  double parity_defect = 0.0;
  double algebra_defect = 0.0;
  bool ok(double tol = 1e-10) const;
};

PotentialValidation validate_normalized(const Potential& p);

Potential make_isotropic_potential(const RationalExpr& f11, const RationalExpr& f21,
                                   const RationalExpr& f31, const RationalExpr& f41);
Potential make_lightlike_potential(const std::vector<RationalExpr>& f1,
                                   const std::vector<RationalExpr>& f3);

enum class PotentialClass { lightlike_form, reducible_rank1, isotropic_form, generic };
const char* to_string(PotentialClass c);

struct PotentialClassification {
  PotentialClass cls = PotentialClass::generic;
  int max_rank = 0;
};

PotentialClassification classify_potential(const Potential& p);

// Plus-loop gauge w = sum_{j>=0} lambda^j w_j(z); w_0 must be constant and
// invertible. Returns w^{-1} p w + w^{-1} dw truncated at truncate_degree.
Potential gauge_transform(const Potential& p, const std::map<int, RationalMatrix>& w,
                          int truncate_degree = -1);

}  // namespace wlg
