#include "wlg/potential.hpp"

#include "wlg/linalg.hpp"

#include <Eigen/SVD>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace wlg {

const char* to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::normalized: return "normalized";
    case PotentialKind::holomorphic: return "holomorphic";
    default: return "constant";
  }
}

int Potential::min_power() const {
  return terms.empty() ? 0 : terms.begin()->first;
}

int Potential::max_power() const {
  return terms.empty() ? 0 : terms.rbegin()->first;
}

cmat Potential::eval(int power, cplx z) const {
  auto it = terms.find(power);
  if (it == terms.end()) return cmat::Zero(size(), size());
  return it->second.eval(z);
}

TwistedLoop Potential::value_at(cplx z) const {
  int dn = std::max(0, -min_power());
  int dp = std::max(0, max_power());
  TwistedLoop out(n, dn, dp);
  for (const auto& [power, mat] : terms) out.coeff(power) = mat.eval(z);
  return out;
}

std::vector<cplx> Potential::poles() const {
  std::vector<cplx> out;
  for (const auto& [power, mat] : terms) {
    auto p = mat.poles();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

struct Token {
  enum Kind { Ident, Number, Punct, End } kind = End;
  std::string text;
  double value = 0.0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= s_.size()) {
        t.kind = Token::End;
        out.push_back(t);
        return out;
      }
      char c = s_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
          advance();
        t.kind = Token::Ident;
        t.text = s_.substr(start, pos_ - start);
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < s_.size() &&
                  std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
        size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) ||
                                    s_[pos_] == '.'))
          advance();
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
          size_t save = pos_;
          advance();
          if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) advance();
          if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
              advance();
          } else {
            pos_ = save;  // "e" belongs to the next token
          }
        }
        t.kind = Token::Number;
        t.text = s_.substr(start, pos_ - start);
        t.value = std::strtod(t.text.c_str(), nullptr);
      } else if (std::string("{}[]=;,()+-*/^").find(c) != std::string::npos) {
        t.kind = Token::Punct;
        t.text = std::string(1, c);
        advance();
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    for (;;) {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
        advance();
      if (pos_ < s_.size() && s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') advance();
        continue;
      }
      return;
    }
  }

  const std::string& s_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(Lexer(text).run()) {}

  Potential run() {
    Potential p = parse_header();
    while (!at_end()) parse_block(p);
    return p;
  }

 private:
  const Token& peek() const { return toks_[ip_]; }
  Token take() { return toks_[ip_ < toks_.size() - 1 ? ip_++ : ip_]; }
  bool at_end() const { return peek().kind == Token::End; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, peek().line, peek().col);
  }

  bool is_punct(char c) const {
    return peek().kind == Token::Punct && peek().text[0] == c;
  }

  void expect_punct(char c) {
    if (!is_punct(c)) fail(std::string("expected '") + c + "'");
    take();
  }

  std::string expect_ident() {
    if (peek().kind != Token::Ident) fail("expected an identifier");
    return take().text;
  }

  double expect_number() {
    double sign = 1.0;
    while (is_punct('-') || is_punct('+')) {
      if (take().text[0] == '-') sign = -sign;
    }
    if (peek().kind != Token::Number) fail("expected a number");
    return sign * take().value;
  }

  int expect_int() {
    double v = expect_number();
    if (v != std::floor(v)) fail("expected an integer");
    return int(v);
  }

  Potential parse_header() {
    if (expect_ident() != "potential") fail("file must start with 'potential'");
    expect_punct('{');
    Potential p;
    bool have_n = false, have_kind = false, have_base = false;
    while (!is_punct('}')) {
      const Token key_tok = peek();
      std::string key = expect_ident();
      expect_punct('=');
      if (key == "n") {
        p.n = expect_int();
        if (p.n < 1) throw ParseError("n must be positive", key_tok.line, key_tok.col);
        have_n = true;
      } else if (key == "kind") {
        std::string k = expect_ident();
        if (k == "normalized")
          p.kind = PotentialKind::normalized;
        else if (k == "holomorphic")
          p.kind = PotentialKind::holomorphic;
        else if (k == "constant")
          p.kind = PotentialKind::constant;
        else
          throw ParseError("unknown kind '" + k + "'", key_tok.line, key_tok.col);
        have_kind = true;
      } else if (key == "basepoint") {
        expect_punct('(');
        double re = expect_number();
        expect_punct(',');
        double im = expect_number();
        expect_punct(')');
        p.basepoint = cplx(re, im);
        have_base = true;
      } else {
        throw ParseError("unknown header field '" + key + "'", key_tok.line,
                         key_tok.col);
      }
      expect_punct(';');
    }
    expect_punct('}');
    if (!have_n || !have_kind || !have_base)
      fail("header requires n, kind and basepoint");
    return p;
  }

  void parse_block(Potential& p) {
    const Token head = peek();
    if (expect_ident() != "coeff")
      throw ParseError("expected 'coeff'", head.line, head.col);
    expect_punct('[');
    int power = expect_int();
    expect_punct(']');
    if (p.terms.count(power))
      throw ParseError("duplicate coefficient block", head.line, head.col);
    expect_punct('{');
    const int m = p.size();
    RationalMatrix term(m, m);
    while (!is_punct('}')) {
      const Token name_tok = peek();
      std::string name = expect_ident();
      expect_punct('=');
      RationalMatrix mat = parse_matrix();
      expect_punct(';');
      if (name == "B1") {
        require_shape(mat, 4, p.n, name_tok);
        assign_b1(term, mat, p.n);
      } else if (name == "A1") {
        require_shape(mat, 4, 4, name_tok);
        copy_into(term, mat, 0, 0);
      } else if (name == "A2") {
        require_shape(mat, p.n, p.n, name_tok);
        copy_into(term, mat, 4, 4);
      } else if (name == "FULL") {
        require_shape(mat, m, m, name_tok);
        term = mat;
      } else {
        throw ParseError("unknown block name '" + name + "'", name_tok.line,
                         name_tok.col);
      }
    }
    expect_punct('}');
    p.terms.emplace(power, std::move(term));
  }

  void require_shape(const RationalMatrix& m, int r, int c, const Token& at) const {
    if (m.rows != r || m.cols != c)
      throw ParseError("matrix must be " + std::to_string(r) + "x" + std::to_string(c) +
                           ", got " + std::to_string(m.rows) + "x" +
                           std::to_string(m.cols),
                       at.line, at.col);
  }

  static void copy_into(RationalMatrix& dst, const RationalMatrix& src, int r0, int c0) {
    for (int r = 0; r < src.rows; ++r)
      for (int c = 0; c < src.cols; ++c) dst.at(r0 + r, c0 + c) = src.at(r, c);
  }

  static void assign_b1(RationalMatrix& term, const RationalMatrix& B, int n) {
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < n; ++c) term.at(r, 4 + c) = B.at(r, c);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < 4; ++c)
        term.at(4 + r, c) = c == 0 ? B.at(0, r) : -B.at(c, r);
  }

  RationalMatrix parse_matrix() {
    expect_punct('[');
    std::vector<std::vector<RationalExpr>> rows;
    for (;;) {
      rows.push_back(parse_row());
      if (rows.back().size() != rows.front().size()) fail("ragged matrix rows");
      if (is_punct(',')) {
        take();
        continue;
      }
      break;
    }
    expect_punct(']');
    RationalMatrix out(int(rows.size()), int(rows.front().size()));
    for (int r = 0; r < out.rows; ++r)
      for (int c = 0; c < out.cols; ++c) out.at(r, c) = std::move(rows[r][c]);
    return out;
  }

  std::vector<RationalExpr> parse_row() {
    expect_punct('[');
    std::vector<RationalExpr> row;
    for (;;) {
      row.push_back(parse_expr());
      if (is_punct(',')) {
        take();
        continue;
      }
      break;
    }
    expect_punct(']');
    return row;
  }

  RationalExpr parse_expr() {
    RationalExpr acc = parse_term();
    while (is_punct('+') || is_punct('-')) {
      bool plus = take().text[0] == '+';
      RationalExpr rhs = parse_term();
      acc = plus ? acc + rhs : acc - rhs;
    }
    return acc;
  }

  RationalExpr parse_term() {
    RationalExpr acc = parse_unary();
    while (is_punct('*') || is_punct('/')) {
      bool mul = take().text[0] == '*';
      RationalExpr rhs = parse_unary();
      if (!mul && rhs.num.is_zero()) fail("division by the zero expression");
      acc = mul ? acc * rhs : acc / rhs;
    }
    return acc;
  }

  RationalExpr parse_unary() {
    if (is_punct('-')) {
      take();
      return -parse_unary();
    }
    if (is_punct('+')) {
      take();
      return parse_unary();
    }
    RationalExpr base = parse_primary();
    while (is_punct('^')) {
      take();
      int e = expect_int();
      if (e < 0 && base.num.is_zero()) fail("zero raised to a negative power");
      base = pow(base, e);
    }
    return base;
  }

  RationalExpr parse_primary() {
    if (peek().kind == Token::Number) return RationalExpr::constant(take().value);
    if (peek().kind == Token::Ident) {
      std::string name = take().text;
      if (name == "i") return RationalExpr::constant(cplx(0, 1));
      if (name == "z") return RationalExpr::variable();
      --ip_;
      fail("unknown symbol '" + name + "'");
    }
    if (is_punct('(')) {
      take();
      RationalExpr e = parse_expr();
      expect_punct(')');
      return e;
    }
    fail("expected a number, 'i', 'z' or '('");
  }

  std::vector<Token> toks_;
  size_t ip_ = 0;
};

std::string fmt_num(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool expr_equal(const RationalExpr& a, const RationalExpr& b) {
  return a.num.c == b.num.c && a.den.c == b.den.c;
}

bool expr_zero(const RationalExpr& a) { return a.num.is_zero(); }

bool region_zero(const RationalMatrix& m, int r0, int c0, int nr, int nc) {
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c)
      if (!expr_zero(m.at(r0 + r, c0 + c))) return false;
  return true;
}

void emit_matrix(std::ostringstream& out, const RationalMatrix& m, int r0, int c0,
                 int nr, int nc) {
  out << "[\n";
  for (int r = 0; r < nr; ++r) {
    out << "    [";
    for (int c = 0; c < nc; ++c) {
      if (c) out << ", ";
      out << to_string(m.at(r0 + r, c0 + c));
    }
    out << "]" << (r + 1 < nr ? "," : "") << "\n";
  }
  out << "  ]";
}

}  // namespace

Potential parse_potential(const std::string& text) { return Parser(text).run(); }

std::string serialize_potential(const Potential& p) {
  std::ostringstream out;
  out << "potential {\n";
  out << "  n = " << p.n << ";\n";
  out << "  kind = " << to_string(p.kind) << ";\n";
  out << "  basepoint = (" << fmt_num(p.basepoint.real()) << ", "
      << fmt_num(p.basepoint.imag()) << ");\n";
  out << "}\n";
  const int n = p.n;
  for (const auto& [power, term] : p.terms) {
    out << "\ncoeff[" << power << "] {\n";
    // Recognize the standard block split so files stay readable.
    bool split = true;
    for (int r = 0; r < n && split; ++r)
      for (int c = 0; c < 4 && split; ++c) {
        RationalExpr want = c == 0 ? term.at(c, 4 + r) : -term.at(c, 4 + r);
        split = expr_equal(term.at(4 + r, c), want);
      }
    if (split) {
      bool any = false;
      if (!region_zero(term, 0, 0, 4, 4)) {
        out << "  A1 = ";
        emit_matrix(out, term, 0, 0, 4, 4);
        out << ";\n";
        any = true;
      }
      if (!region_zero(term, 4, 4, n, n)) {
        out << "  A2 = ";
        emit_matrix(out, term, 4, 4, n, n);
        out << ";\n";
        any = true;
      }
      if (!region_zero(term, 0, 4, 4, n)) {
        out << "  B1 = ";
        emit_matrix(out, term, 0, 4, 4, n);
        out << ";\n";
        any = true;
      }
      if (!any) {
        out << "  A1 = ";
        emit_matrix(out, term, 0, 0, 4, 4);
        out << ";\n";
      }
    } else {
      out << "  FULL = ";
      emit_matrix(out, term, 0, 0, p.size(), p.size());
      out << ";\n";
    }
    out << "}\n";
  }
  return out.str();
}

Potential load_potential(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open potential file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_potential(buf.str());
}

// ---------------------------------------------------------------------------
// Validation and classification

namespace {

std::vector<cplx> sample_points(const Potential& p, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.2, 1.2);
  std::vector<cplx> out;
  int guard = 0;
  while (int(out.size()) < count && guard < 100 * count) {
    ++guard;
    cplx z(unif(rng), unif(rng));
    try {
      for (const auto& [power, mat] : p.terms) (void)mat.eval(z);
      out.push_back(z);
    } catch (const NumericError&) {
    }
  }
  if (out.empty()) throw NumericError("no pole-free sample points found");
  return out;
}

}  // namespace

bool PotentialValidation::ok(double tol) const {
  return null_condition <= tol && nilpotency <= tol && parity_defect <= tol &&
         algebra_defect <= tol;
}

PotentialValidation validate_normalized(const Potential& p) {
  PotentialValidation rep;
  const int n = p.n;
  rmat I1n = minkowski_form(n);
  rmat I13 = rmat::Identity(4, 4);
  I13(0, 0) = -1.0;
  for (cplx z : sample_points(p, 20, 11)) {
    for (const auto& [power, mat] : p.terms) {
      cmat A = mat.eval(z);
      rep.algebra_defect = std::max(
          rep.algebra_defect, sup_norm(A.transpose() * I1n.cast<cplx>() +
                                       I1n.cast<cplx>() * A));
      double diag_mass = std::max(sup_norm(A.topLeftCorner(4, 4)),
                                  sup_norm(A.bottomRightCorner(n, n)));
      double off_mass = std::max(sup_norm(A.topRightCorner(4, n)),
                                 sup_norm(A.bottomLeftCorner(n, 4)));
      rep.parity_defect =
          std::max(rep.parity_defect, (power % 2 != 0) ? diag_mass : off_mass);
    }
    cmat eta = p.eval(-1, z);
    cmat B = eta.topRightCorner(4, n);
    rep.null_condition = std::max(
        rep.null_condition, sup_norm(B.transpose() * I13.cast<cplx>() * B));
    rep.nilpotency = std::max(rep.nilpotency, sup_norm(eta * eta * eta));
  }
  return rep;
}

namespace {

void set_b1_term(Potential& p, const RationalMatrix& B) {
  const int m = p.size();
  RationalMatrix term(m, m);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < p.n; ++c) term.at(r, 4 + c) = B.at(r, c);
  for (int r = 0; r < p.n; ++r)
    for (int c = 0; c < 4; ++c) term.at(4 + r, c) = c == 0 ? B.at(0, r) : -B.at(c, r);
  p.terms.clear();
  p.terms.emplace(-1, std::move(term));
}

}  // namespace

Potential make_isotropic_potential(const RationalExpr& f11, const RationalExpr& f21,
                                   const RationalExpr& f31, const RationalExpr& f41) {
  RationalExpr null_expr =
      -(f11 * f11) + f21 * f21 + f31 * f31 + f41 * f41;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(-1.2, 1.2);
  double defect = 0.0, scale = 0.0;
  for (int k = 0; k < 20; ++k) {
    cplx z(unif(rng), unif(rng));
    try {
      defect = std::max(defect, std::abs(null_expr.eval(z)));
      for (const RationalExpr* f : {&f11, &f21, &f31, &f41})
        scale = std::max(scale, std::norm(f->eval(z)));
    } catch (const NumericError&) {
    }
  }
  if (defect > 1e-12 * std::max(1.0, scale))
    throw NullConditionViolated("isotropic constructor: column is not a null vector");
  Potential p;
  p.n = 2;
  p.kind = PotentialKind::normalized;
  RationalMatrix B(4, 2);
  const RationalExpr iu = RationalExpr::constant(cplx(0, 1));
  const RationalExpr* fs[4] = {&f11, &f21, &f31, &f41};
  for (int r = 0; r < 4; ++r) {
    B.at(r, 0) = *fs[r];
    B.at(r, 1) = iu * (*fs[r]);
  }
  set_b1_term(p, B);
  return p;
}

Potential make_lightlike_potential(const std::vector<RationalExpr>& f1,
                                   const std::vector<RationalExpr>& f3) {
  if (f1.size() != f3.size() || f1.empty())
    throw std::domain_error("lightlike constructor: rows must have equal positive length");
  Potential p;
  p.n = int(f1.size());
  p.kind = PotentialKind::normalized;
  RationalMatrix B(4, p.n);
  const RationalExpr iu = RationalExpr::constant(cplx(0, 1));
  for (int c = 0; c < p.n; ++c) {
    B.at(0, c) = f1[c];
    B.at(1, c) = -f1[c];
    B.at(2, c) = f3[c];
    B.at(3, c) = iu * f3[c];
  }
  set_b1_term(p, B);
  return p;
}

const char* to_string(PotentialClass c) {
  switch (c) {
    case PotentialClass::lightlike_form: return "lightlike_form";
    case PotentialClass::reducible_rank1: return "reducible_rank1";
    case PotentialClass::isotropic_form: return "isotropic_form";
    default: return "generic";
  }
}

PotentialClassification classify_potential(const Potential& p) {
  PotentialClassification out;
  auto it = p.terms.find(-1);
  if (it == p.terms.end()) {
    out.cls = PotentialClass::reducible_rank1;
    return out;
  }
  const int n = p.n;
  std::vector<cmat> Bs;
  double scale = 0.0;
  for (cplx z : sample_points(p, 20, 17)) {
    cmat B = it->second.eval(z).topRightCorner(4, n);
    scale = std::max(scale, sup_norm(B));
    Bs.push_back(std::move(B));
  }
  if (scale == 0.0) {
    out.cls = PotentialClass::reducible_rank1;
    return out;
  }
  const double tol = 1e-9 * scale;
  bool lightlike = true, isotropic = n == 2;
  for (const cmat& B : Bs) {
    out.max_rank = std::max(
        out.max_rank, int(Eigen::JacobiSVD<cmat>(B).setThreshold(1e-8).rank()));
    double row_pair = sup_norm(cmat(B.row(1) + B.row(0)));
    double iso_pair = std::min(sup_norm(cmat(B.row(3) - cplx(0, 1) * B.row(2))),
                               sup_norm(cmat(B.row(3) + cplx(0, 1) * B.row(2))));
    lightlike = lightlike && row_pair <= tol && iso_pair <= tol;
    if (isotropic) {
      double col_pair = std::min(sup_norm(cmat(B.col(1) - cplx(0, 1) * B.col(0))),
                                 sup_norm(cmat(B.col(1) + cplx(0, 1) * B.col(0))));
      isotropic = col_pair <= tol;
    }
  }
  if (lightlike)
    out.cls = PotentialClass::lightlike_form;
  else if (isotropic)
    out.cls = PotentialClass::isotropic_form;
  else if (out.max_rank <= 1)
    out.cls = PotentialClass::reducible_rank1;
  else
    out.cls = PotentialClass::generic;
  return out;
}

// ---------------------------------------------------------------------------
// Gauge action

namespace {

RationalMatrix rm_from_cmat(const cmat& m) {
  RationalMatrix out(int(m.rows()), int(m.cols()));
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) = RationalExpr::constant(m(r, c));
  return out;
}

RationalMatrix rm_mul(const RationalMatrix& a, const RationalMatrix& b) {
  RationalMatrix out(a.rows, b.cols);
  for (int r = 0; r < a.rows; ++r)
    for (int c = 0; c < b.cols; ++c) {
      RationalExpr acc;
      for (int k = 0; k < a.cols; ++k) {
        if (expr_zero(a.at(r, k)) || expr_zero(b.at(k, c))) continue;
        acc = acc + a.at(r, k) * b.at(k, c);
      }
      out.at(r, c) = std::move(acc);
    }
  return out;
}

RationalMatrix rm_add(const RationalMatrix& a, const RationalMatrix& b) {
  RationalMatrix out(a.rows, a.cols);
  for (size_t k = 0; k < out.entries.size(); ++k)
    out.entries[k] = a.entries[k] + b.entries[k];
  return out;
}

bool rm_zero(const RationalMatrix& m) {
  for (const RationalExpr& e : m.entries)
    if (!expr_zero(e)) return false;
  return true;
}

}  // namespace

Potential gauge_transform(const Potential& p, const std::map<int, RationalMatrix>& w,
                          int truncate_degree) {
  const int m = p.size();
  auto w0_it = w.find(0);
  if (w0_it == w.end() || !w0_it->second.is_constant())
    throw NumericError("gauge: leading term must be a constant matrix");
  cmat W0 = w0_it->second.eval(0.0);
  Eigen::FullPivLU<cmat> lu(W0);
  if (!lu.isInvertible()) throw NumericError("gauge: leading term is singular");

  int wmax = 0;
  for (const auto& [j, mat] : w) {
    if (j < 0) throw std::domain_error("gauge: loop must have non-negative powers");
    if (mat.rows != m || mat.cols != m) throw std::domain_error("gauge: size mismatch");
    wmax = std::max(wmax, j);
  }
  const int T = truncate_degree >= 0 ? truncate_degree
                                     : std::max(p.max_power(), 1) + wmax + 4;

  auto w_at = [&](int j) -> const RationalMatrix* {
    auto it = w.find(j);
    return it == w.end() ? nullptr : &it->second;
  };

  // Inverse series u with w * u = I, truncated at T.
  std::vector<RationalMatrix> u(T + 1);
  u[0] = rm_from_cmat(lu.inverse());
  for (int k = 1; k <= T; ++k) {
    RationalMatrix acc(m, m);
    for (int j = 1; j <= std::min(k, wmax); ++j) {
      const RationalMatrix* wj = w_at(j);
      if (wj) acc = rm_add(acc, rm_mul(*wj, u[k - j]));
    }
    u[k] = rm_mul(u[0], acc);
    for (RationalExpr& e : u[k].entries) e = -e;
  }

  Potential out;
  out.n = p.n;
  out.kind = PotentialKind::holomorphic;
  out.basepoint = p.basepoint;
  for (int q = std::min(p.min_power(), -1); q <= T; ++q) {
    RationalMatrix acc(m, m);
    for (const auto& [b, pb] : p.terms) {
      for (int a = 0; a <= T; ++a) {
        int c = q - a - b;
        if (c < 0 || c > wmax) continue;
        const RationalMatrix* wc = w_at(c);
        if (!wc) continue;
        acc = rm_add(acc, rm_mul(u[a], rm_mul(pb, *wc)));
      }
    }
    for (int a = 0; a <= T; ++a) {
      int c = q - a;
      if (c < 0 || c > wmax) continue;
      const RationalMatrix* wc = w_at(c);
      if (!wc) continue;
      acc = rm_add(acc, rm_mul(u[a], wc->derivative()));
    }
    if (!rm_zero(acc)) out.terms.emplace(q, std::move(acc));
  }
  if (out.max_power() <= -1) {
    out.kind = PotentialKind::normalized;
  } else {
    bool constant = true;
    for (const auto& [q, mat] : out.terms) constant = constant && mat.is_constant();
    if (constant) out.kind = PotentialKind::constant;
  }
  return out;
}

}  // namespace wlg
