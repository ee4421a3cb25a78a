#include "wlg/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <random>

namespace wlg {

rmat minkowski_form(int n) {
  if (n < 1) throw std::domain_error("minkowski_form: codimension must be >= 1");
  rmat I = rmat::Identity(n + 4, n + 4);
  I(0, 0) = -1.0;
  return I;
}

bool is_in_algebra(const cmat& X, const rmat& form, double tol) {
  if (X.rows() != X.cols() || X.rows() != form.rows())
    throw std::domain_error("is_in_algebra: size mismatch");
  return sup_norm(X.transpose() * form + form * X) <= tol;
}

GroupMembership is_in_group(const cmat& M, const rmat& form, double tol) {
  if (M.rows() != M.cols() || M.rows() != form.rows())
    throw std::domain_error("is_in_group: size mismatch");
  const auto m = M.rows();
  double orth = sup_norm(M.transpose() * form * M - form.cast<cplx>());
  cplx det = M.determinant();
  if (orth > tol || std::abs(det - 1.0) > std::max(tol, 1e3 * tol * double(m)))
    return GroupMembership::none;
  if (M.imag().cwiseAbs().maxCoeff() > tol) return GroupMembership::complex_group;
  return M(0, 0).real() >= 1.0 - tol ? GroupMembership::real_plus
                                     : GroupMembership::real_other;
}

const char* to_string(GroupMembership m) {
  switch (m) {
    case GroupMembership::complex_group: return "complex_group";
    case GroupMembership::real_plus: return "real_plus";
    case GroupMembership::real_other: return "real_other";
    default: return "none";
  }
}

CartanSplit cartan_split(const cmat& X, int n, double tol) {
  rmat form = minkowski_form(n);
  if (!is_in_algebra(X, form, tol))
    throw std::domain_error("cartan_split: input is not an algebra element");
  const auto m = X.rows();
  CartanSplit out{cmat::Zero(m, m), cmat::Zero(m, m)};
  out.k_part.topLeftCorner(4, 4) = X.topLeftCorner(4, 4);
  out.k_part.bottomRightCorner(n, n) = X.bottomRightCorner(n, n);
  out.p_part.topRightCorner(4, n) = X.topRightCorner(4, n);
  out.p_part.bottomLeftCorner(n, 4) = X.bottomLeftCorner(n, 4);
  return out;
}

cmat matrix_exp(const cmat& X) {
  if (!X.allFinite()) throw NumericError("matrix_exp: non-finite input");
  return X.exp();
}

cmat matrix_sqrt(const cmat& X) { return X.sqrt(); }

cmat random_algebra_element(int n, double scale, int parity, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto rnd = [&] { return cplx(gauss(rng), gauss(rng)); };
  const int m = n + 4;
  rmat I13 = rmat::Identity(4, 4);
  I13(0, 0) = -1.0;
  cmat X = cmat::Zero(m, m);
  if (parity != 1) {
    cmat L(4, 4), O(n, n);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) L(r, c) = rnd();
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) O(r, c) = rnd();
    X.topLeftCorner(4, 4) = 0.5 * (L - I13 * L.transpose() * I13) * scale;
    X.bottomRightCorner(n, n) = 0.5 * (O - O.transpose()) * scale;
  }
  if (parity != 0) {
    cmat B(4, n);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < n; ++c) B(r, c) = rnd();
    B *= scale;
    X.topRightCorner(4, n) = B;
    X.bottomLeftCorner(n, 4) = -B.transpose() * I13;
  }
  return X;
}

}  // namespace wlg
