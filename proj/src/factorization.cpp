#include "wlg/factorization.hpp"
#include "wlg/linalg.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace wlg {

namespace {

int next_pow2(int v) {
  int p = 1;
  while (p < v) p <<= 1;
  return p;
}

// Hager/Higham 1-norm estimate of ||A^{-1}||_1 from a ready LU of A.
double inverse_norm1_estimate(const Eigen::PartialPivLU<cmat>& lu, int dim) {
  cvec x = cvec::Constant(dim, cplx(1.0 / dim, 0.0));
  double est = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    cvec y = lu.solve(x);
    est = y.cwiseAbs().sum();
    cvec xi(dim);
    for (int i = 0; i < dim; ++i) {
      double a = std::abs(y(i));
      xi(i) = a > 0 ? y(i) / a : cplx(1.0, 0.0);
    }
    cvec z = lu.adjoint().solve(xi);
    int jmax = 0;
    double zmax = 0.0;
    for (int i = 0; i < dim; ++i)
      if (std::abs(z(i)) > zmax) { zmax = std::abs(z(i)); jmax = i; }
    if (zmax <= std::real(z.dot(x))) break;
    x.setZero();
    x(jmax) = 1.0;
  }
  return est;
}

struct ToeplitzSolve {
  std::vector<cmat> h;  // h[l] = coefficient of power -l, l = 0..depth
  double condition = 0.0;
};

// Solve (h * g)_{<0} = 0 for a minus loop h with h_0 = I, truncated at depth.
ToeplitzSolve solve_minus_factor(const TwistedLoop& g, int depth) {
  const int m = g.size();
  const int dim = depth * m;
  cmat T = cmat::Zero(dim, dim);
  cmat R = cmat::Zero(m, dim);
  auto gc = [&](int j) -> cmat {
    return g.has(j) ? g.coeff(j) : cmat::Zero(m, m);
  };
  for (int mm = 1; mm <= depth; ++mm) {
    R.middleCols((mm - 1) * m, m) = -gc(-mm);
    for (int l = 1; l <= depth; ++l)
      T.block((l - 1) * m, (mm - 1) * m, m, m) = gc(l - mm);
  }
  // H * T = R  <=>  T^t H^t = R^t
  cmat Tt = T.transpose();
  Eigen::PartialPivLU<cmat> lu(Tt);
  cmat Ht = lu.solve(R.transpose());
  double cond = Tt.cwiseAbs().colwise().sum().maxCoeff() *
                inverse_norm1_estimate(lu, dim);
  ToeplitzSolve out;
  out.condition = cond;
  out.h.resize(depth + 1);
  out.h[0] = cmat::Identity(m, m);
  cmat H = Ht.transpose();
  for (int l = 1; l <= depth; ++l) out.h[l] = H.middleCols((l - 1) * m, m);
  if (!H.allFinite()) throw BigCellViolation("birkhoff: singular Toeplitz system");
  return out;
}

cmat eval_minus(const std::vector<cmat>& h, cplx lambda) {
  // sum_l h[l] lambda^{-l}, Horner in 1/lambda
  cplx mu = 1.0 / lambda;
  cmat acc = h.back();
  for (int l = int(h.size()) - 2; l >= 0; --l) acc = acc * mu + h[l];
  return acc;
}

std::vector<cplx> offset_probes(int count) {
  std::vector<cplx> out(count);
  for (int k = 0; k < count; ++k)
    out[k] = std::polar(1.0, 2.0 * pi * (k + 0.3) / count);
  return out;
}

}  // namespace

const char* to_string(Cell c) {
  switch (c) {
    case Cell::identity_cell: return "identity_cell";
    case Cell::second_cell: return "second_cell";
    case Cell::boundary: return "boundary";
    default: return "unknown";
  }
}

rmat second_cell_representative(int n) {
  rmat d = rmat::Identity(n + 4, n + 4);
  d(0, 0) = -1.0;
  d(4, 4) = -1.0;
  return d;
}

std::tuple<TwistedLoop, TwistedLoop, FactorizationReport> birkhoff(
    const TwistedLoop& g, const BirkhoffOptions& opt) {
  const int jmax = std::max(g.d_neg, g.d_pos);
  const int depth = opt.depth > 0 ? opt.depth : std::max(3 * jmax, 12);
  ToeplitzSolve ts = solve_minus_factor(g, depth);
  if (ts.condition > opt.cond_threshold)
    throw BigCellViolation("birkhoff: condition estimate " +
                           std::to_string(ts.condition) + " above threshold");
  TwistedLoop h(g.n, depth, 0);
  for (int l = 0; l <= depth; ++l) h.coeff(-l) = ts.h[l];
  h.enforce_parity();
  TwistedLoop g_plus = multiply(h, g, 0, g.d_pos);
  g_plus.enforce_parity();
  const int N = next_pow2(std::max(64, 4 * depth));
  TwistedLoop g_minus = invert(h, N, depth, 0);

  FactorizationReport rep;
  rep.condition = ts.condition;
  for (cplx l : offset_probes(16)) {
    cmat defect = evaluate(g_minus, l) * evaluate(g_plus, l) - evaluate(g, l);
    rep.residual = std::max(rep.residual, sup_norm(defect));
  }
  rep.cell = Cell::identity_cell;
  return {g_minus, g_plus, rep};
}

cmat s1_chart(double a12, double a34, cplx a13, cplx a23) {
  cmat expB = cmat::Zero(4, 4);
  expB(0, 0) = expB(1, 1) = std::cos(a12);
  expB(0, 1) = expB(1, 0) = cplx(0, 1) * std::sin(a12);
  expB(2, 2) = expB(3, 3) = std::cosh(a34);
  expB(2, 3) = cplx(0, 1) * std::sinh(a34);
  expB(3, 2) = -expB(2, 3);
  cmat C = cmat::Zero(4, 4);
  const cplx i(0, 1);
  C(0, 2) = a13; C(0, 3) = i * a13;
  C(1, 2) = a23; C(1, 3) = i * a23;
  C(2, 0) = a13; C(2, 1) = -a23;
  C(3, 0) = i * a13; C(3, 1) = -i * a23;
  cmat expC = cmat::Identity(4, 4) + C + 0.5 * (C * C);
  return expB * expC;
}

namespace {

cmat s1_chart_of(const Eigen::Matrix<double, 6, 1>& x) {
  return s1_chart(x(0), x(1), cplx(x(2), x(3)), cplx(x(4), x(5)));
}

cmat s1_chart_inverse_of(const Eigen::Matrix<double, 6, 1>& x) {
  // (exp(B) exp(C))^{-1} = exp(-C) exp(-B), both in closed form
  cmat sB = s1_chart(-x(0), -x(1), cplx(0, 0), cplx(0, 0));
  cmat sC = s1_chart(0, 0, cplx(-x(2), -x(3)), cplx(-x(4), -x(5)));
  return sC * sB;
}

}  // namespace

std::optional<std::pair<rmat, cmat>> lorentz_normalize(const cmat& k0L) {
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  rmat I13 = rmat::Identity(4, 4);
  I13(0, 0) = -1.0;

  auto resid = [&](const Vec6& x) {
    cmat r = k0L * s1_chart_inverse_of(x);
    Eigen::Matrix<double, 16, 1> v;
    for (int k = 0; k < 16; ++k) v(k) = r(k / 4, k % 4).imag();
    return v;
  };

  auto run_newton = [&](Vec6 x) -> std::optional<Vec6> {
    for (int it = 0; it < 80; ++it) {
      Eigen::Matrix<double, 16, 1> r = resid(x);
      double base = r.cwiseAbs().maxCoeff();
      if (base < 1e-12) return x;
      Eigen::Matrix<double, 16, 6> J;
      const double h = 1e-7;
      for (int c = 0; c < 6; ++c) {
        Vec6 xp = x, xm = x;
        xp(c) += h;
        xm(c) -= h;
        J.col(c) = (resid(xp) - resid(xm)) / (2 * h);
      }
      Vec6 dx = J.colPivHouseholderQr().solve(-r);
      if (!dx.allFinite()) return std::nullopt;
      double t = 1.0;
      while (t > 1e-6 && resid(x + t * dx).cwiseAbs().maxCoeff() >= base) t /= 2;
      if (t <= 1e-6) return std::nullopt;
      x += t * dx;
    }
    return std::nullopt;
  };

  std::optional<Vec6> sol;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 8 && !sol; ++trial) {
    Vec6 x0 = Vec6::Zero();
    if (trial > 0)
      for (int k = 0; k < 6; ++k) x0(k) = gauss(rng) * (0.3 + 0.3 * trial);
    sol = run_newton(x0);
  }
  if (!sol) return std::nullopt;
  if (resid(*sol).cwiseAbs().maxCoeff() > 1e-9) return std::nullopt;

  cmat s = s1_chart_of(*sol);
  cmat krc = k0L * s1_chart_inverse_of(*sol);
  rmat kr = krc.real();
  if (kr(0, 0) < 0) {
    rmat F2 = rmat::Identity(4, 4);
    F2(0, 0) = F2(1, 1) = -1.0;
    kr = kr * F2;
    s = F2 * s;
  }
  if (sup_norm((kr.transpose() * I13 * kr - I13).cast<cplx>()) > 1e-8 ||
      kr(0, 0) < 1.0 - 1e-8)
    return std::nullopt;
  return std::make_pair(kr, s);
}

namespace {

cmat isotropic_basis(int n) {
  cmat U = cmat::Zero(n, n);
  const double r = 1.0 / std::sqrt(2.0);
  const cplx i(0, 1);
  int half = n / 2;
  for (int k = 0; k < half; ++k) {
    U(2 * k, k) = r;
    U(2 * k + 1, k) = -i * r;
    U(2 * k, n - 1 - k) = r;
    U(2 * k + 1, n - 1 - k) = i * r;
  }
  if (n % 2 == 1) U(n - 1, half) = 1.0;
  return U;
}

}  // namespace

std::pair<cmat, cmat> compact_normalize(const cmat& k0O) {
  const int n = int(k0O.rows());
  if (n == 0) return {k0O, k0O};
  if (n == 1) {
    cmat q(1, 1), b(1, 1);
    q(0, 0) = k0O(0, 0).real();
    b(0, 0) = 1.0;
    return {q, b};
  }
  cmat U = isotropic_basis(n);
  cmat H = k0O.adjoint() * k0O;
  cmat Hn = U.adjoint() * H * U;
  Eigen::LLT<cmat> llt(0.5 * (Hn + Hn.adjoint()));
  if (llt.info() != Eigen::Success)
    throw NotInCell("compact_normalize: Gram matrix not positive definite");
  cmat Rn = cmat(llt.matrixL()).adjoint();
  cmat b = U * Rn * U.adjoint();
  cmat q = k0O * b.inverse();
  return {q, b};
}

std::pair<rmat, cmat> k_factor_normalize(const cmat& k0, int n,
                                         double* newton_residual) {
  const int m = n + 4;
  if (k0.rows() != m || k0.cols() != m)
    throw std::domain_error("k_factor_normalize: size mismatch");
  if (sup_norm(k0.topRightCorner(4, n)) > 1e-8 ||
      sup_norm(k0.bottomLeftCorner(n, 4)) > 1e-8)
    throw std::domain_error("k_factor_normalize: input not block-diagonal");
  auto lres = lorentz_normalize(k0.topLeftCorner(4, 4));
  if (!lres) throw NotInCell("k_factor_normalize: Lorentz block outside the cell");
  auto [q, b] = compact_normalize(k0.bottomRightCorner(n, n));
  if (sup_norm(q * q.transpose() - cmat::Identity(n, n)) > 1e-8 ||
      q.imag().cwiseAbs().maxCoeff() > 1e-8)
    throw NotInCell("k_factor_normalize: compact block outside the cell");
  rmat kr = rmat::Zero(m, m);
  cmat s = cmat::Zero(m, m);
  kr.topLeftCorner(4, 4) = lres->first;
  kr.bottomRightCorner(n, n) = q.real();
  s.topLeftCorner(4, 4) = lres->second;
  s.bottomRightCorner(n, n) = b;
  if (newton_residual) {
    cmat r = k0.topLeftCorner(4, 4) * lres->second.inverse();
    *newton_residual = r.imag().cwiseAbs().maxCoeff();
  }
  return {kr, s};
}

double s_membership_defect(const cmat& s, int n) {
  double defect = 0.0;
  auto lres = lorentz_normalize(s.topLeftCorner(4, 4));
  if (!lres) return std::numeric_limits<double>::infinity();
  defect = sup_norm((lres->first - rmat::Identity(4, 4)).cast<cplx>());
  if (n > 0) {
    auto [q, b] = compact_normalize(s.bottomRightCorner(n, n));
    defect = std::max(defect, sup_norm(q - cmat::Identity(n, n)));
  }
  defect = std::max({defect, sup_norm(s.topRightCorner(4, n)),
                     sup_norm(s.bottomLeftCorner(n, 4))});
  return defect;
}

IwasawaSamples iwasawa_from_samples(const std::vector<cmat>& gs, int n,
                                    int depth, double cond_threshold) {
  const int N = int(gs.size());
  const int m = n + 4;
  std::vector<cmat> Ws(N);
  for (int k = 0; k < N; ++k) {
    // On the unit circle tau(g)(lambda) = conj(g(lambda)).
    cmat tg = gs[k].conjugate();
    Ws[k] = Eigen::PartialPivLU<cmat>(tg).solve(gs[k]);
  }
  TwistedLoop W = loop_from_samples(Ws, n, depth, depth);
  ToeplitzSolve ts = solve_minus_factor(W, depth);
  if (ts.condition > cond_threshold)
    throw CellBoundary("iwasawa: Birkhoff condition estimate " +
                       std::to_string(ts.condition) + " above threshold");
  cmat c = cmat::Zero(m, m);
  for (int l = 0; l <= depth; ++l) c += ts.h[l] * W.coeff(l);

  cmat k0 = cmat::Zero(m, m);
  k0.topLeftCorner(4, 4) = matrix_sqrt(cmat(c.topLeftCorner(4, 4)));
  k0.bottomRightCorner(n, n) = matrix_sqrt(cmat(c.bottomRightCorner(n, n)));
  if (!k0.allFinite()) throw CellBoundary("iwasawa: constant term has no square root");

  IwasawaSamples out;
  cmat target = k0.inverse().conjugate();
  rmat kr;
  try {
    kr = k_factor_normalize(target, n, &out.newton_residual).first;
  } catch (const NotInCell& e) {
    throw CellBoundary(std::string("iwasawa: ") + e.what());
  }
  cmat k = k0 * kr.cast<cplx>();
  out.vp0 = Eigen::PartialPivLU<cmat>(c).solve(k);
  out.condition = ts.condition;

  out.f.resize(N);
  for (int k2 = 0; k2 < N; ++k2) {
    cplx lambda = std::polar(1.0, 2.0 * pi * k2 / N);
    cmat Wp = eval_minus(ts.h, lambda) * Ws[k2];
    out.f[k2] = gs[k2] * Eigen::PartialPivLU<cmat>(Wp).solve(k);
  }
  for (int k2 = 0; k2 < N; ++k2)
    out.reality_defect =
        std::max(out.reality_defect, sup_norm(out.f[k2] - out.f[k2].conjugate()));
  const cmat& f1 = out.f[0];
  out.orthochronous =
      f1.imag().cwiseAbs().maxCoeff() < 1e-6 && f1(0, 0).real() > 0.0;
  return out;
}

IwasawaResult iwasawa(const TwistedLoop& g, const IwasawaOptions& opt) {
  const int jmax = std::max(g.d_neg, g.d_pos);
  const int depth = opt.depth > 0 ? opt.depth : std::max(3 * jmax, 12);
  const int N = opt.samples > 0 ? opt.samples
                                : next_pow2(std::max(64, 6 * depth));
  IwasawaSamples samples =
      iwasawa_from_samples(sample_loop(g, N), g.n, depth, opt.cond_threshold);

  IwasawaResult out;
  const int dw = depth + jmax;
  out.f = loop_from_samples(samples.f, g.n, dw, dw);
  out.f.enforce_parity();
  std::vector<cmat> vps(N);
  for (int k = 0; k < N; ++k) {
    cplx lambda = std::polar(1.0, 2.0 * pi * k / N);
    vps[k] = Eigen::PartialPivLU<cmat>(evaluate(g, lambda)).solve(samples.f[k]);
  }
  out.v_plus = loop_from_samples(vps, g.n, 0, dw);
  out.v_plus.enforce_parity();
  out.vp0 = samples.vp0;

  out.report.condition = samples.condition;
  out.report.newton_residual = samples.newton_residual;
  out.report.orthochronous = samples.orthochronous;
  out.report.cell =
      samples.orthochronous ? Cell::identity_cell : Cell::unknown;
  double prod_res = 0.0, real_res = 0.0;
  for (cplx l : offset_probes(16)) {
    prod_res = std::max(prod_res, sup_norm(evaluate(g, l) * evaluate(out.v_plus, l) -
                                           evaluate(out.f, l)));
    real_res = std::max(
        real_res, sup_norm(evaluate(tau(out.f), l) - evaluate(out.f, l)));
  }
  out.report.residual = prod_res;
  out.report.reality_defect = std::max(real_res, samples.reality_defect);
  return out;
}

Cell cell_classify(const TwistedLoop& g) {
  bool boundary_seen = false;
  auto attempt = [&](const TwistedLoop& loop) -> int {
    try {
      IwasawaResult r = iwasawa(loop);
      return r.report.orthochronous ? 1 : 0;
    } catch (const CellBoundary&) {
      boundary_seen = true;
      return 0;
    } catch (const BigCellViolation&) {
      boundary_seen = true;
      return 0;
    } catch (const NumericError&) {
      return 0;
    }
  };
  if (attempt(g) == 1) return Cell::identity_cell;
  rmat d0 = second_cell_representative(g.n);
  TwistedLoop shifted = g;
  for (int j = -g.d_neg; j <= g.d_pos; ++j)
    shifted.coeff(j) = d0 * shifted.coeff(j);
  if (attempt(shifted) == 1) return Cell::second_cell;
  return boundary_seen ? Cell::boundary : Cell::unknown;
}

}  // namespace wlg
