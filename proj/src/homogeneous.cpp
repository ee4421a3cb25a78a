#include "wlg/homogeneous.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wlg/linalg.hpp"

namespace wlg {

namespace {

cmat comm(const cmat& x, const cmat& y) { return x * y - y * x; }

rmat lorentz4() {
  rmat g = rmat::Identity(4, 4);
  g(0, 0) = -1.0;
  return g;
}

// Smallest k with r^k / k! below the coefficient floor.
int exp_window(double r) {
  if (!(r > 0)) return 4;
  const double target = std::log(1e-16);
  int k = 4;
  while (k < 512 && k * std::log(r) - std::lgamma(k + 1.0) > target) ++k;
  return k;
}

int sample_count(int window) {
  int n = 64;
  while (n < 2 * window + 8) n *= 2;
  return n;
}

cmat frame_exponent(const ConstantBlocks& cb, cplx z, cplx lambda) {
  return z * (cb.off / lambda + cb.diag) +
         std::conj(z) * (lambda * cb.off.conjugate() + cb.diag.conjugate());
}

ConstantBlocks checked_blocks(const Potential& p) {
  ConstantBlocks cb = constant_blocks(p);
  HomogeneityReport rep = validate_homogeneous(cb.off, cb.diag);
  if (!rep.ok)
    throw NumericError("constant potential fails the commutation conditions");
  return cb;
}

// One-parameter flow exp(t M), with the eigendecomposition cached when it is
// well conditioned and a scaling-and-squaring call per evaluation otherwise.
class FlowCache {
 public:
  explicit FlowCache(cmat m) : m_(std::move(m)) {
    Eigen::ComplexEigenSolver<cmat> es(m_);
    if (es.info() != Eigen::Success) return;
    v_ = es.eigenvectors();
    ev_ = es.eigenvalues();
    vinv_ = Eigen::PartialPivLU<cmat>(v_).inverse();
    const double recon = sup_norm(v_ * ev_.asDiagonal() * vinv_ - m_);
    eig_ok_ = v_.norm() * vinv_.norm() < 1e6 &&
              recon < 1e-11 * (1.0 + sup_norm(m_));
  }

  cmat at(double t) const {
    if (!eig_ok_) return matrix_exp(t * m_);
    const cvec ph = (t * ev_.array()).exp();
    return v_ * ph.asDiagonal() * vinv_;
  }

 private:
  cmat m_, v_, vinv_;
  cvec ev_;
  bool eig_ok_ = false;
};

Potential assemble_constant(int n, const cmat& B1, const cmat& A1,
                            const cmat& A2) {
  const int m = n + 4;
  cmat off = cmat::Zero(m, m);
  off.topRightCorner(4, n) = B1;
  off.bottomLeftCorner(n, 4) = -B1.transpose() * lorentz4().cast<cplx>();
  cmat diag = cmat::Zero(m, m);
  diag.topLeftCorner(4, 4) = A1;
  diag.bottomRightCorner(n, n) = A2;

  auto to_rm = [m](const cmat& mat) {
    RationalMatrix rm(m, m);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        if (mat(r, c) != cplx(0, 0)) rm.at(r, c) = RationalExpr::constant(mat(r, c));
    return rm;
  };

  Potential p;
  p.n = n;
  p.kind = PotentialKind::constant;
  p.basepoint = cplx(0, 0);
  if (sup_norm(off) > 0) p.terms[-1] = to_rm(off);
  if (sup_norm(diag) > 0) p.terms[0] = to_rm(diag);
  return p;
}

}  // namespace

ConstantBlocks constant_blocks(const Potential& p) {
  const int m = p.size();
  ConstantBlocks cb{cmat::Zero(m, m), cmat::Zero(m, m)};
  for (const auto& [power, term] : p.terms) {
    if (power < -1 || power > 0)
      throw std::invalid_argument(
          "constant potential: only powers -1 and 0 are allowed");
    if (term.rows != m || term.cols != m)
      throw std::invalid_argument("constant potential: coefficient size mismatch");
    if (!term.is_constant())
      throw std::invalid_argument(
          "constant potential: coefficients must not depend on z");
    (power == -1 ? cb.off : cb.diag) = term.eval(cplx(0, 0));
  }
  return cb;
}

HomogeneityReport validate_homogeneous(const cmat& eta_m1, const cmat& eta_0,
                                       double tol) {
  const int m = static_cast<int>(eta_m1.rows());
  if (eta_m1.cols() != m || eta_0.rows() != m || eta_0.cols() != m || m < 5)
    throw std::invalid_argument(
        "validate_homogeneous: square blocks of size n + 4 expected");
  const int n = m - 4;
  const cmat form = minkowski_form(n).cast<cplx>();
  const double scale = std::max({sup_norm(eta_m1), sup_norm(eta_0), 1.0});
  double pattern = std::max({sup_norm(cmat(eta_m1.topLeftCorner(4, 4))),
                             sup_norm(cmat(eta_m1.bottomRightCorner(n, n))),
                             sup_norm(cmat(eta_0.topRightCorner(4, n))),
                             sup_norm(cmat(eta_0.bottomLeftCorner(n, 4)))});
  pattern = std::max(pattern, sup_norm(eta_m1.transpose() * form + form * eta_m1));
  pattern = std::max(pattern, sup_norm(eta_0.transpose() * form + form * eta_0));
  if (pattern > 10 * tol * scale)
    throw std::invalid_argument(
        "validate_homogeneous: blocks do not match the potential shape");

  HomogeneityReport rep;
  rep.mixed_bracket = sup_norm(comm(eta_m1, eta_0.conjugate()));
  rep.balanced_bracket = sup_norm(comm(eta_m1, eta_m1.conjugate()) +
                                  comm(eta_0, eta_0.conjugate()));
  rep.ok = rep.mixed_bracket < tol && rep.balanced_bracket < tol;
  rep.watch_one_based = eta_0(0, 2) + eta_0(1, 2);
  rep.watch_zero_based = eta_0(1, 3) + eta_0(2, 3);
  return rep;
}

HomogeneityReport validate_homogeneous(const Potential& p, double tol) {
  ConstantBlocks cb = constant_blocks(p);
  return validate_homogeneous(cb.off, cb.diag, tol);
}

TwistedLoop homogeneous_frame(const Potential& eta, cplx z) {
  ConstantBlocks cb = checked_blocks(eta);
  const int window = exp_window(std::abs(z) * sup_norm(cb.off));
  const int N = sample_count(window);
  std::vector<cmat> samples(N);
  for (int k = 0; k < N; ++k) {
    const cplx lam = std::polar(1.0, 2.0 * pi * k / N);
    samples[k] = matrix_exp(frame_exponent(cb, z, lam));
  }
  TwistedLoop f = loop_from_samples(samples, eta.n, window, window);
  f.enforce_parity();
  return f;
}

cmat homogeneous_frame_at(const Potential& eta, cplx z, cplx lambda) {
  if (lambda == cplx(0, 0))
    throw std::invalid_argument("homogeneous_frame_at: lambda must be nonzero");
  ConstantBlocks cb = checked_blocks(eta);
  return matrix_exp(frame_exponent(cb, z, lambda));
}

SurfaceGrid homogeneous_surface(const Potential& eta, const GridSpec& grid,
                                cplx lambda) {
  if (lambda == cplx(0, 0))
    throw std::invalid_argument("homogeneous_surface: lambda must be nonzero");
  ConstantBlocks cb = checked_blocks(eta);
  const cmat x = cb.off / lambda + cb.diag;
  const cmat xc = lambda * cb.off.conjugate() + cb.diag.conjugate();
  FlowCache flow_u(x + xc);
  FlowCache flow_v(cplx(0, 1) * (x - xc));

  SurfaceGrid sg;
  sg.grid = grid;
  sg.n = eta.n;
  sg.mask.assign(grid.count(), PointStatus::ok);
  sg.points.assign(grid.count(), rvec());
  sg.omega.assign(grid.count(), std::numeric_limits<double>::quiet_NaN());
  sg.energy_density.assign(grid.count(),
                           std::numeric_limits<double>::quiet_NaN());

  std::vector<cmat> col(grid.v_count);
  for (int iv = 0; iv < grid.v_count; ++iv)
    col[iv] = flow_v.at(grid.v_min + iv * grid.dv());
  for (int iu = 0; iu < grid.u_count; ++iu) {
    const cmat row = flow_u.at(grid.u_min + iu * grid.du());
    for (int iv = 0; iv < grid.v_count; ++iv) {
      const int idx = grid.index(iu, iv);
      try {
        sg.points[idx] = frame_to_immersion(cmat(row * col[iv]));
      } catch (const NumericError&) {
        sg.mask[idx] = PointStatus::cell_boundary;
      }
    }
  }
  return sg;
}

double period_defect(const Potential& eta, cplx delta, cplx lambda, int probes) {
  ConstantBlocks cb = checked_blocks(eta);
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    const cplx z(0.63 * k - 0.31 * (probes - 1), 0.41 * k + 0.13);
    const rvec y0 = frame_to_immersion(matrix_exp(frame_exponent(cb, z, lambda)));
    const rvec y1 =
        frame_to_immersion(matrix_exp(frame_exponent(cb, z + delta, lambda)));
    worst = std::max(worst, (y0 - y1).cwiseAbs().maxCoeff());
  }
  return worst;
}

const char* to_string(VacuumClass c) {
  switch (c) {
    case VacuumClass::reduces_lorentz:
      return "reduces_lorentz";
    case VacuumClass::reduces_compact:
      return "reduces_compact";
    case VacuumClass::invalid:
      return "invalid";
  }
  return "?";
}

VacuumReport vacuum_classify(const cmat& B1, double tol) {
  if (B1.rows() != 4 || B1.cols() < 1)
    throw std::invalid_argument("vacuum_classify: expected a 4 x n block");
  const int n = static_cast<int>(B1.cols());
  const cmat g4 = lorentz4().cast<cplx>();

  VacuumReport rep;
  rep.isotropy_defect = sup_norm(B1.transpose() * g4 * B1);
  cmat B = cmat::Zero(n + 4, n + 4);
  B.topRightCorner(4, n) = B1;
  B.bottomLeftCorner(n, 4) = -B1.transpose() * g4;
  rep.bracket_defect = sup_norm(comm(B, B.conjugate()));

  Eigen::JacobiSVD<cmat> svd(B1, Eigen::ComputeFullU);
  const double s0 = svd.singularValues()(0);
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > std::max(tol, tol * s0)) ++rep.rank;
  if (rep.rank != 1 ||
      rep.isotropy_defect > 10 * tol * std::max(1.0, s0 * s0)) {
    rep.cls = VacuumClass::invalid;
    return rep;
  }

  cvec v0 = svd.matrixU().col(0);
  int lead = 0;
  for (int i = 1; i < 4; ++i)
    if (std::abs(v0(i)) > std::abs(v0(lead))) lead = i;
  v0 *= std::polar(1.0, -std::arg(v0(lead)));
  rep.generator = v0;
  rep.hermitian_pairing = -std::norm(v0(0)) + v0.tail(3).squaredNorm();
  rep.cls = std::abs(rep.hermitian_pairing) < tol ? VacuumClass::reduces_lorentz
                                                  : VacuumClass::reduces_compact;
  return rep;
}

Potential cylinder_potential(double a, double b) {
  if (std::abs(a * a + b * b - 1.0) > 1e-12)
    throw std::invalid_argument("cylinder_potential: a^2 + b^2 = 1 required");
  const cplx I(0, 1);
  const double q = 1.0 / (4.0 * std::sqrt(2.0));

  cmat B1 = cmat::Zero(4, 2);
  B1(0, 0) = I * a * b / (2.0 * std::sqrt(2.0));
  B1(1, 0) = -B1(0, 0);
  B1(2, 1) = I * b / 2.0;
  B1(3, 1) = I * B1(2, 1);  // fourth row is i times the third in this block

  cmat A1 = cmat::Zero(4, 4);
  A1(0, 2) = q;
  A1(0, 3) = -I * (1.0 + 2.0 * a * a) * q;
  A1(1, 2) = 3.0 * q;
  A1(1, 3) = -I * (1.0 + 2.0 * b * b) * q;
  A1(2, 0) = A1(0, 2);
  A1(2, 1) = -A1(1, 2);
  A1(3, 0) = A1(0, 3);
  A1(3, 1) = -A1(1, 3);

  cmat A2 = cmat::Zero(2, 2);
  A2(0, 1) = -a / 2.0;
  A2(1, 0) = a / 2.0;
  return assemble_constant(2, B1, A1, A2);
}

Potential ejiri_potential(double b) {
  if (!(b > 0))
    throw std::invalid_argument("ejiri_potential: b > 0 required");
  const cplx I(0, 1);
  const double b2 = b * b;
  const double rt2 = std::sqrt(2.0);
  const double k1 = std::sqrt(4.0 * b2 + 2.0) / (12.0 * b);
  const cplx k2 = -I * std::sqrt(3.0) / 6.0;
  const cplx beta3 = -I * rt2 * (4.0 * b2 - 1.0) / (72.0 * b2);
  const cplx a13 = -I * std::sqrt(2.0 * b2 + 1.0) / (6.0 * b);
  const double a23 = std::sqrt(6.0) / 6.0;
  const double s1 = rt2 * (20.0 * b2 + 1.0) / (144.0 * b2);
  const cplx s2 = -I * rt2 * (12.0 * b2 - 1.0) / (48.0 * b2);
  const double s3 = rt2 * (52.0 * b2 - 1.0) / (144.0 * b2);
  const cplx s4 = -I * rt2 * (12.0 * b2 + 1.0) / (48.0 * b2);

  cmat B1 = cmat::Zero(4, 3);
  B1(0, 2) = rt2 * beta3;
  B1(1, 2) = -B1(0, 2);
  B1(2, 0) = -k1;
  B1(3, 0) = -I * k1;
  B1(2, 1) = -k2;
  B1(3, 1) = -I * k2;

  cmat A1 = cmat::Zero(4, 4);
  A1(0, 2) = s1;
  A1(0, 3) = s2;
  A1(1, 2) = s3;
  A1(1, 3) = s4;
  A1(2, 0) = s1;
  A1(2, 1) = -s3;
  A1(3, 0) = s2;
  A1(3, 1) = -s4;

  cmat A2 = cmat::Zero(3, 3);
  A2(0, 2) = -a13;
  A2(1, 2) = -a23;
  A2(2, 0) = a13;
  A2(2, 1) = a23;
  return assemble_constant(3, B1, A1, A2);
}

TorusEnergy torus_energy(int j, int l) {
  if (j <= 0 || l <= 0 || std::gcd(j, l) != 1)
    throw std::invalid_argument("torus_energy: coprime positive integers required");
  const double b = static_cast<double>(l) / j;
  ConstantBlocks cb = constant_blocks(ejiri_potential(b));
  const double density =
      4.0 * (std::norm(cb.off(2, 4)) + std::norm(cb.off(2, 5)));

  const double u1 = 2.0 * pi;
  const double v1 = 2.0 * pi * l * std::sqrt(3.0);
  const int nu = 32, nv = 32;
  auto w = [](int i, int m) { return i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double sum = 0.0;
  for (int iu = 0; iu <= nu; ++iu)
    for (int iv = 0; iv <= nv; ++iv) sum += w(iu, nu) * w(iv, nv) * density;

  TorusEnergy te;
  te.quadrature = sum * (u1 / nu) * (v1 / nv) / 9.0;
  te.closed_form = 16.0 * pi * pi * std::sqrt(3.0) / 9.0 *
                   (l + static_cast<double>(j) * j / (8.0 * l));
  return te;
}

}  // namespace wlg
