#include "wlg/wu.hpp"

#include "wlg/frame_field.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace wlg {

cmat BivariateTaylor::eval(cplx z, cplx zbar) const {
  cmat out = cmat::Zero(rows, cols);
  cplx za(1, 0);
  for (int a = 0; a <= degree; ++a) {
    cplx w = za;
    for (int b = 0; a + b <= degree; ++b) {
      out += coeff(a, b) * w;
      w *= zbar;
    }
    za *= z;
  }
  return out;
}

std::vector<cmat> holomorphic_part(const BivariateTaylor& t) {
  std::vector<cmat> out(t.degree + 1);
  for (int a = 0; a <= t.degree; ++a) out[a] = t.coeff(a, 0);
  return out;
}

namespace {

struct Monomial {
  int a, b;
};

std::vector<Monomial> monomials(int degree) {
  std::vector<Monomial> ms;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; a + b <= degree; ++b) ms.push_back({a, b});
  return ms;
}

double sample_scale(const std::vector<cplx>& zs) {
  double rmax = 0;
  for (cplx z : zs) rmax = std::max(rmax, std::abs(z));
  return rmax > 0 ? rmax : 1.0;
}

}  // namespace

BivariateTaylor fit_bivariate_taylor(const std::vector<cplx>& zs,
                                     const std::vector<cmat>& vals, int degree) {
  if (zs.empty() || vals.size() != zs.size())
    throw std::invalid_argument("taylor fit: sample arrays empty or mismatched");
  const int rows = int(vals[0].rows()), cols = int(vals[0].cols());
  const double rmax = sample_scale(zs);
  const int S = int(zs.size());

  for (int deg = degree; deg >= 0; --deg) {
    auto ms = monomials(deg);
    const int K = int(ms.size());
    if (K > S) continue;
    cmat V(S, K);
    for (int s = 0; s < S; ++s) {
      cplx w = zs[s] / rmax;
      for (int k = 0; k < K; ++k)
        V(s, k) = std::pow(w, ms[k].a) * std::pow(std::conj(w), ms[k].b);
    }
    Eigen::ColPivHouseholderQR<cmat> qr(V);
    qr.setThreshold(1e-10);
    if (qr.rank() < K) continue;  // basis degenerates on this sample set

    cmat rhs(S, rows * cols);
    for (int s = 0; s < S; ++s)
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) rhs(s, r * cols + c) = vals[s](r, c);
    cmat sol = qr.solve(rhs);

    BivariateTaylor t(rows, cols, deg);
    for (int k = 0; k < K; ++k) {
      cmat block(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) block(r, c) = sol(k, r * cols + c);
      t.coeff(ms[k].a, ms[k].b) = block / std::pow(rmax, ms[k].a + ms[k].b);
    }
    for (int s = 0; s < S; ++s)
      t.fit_residual = std::max(t.fit_residual, sup_norm(t.eval(zs[s]) - vals[s]));
    return t;
  }
  throw NumericError("taylor fit: no admissible degree on these samples");
}

BivariateTaylor fit_polar_taylor(const std::vector<double>& radii, int angles,
                                 const std::vector<cmat>& vals, int degree) {
  const int R = int(radii.size()), A = angles;
  if (R < 1 || A < 2 * degree + 2)
    throw std::invalid_argument("polar fit: need angles >= 2*degree + 2");
  if (vals.size() != size_t(R) * A)
    throw std::invalid_argument("polar fit: sample count != rings * angles");
  const int rows = int(vals[0].rows()), cols = int(vals[0].cols());
  const double rmax = *std::max_element(radii.begin(), radii.end());

  BivariateTaylor t(rows, cols, degree);
  // Fourier mode M on each ring, then a radial solve per mode.
  std::vector<cmat> mode(R, cmat::Zero(rows, cols));
  for (int M = -degree; M <= degree; ++M) {
    for (int j = 0; j < R; ++j) {
      mode[j].setZero();
      for (int k = 0; k < A; ++k)
        mode[j] += vals[j * A + k] * std::polar(1.0 / A, -2 * pi * M * k / A);
    }
    const int Q = (degree - std::abs(M)) / 2 + 1;  // radial unknowns
    cmat P(R, Q);
    for (int j = 0; j < R; ++j) {
      double rho = radii[j] / rmax;
      for (int q = 0; q < Q; ++q) P(j, q) = std::pow(rho, std::abs(M) + 2 * q);
    }
    cmat rhs(R, rows * cols);
    for (int j = 0; j < R; ++j)
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) rhs(j, r * cols + c) = mode[j](r, c);
    cmat sol = Eigen::ColPivHouseholderQR<cmat>(P).solve(rhs);
    for (int q = 0; q < Q; ++q) {
      int a = M >= 0 ? M + q : q;
      int b = M >= 0 ? q : q - M;
      cmat block(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) block(r, c) = sol(q, r * cols + c);
      t.coeff(a, b) = block / std::pow(rmax, a + b);
    }
  }
  for (int j = 0; j < R; ++j)
    for (int k = 0; k < A; ++k) {
      cplx z = std::polar(radii[j], 2 * pi * k / A);
      t.fit_residual =
          std::max(t.fit_residual, sup_norm(t.eval(z) - vals[j * A + k]));
    }
  return t;
}

namespace {

double offdiag_mass(const cmat& m) {
  const int n = int(m.rows()) - 4;
  return std::max(sup_norm(m.topRightCorner(4, n)), sup_norm(m.bottomLeftCorner(n, 4)));
}

double diag_mass(const cmat& m) {
  const int n = int(m.rows()) - 4;
  return std::max(sup_norm(m.topLeftCorner(4, 4)), sup_norm(m.bottomRightCorner(n, n)));
}

double series_scale(const BivariateTaylor& t) {
  double s = 0;
  for (const cmat& m : t.c) s = std::max(s, sup_norm(m));
  return s;
}

}  // namespace

Potential wu_normalized_potential(const BivariateTaylor& alpha_k,
                                  const BivariateTaylor& alpha_p, int degree) {
  if (alpha_k.rows != alpha_k.cols || alpha_k.rows < 5 ||
      alpha_p.rows != alpha_p.cols || alpha_p.rows != alpha_k.rows)
    throw std::domain_error("conjugation formula: matrices must be square n+4");
  const int m = alpha_k.rows, n = m - 4;
  const double tol_k = std::max(1e-8, 1e-6 * series_scale(alpha_k));
  const double tol_p = std::max(1e-8, 1e-6 * series_scale(alpha_p));
  for (const cmat& c : alpha_k.c)
    if (offdiag_mass(c) > tol_k)
      throw std::domain_error("conjugation formula: alpha_k has off-diagonal mass");
  for (const cmat& c : alpha_p.c)
    if (diag_mass(c) > tol_p)
      throw std::domain_error("conjugation formula: alpha_p has diagonal-block mass");

  const int D = degree;
  auto take = [&](const std::vector<cmat>& v, int k) {
    return k < int(v.size()) ? v[k] : cmat::Zero(m, m).eval();
  };
  std::vector<cmat> d0 = holomorphic_part(alpha_k), d1 = holomorphic_part(alpha_p);

  // F0' = F0 d0 term by term, then the inverse series.
  std::vector<cmat> F(D + 1, cmat::Zero(m, m)), U(D + 1, cmat::Zero(m, m));
  F[0] = U[0] = cmat::Identity(m, m);
  for (int k = 0; k < D; ++k) {
    cmat acc = cmat::Zero(m, m);
    for (int l = 0; l <= k; ++l) acc += F[l] * take(d0, k - l);
    F[k + 1] = acc / double(k + 1);
  }
  for (int k = 1; k <= D; ++k) {
    cmat acc = cmat::Zero(m, m);
    for (int l = 1; l <= k; ++l) acc += F[l] * U[k - l];
    U[k] = -acc;
  }
  std::vector<cmat> G(D + 1, cmat::Zero(m, m)), H(D + 1, cmat::Zero(m, m));
  for (int k = 0; k <= D; ++k)
    for (int l = 0; l <= k; ++l) G[k] += F[l] * take(d1, k - l);
  for (int k = 0; k <= D; ++k)
    for (int l = 0; l <= k; ++l) H[k] += G[l] * U[k - l];

  // The conjugated series stays off-diagonal; keep the top-right block and
  // let the Lorentz pairing fix the bottom-left one.
  double scale = 0;
  for (const cmat& h : H) scale = std::max(scale, sup_norm(h));
  const double chop = 1e-12 * std::max(scale, 1.0);
  std::vector<cmat> B(D + 1);
  for (int k = 0; k <= D; ++k) {
    cmat tr = H[k].topRightCorner(4, n);
    cmat bl = H[k].bottomLeftCorner(n, 4);
    cmat from_bl(4, n);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < n; ++c) from_bl(r, c) = (r == 0 ? 1.0 : -1.0) * bl(c, r);
    B[k] = 0.5 * (tr + from_bl);
    B[k] = B[k].unaryExpr([&](cplx v) { return std::abs(v) < chop ? cplx(0, 0) : v; });
  }

  RationalMatrix rm(m, m);
  auto poly_of = [&](int r, int c) {
    std::vector<cplx> coeffs(D + 1);
    for (int k = 0; k <= D; ++k) coeffs[k] = B[k](r, c);
    return Poly(coeffs);
  };
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < n; ++c) {
      Poly b = poly_of(r, c);
      rm.at(r, 4 + c) = RationalExpr(b, Poly(cplx(1, 0)));
      // bottom-left partner: -B^t I13 column pattern
      rm.at(4 + c, r) =
          RationalExpr(r == 0 ? b : -b, Poly(cplx(1, 0)));
    }

  Potential out;
  out.n = n;
  out.kind = PotentialKind::normalized;
  out.basepoint = 0;
  out.terms.emplace(-1, std::move(rm));
  return out;
}

McData extract_mc_data(const Potential& p, double radius, int rings, int angles,
                       double h) {
  McData d;
  d.n = p.n;
  d.angles = angles;
  for (int j = 1; j <= rings; ++j) d.radii.push_back(radius * j / rings);
  const int m = p.size();

  FrameOptions fopt;
  // Size the sampling once, from the farthest point the stencils reach.
  TwistedLoop probe =
      integrate_frame_to(p, cplx(radius + 2 * h, 2 * h), false, fopt);
  const int w_est = std::max(probe.d_neg, probe.d_pos) + 4;
  const int depth = std::max(w_est + 10, 16);
  int N = 64;
  while (N < 3 * (depth + w_est)) N <<= 1;

  auto frame_samples = [&](cplx z) {
    TwistedLoop fm = integrate_frame_to(p, z, false, fopt);
    return iwasawa_from_samples(sample_loop(fm, N), p.n, depth, 1e12).f;
  };

  const cplx du(h, 0), dv(0, h);
  for (double r : d.radii) {
    for (int k = 0; k < angles; ++k) {
      cplx z = std::polar(r, 2 * pi * k / angles);
      auto F0 = frame_samples(z);
      auto Fu1 = frame_samples(z + du), Fu2 = frame_samples(z + 2.0 * du);
      auto Fum1 = frame_samples(z - du), Fum2 = frame_samples(z - 2.0 * du);
      auto Fv1 = frame_samples(z + dv), Fv2 = frame_samples(z + 2.0 * dv);
      auto Fvm1 = frame_samples(z - dv), Fvm2 = frame_samples(z - 2.0 * dv);

      std::vector<std::vector<cplx>> spectra(m * m, std::vector<cplx>(N));
      for (int s = 0; s < N; ++s) {
        cmat Du = (-Fu2[s] + 8.0 * Fu1[s] - 8.0 * Fum1[s] + Fum2[s]) / (12 * h);
        cmat Dv = (-Fv2[s] + 8.0 * Fv1[s] - 8.0 * Fvm1[s] + Fvm2[s]) / (12 * h);
        cmat Az = Eigen::PartialPivLU<cmat>(F0[s]).solve(0.5 * (Du - cplx(0, 1) * Dv));
        for (int rr = 0; rr < m; ++rr)
          for (int cc = 0; cc < m; ++cc) spectra[rr * m + cc][s] = Az(rr, cc);
      }
      cmat ak(m, m), ap(m, m);
      for (int rr = 0; rr < m; ++rr)
        for (int cc = 0; cc < m; ++cc) {
          auto& bins = spectra[rr * m + cc];
          detail::fft_pow2(bins, false);
          ak(rr, cc) = bins[0] / double(N);
          ap(rr, cc) = bins[N - 1] / double(N);  // lambda^{-1} coefficient
        }
      d.zs.push_back(z);
      d.alpha_k.push_back(ak);
      d.alpha_p.push_back(ap);
    }
  }
  return d;
}

namespace {

nlohmann::json mat_to_json(const cmat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c)
      row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

cmat mat_from_json(const nlohmann::json& j) {
  int rows = int(j.size()), cols = rows ? int(j[0].size()) : 0;
  cmat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      m(r, c) = cplx(j[r][c][0].get<double>(), j[r][c][1].get<double>());
  return m;
}

}  // namespace

nlohmann::json mc_to_json(const McData& d) {
  nlohmann::json j;
  j["n"] = d.n;
  if (!d.radii.empty()) {
    j["radii"] = d.radii;
    j["angles"] = d.angles;
  }
  nlohmann::json samples = nlohmann::json::array();
  for (size_t s = 0; s < d.zs.size(); ++s) {
    samples.push_back({{"z", {d.zs[s].real(), d.zs[s].imag()}},
                       {"alpha_k", mat_to_json(d.alpha_k[s])},
                       {"alpha_p", mat_to_json(d.alpha_p[s])}});
  }
  j["samples"] = std::move(samples);
  return j;
}

McData mc_from_json(const nlohmann::json& j) {
  McData d;
  d.n = j.at("n").get<int>();
  if (j.contains("radii")) {
    d.radii = j.at("radii").get<std::vector<double>>();
    d.angles = j.at("angles").get<int>();
  }
  for (const auto& s : j.at("samples")) {
    d.zs.emplace_back(s.at("z")[0].get<double>(), s.at("z")[1].get<double>());
    d.alpha_k.push_back(mat_from_json(s.at("alpha_k")));
    d.alpha_p.push_back(mat_from_json(s.at("alpha_p")));
    if (d.alpha_k.back().rows() != d.n + 4 || d.alpha_p.back().rows() != d.n + 4)
      throw std::invalid_argument("connection data: matrix size does not match n");
  }
  return d;
}

Potential wu_from_mc(const McData& d, int degree) {
  bool polar = !d.radii.empty() && d.angles >= 2 * degree + 2 &&
               d.zs.size() == d.radii.size() * size_t(d.angles);
  if (polar) {
    for (size_t jr = 0; jr < d.radii.size() && polar; ++jr)
      for (int k = 0; k < d.angles && polar; ++k) {
        cplx want = std::polar(d.radii[jr], 2 * pi * k / d.angles);
        polar = std::abs(d.zs[jr * d.angles + k] - want) < 1e-9 * (1 + std::abs(want));
      }
  }
  BivariateTaylor ak, ap;
  if (polar) {
    ak = fit_polar_taylor(d.radii, d.angles, d.alpha_k, degree);
    ap = fit_polar_taylor(d.radii, d.angles, d.alpha_p, degree);
  } else {
    ak = fit_bivariate_taylor(d.zs, d.alpha_k, degree);
    ap = fit_bivariate_taylor(d.zs, d.alpha_p, degree);
  }
  Potential out = wu_normalized_potential(ak, ap, degree);
  return out;
}

}  // namespace wlg
