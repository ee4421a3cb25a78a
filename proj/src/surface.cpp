#include "wlg/surface.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace wlg {

rvec frame_to_immersion(const cmat& f_lambda) {
  const int m = int(f_lambda.rows());
  double scale = std::max(1.0, sup_norm(f_lambda));
  if (f_lambda.imag().cwiseAbs().maxCoeff() > 1e-6 * scale)
    throw NumericError("immersion lift: frame is not real at this loop parameter");
  rvec Y = (f_lambda.col(0).real() - f_lambda.col(1).real()) / std::sqrt(2.0);
  if (Y(0) < 1e-12)
    throw DegenerateLift("immersion lift: nonpositive time component");
  return Y.tail(m - 1) / Y(0);
}

rvec frame_to_immersion(const TwistedLoop& f, cplx lambda) {
  return frame_to_immersion(evaluate(f, lambda));
}

double ConformalFrame::energy_density() const {
  return 4.0 * lorentz_dot(kappa, kappa.conjugate()).real();
}

namespace {

// Lattice-indexed memoized field of complex vectors. Derivative combinators
// build new fields that pull shared cached values, so deeply nested stencils
// cost one evaluation per lattice point per field.
class Field {
 public:
  explicit Field(std::function<cvec(int, int)> gen)
      : gen_(std::move(gen)),
        memo_(std::make_shared<std::unordered_map<long long, cvec>>()) {}
  Field() = default;

  const cvec& operator()(int i, int j) const {
    long long key = (static_cast<long long>(i) << 24) ^
                    (static_cast<long long>(j) & 0xffffff);
    auto it = memo_->find(key);
    if (it != memo_->end()) return it->second;
    return memo_->emplace(key, gen_(i, j)).first->second;
  }

 private:
  std::function<cvec(int, int)> gen_;
  std::shared_ptr<std::unordered_map<long long, cvec>> memo_;
};

Field d_u(const Field& f, double h) {
  return Field([f, h](int i, int j) -> cvec {
    return (-f(i + 2, j) + 8.0 * f(i + 1, j) - 8.0 * f(i - 1, j) + f(i - 2, j)) /
           (12.0 * h);
  });
}

Field d_v(const Field& f, double h) {
  return Field([f, h](int i, int j) -> cvec {
    return (-f(i, j + 2) + 8.0 * f(i, j + 1) - 8.0 * f(i, j - 1) + f(i, j - 2)) /
           (12.0 * h);
  });
}

Field d_z(const Field& f, double hu, double hv) {
  Field fu = d_u(f, hu), fv = d_v(f, hv);
  return Field([fu, fv](int i, int j) -> cvec {
    return 0.5 * (fu(i, j) - cplx(0, 1) * fv(i, j));
  });
}

Field d_zbar(const Field& f, double hu, double hv) {
  Field fu = d_u(f, hu), fv = d_v(f, hv);
  return Field([fu, fv](int i, int j) -> cvec {
    return 0.5 * (fu(i, j) + cplx(0, 1) * fv(i, j));
  });
}

cvec scalar1(cplx v) {
  cvec s(1);
  s(0) = v;
  return s;
}

}  // namespace

struct ConformalAnalyzer::Impl {
  double hu = 0, hv = 0;
  int dim = 0;  // ambient vectors have dim + 1 components
  int n = 0;
  Field yF, omegaF, YF, Yz, Yzz, Yzzb, NF, sF, kapF;
  mutable std::optional<std::vector<int>> psi_axes;
  mutable std::vector<Field> psiF;          // lazily built
  mutable std::vector<Field> kC, betaC;     // kappa / beta components
  mutable std::vector<std::vector<Field>> gz, gzb;  // normal connection

  cvec pick_psi(int i, int j, int upto, const std::vector<int>& axes) const {
    // Minkowski projection of the ambient axis off V = span{Y, N, Yz, Yzb}
    // and off the previously accepted normals.
    const int m = dim + 1;
    cvec Yv = YF(i, j), Nv = NF(i, j), Yzv = Yz(i, j);
    std::array<cvec, 4> base{Yv, Nv, Yzv.real().cast<cplx>().eval(),
                             Yzv.imag().cast<cplx>().eval()};
    cmat G(4, 4);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) G(a, b) = lorentz_dot(base[a], base[b]);
    Eigen::FullPivLU<cmat> lu(G);
    cvec x = cvec::Zero(m);
    x(axes[upto]) = 1.0;
    cvec rhs(4);
    for (int a = 0; a < 4; ++a) rhs(a) = lorentz_dot(x, base[a]);
    cvec coef = lu.solve(rhs);
    for (int a = 0; a < 4; ++a) x -= coef(a) * base[a];
    for (int l = 0; l < upto; ++l) {
      const cvec& ps = psiF[l](i, j);
      x -= lorentz_dot(x, ps) * ps;
    }
    cplx nrm2 = lorentz_dot(x, x);
    if (nrm2.real() < 1e-12)
      throw NumericError("normal frame: degenerate axis projection");
    return x / std::sqrt(nrm2.real());
  }

  void build_normals() const {
    if (psi_axes) return;
    // Choose the axes once, at the lattice origin, so the resulting normal
    // frame varies smoothly across neighbouring points.
    std::vector<int> axes;
    std::vector<cvec> found;
    const int m = dim + 1;
    cvec Yv = YF(0, 0), Nv = NF(0, 0), Yzv = Yz(0, 0);
    std::array<cvec, 4> base{Yv, Nv, Yzv.real().cast<cplx>().eval(),
                             Yzv.imag().cast<cplx>().eval()};
    cmat G(4, 4);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) G(a, b) = lorentz_dot(base[a], base[b]);
    Eigen::FullPivLU<cmat> lu(G);
    for (int k = 0; k < m && int(axes.size()) < n; ++k) {
      cvec x = cvec::Zero(m);
      x(k) = 1.0;
      cvec rhs(4);
      for (int a = 0; a < 4; ++a) rhs(a) = lorentz_dot(x, base[a]);
      cvec coef = lu.solve(rhs);
      for (int a = 0; a < 4; ++a) x -= coef(a) * base[a];
      for (const cvec& ps : found) x -= lorentz_dot(x, ps) * ps;
      double nrm2 = lorentz_dot(x, x).real();
      if (nrm2 > 0.09) {  // keep axes with a safely spacelike residual
        axes.push_back(k);
        found.push_back(x / std::sqrt(nrm2));
      }
    }
    if (int(axes.size()) < n)
      throw NumericError("normal frame: could not span the normal bundle");
    psi_axes = axes;
    psiF.clear();
    for (int l = 0; l < n; ++l) {
      const Impl* self = this;
      psiF.push_back(Field([self, l](int i, int j) -> cvec {
        return self->pick_psi(i, j, l, *self->psi_axes);
      }));
    }
    kC.clear();
    betaC.clear();
    gz.assign(n, std::vector<Field>(n));
    gzb.assign(n, std::vector<Field>(n));
    std::vector<Field> dz_psi, dzb_psi;
    for (int l = 0; l < n; ++l) {
      dz_psi.push_back(d_z(psiF[l], hu, hv));
      dzb_psi.push_back(d_zbar(psiF[l], hu, hv));
    }
    Field kap = kapF;
    Field kapzb = d_zbar(kapF, hu, hv);
    for (int l = 0; l < n; ++l) {
      Field ps = psiF[l];
      kC.push_back(Field([kap, ps](int i, int j) -> cvec {
        return scalar1(lorentz_dot(kap(i, j), ps(i, j)));
      }));
      betaC.push_back(Field([kapzb, ps](int i, int j) -> cvec {
        return scalar1(lorentz_dot(kapzb(i, j), ps(i, j)));
      }));
      for (int r = 0; r < n; ++r) {
        Field dzr = dz_psi[r], dzbr = dzb_psi[r];
        gz[r][l] = Field([dzr, ps](int i, int j) -> cvec {
          return scalar1(lorentz_dot(dzr(i, j), ps(i, j)));
        });
        gzb[r][l] = Field([dzbr, ps](int i, int j) -> cvec {
          return scalar1(lorentz_dot(dzbr(i, j), ps(i, j)));
        });
      }
    }
  }
};

ConformalAnalyzer::ConformalAnalyzer(SurfaceFn y, double u0, double v0, double hu,
                                     double hv)
    : impl_(std::make_shared<Impl>()) {
  Impl& im = *impl_;
  im.hu = hu;
  im.hv = hv;
  rvec probe = y(u0, v0);
  im.dim = int(probe.size());
  im.n = im.dim - 3;
  if (im.n < 1) throw std::invalid_argument("surface points must have n+3 >= 4 components");
  im.yF = Field([y = std::move(y), u0, v0, hu, hv](int i, int j) -> cvec {
    return y(u0 + i * hu, v0 + j * hv).cast<cplx>();
  });
  Field yu = d_u(im.yF, hu), yv = d_v(im.yF, hv);
  im.omegaF = Field([yu, yv](int i, int j) -> cvec {
    double e2w = 0.5 * (yu(i, j).squaredNorm() + yv(i, j).squaredNorm());
    if (e2w < 1e-12) throw BranchPoint("vanishing induced metric");
    return scalar1(0.5 * std::log(e2w));
  });
  Field yF = im.yF, omegaF = im.omegaF;
  im.YF = Field([yF, omegaF](int i, int j) -> cvec {
    const cvec& yy = yF(i, j);
    cvec Y(yy.size() + 1);
    Y(0) = 1.0;
    Y.tail(yy.size()) = yy;
    return std::exp(-omegaF(i, j)(0).real()) * Y;
  });
  im.Yz = d_z(im.YF, hu, hv);
  im.Yzz = d_z(im.Yz, hu, hv);
  im.Yzzb = d_zbar(im.Yz, hu, hv);
  Field YF = im.YF, Yzzb = im.Yzzb;
  im.NF = Field([YF, Yzzb](int i, int j) -> cvec {
    const cvec& q = Yzzb(i, j);
    return 2.0 * q + 2.0 * lorentz_dot(q, q) * YF(i, j);
  });
  Field NF = im.NF, Yzz = im.Yzz;
  im.sF = Field([Yzz, NF](int i, int j) -> cvec {
    return scalar1(2.0 * lorentz_dot(Yzz(i, j), NF(i, j)));
  });
  Field sF = im.sF;
  im.kapF = Field([Yzz, sF, YF](int i, int j) -> cvec {
    return Yzz(i, j) + 0.5 * sF(i, j)(0) * YF(i, j);
  });
}

ConformalFrame ConformalAnalyzer::frame(int i, int j) const {
  const Impl& im = *impl_;
  im.build_normals();
  ConformalFrame cf;
  cf.omega = im.omegaF(i, j)(0).real();
  cf.Y = im.YF(i, j).real();
  cf.N = im.NF(i, j).real();
  cf.Yz = im.Yz(i, j);
  cf.kappa = im.kapF(i, j);
  cf.s = im.sF(i, j)(0);
  for (int l = 0; l < im.n; ++l) {
    cf.psi.push_back(im.psiF[l](i, j).real());
    cf.k.push_back(im.kC[l](i, j)(0));
    cf.beta.push_back(im.betaC[l](i, j)(0));
  }
  return cf;
}

double ConformalAnalyzer::conformality(int i, int j) const {
  const cvec& q = impl_->Yz(i, j);
  return std::abs(lorentz_dot(q, q));
}

std::pair<double, double> ConformalAnalyzer::density(int i, int j) const {
  const Impl& im = *impl_;
  const cvec& kap = im.kapF(i, j);
  return {im.omegaF(i, j)(0).real(),
          4.0 * lorentz_dot(kap, kap.conjugate()).real()};
}

cvec ConformalAnalyzer::willmore_vector(int i, int j) const {
  const Impl& im = *impl_;
  im.build_normals();
  cvec out = cvec::Zero(im.dim + 1);
  cplx sbar = std::conj(im.sF(i, j)(0));
  for (int l = 0; l < im.n; ++l) {
    cplx r = d_zbar(im.betaC[l], im.hu, im.hv)(i, j)(0);
    for (int m = 0; m < im.n; ++m)
      r += im.betaC[m](i, j)(0) * im.gzb[m][l](i, j)(0);
    r += 0.5 * sbar * im.kC[l](i, j)(0);
    out += r * im.psiF[l](i, j);
  }
  return out;
}

StructureResiduals ConformalAnalyzer::structure_residuals(int i, int j) const {
  const Impl& im = *impl_;
  im.build_normals();
  StructureResiduals res;

  // Gauss: s_zbar/2 = 3<kappa, D_z conj kappa> + <D_z kappa, conj kappa>.
  std::vector<cplx> k(im.n), beta(im.n), dzk(im.n);
  for (int l = 0; l < im.n; ++l) {
    k[l] = im.kC[l](i, j)(0);
    beta[l] = im.betaC[l](i, j)(0);
    dzk[l] = d_z(im.kC[l], im.hu, im.hv)(i, j)(0);
    for (int m = 0; m < im.n; ++m) dzk[l] += im.kC[m](i, j)(0) * im.gz[m][l](i, j)(0);
  }
  cplx lhs = 0.5 * d_zbar(im.sF, im.hu, im.hv)(i, j)(0);
  cplx rhs = 0;
  for (int l = 0; l < im.n; ++l)
    rhs += 3.0 * k[l] * std::conj(beta[l]) + dzk[l] * std::conj(k[l]);
  res.gauss = std::abs(lhs - rhs);

  // Codazzi: the Willmore vector is real for any surface.
  cvec wv = willmore_vector(i, j);
  for (int l = 0; l < im.n; ++l)
    res.codazzi = std::max(res.codazzi,
                           std::abs(lorentz_dot(wv, im.psiF[l](i, j)).imag()));

  // Ricci: curvature of the normal connection against the kappa pairing.
  for (int a = 0; a < im.n; ++a)
    for (int l = 0; l < im.n; ++l) {
      cplx lhs_c = d_zbar(im.gz[a][l], im.hu, im.hv)(i, j)(0) -
                   d_z(im.gzb[a][l], im.hu, im.hv)(i, j)(0);
      for (int m = 0; m < im.n; ++m)
        lhs_c += im.gz[a][m](i, j)(0) * im.gzb[m][l](i, j)(0) -
                 im.gzb[a][m](i, j)(0) * im.gz[m][l](i, j)(0);
      cplx rhs_c = 2.0 * k[a] * std::conj(k[l]) - 2.0 * std::conj(k[a]) * k[l];
      res.ricci = std::max(res.ricci, std::abs(lhs_c - rhs_c));
    }
  return res;
}

IsotropyReport ConformalAnalyzer::isotropy(int i, int j) const {
  const Impl& im = *impl_;
  im.build_normals();
  IsotropyReport rep;
  cplx kk = 0, dkk = 0, dkdk = 0;
  std::vector<cplx> k(im.n), dzk(im.n);
  for (int l = 0; l < im.n; ++l) {
    k[l] = im.kC[l](i, j)(0);
    dzk[l] = d_z(im.kC[l], im.hu, im.hv)(i, j)(0);
    for (int m = 0; m < im.n; ++m) dzk[l] += im.kC[m](i, j)(0) * im.gz[m][l](i, j)(0);
  }
  for (int l = 0; l < im.n; ++l) {
    kk += k[l] * k[l];
    dkk += dzk[l] * k[l];
    dkdk += dzk[l] * dzk[l];
  }
  rep.kk = std::abs(kk);
  rep.dkk = std::abs(dkk);
  rep.dkdk = std::abs(dkdk);
  return rep;
}

SurfaceGrid build_surface(const FrameField& ff, cplx lambda) {
  SurfaceGrid sg;
  sg.grid = ff.grid;
  sg.n = ff.n;
  sg.mask = ff.mask;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  sg.points.assign(ff.grid.count(), rvec::Zero(ff.n + 3));
  sg.omega.assign(ff.grid.count(), nan);
  sg.energy_density.assign(ff.grid.count(), nan);
  for (int iv = 0; iv < ff.grid.v_count; ++iv)
    for (int iu = 0; iu < ff.grid.u_count; ++iu) {
      int idx = ff.grid.index(iu, iv);
      if (ff.mask[idx] != PointStatus::ok) continue;
      try {
        sg.points[idx] = frame_to_immersion(surface_frame(ff, iu, iv, lambda));
      } catch (const NumericError&) {
        sg.mask[idx] = PointStatus::not_computed;
      }
    }
  return sg;
}

namespace {

// Grid point lookup as a surface callback; off-lattice queries and queries
// into missing points throw, which the sweeps below catch per center.
SurfaceFn grid_fn(const SurfaceGrid& sg) {
  return [&sg](double u, double v) -> rvec {
    const GridSpec& g = sg.grid;
    double fu = (u - g.u_min) / g.du();
    double fv = g.v_count > 1 ? (v - g.v_min) / g.dv() : 0.0;
    long iu = std::lround(fu), iv = std::lround(fv);
    if (std::abs(fu - iu) > 1e-6 || std::abs(fv - iv) > 1e-6)
      throw NumericError("surface grid: off-lattice query");
    if (sg.periodic_u) {
      int period = g.u_count - 1;
      iu = ((iu % period) + period) % period;
    }
    if (sg.periodic_v) {
      int period = g.v_count - 1;
      iv = ((iv % period) + period) % period;
    }
    if (iu < 0 || iu >= g.u_count || iv < 0 || iv >= g.v_count)
      throw NumericError("surface grid: query outside the patch");
    int idx = g.index(int(iu), int(iv));
    if (sg.mask[idx] != PointStatus::ok)
      throw NumericError("surface grid: query hits a missing point");
    return sg.points[idx];
  };
}

ConformalAnalyzer grid_analyzer(const SurfaceGrid& sg) {
  return ConformalAnalyzer(grid_fn(sg), sg.grid.u_min, sg.grid.v_min, sg.grid.du(),
                           sg.grid.v_count > 1 ? sg.grid.dv() : sg.grid.du());
}

template <class F>
void sweep_ok_points(const SurfaceGrid& sg, F&& body) {
  for (int iv = 0; iv < sg.grid.v_count; ++iv)
    for (int iu = 0; iu < sg.grid.u_count; ++iu) {
      if (!sg.ok(iu, iv)) continue;
      try {
        body(iu, iv);
      } catch (const NumericError&) {
        // stencil left the patch; skip this center
      }
    }
}

}  // namespace

void attach_density(SurfaceGrid& sg) {
  ConformalAnalyzer an = grid_analyzer(sg);
  sweep_ok_points(sg, [&](int iu, int iv) {
    int idx = sg.grid.index(iu, iv);
    auto [omega, dens] = an.density(iu, iv);
    sg.omega[idx] = omega;
    sg.energy_density[idx] = dens;
  });
}

void attach_frames(SurfaceGrid& sg) {
  ConformalAnalyzer an = grid_analyzer(sg);
  sg.frames.assign(sg.grid.count(), ConformalFrame{});
  sweep_ok_points(sg, [&](int iu, int iv) {
    int idx = sg.grid.index(iu, iv);
    ConformalFrame cf = an.frame(iu, iv);
    sg.omega[idx] = cf.omega;
    sg.energy_density[idx] = cf.energy_density();
    sg.frames[idx] = std::move(cf);
  });
}

EnergyResult willmore_energy(const SurfaceGrid& sg) {
  if (sg.energy_density.empty())
    throw NumericError("willmore energy: no density attached");
  const GridSpec& g = sg.grid;

  auto density = [&](int iu, int iv) {
    double d = sg.energy_density[g.index(iu, iv)];
    if (!std::isfinite(d))
      throw NumericError("willmore energy: insufficient interior coverage");
    return d;
  };

  auto integrate = [&](int stride) {
    // composite Simpson per direction when point counts allow, else trapezoid
    auto weights = [&](int count) {
      std::vector<double> w(count, 1.0);
      if (count >= 3 && count % 2 == 1) {
        for (int k = 1; k + 1 < count; ++k) w[k] = k % 2 ? 4.0 : 2.0;
        w.front() = w.back() = 1.0;
        for (double& x : w) x /= 3.0;
      } else {
        w.front() = w.back() = 0.5;
      }
      return w;
    };
    int uc = (g.u_count - 1) / stride + 1, vc = (g.v_count - 1) / stride + 1;
    auto wu = weights(uc), wv = weights(vc);
    double sum = 0;
    for (int jv = 0; jv < vc; ++jv)
      for (int ju = 0; ju < uc; ++ju)
        sum += wu[ju] * wv[jv] * density(ju * stride, jv * stride);
    return sum * (g.du() * stride) * (g.dv() * stride);
  };

  EnergyResult res;
  res.value = integrate(1);
  if ((g.u_count - 1) % 2 == 0 && (g.v_count - 1) % 2 == 0 && g.u_count >= 5 &&
      g.v_count >= 5)
    res.error = std::abs(res.value - integrate(2)) / 15.0;
  return res;
}

double conformality_check(const SurfaceGrid& sg) {
  ConformalAnalyzer an = grid_analyzer(sg);
  double worst = 0;
  sweep_ok_points(sg, [&](int iu, int iv) {
    worst = std::max(worst, an.conformality(iu, iv));
  });
  return worst;
}

double willmore_residual(const SurfaceGrid& sg) {
  ConformalAnalyzer an = grid_analyzer(sg);
  double worst = 0;
  sweep_ok_points(sg, [&](int iu, int iv) {
    worst = std::max(worst, an.willmore_vector(iu, iv).cwiseAbs().maxCoeff());
  });
  return worst;
}

IsotropyReport isotropy_check(const SurfaceGrid& sg) {
  ConformalAnalyzer an = grid_analyzer(sg);
  IsotropyReport rep;
  sweep_ok_points(sg, [&](int iu, int iv) {
    IsotropyReport r = an.isotropy(iu, iv);
    rep.kk = std::max(rep.kk, r.kk);
    rep.dkk = std::max(rep.dkk, r.dkk);
    rep.dkdk = std::max(rep.dkdk, r.dkdk);
  });
  return rep;
}

StructureResiduals structure_check(const SurfaceGrid& sg) {
  ConformalAnalyzer an = grid_analyzer(sg);
  StructureResiduals rep;
  sweep_ok_points(sg, [&](int iu, int iv) {
    StructureResiduals r = an.structure_residuals(iu, iv);
    rep.gauss = std::max(rep.gauss, r.gauss);
    rep.codazzi = std::max(rep.codazzi, r.codazzi);
    rep.ricci = std::max(rep.ricci, r.ricci);
  });
  return rep;
}

namespace {

std::string fmt_g(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_surface_csv(const std::string& path, const SurfaceGrid& sg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << "u,v";
  for (int k = 0; k < sg.n + 3; ++k) out << ",y_" << k;
  out << ",omega,energy_density,status\n";
  for (int iv = 0; iv < sg.grid.v_count; ++iv)
    for (int iu = 0; iu < sg.grid.u_count; ++iu) {
      int idx = sg.grid.index(iu, iv);
      cplx z = sg.grid.point(iu, iv);
      out << fmt_g(z.real()) << ',' << fmt_g(z.imag());
      for (int k = 0; k < sg.n + 3; ++k) out << ',' << fmt_g(sg.points[idx](k));
      out << ',' << fmt_g(sg.omega[idx]) << ',' << fmt_g(sg.energy_density[idx])
          << ',' << to_string(sg.mask[idx]) << '\n';
    }
}

SurfaceGrid read_surface_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open surface file " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty surface file");
  int commas = int(std::count(header.begin(), header.end(), ','));
  int ncomp = commas - 4;  // u,v then components then omega,density,status
  if (ncomp < 4 || header.rfind("u,v,y_0", 0) != 0)
    throw std::runtime_error("unrecognized surface file header");

  struct Row {
    double u, v, omega, dens;
    rvec y;
    PointStatus st;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (int(cells.size()) != commas + 1)
      throw std::runtime_error("surface file: malformed row");
    Row r;
    r.u = std::stod(cells[0]);
    r.v = std::stod(cells[1]);
    r.y = rvec(ncomp);
    for (int k = 0; k < ncomp; ++k) r.y(k) = std::stod(cells[2 + k]);
    r.omega = std::stod(cells[2 + ncomp]);
    r.dens = std::stod(cells[3 + ncomp]);
    const std::string& st = cells[4 + ncomp];
    if (st == "ok")
      r.st = PointStatus::ok;
    else if (st == "pole_skipped")
      r.st = PointStatus::pole_skipped;
    else if (st == "cell_boundary")
      r.st = PointStatus::cell_boundary;
    else
      r.st = PointStatus::not_computed;
    rows.push_back(std::move(r));
  }

  std::vector<double> us, vs;
  for (const Row& r : rows) {
    if (std::find(us.begin(), us.end(), r.u) == us.end()) us.push_back(r.u);
    if (std::find(vs.begin(), vs.end(), r.v) == vs.end()) vs.push_back(r.v);
  }
  std::sort(us.begin(), us.end());
  std::sort(vs.begin(), vs.end());
  SurfaceGrid sg;
  sg.n = ncomp - 3;
  sg.grid.u_min = us.front();
  sg.grid.u_max = us.back();
  sg.grid.u_count = int(us.size());
  sg.grid.v_min = vs.front();
  sg.grid.v_max = vs.back();
  sg.grid.v_count = int(vs.size());
  if (int(rows.size()) != sg.grid.count())
    throw std::runtime_error("surface file: rows do not tile a grid");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  sg.points.assign(sg.grid.count(), rvec::Zero(ncomp));
  sg.omega.assign(sg.grid.count(), nan);
  sg.energy_density.assign(sg.grid.count(), nan);
  sg.mask.assign(sg.grid.count(), PointStatus::not_computed);
  for (const Row& r : rows) {
    int iu = int(std::lower_bound(us.begin(), us.end(), r.u) - us.begin());
    int iv = int(std::lower_bound(vs.begin(), vs.end(), r.v) - vs.begin());
    int idx = sg.grid.index(iu, iv);
    sg.points[idx] = r.y;
    sg.omega[idx] = r.omega;
    sg.energy_density[idx] = r.dens;
    sg.mask[idx] = r.st;
  }
  return sg;
}

namespace {

Eigen::Vector3d project_point(const rvec& y, Projection proj,
                              const std::array<int, 3>& axes) {
  if (proj == Projection::linear)
    return {y(axes[0]), y(axes[1]), y(axes[2])};
  double denom = 1.0 - y(y.size() - 1);
  if (std::abs(denom) < 1e-9) denom = denom < 0 ? -1e-9 : 1e-9;
  return {y(axes[0]) / denom, y(axes[1]) / denom, y(axes[2]) / denom};
}

struct Mesh {
  std::vector<Eigen::Vector3d> verts;
  std::vector<std::array<int, 3>> faces;  // zero-based
};

Mesh make_mesh(const SurfaceGrid& sg, Projection proj, const std::array<int, 3>& axes) {
  Mesh mesh;
  std::vector<int> vid(sg.grid.count(), -1);
  for (int iv = 0; iv < sg.grid.v_count; ++iv)
    for (int iu = 0; iu < sg.grid.u_count; ++iu) {
      int idx = sg.grid.index(iu, iv);
      if (sg.mask[idx] != PointStatus::ok) continue;
      vid[idx] = int(mesh.verts.size());
      mesh.verts.push_back(project_point(sg.points[idx], proj, axes));
    }
  for (int iv = 0; iv + 1 < sg.grid.v_count; ++iv)
    for (int iu = 0; iu + 1 < sg.grid.u_count; ++iu) {
      int a = vid[sg.grid.index(iu, iv)], b = vid[sg.grid.index(iu + 1, iv)];
      int c = vid[sg.grid.index(iu + 1, iv + 1)], d = vid[sg.grid.index(iu, iv + 1)];
      if (a < 0 || b < 0 || c < 0 || d < 0) continue;
      mesh.faces.push_back({a, b, c});
      mesh.faces.push_back({a, c, d});
    }
  return mesh;
}

}  // namespace

void write_surface_obj(const std::string& path, const SurfaceGrid& sg,
                       Projection proj, std::array<int, 3> axes) {
  Mesh mesh = make_mesh(sg, proj, axes);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  for (const auto& v : mesh.verts)
    out << "v " << fmt_g(v(0)) << ' ' << fmt_g(v(1)) << ' ' << fmt_g(v(2)) << '\n';
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_surface_ply(const std::string& path, const SurfaceGrid& sg,
                       Projection proj, std::array<int, 3> axes) {
  Mesh mesh = make_mesh(sg, proj, axes);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.verts.size() << '\n';
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "element face " << mesh.faces.size() << '\n';
  out << "property list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.verts)
    out << fmt_g(v(0)) << ' ' << fmt_g(v(1)) << ' ' << fmt_g(v(2)) << '\n';
  for (const auto& f : mesh.faces)
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

}  // namespace wlg
