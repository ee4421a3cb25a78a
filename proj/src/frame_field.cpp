#include "wlg/frame_field.hpp"

#include "wlg/linalg.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <thread>

namespace wlg {

const char* to_string(PointStatus s) {
  switch (s) {
    case PointStatus::ok: return "ok";
    case PointStatus::pole_skipped: return "pole_skipped";
    case PointStatus::cell_boundary: return "cell_boundary";
    default: return "not_computed";
  }
}

double GridSpec::spacing() const {
  double s = std::numeric_limits<double>::infinity();
  if (u_count > 1) s = std::min(s, du());
  if (v_count > 1) s = std::min(s, dv());
  return std::isfinite(s) && s > 0 ? s : 1.0;
}

namespace {

int next_pow2(int v) {
  int p = 1;
  while (p < v) p <<= 1;
  return p;
}

struct SeriesSpec {
  int jlo = 0;
  int jhi = 0;
  int m = 0;
  int count() const { return jhi - jlo + 1; }
  int stride() const { return m * m; }
};

using state_t = std::vector<cplx>;

Eigen::Map<cmat> series_block(state_t& s, const SeriesSpec& spec, int j) {
  return Eigen::Map<cmat>(s.data() + (j - spec.jlo) * spec.stride(), spec.m, spec.m);
}

Eigen::Map<const cmat> series_block(const state_t& s, const SeriesSpec& spec, int j) {
  return Eigen::Map<const cmat>(s.data() + (j - spec.jlo) * spec.stride(), spec.m,
                                spec.m);
}

state_t identity_state(const SeriesSpec& spec) {
  state_t s(spec.count() * spec.stride(), cplx(0, 0));
  series_block(s, spec, 0) = cmat::Identity(spec.m, spec.m);
  return s;
}

// d/dt of the lambda-coefficient stack of F along z(t) = a + t*dir,
// dC_j = sum_b C_{j-b} eta_b(z) dir.
struct SeriesRhs {
  const Potential* p;
  SeriesSpec spec;
  cplx a;
  cplx dir;

  void operator()(const state_t& y, state_t& dy, double t) const {
    cplx z = a + t * dir;
    std::fill(dy.begin(), dy.end(), cplx(0, 0));
    for (const auto& [b, mat] : p->terms) {
      cmat E = mat.eval(z) * dir;
      for (int j = spec.jlo; j <= spec.jhi; ++j) {
        int src = j - b;
        if (src < spec.jlo || src > spec.jhi) continue;
        series_block(dy, spec, j) += series_block(y, spec, src) * E;
      }
    }
  }
};

struct PathIntegrator {
  const Potential* p;
  SeriesSpec spec;
  double tol = 1e-11;
  std::vector<cplx> poles;
  double route_radius = 0.0;
  double detour_offset = 0.0;

  void leg(state_t& y, cplx a, cplx b) const {
    if (std::abs(b - a) < 1e-15) return;
    SeriesRhs rhs{p, spec, a, b - a};
    auto stepper = boost::numeric::odeint::make_controlled(
        tol, tol, boost::numeric::odeint::runge_kutta_dopri5<state_t>());
    boost::numeric::odeint::integrate_adaptive(stepper, rhs, y, 0.0, 1.0, 0.05);
  }

  std::vector<cplx> route(cplx a, cplx b) const {
    std::vector<cplx> pts{a};
    cplx d = b - a;
    double len = std::abs(d);
    if (len > 1e-15) {
      struct Detour {
        double t;
        cplx in, out;
      };
      std::vector<Detour> ds;
      for (cplx q : poles) {
        double t = ((q - a) * std::conj(d)).real() / (len * len);
        if (t <= 0.0 || t >= 1.0) continue;
        cplx foot = a + t * d;
        if (std::abs(q - foot) >= route_radius) continue;
        double side = ((q - a) * std::conj(d)).imag() >= 0 ? 1.0 : -1.0;
        cplx off = -side * cplx(0, 1) * (d / len) * detour_offset;
        double h = std::min(0.4, detour_offset / len);
        ds.push_back({t, a + std::max(0.0, t - h) * d + off,
                      a + std::min(1.0, t + h) * d + off});
      }
      std::sort(ds.begin(), ds.end(),
                [](const Detour& x, const Detour& y) { return x.t < y.t; });
      for (const Detour& dd : ds) {
        pts.push_back(dd.in);
        pts.push_back(dd.out);
      }
    }
    pts.push_back(b);
    return pts;
  }

  void segment(state_t& y, cplx a, cplx b) const {
    std::vector<cplx> pts = route(a, b);
    for (size_t k = 0; k + 1 < pts.size(); ++k) leg(y, pts[k], pts[k + 1]);
  }

  // Staircase: horizontal leg then vertical leg (or the reverse).
  void staircase(state_t& y, cplx a, cplx b, bool vertical_first) const {
    cplx mid = vertical_first ? cplx(a.real(), b.imag()) : cplx(b.real(), a.imag());
    segment(y, a, mid);
    segment(y, mid, b);
  }

  double pole_distance(cplx z) const {
    double d = std::numeric_limits<double>::infinity();
    for (cplx q : poles) d = std::min(d, std::abs(z - q));
    return d;
  }
};

std::vector<cplx> dedupe_poles(const Potential& p) {
  std::vector<cplx> raw = p.poles(), out;
  for (cplx q : raw) {
    bool seen = false;
    for (cplx r : out) seen = seen || std::abs(q - r) < 1e-9;
    if (!seen) out.push_back(q);
  }
  return out;
}

// Series depth so that the tail bound (M R)^k / k! falls below 1e-15.
int auto_series_depth(const Potential& p, const GridSpec& grid, int base) {
  double radius = 0.0;
  for (int corner = 0; corner < 4; ++corner) {
    cplx z(corner % 2 ? grid.u_max : grid.u_min, corner / 2 ? grid.v_max : grid.v_min);
    radius = std::max(radius, std::abs(z - p.basepoint));
  }
  double M = 0.0;
  for (int k = 0; k < 16; ++k) {
    double t = 2.0 * pi * k / 16;
    cplx z = p.basepoint + radius * std::polar(1.0, t);
    double s = 0.0;
    try {
      for (const auto& [b, mat] : p.terms) s += sup_norm(mat.eval(z));
    } catch (const NumericError&) {
      continue;
    }
    M = std::max(M, s);
  }
  double x = M * radius;
  int depth = base;
  for (int k = 1; k <= 64; ++k) {
    double logb = k * std::log(std::max(x, 1e-30)) - std::lgamma(double(k) + 1.0);
    if (logb < std::log(1e-15)) {
      depth = std::max(base, k);
      break;
    }
    depth = std::max(base, k);
  }
  return depth;
}

SeriesSpec make_spec(const Potential& p, int depth) {
  SeriesSpec spec;
  spec.m = p.size();
  spec.jlo = -depth;
  spec.jhi = p.max_power() > 0 ? depth : 0;
  return spec;
}

TwistedLoop state_to_loop(const state_t& y, const SeriesSpec& spec, int n) {
  TwistedLoop L(n, -spec.jlo, std::max(spec.jhi, 0));
  for (int j = spec.jlo; j <= spec.jhi; ++j) L.coeff(j) = series_block(y, spec, j);
  L.enforce_parity();
  return L;
}

TwistedLoop compact_window(const TwistedLoop& a, double tol) {
  int dn = 0, dp = 0;
  for (int j = -a.d_neg; j <= a.d_pos; ++j) {
    if (sup_norm(a.coeff(j)) > tol) {
      dn = std::max(dn, -j);
      dp = std::max(dp, j);
    }
  }
  if (dn == a.d_neg && dp == a.d_pos) return a;
  TwistedLoop out = a.resized(dn, dp);
  out.dropped = a.dropped;  // window shrink below tol is not a loss
  return out;
}

}  // namespace

FrameField integrate_holomorphic_frame(const Potential& p, const GridSpec& grid,
                                       const FrameOptions& opt) {
  FrameField ff;
  ff.grid = grid;
  ff.n = p.n;
  ff.mask.assign(grid.count(), PointStatus::not_computed);
  ff.frames.assign(grid.count(), TwistedLoop::identity(p.n, 0, 0));

  const int depth = auto_series_depth(p, grid, opt.truncation);
  const SeriesSpec spec = make_spec(p, depth);
  ff.truncation = depth;

  PathIntegrator path;
  path.p = &p;
  path.spec = spec;
  path.tol = opt.ode_tol;
  path.poles = dedupe_poles(p);
  const double spacing = grid.spacing();
  path.route_radius = 0.35 * spacing;
  path.detour_offset = 0.6 * spacing;
  const double r_excl = opt.pole_exclusion * spacing;

  if (path.pole_distance(p.basepoint) < r_excl)
    throw NumericError("frame integration: basepoint coincides with a pole");

  for (int iv = 0; iv < grid.v_count; ++iv)
    for (int iu = 0; iu < grid.u_count; ++iu)
      if (path.pole_distance(grid.point(iu, iv)) < r_excl)
        ff.mask[grid.index(iu, iv)] = PointStatus::pole_skipped;

  // Anchor column: nearest column to the basepoint.
  int iu_a = 0;
  if (grid.u_count > 1)
    iu_a = std::clamp(int(std::lround((p.basepoint.real() - grid.u_min) / grid.du())),
                      0, grid.u_count - 1);
  int iv_a = 0;
  if (grid.v_count > 1)
    iv_a = std::clamp(int(std::lround((p.basepoint.imag() - grid.v_min) / grid.dv())),
                      0, grid.v_count - 1);

  auto free_seed = [&](cplx want) {
    for (double off : {0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5}) {
      cplx c = want + cplx(off * std::max(grid.du(), 0.5 * spacing), 0.0);
      if (path.pole_distance(c) >= r_excl) return c;
    }
    throw NumericError("frame integration: no pole-free seed position");
  };

  struct Seed {
    state_t y;
    cplx at;
  };

  // Reach the anchor row position from the basepoint.
  Seed anchor;
  anchor.y = identity_state(spec);
  anchor.at = free_seed(grid.point(iu_a, iv_a));
  path.staircase(anchor.y, p.basepoint, anchor.at, false);

  auto sweep_row = [&](const Seed& seed, int iv) {
    auto run = [&](int dir) {
      state_t y = seed.y;
      cplx at = seed.at;
      for (int iu = iu_a + (dir > 0 && std::abs(seed.at - grid.point(iu_a, iv)) < 1e-14
                                ? 1
                                : 0);
           iu >= 0 && iu < grid.u_count; iu += dir) {
        if (dir < 0 && iu == iu_a) continue;
        int idx = grid.index(iu, iv);
        if (ff.mask[idx] == PointStatus::pole_skipped) continue;
        cplx target = grid.point(iu, iv);
        path.segment(y, at, target);
        at = target;
        ff.frames[idx] = compact_window(state_to_loop(y, spec, p.n), 1e-300);
        ff.mask[idx] = PointStatus::ok;
      }
    };
    // Store the seed's own point if it sits exactly on the grid.
    int idx = grid.index(iu_a, iv);
    if (ff.mask[idx] != PointStatus::pole_skipped &&
        std::abs(seed.at - grid.point(iu_a, iv)) < 1e-14) {
      ff.frames[idx] = compact_window(state_to_loop(seed.y, spec, p.n), 1e-300);
      ff.mask[idx] = PointStatus::ok;
    }
    run(+1);
    run(-1);
  };

  // March the anchor seed through all rows.
  auto march = [&](Seed seed, int dir) {
    int iv = iv_a;
    sweep_row(seed, iv);
    for (iv += dir; iv >= 0 && iv < grid.v_count; iv += dir) {
      cplx want = cplx(seed.at.real(), grid.point(0, iv).imag());
      cplx next = path.pole_distance(want) >= r_excl ? want : free_seed(want);
      path.segment(seed.y, seed.at, next);
      seed.at = next;
      sweep_row(seed, iv);
    }
  };
  march(anchor, +1);
  if (iv_a > 0) {
    Seed down = anchor;
    int iv = iv_a - 1;
    for (; iv >= 0; --iv) {
      cplx want = cplx(down.at.real(), grid.point(0, iv).imag());
      cplx next = path.pole_distance(want) >= r_excl ? want : free_seed(want);
      path.segment(down.y, down.at, next);
      down.at = next;
      sweep_row(down, iv);
    }
  }
  return ff;
}

TwistedLoop integrate_frame_to(const Potential& p, cplx target, bool vertical_first,
                               const FrameOptions& opt) {
  GridSpec g;
  g.u_min = std::min(p.basepoint.real(), target.real());
  g.u_max = std::max(p.basepoint.real(), target.real());
  g.v_min = std::min(p.basepoint.imag(), target.imag());
  g.v_max = std::max(p.basepoint.imag(), target.imag());
  g.u_count = g.v_count = 2;
  const int depth = auto_series_depth(p, g, opt.truncation);
  const SeriesSpec spec = make_spec(p, depth);

  PathIntegrator path;
  path.p = &p;
  path.spec = spec;
  path.tol = opt.ode_tol;
  path.poles = dedupe_poles(p);
  double scale = std::max(1e-2, std::abs(target - p.basepoint));
  path.route_radius = 0.1 * scale;
  path.detour_offset = 0.15 * scale;

  state_t y = identity_state(spec);
  path.staircase(y, p.basepoint, target, vertical_first);
  return compact_window(state_to_loop(y, spec, p.n), 1e-300);
}

cmat integrate_frame_at_lambda(const Potential& p, cplx target, cplx lambda,
                               double tol) {
  const int m = p.size();
  RationalMatrix combined(m, m);
  for (const auto& [b, mat] : p.terms) {
    cplx w = std::pow(lambda, b);
    for (int k = 0; k < m * m; ++k)
      combined.entries[k] =
          combined.entries[k] + RationalExpr::constant(w) * mat.entries[k];
  }
  Potential q;
  q.n = p.n;
  q.kind = PotentialKind::holomorphic;
  q.basepoint = p.basepoint;
  q.terms.emplace(0, std::move(combined));

  SeriesSpec spec{0, 0, m};
  PathIntegrator path;
  path.p = &q;
  path.spec = spec;
  path.tol = tol;
  path.poles = dedupe_poles(p);
  double scale = std::max(1e-2, std::abs(target - p.basepoint));
  path.route_radius = 0.1 * scale;
  path.detour_offset = 0.15 * scale;

  state_t y = identity_state(spec);
  path.staircase(y, p.basepoint, target, false);
  return cmat(series_block(y, spec, 0));
}

namespace detail {

rmat envelope_gauge(const cmat& B1z, const cmat& vp0, int n, double* gap) {
  const int m = n + 4;
  rmat out = rmat::Identity(m, m);
  if (gap) *gap = 0.0;
  rmat I13 = rmat::Identity(4, 4);
  I13(0, 0) = -1.0;
  cmat A = B1z.transpose() * I13.cast<cplx>() * vp0.topLeftCorner(4, 4);
  cmat S(2 * n, 4);
  S.topRows(n) = A;
  S.bottomRows(n) = A.conjugate();
  Eigen::JacobiSVD<cmat> svd(S, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double top = sv(0);
  if (top <= 0.0) return out;
  if (gap) *gap = sv(2) / top;
  if (sv(2) / top < 1e-10) return out;  // envelope direction not unique here
  cvec w = svd.matrixV().col(3);
  int imax = 0;
  for (int k = 1; k < 4; ++k)
    if (std::abs(w(k)) > std::abs(w(imax))) imax = k;
  w *= std::conj(w(imax)) / std::abs(w(imax));
  if (w.imag().cwiseAbs().maxCoeff() > 1e-6) return out;
  rvec wr = w.real();
  if (std::abs(wr(0)) < 1e-8) return out;
  if (wr(0) < 0) wr = -wr;
  Eigen::Vector3d what = wr.tail(3) / wr(0);  // lightlike: |tail| = |w0|
  double wn = what.norm();
  if (wn < 1e-8) return out;
  what /= wn;
  Eigen::Vector3d a(-1.0, 0.0, 0.0);
  double c = a.dot(what);
  Eigen::Matrix3d R3;
  if (c < -1.0 + 1e-12) {
    R3 = Eigen::Matrix3d::Identity();
    R3(0, 0) = -1.0;
    R3(2, 2) = -1.0;  // half turn about the second axis
  } else {
    Eigen::Vector3d v = a.cross(what);
    Eigen::Matrix3d vx;
    vx << 0, -v(2), v(1), v(2), 0, -v(0), -v(1), v(0), 0;
    R3 = Eigen::Matrix3d::Identity() + vx + vx * vx * (1.0 / (1.0 + c));
  }
  out.block(1, 1, 3, 3) = R3;
  return out;
}

}  // namespace detail

FrameField dpw_construct(const Potential& p, const GridSpec& grid,
                         const FrameOptions& opt) {
  FrameField fm = integrate_holomorphic_frame(p, grid, opt);

  FrameField out;
  out.grid = grid;
  out.n = p.n;
  out.mask = fm.mask;
  out.frames.assign(grid.count(), TwistedLoop::identity(p.n, 0, 0));
  out.vp0.assign(grid.count(), cmat::Identity(p.size(), p.size()));
  out.gauge.assign(grid.count(), rmat::Identity(p.size(), p.size()));
  out.envelope_gap.assign(grid.count(), 0.0);

  int window = 0;
  for (int i = 0; i < grid.count(); ++i)
    if (fm.mask[i] == PointStatus::ok)
      window = std::max({window, fm.frames[i].d_neg, fm.frames[i].d_pos});
  const int depth = opt.iwasawa_depth > 0 ? opt.iwasawa_depth
                                          : std::max(window + 10, 16);
  const int N =
      opt.samples > 0 ? opt.samples : next_pow2(std::max(64, 6 * (depth + window)));
  out.truncation = depth + window;

  std::vector<int> work;
  work.reserve(grid.count());
  for (int idx = 0; idx < grid.count(); ++idx)
    if (fm.mask[idx] == PointStatus::ok) work.push_back(idx);

  auto run_point = [&](int idx) {
    int iu = idx % grid.u_count, iv = idx / grid.u_count;
    try {
      IwasawaSamples s = iwasawa_from_samples(sample_loop(fm.frames[idx], N), p.n,
                                              depth, opt.cond_threshold);
      TwistedLoop f = loop_from_samples(s.f, p.n, depth + window, depth + window);
      f.enforce_parity();
      out.frames[idx] = compact_window(f, 1e-300);
      out.vp0[idx] = s.vp0;
      cmat B1z = p.eval(-1, grid.point(iu, iv)).topRightCorner(4, p.n);
      out.gauge[idx] =
          detail::envelope_gauge(B1z, s.vp0, p.n, &out.envelope_gap[idx]);
    } catch (const NumericError&) {
      out.mask[idx] = PointStatus::cell_boundary;
    }
  };

  int threads = std::clamp(opt.threads, 1, 64);
  if (threads <= 1 || int(work.size()) < 2) {
    for (int idx : work) run_point(idx);
  } else {
    std::atomic<size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          size_t k = cursor.fetch_add(1);
          if (k >= work.size()) return;
          run_point(work[k]);
        }
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

FrameCheckReport extended_frame_check(const FrameField& ff, int lambda_samples) {
  FrameCheckReport rep;
  const GridSpec& g = ff.grid;
  const int m = ff.n + 4;
  const int nl = next_pow2(std::max(8, lambda_samples));
  const double du = g.du(), dv = g.dv();

  std::vector<std::vector<cmat>> F(g.count());
  for (int iv = 0; iv < g.v_count; ++iv)
    for (int iu = 0; iu < g.u_count; ++iu) {
      int idx = g.index(iu, iv);
      if (ff.mask[idx] != PointStatus::ok) continue;
      F[idx].resize(nl);
      for (int k = 0; k < nl; ++k) {
        F[idx][k] = evaluate(ff.frames[idx], std::polar(1.0, 2 * pi * k / nl));
        rep.reality = std::max(rep.reality, sup_norm(F[idx][k] - F[idx][k].conjugate()));
      }
    }

  auto has = [&](int iu, int iv) {
    return iu >= 0 && iu < g.u_count && iv >= 0 && iv < g.v_count &&
           !F[g.index(iu, iv)].empty();
  };

  // Maurer-Cartan partials per lambda sample at 1-ring interior points.
  std::vector<std::vector<cmat>> Au(g.count()), Av(g.count());
  for (int iv = 0; iv < g.v_count; ++iv)
    for (int iu = 0; iu < g.u_count; ++iu) {
      if (!has(iu, iv) || !has(iu - 1, iv) || !has(iu + 1, iv) || !has(iu, iv - 1) ||
          !has(iu, iv + 1))
        continue;
      int idx = g.index(iu, iv);
      Au[idx].resize(nl);
      Av[idx].resize(nl);
      std::vector<cplx> au_bin(nl), av_bin(nl);
      std::vector<std::vector<cplx>> spectra_u(m * m, std::vector<cplx>(nl));
      std::vector<std::vector<cplx>> spectra_v(m * m, std::vector<cplx>(nl));
      for (int k = 0; k < nl; ++k) {
        Eigen::PartialPivLU<cmat> lu(F[idx][k]);
        Au[idx][k] = lu.solve((F[g.index(iu + 1, iv)][k] - F[g.index(iu - 1, iv)][k]) /
                              (2 * du));
        Av[idx][k] = lu.solve((F[g.index(iu, iv + 1)][k] - F[g.index(iu, iv - 1)][k]) /
                              (2 * dv));
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < m; ++c) {
            spectra_u[r * m + c][k] = Au[idx][k](r, c);
            spectra_v[r * m + c][k] = Av[idx][k](r, c);
          }
      }
      // Coefficient support and block structure of the connection form.
      for (auto* spectra : {&spectra_u, &spectra_v}) {
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < m; ++c) {
            auto& bins = (*spectra)[r * m + c];
            detail::fft_pow2(bins, false);
            bool diag_block = (r < 4 && c < 4) || (r >= 4 && c >= 4);
            for (int k = 0; k < nl; ++k) {
              int pw = k <= nl / 2 ? k : k - nl;
              double mag = std::abs(bins[k]) / nl;
              if (pw < -1 || pw > 1)
                rep.lambda_support = std::max(rep.lambda_support, mag);
              else if (pw == 0 ? !diag_block : diag_block)
                rep.block_defect = std::max(rep.block_defect, mag);
            }
          }
      }
    }

  // Flatness needs Maurer-Cartan values on a full cross of neighbours.
  for (int iv = 0; iv < g.v_count; ++iv)
    for (int iu = 0; iu < g.u_count; ++iu) {
      int idx = g.index(iu, iv);
      if (Au[idx].empty()) continue;
      auto mc = [&](int ju, int jv) -> const std::vector<cmat>* {
        if (ju < 0 || ju >= g.u_count || jv < 0 || jv >= g.v_count) return nullptr;
        int j = g.index(ju, jv);
        return Au[j].empty() ? nullptr : &Au[j];
      };
      auto mcv = [&](int ju, int jv) -> const std::vector<cmat>* {
        if (ju < 0 || ju >= g.u_count || jv < 0 || jv >= g.v_count) return nullptr;
        int j = g.index(ju, jv);
        return Av[j].empty() ? nullptr : &Av[j];
      };
      const auto *avr = mcv(iu + 1, iv), *avl = mcv(iu - 1, iv);
      const auto *auu = mc(iu, iv + 1), *aud = mc(iu, iv - 1);
      if (!avr || !avl || !auu || !aud) continue;
      for (int k = 0; k < nl; ++k) {
        cmat duAv = ((*avr)[k] - (*avl)[k]) / (2 * du);
        cmat dvAu = ((*auu)[k] - (*aud)[k]) / (2 * dv);
        cmat resid = duAv - dvAu + Au[idx][k] * Av[idx][k] - Av[idx][k] * Au[idx][k];
        rep.flatness = std::max(rep.flatness, sup_norm(resid));
      }
    }
  return rep;
}

cmat surface_frame(const FrameField& ff, int iu, int iv, cplx lambda) {
  int idx = ff.grid.index(iu, iv);
  return evaluate(ff.frames[idx], lambda) * ff.gauge[idx].cast<cplx>();
}

static PointStatus status_from_string(const std::string& s) {
  if (s == "ok") return PointStatus::ok;
  if (s == "pole_skipped") return PointStatus::pole_skipped;
  if (s == "cell_boundary") return PointStatus::cell_boundary;
  if (s == "not_computed") return PointStatus::not_computed;
  throw std::domain_error("frame_field_from_json: unknown point status '" + s + "'");
}

nlohmann::json frame_field_to_json(const FrameField& ff) {
  const GridSpec& g = ff.grid;
  nlohmann::json j;
  j["grid"] = {{"u_min", g.u_min}, {"u_max", g.u_max}, {"u_count", g.u_count},
               {"v_min", g.v_min}, {"v_max", g.v_max}, {"v_count", g.v_count}};
  j["n"] = ff.n;
  j["truncation"] = ff.truncation;
  nlohmann::json mask = nlohmann::json::array();
  nlohmann::json frames = nlohmann::json::array();
  for (int idx = 0; idx < g.count(); ++idx) {
    mask.push_back(to_string(ff.mask[idx]));
    if (ff.mask[idx] == PointStatus::ok)
      frames.push_back(loop_to_json(ff.frames[idx]));
    else
      frames.push_back(nullptr);
  }
  j["mask"] = std::move(mask);
  j["frames"] = std::move(frames);
  if (!ff.vp0.empty()) {
    nlohmann::json vp = nlohmann::json::array();
    for (int idx = 0; idx < g.count(); ++idx) {
      if (ff.mask[idx] != PointStatus::ok || ff.vp0[idx].size() == 0) {
        vp.push_back(nullptr);
        continue;
      }
      nlohmann::json rows = nlohmann::json::array();
      for (int r = 0; r < ff.vp0[idx].rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < ff.vp0[idx].cols(); ++c)
          row.push_back({ff.vp0[idx](r, c).real(), ff.vp0[idx](r, c).imag()});
        rows.push_back(std::move(row));
      }
      vp.push_back(std::move(rows));
    }
    j["vp0"] = std::move(vp);
  }
  if (!ff.gauge.empty()) {
    nlohmann::json gs = nlohmann::json::array();
    for (int idx = 0; idx < g.count(); ++idx) {
      if (ff.mask[idx] != PointStatus::ok || ff.gauge[idx].size() == 0) {
        gs.push_back(nullptr);
        continue;
      }
      nlohmann::json rows = nlohmann::json::array();
      for (int r = 0; r < ff.gauge[idx].rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < ff.gauge[idx].cols(); ++c)
          row.push_back(ff.gauge[idx](r, c));
        rows.push_back(std::move(row));
      }
      gs.push_back(std::move(rows));
    }
    j["gauge"] = std::move(gs);
  }
  if (!ff.envelope_gap.empty()) j["envelope_gap"] = ff.envelope_gap;
  return j;
}

FrameField frame_field_from_json(const nlohmann::json& j) {
  FrameField ff;
  const auto& g = j.at("grid");
  ff.grid.u_min = g.at("u_min").get<double>();
  ff.grid.u_max = g.at("u_max").get<double>();
  ff.grid.u_count = g.at("u_count").get<int>();
  ff.grid.v_min = g.at("v_min").get<double>();
  ff.grid.v_max = g.at("v_max").get<double>();
  ff.grid.v_count = g.at("v_count").get<int>();
  ff.n = j.at("n").get<int>();
  ff.truncation = j.at("truncation").get<int>();
  int total = ff.grid.count();
  const auto& mask = j.at("mask");
  const auto& frames = j.at("frames");
  if (int(mask.size()) != total || int(frames.size()) != total)
    throw std::domain_error("frame_field_from_json: grid size mismatch");
  ff.mask.resize(total, PointStatus::not_computed);
  ff.frames.assign(total, TwistedLoop());
  for (int idx = 0; idx < total; ++idx) {
    ff.mask[idx] = status_from_string(mask.at(idx).get<std::string>());
    if (!frames.at(idx).is_null()) ff.frames[idx] = loop_from_json(frames.at(idx));
  }
  if (j.contains("vp0")) {
    const auto& vp = j.at("vp0");
    ff.vp0.assign(total, cmat());
    for (int idx = 0; idx < total && idx < int(vp.size()); ++idx) {
      if (vp.at(idx).is_null()) continue;
      const auto& rows = vp.at(idx);
      cmat m(rows.size(), rows.at(0).size());
      for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) {
          const auto& e = rows.at(r).at(c);
          m(r, c) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
        }
      ff.vp0[idx] = std::move(m);
    }
  }
  if (j.contains("gauge")) {
    const auto& gs = j.at("gauge");
    ff.gauge.assign(total, rmat());
    for (int idx = 0; idx < total && idx < int(gs.size()); ++idx) {
      if (gs.at(idx).is_null()) continue;
      const auto& rows = gs.at(idx);
      rmat m(rows.size(), rows.at(0).size());
      for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) m(r, c) = rows.at(r).at(c).get<double>();
      ff.gauge[idx] = std::move(m);
    }
  }
  if (j.contains("envelope_gap"))
    ff.envelope_gap = j.at("envelope_gap").get<std::vector<double>>();
  return ff;
}

}  // namespace wlg
