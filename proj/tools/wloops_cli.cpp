// wloops: construct and analyze Willmore surfaces in spheres from loop-group
// potential data. Subcommands are thin drivers over the library; all file
// formats are owned by the library readers/writers they call.

#include "wlg/factorization.hpp"
#include "wlg/frame_field.hpp"
#include "wlg/homogeneous.hpp"
#include "wlg/potential.hpp"
#include "wlg/reference.hpp"
#include "wlg/surface.hpp"
#include "wlg/wu.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 numerical failure, 2 usage/IO, 3 validation.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int emit_error(int code, const std::string& kind, const std::string& message) {
  json j = {{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}};
  std::cerr << j.dump(2) << std::endl;
  return code;
}

std::string slurp(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << text;
  f.flush();
  if (!f) throw IoError("short write: " + path);
}

json read_json_file(const std::string& path) { return json::parse(slurp(path)); }

double to_double(const std::string& s) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("expected a decimal number, got '" + s + "'");
}

int to_int(const std::string& s) {
  try {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("expected an integer, got '" + s + "'");
}

// Accepts "1.5", "i", "-i", "2i", "1+2i", "1e-3-0.5i" and "(re,im)".
wlg::cplx parse_complex(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(),
                         [](unsigned char c) { return std::isspace(c); }),
          s.end());
  if (s.empty()) throw UsageError("empty complex literal");
  if (s.front() == '(' && s.back() == ')') {
    auto comma = s.find(',');
    if (comma == std::string::npos || comma + 1 >= s.size() - 1)
      throw UsageError("expected '(re,im)', got '" + s + "'");
    return {to_double(s.substr(1, comma - 1)),
            to_double(s.substr(comma + 1, s.size() - comma - 2))};
  }
  char tail = s.back();
  if (tail == 'i' || tail == 'I' || tail == 'j') {
    std::string body = s.substr(0, s.size() - 1);
    size_t split = std::string::npos;
    for (size_t k = body.size(); k-- > 1;)
      if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' &&
          body[k - 1] != 'E') {
        split = k;
        break;
      }
    std::string re = split == std::string::npos ? "" : body.substr(0, split);
    std::string im = split == std::string::npos ? body : body.substr(split);
    double iv = im.empty() || im == "+" ? 1.0 : im == "-" ? -1.0 : to_double(im);
    return {re.empty() ? 0.0 : to_double(re), iv};
  }
  return {to_double(s), 0.0};
}

// Grid grammar: re:min:max:count,im:min:max:count (axis order free).
wlg::GridSpec parse_grid(const std::string& text) {
  wlg::GridSpec g;
  bool have_re = false, have_im = false;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::vector<std::string> f;
    std::stringstream ps(part);
    std::string tok;
    while (std::getline(ps, tok, ':')) f.push_back(tok);
    if (f.size() != 4)
      throw UsageError("grid axis must be tag:min:max:count, got '" + part + "'");
    double lo = to_double(f[1]), hi = to_double(f[2]);
    int count = to_int(f[3]);
    if (count < 1) throw UsageError("grid count must be positive in '" + part + "'");
    if (hi < lo) throw UsageError("grid max below min in '" + part + "'");
    if (f[0] == "re" || f[0] == "u") {
      g.u_min = lo, g.u_max = hi, g.u_count = count, have_re = true;
    } else if (f[0] == "im" || f[0] == "v") {
      g.v_min = lo, g.v_max = hi, g.v_count = count, have_im = true;
    } else {
      throw UsageError("grid axis tag must be re or im, got '" + f[0] + "'");
    }
  }
  if (!have_re || !have_im) throw UsageError("grid needs both a re and an im axis");
  return g;
}

wlg::Projection parse_projection(const std::string& s) {
  if (s == "linear") return wlg::Projection::linear;
  if (s == "stereographic") return wlg::Projection::stereographic;
  throw UsageError("projection must be linear or stereographic, got '" + s + "'");
}

std::array<int, 3> parse_axes(const std::string& s) {
  std::array<int, 3> axes{};
  std::stringstream ss(s);
  std::string tok;
  int k = 0;
  while (std::getline(ss, tok, ',')) {
    if (k >= 3) throw UsageError("axes wants three indices, got '" + s + "'");
    axes[k++] = to_int(tok);
  }
  if (k != 3) throw UsageError("axes wants three indices, got '" + s + "'");
  return axes;
}

void parallel_rows(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::clamp(threads, 1, 64);
  if (threads <= 1 || count < 2) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        int i = cursor.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

json mask_stats(const std::vector<wlg::PointStatus>& mask) {
  int counts[4] = {0, 0, 0, 0};
  for (auto s : mask) counts[static_cast<int>(s)]++;
  return {{"ok", counts[0]},
          {"pole_skipped", counts[1]},
          {"cell_boundary", counts[2]},
          {"not_computed", counts[3]}};
}

int count_ok(const std::vector<wlg::PointStatus>& mask) {
  return int(std::count(mask.begin(), mask.end(), wlg::PointStatus::ok));
}

json grid_json(const wlg::GridSpec& g) {
  return {{"u_min", g.u_min}, {"u_max", g.u_max}, {"u_count", g.u_count},
          {"v_min", g.v_min}, {"v_max", g.v_max}, {"v_count", g.v_count}};
}

json complex_json(wlg::cplx z) { return {z.real(), z.imag()}; }

json report_json(const wlg::FactorizationReport& r) {
  return {{"residual", r.residual},
          {"condition", r.condition},
          {"reality_defect", r.reality_defect},
          {"newton_residual", r.newton_residual},
          {"cell", wlg::to_string(r.cell)},
          {"orthochronous", r.orthochronous}};
}

void write_meshes(const wlg::SurfaceGrid& sg, const std::string& obj,
                  const std::string& ply, const std::string& projection,
                  const std::string& axes) {
  if (obj.empty() && ply.empty()) return;
  wlg::Projection proj = parse_projection(projection);
  std::array<int, 3> ax = parse_axes(axes);
  if (!obj.empty()) wlg::write_surface_obj(obj, sg, proj, ax);
  if (!ply.empty()) wlg::write_surface_ply(ply, sg, proj, ax);
}

void emit_report(const json& rep, const std::string& out) {
  if (out.empty())
    std::cout << rep.dump(2) << "\n";
  else
    spit(out, rep.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// construct

struct ConstructOpts {
  std::string potential;
  std::string grid = "re:-1:1:21,im:-1:1:21";
  std::string lambda = "1";
  int deg = 8;
  int threads = 1;
  std::string out = "surface.csv";
  std::string obj, ply, frames, diagnostics;
  std::string projection = "linear";
  std::string axes = "0,1,2";
  bool skip_validation = false;
};

int cmd_construct(const ConstructOpts& o) {
  if (!std::filesystem::exists(o.potential))
    throw IoError("no such file: " + o.potential);
  wlg::Potential p = wlg::load_potential(o.potential);
  if (!o.skip_validation) {
    if (p.kind == wlg::PotentialKind::normalized) {
      auto v = wlg::validate_normalized(p);
      if (!v.ok(1e-6))
        throw wlg::NullConditionViolated(
            "potential fails structural validation: nilpotency " +
            std::to_string(v.nilpotency) + ", null condition " +
            std::to_string(v.null_condition) + ", parity " +
            std::to_string(v.parity_defect) + ", algebra " +
            std::to_string(v.algebra_defect));
    } else if (p.kind == wlg::PotentialKind::constant) {
      auto r = wlg::validate_homogeneous(p, 1e-8);
      if (!r.ok)
        throw std::invalid_argument(
            "constant potential fails the commutation conditions: mixed " +
            std::to_string(r.mixed_bracket) + ", balanced " +
            std::to_string(r.balanced_bracket));
    }
  }
  wlg::GridSpec grid = parse_grid(o.grid);
  wlg::cplx lambda = parse_complex(o.lambda);
  if (std::abs(std::abs(lambda) - 1.0) > 1e-9)
    throw UsageError("lambda must lie on the unit circle");

  wlg::FrameOptions fo;
  fo.truncation = o.deg;
  fo.threads = o.threads;
  wlg::FrameField ff = wlg::dpw_construct(p, grid, fo);
  int ok = count_ok(ff.mask);
  if (ok == 0)
    throw wlg::NumericError("construction failed at every grid point");

  wlg::SurfaceGrid sg = wlg::build_surface(ff, lambda);
  wlg::attach_density(sg);
  wlg::write_surface_csv(o.out, sg);
  write_meshes(sg, o.obj, o.ply, o.projection, o.axes);
  if (!o.frames.empty()) spit(o.frames, wlg::frame_field_to_json(ff).dump(1) + "\n");

  if (!o.diagnostics.empty()) {
    json d;
    d["potential"] = {{"path", o.potential},
                      {"kind", wlg::to_string(p.kind)},
                      {"n", p.n}};
    d["grid"] = grid_json(grid);
    d["lambda"] = complex_json(lambda);
    d["truncation"] = ff.truncation;
    d["mask"] = mask_stats(sg.mask);
    auto guarded = [&](const char* key, auto&& fn) {
      try {
        d[key] = fn();
      } catch (const std::exception& e) {
        d[key] = {{"error", e.what()}};
      }
    };
    guarded("frame", [&] {
      auto fc = wlg::extended_frame_check(ff);
      return json{{"lambda_support", fc.lambda_support},
                  {"block_defect", fc.block_defect},
                  {"flatness", fc.flatness},
                  {"reality", fc.reality}};
    });
    guarded("conformality", [&] { return json(wlg::conformality_check(sg)); });
    guarded("isotropy", [&] {
      auto iso = wlg::isotropy_check(sg);
      return json{{"kk", iso.kk}, {"dkk", iso.dkk}, {"dkdk", iso.dkdk}};
    });
    guarded("willmore_residual", [&] { return json(wlg::willmore_residual(sg)); });
    guarded("energy", [&] {
      auto e = wlg::willmore_energy(sg);
      return json{{"value", e.value}, {"half_grid_error", e.error}};
    });
    spit(o.diagnostics, d.dump(2) + "\n");
  }

  std::cout << "constructed " << ok << "/" << grid.count() << " grid points, wrote "
            << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOpts {
  std::string surface;
  std::string checks = "conformal,willmore,isotropy";
  std::string out;
  bool periodic_u = false;
  bool periodic_v = false;
};

int cmd_analyze(const AnalyzeOpts& o) {
  static const std::set<std::string> known = {"conformal", "willmore", "isotropy",
                                              "structure", "energy"};
  std::set<std::string> want;
  std::stringstream ss(o.checks);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!known.count(tok)) throw UsageError("unknown check '" + tok + "'");
    want.insert(tok);
  }
  if (want.empty()) throw UsageError("no checks requested");

  wlg::SurfaceGrid sg = wlg::read_surface_csv(o.surface);
  sg.periodic_u = o.periodic_u;
  sg.periodic_v = o.periodic_v;
  if (want.count("energy") || want.count("willmore")) {
    bool have_density = std::any_of(sg.energy_density.begin(),
                                    sg.energy_density.end(),
                                    [](double x) { return std::isfinite(x); });
    if (!have_density) wlg::attach_density(sg);
  }

  json rep;
  rep["surface"] = o.surface;
  rep["n"] = sg.n;
  rep["grid"] = grid_json(sg.grid);
  rep["mask"] = mask_stats(sg.mask);
  bool failed = false;
  auto guarded = [&](const char* key, auto&& fn) {
    try {
      rep["checks"][key] = fn();
    } catch (const std::exception& e) {
      rep["checks"][key] = {{"error", e.what()}};
      failed = true;
    }
  };
  if (want.count("conformal"))
    guarded("conformal", [&] { return json(wlg::conformality_check(sg)); });
  if (want.count("willmore"))
    guarded("willmore", [&] { return json(wlg::willmore_residual(sg)); });
  if (want.count("isotropy"))
    guarded("isotropy", [&] {
      auto iso = wlg::isotropy_check(sg);
      return json{{"kk", iso.kk}, {"dkk", iso.dkk}, {"dkdk", iso.dkdk}};
    });
  if (want.count("structure"))
    guarded("structure", [&] {
      auto st = wlg::structure_check(sg);
      return json{{"gauss", st.gauss}, {"codazzi", st.codazzi}, {"ricci", st.ricci}};
    });
  if (want.count("energy"))
    guarded("energy", [&] {
      auto e = wlg::willmore_energy(sg);
      return json{{"value", e.value}, {"half_grid_error", e.error}};
    });

  emit_report(rep, o.out);
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// wu

struct WuOpts {
  std::string mc;
  std::string potential;
  std::string out;
  std::string emit_mc;
  int degree = 12;
  double radius = 0.5;
  int rings = 12;
  int angles = 44;
  double h = 1e-2;
};

int cmd_wu(const WuOpts& o) {
  if (o.mc.empty() == o.potential.empty())
    throw UsageError("need exactly one of --mc or --potential");
  wlg::McData d;
  if (!o.mc.empty()) {
    d = wlg::mc_from_json(read_json_file(o.mc));
  } else {
    wlg::Potential p = wlg::load_potential(o.potential);
    d = wlg::extract_mc_data(p, o.radius, o.rings, o.angles, o.h);
  }
  if (!o.emit_mc.empty()) spit(o.emit_mc, wlg::mc_to_json(d).dump(1) + "\n");
  wlg::Potential rec = wlg::wu_from_mc(d, o.degree);
  spit(o.out, wlg::serialize_potential(rec));
  std::cout << "recovered normalized potential (n = " << rec.n << ", z-degree "
            << o.degree << "), wrote " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// factorize

struct FactorizeOpts {
  std::string loop;
  std::string mode = "both";
  std::string out;
  int depth = -1;
};

int cmd_factorize(const FactorizeOpts& o) {
  if (o.mode != "both" && o.mode != "birkhoff" && o.mode != "iwasawa")
    throw UsageError("mode must be birkhoff, iwasawa, or both");
  wlg::TwistedLoop g = wlg::loop_from_json(read_json_file(o.loop));
  json rep;
  rep["loop"] = {{"n", g.n}, {"d_neg", g.d_neg}, {"d_pos", g.d_pos}};
  rep["cell"] = wlg::to_string(wlg::cell_classify(g));
  bool failed = false;
  if (o.mode != "iwasawa") {
    try {
      wlg::BirkhoffOptions bo;
      bo.depth = o.depth;
      auto [minus, plus, r] = wlg::birkhoff(g, bo);
      rep["birkhoff"] = report_json(r);
    } catch (const wlg::NumericError& e) {
      rep["birkhoff"] = {{"error", e.what()}};
      failed = true;
    }
  }
  if (o.mode != "birkhoff") {
    try {
      wlg::IwasawaOptions io;
      io.depth = o.depth;
      auto res = wlg::iwasawa(g, io);
      json jr = report_json(res.report);
      jr["vp0_s_defect"] = wlg::s_membership_defect(res.vp0, g.n);
      rep["iwasawa"] = jr;
    } catch (const wlg::NumericError& e) {
      rep["iwasawa"] = {{"error", e.what()}};
      failed = true;
    }
  }
  emit_report(rep, o.out);
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// homogeneous

struct HomogeneousOpts {
  std::string family;
  std::optional<double> a, b;
  std::string out;
  std::vector<std::string> energy;
  std::string energy_out;
  std::string surface;
  std::string grid;
  std::string lambda = "1";
  std::string period;
  bool validate = false;
  bool vacuum = false;
};

int cmd_homogeneous(const HomogeneousOpts& o) {
  wlg::Potential pot;
  json info;
  info["family"] = o.family;
  if (o.family == "cylinder") {
    double a, b;
    if (o.a && o.b) {
      a = *o.a, b = *o.b;
    } else if (o.a) {
      if (std::abs(*o.a) > 1) throw UsageError("cylinder needs |a| <= 1");
      a = *o.a, b = std::sqrt(1 - a * a);
    } else if (o.b) {
      if (std::abs(*o.b) > 1) throw UsageError("cylinder needs |b| <= 1");
      b = *o.b, a = std::sqrt(1 - b * b);
    } else {
      throw UsageError("cylinder family needs --a or --b");
    }
    pot = wlg::cylinder_potential(a, b);
    info["a"] = a;
    info["b"] = b;
  } else if (o.family == "ejiri") {
    if (!o.b) throw UsageError("ejiri family needs --b");
    if (*o.b <= 0) throw UsageError("ejiri family needs b > 0");
    pot = wlg::ejiri_potential(*o.b);
    info["b"] = *o.b;
  } else {
    throw UsageError("family must be cylinder or ejiri, got '" + o.family + "'");
  }
  info["n"] = pot.n;

  if (!o.out.empty()) spit(o.out, wlg::serialize_potential(pot));

  bool want_info = false;
  if (o.validate) {
    auto r = wlg::validate_homogeneous(pot);
    info["homogeneity"] = {{"mixed_bracket", r.mixed_bracket},
                           {"balanced_bracket", r.balanced_bracket},
                           {"ok", r.ok},
                           {"watch_one_based", complex_json(r.watch_one_based)},
                           {"watch_zero_based", complex_json(r.watch_zero_based)}};
    want_info = true;
  }
  if (o.vacuum) {
    auto blocks = wlg::constant_blocks(pot);
    auto v = wlg::vacuum_classify(blocks.off.topRightCorner(4, pot.n));
    json gen = json::array();
    for (int k = 0; k < v.generator.size(); ++k)
      gen.push_back(complex_json(v.generator(k)));
    info["vacuum"] = {{"class", wlg::to_string(v.cls)},
                      {"rank", v.rank},
                      {"generator", gen},
                      {"hermitian_pairing", v.hermitian_pairing},
                      {"isotropy_defect", v.isotropy_defect},
                      {"bracket_defect", v.bracket_defect}};
    want_info = true;
  }
  if (!o.period.empty()) {
    wlg::cplx delta = parse_complex(o.period);
    info["period"] = complex_json(delta);
    info["period_defect"] =
        wlg::period_defect(pot, delta, parse_complex(o.lambda));
    want_info = true;
  }
  if (!o.surface.empty()) {
    wlg::GridSpec grid =
        o.grid.empty() ? parse_grid("re:0:6.283185307179586:65,im:0:6.283185307179586:65")
                       : parse_grid(o.grid);
    wlg::SurfaceGrid sg =
        wlg::homogeneous_surface(pot, grid, parse_complex(o.lambda));
    wlg::attach_density(sg);
    wlg::write_surface_csv(o.surface, sg);
    info["surface"] = {{"path", o.surface}, {"mask", mask_stats(sg.mask)}};
    want_info = true;
  }

  if (!o.energy.empty()) {
    if (o.family != "ejiri")
      throw UsageError("--energy tabulates the ejiri family only");
    std::ostringstream table;
    table << "j,l,quadrature,closed_form,rel_gap\n";
    table.precision(15);
    for (const auto& spec : o.energy) {
      auto comma = spec.find(',');
      if (comma == std::string::npos)
        throw UsageError("--energy wants j,l pairs, got '" + spec + "'");
      int j = to_int(spec.substr(0, comma));
      int l = to_int(spec.substr(comma + 1));
      auto e = wlg::torus_energy(j, l);
      double rel = std::abs(e.quadrature - e.closed_form) /
                   std::max(1.0, std::abs(e.closed_form));
      table << j << "," << l << "," << e.quadrature << "," << e.closed_form << ","
            << rel << "\n";
    }
    if (o.energy_out.empty())
      std::cout << table.str();
    else
      spit(o.energy_out, table.str());
  }

  if (want_info)
    std::cout << info.dump(2) << "\n";
  else if (o.out.empty() && o.energy.empty())
    std::cout << wlg::serialize_potential(pot);
  return 0;
}

// ---------------------------------------------------------------------------
// reference

struct ReferenceOpts {
  std::string which;
  std::string grid;
  std::string lambda = "1";
  std::optional<double> a, b;
  std::string out = "reference.csv";
  std::string obj, ply;
  std::string projection = "linear";
  std::string axes = "0,1,2";
  int threads = 1;
};

int cmd_reference(const ReferenceOpts& o) {
  wlg::cplx lambda = parse_complex(o.lambda);
  std::function<wlg::rvec(double, double)> eval;
  std::string default_grid;
  int n = 0;
  if (o.which == "s6") {
    n = 4;
    default_grid = "re:-1:1:21,im:-1:1:21";
    eval = [lambda](double u, double v) {
      return wlg::example_s6(wlg::cplx(u, v), lambda);
    };
  } else if (o.which == "cylinder") {
    if (std::abs(lambda - wlg::cplx(1, 0)) > 1e-12)
      throw UsageError("closed-form family surfaces are the lambda = 1 members");
    double a = o.a.value_or(o.b ? std::sqrt(1 - *o.b * *o.b) : 0.6);
    double b = o.b.value_or(std::sqrt(1 - a * a));
    n = 2;
    default_grid = "re:0:6.283185307179586:65,im:0:6.283185307179586:65";
    eval = [a, b](double u, double v) {
      return wlg::cylinder_immersion(u, v, a, b);
    };
  } else if (o.which == "ejiri") {
    if (std::abs(lambda - wlg::cplx(1, 0)) > 1e-12)
      throw UsageError("closed-form family surfaces are the lambda = 1 members");
    double b = o.b.value_or(1.0);
    if (b <= 0) throw UsageError("ejiri family needs b > 0");
    n = 3;
    default_grid = "re:0:6.283185307179586:65,im:0:10.882796185405306:65";
    eval = [b](double u, double v) { return wlg::ejiri_immersion(u, v, b); };
  } else {
    throw UsageError("--which must be s6, cylinder, or ejiri, got '" + o.which + "'");
  }

  wlg::GridSpec grid = parse_grid(o.grid.empty() ? default_grid : o.grid);
  wlg::SurfaceGrid sg;
  sg.grid = grid;
  sg.n = n;
  sg.mask.assign(grid.count(), wlg::PointStatus::ok);
  sg.points.assign(grid.count(), wlg::rvec());
  double nan = std::numeric_limits<double>::quiet_NaN();
  sg.omega.assign(grid.count(), nan);
  sg.energy_density.assign(grid.count(), nan);
  parallel_rows(grid.v_count, o.threads, [&](int iv) {
    for (int iu = 0; iu < grid.u_count; ++iu) {
      wlg::cplx z = grid.point(iu, iv);
      sg.points[grid.index(iu, iv)] = eval(z.real(), z.imag());
    }
  });
  wlg::attach_density(sg);
  wlg::write_surface_csv(o.out, sg);
  write_meshes(sg, o.obj, o.ply, o.projection, o.axes);
  std::cout << "evaluated " << o.which << " on " << grid.u_count << "x"
            << grid.v_count << " grid, wrote " << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Willmore surfaces in spheres from loop-group potentials"};
  app.require_subcommand(1);
  std::function<int()> run;

  auto co = std::make_shared<ConstructOpts>();
  auto* construct = app.add_subcommand(
      "construct", "integrate a potential and emit the surface at a loop parameter");
  construct->add_option("--potential", co->potential, "potential file")->required();
  construct->add_option("--grid", co->grid, "re:min:max:count,im:min:max:count");
  construct->add_option("--lambda", co->lambda, "loop parameter on the unit circle");
  construct->add_option("--deg", co->deg, "series depth of the meromorphic frame");
  construct->add_option("--threads", co->threads, "workers for the pointwise pass");
  construct->add_option("--out", co->out, "surface CSV path");
  construct->add_option("--obj", co->obj, "OBJ mesh path");
  construct->add_option("--ply", co->ply, "PLY mesh path");
  construct->add_option("--projection", co->projection, "linear | stereographic");
  construct->add_option("--axes", co->axes, "three coordinate indices for meshes");
  construct->add_option("--frames", co->frames, "frame field JSON path");
  construct->add_option("--diagnostics", co->diagnostics, "diagnostics JSON path");
  construct->add_flag("--skip-validation", co->skip_validation,
                      "skip structural potential validation");
  construct->callback([&run, co] { run = [co] { return cmd_construct(*co); }; });

  auto ao = std::make_shared<AnalyzeOpts>();
  auto* analyze =
      app.add_subcommand("analyze", "run conformal-geometry checks on a surface CSV");
  analyze->add_option("--surface", ao->surface, "surface CSV path")->required();
  analyze->add_option("--checks", ao->checks,
                      "comma list: conformal,willmore,isotropy,structure,energy");
  analyze->add_option("--out", ao->out, "report JSON path (default stdout)");
  analyze->add_flag("--periodic-u", ao->periodic_u, "treat u as periodic");
  analyze->add_flag("--periodic-v", ao->periodic_v, "treat v as periodic");
  analyze->callback([&run, ao] { run = [ao] { return cmd_analyze(*ao); }; });

  auto wo = std::make_shared<WuOpts>();
  auto* wu = app.add_subcommand(
      "wu", "recover the normalized potential from connection data");
  wu->add_option("--mc", wo->mc, "connection data JSON");
  wu->add_option("--potential", wo->potential,
                 "potential file (connection data sampled from its frame)");
  wu->add_option("--out", wo->out, "output potential path")->required();
  wu->add_option("--degree", wo->degree, "z-degree of the recovered coefficient");
  wu->add_option("--radius", wo->radius, "outer sampling radius");
  wu->add_option("--rings", wo->rings, "sampling rings");
  wu->add_option("--angles", wo->angles, "samples per ring");
  wu->add_option("--step", wo->h, "finite-difference step");
  wu->add_option("--emit-mc", wo->emit_mc, "write the sampled connection data");
  wu->callback([&run, wo] { run = [wo] { return cmd_wu(*wo); }; });

  auto fo = std::make_shared<FactorizeOpts>();
  auto* factorize =
      app.add_subcommand("factorize", "factorize a serialized twisted loop");
  factorize->add_option("--loop", fo->loop, "loop JSON path")->required();
  factorize->add_option("--mode", fo->mode, "birkhoff | iwasawa | both");
  factorize->add_option("--depth", fo->depth, "coefficient window override");
  factorize->add_option("--out", fo->out, "report JSON path (default stdout)");
  factorize->callback([&run, fo] { run = [fo] { return cmd_factorize(*fo); }; });

  auto ho = std::make_shared<HomogeneousOpts>();
  auto* homogeneous = app.add_subcommand(
      "homogeneous", "constant-potential families: potentials, energies, checks");
  homogeneous->add_option("--family", ho->family, "cylinder | ejiri")->required();
  homogeneous->add_option("--a", ho->a, "cylinder parameter");
  homogeneous->add_option("--b", ho->b, "family parameter");
  homogeneous->add_option("--out", ho->out, "write the potential file");
  homogeneous->add_option("--energy", ho->energy,
                          "j,l torus energy row (repeatable)");
  homogeneous->add_option("--energy-out", ho->energy_out,
                          "energy table CSV path (default stdout)");
  homogeneous->add_option("--surface", ho->surface, "surface CSV path");
  homogeneous->add_option("--grid", ho->grid, "surface grid spec");
  homogeneous->add_option("--lambda", ho->lambda, "loop parameter");
  homogeneous->add_option("--period", ho->period,
                          "complex translation to test for closing");
  homogeneous->add_flag("--validate", ho->validate, "report commutation residuals");
  homogeneous->add_flag("--vacuum", ho->vacuum, "classify the vacuum reduction");
  homogeneous->callback([&run, ho] { run = [ho] { return cmd_homogeneous(*ho); }; });

  auto ro = std::make_shared<ReferenceOpts>();
  auto* reference = app.add_subcommand(
      "reference", "evaluate a closed-form comparison surface on a grid");
  reference->add_option("--which", ro->which, "s6 | cylinder | ejiri")->required();
  reference->add_option("--grid", ro->grid, "grid spec (family default otherwise)");
  reference->add_option("--lambda", ro->lambda, "loop parameter (s6 only)");
  reference->add_option("--a", ro->a, "cylinder parameter");
  reference->add_option("--b", ro->b, "family parameter");
  reference->add_option("--out", ro->out, "surface CSV path");
  reference->add_option("--obj", ro->obj, "OBJ mesh path");
  reference->add_option("--ply", ro->ply, "PLY mesh path");
  reference->add_option("--projection", ro->projection, "linear | stereographic");
  reference->add_option("--axes", ro->axes, "three coordinate indices for meshes");
  reference->add_option("--threads", ro->threads, "evaluation workers");
  reference->callback([&run, ro] { run = [ro] { return cmd_reference(*ro); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return emit_error(2, "usage", e.what());
  }

  try {
    if (!run) return emit_error(2, "usage", "no subcommand selected");
    return run();
  } catch (const wlg::ParseError& e) {
    return emit_error(3, "potential_syntax", e.what());
  } catch (const wlg::NullConditionViolated& e) {
    return emit_error(3, "validation", e.what());
  } catch (const UsageError& e) {
    return emit_error(2, "usage", e.what());
  } catch (const IoError& e) {
    return emit_error(2, "io", e.what());
  } catch (const json::exception& e) {
    return emit_error(3, "json", e.what());
  } catch (const std::invalid_argument& e) {
    return emit_error(3, "validation", e.what());
  } catch (const std::domain_error& e) {
    return emit_error(3, "validation", e.what());
  } catch (const wlg::NumericError& e) {
    return emit_error(1, "numeric", e.what());
  } catch (const std::exception& e) {
    return emit_error(2, "io", e.what());
  }
}
