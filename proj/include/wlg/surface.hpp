#pragma once

#include "wlg/frame_field.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>

namespace wlg {

struct DegenerateLift : NumericError {
  using NumericError::NumericError;
};
struct BranchPoint : NumericError {
  using NumericError::NumericError;
};

// Light-cone projection of a frame value: Y spans the first column pair,
// y = spatial(Y) / Y_0. Throws DegenerateLift unless Y_0 > 1e-12 and
// NumericError when the value is not real.
rvec frame_to_immersion(const cmat& f_lambda);
rvec frame_to_immersion(const TwistedLoop& f, cplx lambda);

// Pointwise conformal invariants of an immersion y: M -> S^{n+2}.
struct ConformalFrame {
  double omega = 0.0;       // |y_z|^2 = exp(2 omega) / 2
  rvec Y, N;                // lightlike pair, <Y,N> = -1
  cvec Yz;
  cvec kappa;               // conformal Hopf differential, normal valued
  cplx s;                   // Schwarzian
  std::vector<cplx> k;      // kappa components in the psi basis
  std::vector<cplx> beta;   // components of the normal derivative of kappa
  std::vector<rvec> psi;    // orthonormal normal basis

  double energy_density() const;  // 4 <kappa, conj kappa>
};

using SurfaceFn = std::function<rvec(double u, double v)>;

struct IsotropyReport {
  double kk = 0.0;    // |<kappa, kappa>|
  double dkk = 0.0;   // |<D_z kappa, kappa>|
  double dkdk = 0.0;  // |<D_z kappa, D_z kappa>|
};

struct StructureResiduals {
  double gauss = 0.0;
  double codazzi = 0.0;
  double ricci = 0.0;
};

// Finite-difference engine for the conformal invariants of a surface given
// as a point evaluator. Works on the lattice (u0 + i hu, v0 + j hv) with
// fourth-order central stencils and memoized intermediate fields, so nested
// derivatives (kappa needs second derivatives of the lift, the Willmore
// residual needs fourth) reuse shared evaluations.
class ConformalAnalyzer {
 public:
  ConformalAnalyzer(SurfaceFn y, double u0, double v0, double hu, double hv);

  ConformalFrame frame(int i = 0, int j = 0) const;
  double conformality(int i, int j) const;  // |<Y_z, Y_z>|
  // {omega, energy density}; cheaper than frame(), no normal basis needed.
  std::pair<double, double> density(int i, int j) const;
  cvec willmore_vector(int i, int j) const;
  StructureResiduals structure_residuals(int i, int j) const;
  IsotropyReport isotropy(int i, int j) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

struct SurfaceGrid {
  GridSpec grid;
  int n = 0;  // target sphere S^{n+2}, points carry n+3 components
  std::vector<PointStatus> mask;
  std::vector<rvec> points;
  std::vector<double> omega;           // NaN until computed
  std::vector<double> energy_density;  // NaN until computed
  std::vector<ConformalFrame> frames;  // empty until attach_frames
  bool periodic_u = false;
  bool periodic_v = false;

  bool ok(int iu, int iv) const { return mask[grid.index(iu, iv)] == PointStatus::ok; }
};

SurfaceGrid build_surface(const FrameField& ff, cplx lambda);

// Fills omega and energy_density (attach_density) or full per-point frames
// (attach_frames) by finite differences at the grid spacing; points whose
// stencil leaves the computed patch keep their NaN / missing entries.
void attach_density(SurfaceGrid& sg);
void attach_frames(SurfaceGrid& sg);

struct EnergyResult {
  double value = 0.0;
  double error = -1.0;  // half-resolution comparison; negative when unavailable
};

// 4 integral of <kappa, conj kappa> du dv, composite Simpson (trapezoid on
// even point counts). Throws NumericError when interior coverage is missing.
EnergyResult willmore_energy(const SurfaceGrid& sg);

double conformality_check(const SurfaceGrid& sg);
double willmore_residual(const SurfaceGrid& sg);
IsotropyReport isotropy_check(const SurfaceGrid& sg);
StructureResiduals structure_check(const SurfaceGrid& sg);

void write_surface_csv(const std::string& path, const SurfaceGrid& sg);
SurfaceGrid read_surface_csv(const std::string& path);

enum class Projection { linear, stereographic };

// Mesh export after projecting to R^3: linear keeps three chosen
// coordinates, stereographic projects from the pole on the last axis.
void write_surface_obj(const std::string& path, const SurfaceGrid& sg,
                       Projection proj = Projection::linear,
                       std::array<int, 3> axes = {0, 1, 2});
void write_surface_ply(const std::string& path, const SurfaceGrid& sg,
                       Projection proj = Projection::linear,
                       std::array<int, 3> axes = {0, 1, 2});

}  // namespace wlg
