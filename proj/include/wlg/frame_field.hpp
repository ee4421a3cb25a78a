#pragma once

#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "wlg/factorization.hpp"
#include "wlg/potential.hpp"

namespace wlg {

enum class PointStatus { ok, pole_skipped, cell_boundary, not_computed };
const char* to_string(PointStatus s);

struct GridSpec {
  double u_min = -1.0;
  double u_max = 1.0;
  int u_count = 21;
  double v_min = -1.0;
  double v_max = 1.0;
  int v_count = 21;

  double du() const { return u_count > 1 ? (u_max - u_min) / (u_count - 1) : 0.0; }
  double dv() const { return v_count > 1 ? (v_max - v_min) / (v_count - 1) : 0.0; }
  double spacing() const;
  cplx point(int iu, int iv) const {
    return {u_min + iu * du(), v_min + iv * dv()};
  }
  int index(int iu, int iv) const { return iv * u_count + iu; }
  int count() const { return u_count * v_count; }
};

struct FrameOptions {
  int truncation = 8;        // series depth for F_minus (auto-raised as needed)
  int iwasawa_depth = -1;    // -1: derived from the frame window
  int samples = -1;          // -1: power of two derived from the windows
  double ode_tol = 1e-11;
  double pole_exclusion = 1e-2;  // fraction of grid spacing
  double cond_threshold = 1e12;
  int threads = 1;           // workers for the pointwise factorization pass
};

struct FrameField {
  GridSpec grid;
  int n = 0;
  int truncation = 0;
  std::vector<PointStatus> mask;
  std::vector<TwistedLoop> frames;
  // Filled by dpw_construct only:
  std::vector<cmat> vp0;
  std::vector<rmat> gauge;          // constant rotation aligning frame columns
                                    // with the enveloped sphere congruence
  std::vector<double> envelope_gap; // uniqueness margin of that alignment

  bool ok(int iu, int iv) const {
    return mask[grid.index(iu, iv)] == PointStatus::ok;
  }
  const TwistedLoop& frame(int iu, int iv) const {
    return frames[grid.index(iu, iv)];
  }
};

FrameField integrate_holomorphic_frame(const Potential& p, const GridSpec& grid,
                                       const FrameOptions& opt = {});

// Single-target integration along a staircase path (horizontal leg first or
// vertical leg first); used for path-independence checks.
TwistedLoop integrate_frame_to(const Potential& p, cplx target, bool vertical_first,
                               const FrameOptions& opt = {});

// Fixed-lambda scalar integration of dF = F eta(lambda), for cross-checks.
cmat integrate_frame_at_lambda(const Potential& p, cplx target, cplx lambda,
                               double tol = 1e-11);

FrameField dpw_construct(const Potential& p, const GridSpec& grid,
                         const FrameOptions& opt = {});

struct FrameCheckReport {
  double lambda_support = 0.0;  // Maurer-Cartan coefficients outside {-1,0,1}
  double block_defect = 0.0;    // wrong-block mass of the three parts
  double flatness = 0.0;
  double reality = 0.0;
};

FrameCheckReport extended_frame_check(const FrameField& ff, int lambda_samples = 16);

// Plain-JSON serialization with per-point loop coefficients.
nlohmann::json frame_field_to_json(const FrameField& ff);
FrameField frame_field_from_json(const nlohmann::json& j);

// Frame adapted to the surface at one grid point and loop parameter.
cmat surface_frame(const FrameField& ff, int iu, int iv, cplx lambda);

namespace detail {
// Rotation in SO+(1,3) (embedded in the full group) aligning the lightlike
// frame column pair with the sphere-congruence envelope at one point.
rmat envelope_gauge(const cmat& B1z, const cmat& vp0, int n, double* gap);
}

}  // namespace wlg
