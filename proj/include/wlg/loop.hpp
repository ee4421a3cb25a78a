#pragma once

#include "wlg/types.hpp"

#include <nlohmann/json_fwd.hpp>
#include <vector>

namespace wlg {

struct SingularLoop : NumericError {
  using NumericError::NumericError;
};

// Truncated matrix Laurent series in the loop parameter with the twist
// parity: even powers are block-diagonal (4x4 and nxn), odd powers live in
// the off-diagonal blocks. Matrix size is n+4.
class TwistedLoop {
 public:
  TwistedLoop() = default;
  TwistedLoop(int n_, int d_neg_, int d_pos_)
      : n(n_), d_neg(d_neg_), d_pos(d_pos_),
        c(d_neg_ + d_pos_ + 1, cmat::Zero(n_ + 4, n_ + 4)) {}

  static TwistedLoop identity(int n, int d_neg = 0, int d_pos = 0);

  int n = 1;
  int d_neg = 0, d_pos = 0;
  std::vector<cmat> c;    // coefficient of power j sits at index j + d_neg
  double dropped = 0.0;   // sup norm of coefficients lost to truncation

  int size() const { return n + 4; }
  bool has(int j) const { return j >= -d_neg && j <= d_pos; }
  cmat& coeff(int j) { return c.at(j + d_neg); }
  const cmat& coeff(int j) const { return c.at(j + d_neg); }

  // Zeroes blocks forbidden by the twist; returns the sup norm removed.
  double enforce_parity();

  // Copy with a different coefficient window; out-of-window mass is
  // accumulated into dropped.
  TwistedLoop resized(int new_d_neg, int new_d_pos) const;
};

enum class LoopClass { general, plus, minus, minus_star, real };
const char* to_string(LoopClass c);
LoopClass classify_loop(const TwistedLoop& a, double tol = 1e-10);

cmat evaluate(const TwistedLoop& a, cplx lambda);

// Cauchy product truncated to the union window of the inputs (or to the
// explicit window when given).
TwistedLoop multiply(const TwistedLoop& a, const TwistedLoop& b);
TwistedLoop multiply(const TwistedLoop& a, const TwistedLoop& b, int d_neg,
                     int d_pos);

// Inversion by unit-circle sampling at N points (power of two). Result is
// truncated to the requested window (input window by default).
TwistedLoop invert(const TwistedLoop& a, int N = 64, int d_neg = -1,
                   int d_pos = -1);

TwistedLoop tau(const TwistedLoop& a);

// Samples at the N-th roots of unity, index k -> exp(2 pi i k / N).
std::vector<cmat> sample_loop(const TwistedLoop& a, int N);

// Discrete inverse transform of unit-circle samples onto a coefficient
// window; N must be a power of two. Aliasing outside the window is recorded
// in the result's dropped field.
TwistedLoop loop_from_samples(const std::vector<cmat>& vals, int n, int d_neg,
                              int d_pos);

nlohmann::json loop_to_json(const TwistedLoop& a);
TwistedLoop loop_from_json(const nlohmann::json& j);

namespace detail {
// In-place radix-2 FFT; forward convention sum_k a_k e^{-2 pi i jk/N}.
void fft_pow2(std::vector<cplx>& a, bool inverse);
}  // namespace detail

}  // namespace wlg
