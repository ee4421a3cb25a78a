#include "wlg/loop.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace wlg {

TwistedLoop TwistedLoop::identity(int n, int d_neg, int d_pos) {
  TwistedLoop a(n, d_neg, d_pos);
  a.coeff(0) = cmat::Identity(n + 4, n + 4);
  return a;
}

double TwistedLoop::enforce_parity() {
  double removed = 0.0;
  for (int j = -d_neg; j <= d_pos; ++j) {
    cmat& m = coeff(j);
    if (((j % 2) + 2) % 2 == 0) {
      removed = std::max({removed, sup_norm(m.topRightCorner(4, n)),
                          sup_norm(m.bottomLeftCorner(n, 4))});
      m.topRightCorner(4, n).setZero();
      m.bottomLeftCorner(n, 4).setZero();
    } else {
      removed = std::max({removed, sup_norm(m.topLeftCorner(4, 4)),
                          sup_norm(m.bottomRightCorner(n, n))});
      m.topLeftCorner(4, 4).setZero();
      m.bottomRightCorner(n, n).setZero();
    }
  }
  return removed;
}

TwistedLoop TwistedLoop::resized(int new_d_neg, int new_d_pos) const {
  TwistedLoop out(n, new_d_neg, new_d_pos);
  out.dropped = dropped;
  for (int j = -d_neg; j <= d_pos; ++j) {
    if (j >= -new_d_neg && j <= new_d_pos)
      out.coeff(j) = coeff(j);
    else
      out.dropped = std::max(out.dropped, sup_norm(coeff(j)));
  }
  return out;
}

const char* to_string(LoopClass c) {
  switch (c) {
    case LoopClass::plus: return "plus";
    case LoopClass::minus: return "minus";
    case LoopClass::minus_star: return "minus_star";
    case LoopClass::real: return "real";
    default: return "general";
  }
}

LoopClass classify_loop(const TwistedLoop& a, double tol) {
  double below = 0.0, above = 0.0;
  for (int j = -a.d_neg; j < 0; ++j) below = std::max(below, sup_norm(a.coeff(j)));
  for (int j = 1; j <= a.d_pos; ++j) above = std::max(above, sup_norm(a.coeff(j)));
  if (below <= tol && above <= tol) {
    // constant loops are simultaneously plus and minus; report by reality
    const cmat& c0 = a.coeff(0);
    if (c0.imag().cwiseAbs().maxCoeff() <= tol) return LoopClass::real;
    return LoopClass::plus;
  }
  if (below <= tol) return LoopClass::plus;
  if (above <= tol) {
    if (sup_norm(a.coeff(0) - cmat::Identity(a.size(), a.size())) <= tol)
      return LoopClass::minus_star;
    return LoopClass::minus;
  }
  double real_defect = 0.0;
  for (int j = -a.d_neg; j <= a.d_pos; ++j) {
    cmat other = a.has(-j) ? a.coeff(-j) : cmat::Zero(a.size(), a.size());
    real_defect = std::max(real_defect, sup_norm(a.coeff(j) - other.conjugate()));
  }
  if (real_defect <= tol) return LoopClass::real;
  return LoopClass::general;
}

cmat evaluate(const TwistedLoop& a, cplx lambda) {
  if (lambda == cplx(0.0, 0.0)) {
    for (int j = -a.d_neg; j < 0; ++j)
      if (sup_norm(a.coeff(j)) > 0.0)
        throw NumericError("evaluate: pole at lambda = 0");
    return a.coeff(0);
  }
  // Horner over ascending powers, then shift by lambda^{-d_neg}.
  cmat acc = a.c.back();
  for (int k = int(a.c.size()) - 2; k >= 0; --k) acc = acc * lambda + a.c[k];
  return acc * std::pow(lambda, cplx(-double(a.d_neg), 0.0));
}

TwistedLoop multiply(const TwistedLoop& a, const TwistedLoop& b, int d_neg,
                     int d_pos) {
  if (a.n != b.n) throw std::domain_error("multiply: size mismatch");
  TwistedLoop out(a.n, d_neg, d_pos);
  out.dropped = std::max(a.dropped, b.dropped);
  for (int j1 = -a.d_neg; j1 <= a.d_pos; ++j1) {
    if (sup_norm(a.coeff(j1)) == 0.0) continue;
    for (int j2 = -b.d_neg; j2 <= b.d_pos; ++j2) {
      int j = j1 + j2;
      cmat prod = a.coeff(j1) * b.coeff(j2);
      if (j >= -d_neg && j <= d_pos)
        out.coeff(j) += prod;
      else
        out.dropped = std::max(out.dropped, sup_norm(prod));
    }
  }
  return out;
}

TwistedLoop multiply(const TwistedLoop& a, const TwistedLoop& b) {
  return multiply(a, b, std::max(a.d_neg, b.d_neg), std::max(a.d_pos, b.d_pos));
}

std::vector<cmat> sample_loop(const TwistedLoop& a, int N) {
  std::vector<cmat> vals(N);
  for (int k = 0; k < N; ++k)
    vals[k] = evaluate(a, std::polar(1.0, 2.0 * pi * k / N));
  return vals;
}

namespace detail {

void fft_pow2(std::vector<cplx>& a, bool inverse) {
  const std::size_t N = a.size();
  if (N < 2) return;
  for (std::size_t i = 1, j = 0; i < N; ++i) {
    std::size_t bit = N >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= N; len <<= 1) {
    double ang = 2.0 * pi / double(len) * (inverse ? 1.0 : -1.0);
    cplx wl = std::polar(1.0, ang);
    for (std::size_t i = 0; i < N; i += len) {
      cplx w = 1.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace detail

TwistedLoop loop_from_samples(const std::vector<cmat>& vals, int n, int d_neg,
                              int d_pos) {
  const int N = int(vals.size());
  if (N == 0 || (N & (N - 1)) != 0)
    throw std::domain_error("loop_from_samples: sample count must be a power of two");
  const int m = n + 4;
  TwistedLoop out(n, d_neg, d_pos);
  std::vector<cplx> buf(N);
  for (int r = 0; r < m; ++r)
    for (int cidx = 0; cidx < m; ++cidx) {
      for (int k = 0; k < N; ++k) buf[k] = vals[k](r, cidx);
      detail::fft_pow2(buf, false);
      for (int j = -d_neg; j <= d_pos; ++j)
        out.coeff(j)(r, cidx) = buf[((j % N) + N) % N] / double(N);
      for (int k = 0; k < N; ++k) {
        int j = k <= N / 2 ? k : k - N;  // alias bin to the nearest power
        if (j >= -d_neg && j <= d_pos) continue;
        out.dropped = std::max(out.dropped, std::abs(buf[k]) / double(N));
      }
    }
  return out;
}

TwistedLoop invert(const TwistedLoop& a, int N, int d_neg, int d_pos) {
  if (d_neg < 0) d_neg = a.d_neg;
  if (d_pos < 0) d_pos = a.d_pos;
  std::vector<cmat> vals = sample_loop(a, N);
  const cmat id = cmat::Identity(a.size(), a.size());
  for (auto& v : vals) {
    Eigen::PartialPivLU<cmat> lu(v);
    cmat inv = lu.solve(id);
    if (!inv.allFinite() || sup_norm(v * inv - id) > 1e-6)
      throw SingularLoop("invert: singular sample on the unit circle");
    v = inv;
  }
  TwistedLoop out = loop_from_samples(vals, a.n, d_neg, d_pos);
  out.dropped = std::max(out.dropped, out.enforce_parity());
  return out;
}

TwistedLoop tau(const TwistedLoop& a) {
  TwistedLoop out(a.n, a.d_pos, a.d_neg);
  out.dropped = a.dropped;
  for (int j = -a.d_neg; j <= a.d_pos; ++j) out.coeff(-j) = a.coeff(j).conjugate();
  return out;
}

nlohmann::json loop_to_json(const TwistedLoop& a) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (int j = -a.d_neg; j <= a.d_pos; ++j) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < a.size(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < a.size(); ++c)
        row.push_back({a.coeff(j)(r, c).real(), a.coeff(j)(r, c).imag()});
      rows.push_back(std::move(row));
    }
    coeffs.push_back({{"power", j}, {"matrix", std::move(rows)}});
  }
  return {{"n", a.n}, {"d_neg", a.d_neg}, {"d_pos", a.d_pos}, {"coeffs", coeffs}};
}

TwistedLoop loop_from_json(const nlohmann::json& j) {
  TwistedLoop a(j.at("n").get<int>(), j.at("d_neg").get<int>(),
                j.at("d_pos").get<int>());
  for (const auto& entry : j.at("coeffs")) {
    int p = entry.at("power").get<int>();
    if (!a.has(p)) throw std::domain_error("loop_from_json: power outside window");
    const auto& rows = entry.at("matrix");
    if (int(rows.size()) != a.size())
      throw std::domain_error("loop_from_json: matrix dimension mismatch");
    for (int r = 0; r < a.size(); ++r)
      for (int c = 0; c < a.size(); ++c) {
        const auto& e = rows.at(r).at(c);
        a.coeff(p)(r, c) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
      }
  }
  return a;
}

}  // namespace wlg
