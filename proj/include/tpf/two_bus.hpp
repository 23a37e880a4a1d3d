#pragma once

// Solvability geometry of the two-bus system: slack node 0 with voltage v0∠0
// feeding a constant-power load s_l through z_s. In the load-impedance plane
// (r_l, x_l) the sets of constant p_l and constant q_l are circles; their
// intersections are the two power-flow solutions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <limits>
#include <optional>
#include <vector>

#include "tpf/grid_model.hpp"
#include "tpf/types.hpp"

namespace tpf::twobus {

template <std::floating_point Real = double>
struct TwoBusSystem {
  std::complex<Real> z_s;
  Real v0 = 1;
  std::complex<Real> s_l;
};

template <std::floating_point Real = double>
struct Solution {
  std::complex<Real> v;
  std::complex<Real> z_l;  // |v|² / s*
};

/// Constant-p and constant-q loci. A zero power component turns its locus
/// into the axis line r_l = 0 (p) or x_l = 0 (q).
template <std::floating_point Real = double>
struct CirclePair {
  Real c1p = 0, c2p = 0, rp = 0;
  Real c1q = 0, c2q = 0, rq = 0;
  bool p_line = false, q_line = false;
  bool p_empty = false, q_empty = false;  // negative radicand
};

/// G q² + H pq + I p² + J q + K p + L = 0
template <std::floating_point Real = double>
struct ParabolaCoeffs {
  Real g = 0, h = 0, i = 0, j = 0, k = 0, l = 0;

  [[nodiscard]] Real discriminant() const { return h * h - 4 * g * i; }
  [[nodiscard]] Real operator()(Real p, Real q) const {
    return g * q * q + h * p * q + i * p * p + j * q + k * p + l;
  }
};

/// y = slope·x + intercept, or x = x_intercept when vertical.
template <std::floating_point Real = double>
struct RadicalLine {
  bool vertical = false;
  Real slope = 0;
  Real intercept = 0;
  Real x_intercept = 0;
};

/// Power-flow roots from the quadratic in u = |v|²:
///   u² + (2α − v0²) u + |a|² = 0,  a = s conj(z_s) = α + jβ,  v = (a + u)/v0.
/// Ordered high |v| first; empty when infeasible; one root at tangency.
template <std::floating_point Real>
std::vector<Solution<Real>> closed_form_solutions(const TwoBusSystem<Real>& sys) {
  using C = std::complex<Real>;
  if (sys.s_l == C{}) return {{C(sys.v0, 0), C(std::numeric_limits<Real>::infinity(), 0)}};
  const C a = sys.s_l * std::conj(sys.z_s);
  const Real v02 = sys.v0 * sys.v0;
  const Real b = 2 * a.real() - v02;
  const Real disc = b * b - 4 * std::norm(a);
  const Real scale = std::max<Real>(b * b, 1);
  if (disc < -Real(64) * std::numeric_limits<Real>::epsilon() * scale) return {};

  auto make = [&](Real u) {
    const C v = (a + u) / sys.v0;
    return Solution<Real>{v, std::norm(v) / std::conj(sys.s_l)};
  };
  if (disc <= Real(64) * std::numeric_limits<Real>::epsilon() * scale) {
    if (-b / 2 <= 0) return {};
    return {make(-b / 2)};
  }

  const Real root = std::sqrt(disc);
  // Numerically stable pair: u_hi from the large-magnitude formula, u_lo from Vieta.
  const Real u_hi = (-b + root) / 2;
  if (u_hi <= 0) return {};
  const Real u_lo = std::norm(a) / u_hi;
  std::vector<Solution<Real>> out{make(u_hi)};
  if (u_lo > 0) out.push_back(make(u_lo));
  return out;
}

/// True iff v0² ≥ 4 |s| |z_s| (sufficient condition for a solution).
template <std::floating_point Real>
bool norm_feasible(std::complex<Real> s_l, std::complex<Real> z_s, Real v0) {
  return v0 * v0 >= 4 * std::abs(s_l) * std::abs(z_s);
}

/// Largest |s| satisfying norm_feasible: v0² / (4 |z_s|).
template <std::floating_point Real>
Real max_transfer_power(std::complex<Real> z_s, Real v0) {
  return v0 * v0 / (4 * std::abs(z_s));
}

template <std::floating_point Real>
CirclePair<Real> load_circles(const TwoBusSystem<Real>& sys) {
  const Real rs = sys.z_s.real(), xs = sys.z_s.imag();
  const Real p = sys.s_l.real(), q = sys.s_l.imag();
  const Real v02 = sys.v0 * sys.v0;
  CirclePair<Real> c;
  if (p == 0) {
    c.p_line = true;
  } else {
    c.c1p = v02 / (2 * p) - rs;
    c.c2p = -xs;
    const Real rad = v02 - 4 * rs * p;
    c.p_empty = rad < 0;
    c.rp = c.p_empty ? 0 : sys.v0 / (2 * std::abs(p)) * std::sqrt(rad);
  }
  if (q == 0) {
    c.q_line = true;
  } else {
    c.c1q = -rs;
    c.c2q = v02 / (2 * q) - xs;
    const Real rad = v02 - 4 * xs * q;
    c.q_empty = rad < 0;
    c.rq = c.q_empty ? 0 : sys.v0 / (2 * std::abs(q)) * std::sqrt(rad);
  }
  return c;
}

/// Intersection points of the two loci as impedances r_l + j x_l, ordered
/// by increasing |z_l|.
template <std::floating_point Real>
std::vector<std::complex<Real>> circle_intersections(const CirclePair<Real>& c) {
  using C = std::complex<Real>;
  std::vector<C> out;
  if (c.p_empty || c.q_empty || (c.p_line && c.q_line)) return out;

  // Line-circle case: the line is r_l = 0 (p locus) or x_l = 0 (q locus).
  auto on_line = [&out](Real center_along, Real center_across, Real radius, bool vertical) {
    const Real rem = radius * radius - center_across * center_across;
    if (rem < 0) return;
    const Real d = std::sqrt(rem);
    for (Real t : {center_along - d, center_along + d}) {
      // Drop the trivial root at the origin (zero power at zero impedance).
      if (std::abs(t) <= 16 * std::numeric_limits<Real>::epsilon() * std::max<Real>(radius, 1)) continue;
      out.push_back(vertical ? C(0, t) : C(t, 0));
    }
  };
  if (c.p_line) {
    on_line(c.c2q, c.c1q, c.rq, true);
  } else if (c.q_line) {
    on_line(c.c1p, c.c2p, c.rp, false);
  } else {
    const Real dx = c.c1q - c.c1p, dy = c.c2q - c.c2p;
    const Real d = std::hypot(dx, dy);
    if (d == 0) return out;
    const Real along = (c.rp * c.rp - c.rq * c.rq + d * d) / (2 * d);
    Real h2 = c.rp * c.rp - along * along;
    const Real tol = 64 * std::numeric_limits<Real>::epsilon() * std::max<Real>(c.rp * c.rp, 1);
    if (h2 < -tol) return out;
    h2 = std::max<Real>(h2, 0);
    const Real h = std::sqrt(h2);
    const Real mx = c.c1p + along * dx / d, my = c.c2p + along * dy / d;
    out.emplace_back(mx + h * dy / d, my - h * dx / d);
    if (h > 0) out.emplace_back(mx - h * dy / d, my + h * dx / d);
  }
  std::sort(out.begin(), out.end(), [](C a, C b) { return std::abs(a) < std::abs(b); });
  return out;
}

/// Power (p, q) drawn by load impedance z_l: s = z_l |v0|² / |z_s + z_l|².
template <std::floating_point Real>
std::complex<Real> load_power(std::complex<Real> z_l, std::complex<Real> z_s, Real v0) {
  return z_l * (v0 * v0) / std::norm(z_s + z_l);
}

/// Line through both intersection points (the radical axis).
template <std::floating_point Real>
RadicalLine<Real> radical_line(const CirclePair<Real>& c) {
  RadicalLine<Real> line;
  const Real b0 = c.c1p * c.c1p + c.c2p * c.c2p + c.rq * c.rq;
  const Real b1 = c.c1q * c.c1q + c.c2q * c.c2q + c.rp * c.rp;
  if (c.c2p == c.c2q) {
    if (c.c1p == c.c1q) throw InputError("radical_line: concentric circles");
    line.vertical = true;
    line.x_intercept = (b0 - b1) / (2 * (c.c1p - c.c1q));
    return line;
  }
  line.slope = (c.c1q - c.c1p) / (c.c2p - c.c2q);
  line.intercept = (b0 - b1) / (2 * (c.c2p - c.c2q));
  return line;
}

/// β = (B0 − B1) / (2 (c2p − c2q)); throws when the radical line is vertical.
template <std::floating_point Real>
Real radical_intercept(const CirclePair<Real>& c) {
  const RadicalLine<Real> line = radical_line(c);
  if (line.vertical) throw InputError("radical_intercept: vertical radical line (c2p == c2q)");
  return line.intercept;
}

/// Altitude from the origin of the triangle (centre p, centre q, origin) for
/// tangent circles: h² = c1p² + c2p² − r_p². Throws unless the circles touch
/// within `tol` (externally or internally).
template <std::floating_point Real>
Real tangency_altitude(const CirclePair<Real>& c, Real tol = Real(1e-9)) {
  if (c.p_line || c.q_line || c.p_empty || c.q_empty) throw InputError("tangency_altitude: degenerate circles");
  const Real d = std::hypot(c.c1p - c.c1q, c.c2p - c.c2q);
  const Real scale = std::max<Real>({c.rp, c.rq, Real(1)});
  const bool external = std::abs(d - (c.rp + c.rq)) <= tol * scale;
  const bool internal = std::abs(d - std::abs(c.rp - c.rq)) <= tol * scale;
  if (!external && !internal) throw InputError("tangency_altitude: circles are not tangent");
  return std::sqrt(c.c1p * c.c1p + c.c2p * c.c2p - c.rp * c.rp);
}

/// Maximum-power-transfer curve in the (p, q) plane for source z_s = r_s + j x_s.
/// f < 0 on the feasible side.
template <std::floating_point Real>
ParabolaCoeffs<Real> feasibility_parabola(Real rs, Real xs, Real v0) {
  if (rs == 0 && xs == 0) throw InputError("feasibility_parabola: zero source impedance");
  const Real v02 = v0 * v0;
  return {rs * rs, -2 * rs * xs, xs * xs, v02 * xs, v02 * rs, -v02 * v02 / 4};
}

/// Vertex (closest point to the origin) of the parabola for z_s:
/// v0²/(4|z_s|) along the direction of z_s.
template <std::floating_point Real>
std::complex<Real> parabola_vertex(Real rs, Real xs, Real v0) {
  const Real z = std::hypot(rs, xs);
  return std::complex<Real>(rs, xs) * (v0 * v0 / (4 * z * z));
}

/// Points on the parabola: for each t in [−half_width, half_width] along the
/// axis perpendicular to z_s, the point at which f = 0.
template <std::floating_point Real>
std::vector<std::complex<Real>> parabola_locus(Real rs, Real xs, Real v0, Real half_width, int samples) {
  std::vector<std::complex<Real>> pts;
  const Real z = std::hypot(rs, xs);
  const std::complex<Real> along(rs / z, xs / z);   // axis direction
  const std::complex<Real> across(-xs / z, rs / z);
  const Real v02 = v0 * v0;
  for (int k = 0; k < samples; ++k) {
    const Real t = samples == 1 ? 0 : -half_width + 2 * half_width * k / (samples - 1);
    // In rotated coordinates the curve is w = v0²/(4z) − z t² / v0².
    const Real w = v02 / (4 * z) - z * t * t / v02;
    pts.push_back(w * along + t * across);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Basin-of-attraction scan (double precision, implemented in two_bus.cpp).

enum class Method { fpi, nr };
enum class BasinClass { high, low, diverged };

struct GridSpec {
  double re_min = -2.0, re_max = 2.0;
  double im_min = -2.0, im_max = 2.0;
  int resolution = 200;  // cells per axis; starts are cell centres
};

struct BasinCell {
  Complex start;
  BasinClass cls = BasinClass::diverged;
  int iterations = 0;
  Complex v;
};

struct BasinMap {
  GridSpec grid;
  std::vector<BasinCell> cells;  // row-major: imaginary axis outer
  Complex high_root;
  Complex low_root;

  [[nodiscard]] double fraction(BasinClass c) const;
};

/// Network model of the two-bus system (bus 0 slack, bus 1 load).
NetworkModel make_network(const TwoBusSystem<double>& sys);

struct StartResult {
  Complex v;
  int iterations = 0;
  bool converged = false;
};

/// Rectangular complex Newton–Raphson on v·conj((v − v0)/z_s) + s = 0 with a
/// 2×2 real Jacobian.
StartResult nr_from(const TwoBusSystem<double>& sys, Complex v_start, int max_iterations = 100,
                    double tolerance = 1e-12);

/// Runs the chosen solver from every grid cell and classifies the result
/// against the closed-form roots (match tolerance 1e-6). Requires two roots.
BasinMap basin_scan(const TwoBusSystem<double>& sys, Method method, const GridSpec& grid = {},
                    unsigned threads = 0);

const char* to_string(BasinClass c);

}  // namespace tpf::twobus
