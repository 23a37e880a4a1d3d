// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "tpf/bench.hpp"
#include "tpf/nr.hpp"
#include "tpf/synth.hpp"
#include "tpf/tensor_sparse.hpp"
#include "tpf/two_bus.hpp"

using namespace tpf;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

void run(int id, const std::string& name, const std::function<bool(std::ostringstream&)>& body) {
  std::ostringstream detail;
  detail.precision(4);
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail << "exception: " << e.what();
  }
  report(id, name, ok, detail.str());
}

NetworkModel tree(Index n_demand, std::uint64_t seed) {
  GenSpec spec;
  spec.n_buses = n_demand + 1;
  spec.seed = seed;
  return gen_network(spec);
}

LoadMatrix cases(const NetworkModel& model, Index tau, std::uint64_t seed) {
  GenSpec spec;
  spec.seed = seed;
  return gen_scenarios(model, tau, spec);
}

double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

bool criterion_two_bus(std::ostringstream& out) {
  const double expect = (1.0 + std::sqrt(0.96)) / 2.0;
  const NetworkModel model = make_network({{0, 1, 0.1, 0.0, 0.0}}, 2);
  const CVector s = CVector::Constant(1, Complex(0.1, 0.0));
  const LoadMatrix batch(CMatrix::Constant(1, 1, Complex(0.1, 0.0)));
  const SolveResult fpi = fpi_solve(model, s);
  const SolveResult nr = nr_solve(model, s);
  const VoltageBatch dense = batch_solve_dense(model, batch);
  const VoltageBatch sparse = batch_solve_sparse(model, batch);
  const double e_fpi = std::abs(fpi.v[0] - expect);
  const double e_nr = std::abs(nr.v[0] - expect);
  const double e_dense = std::abs(dense.values(0, 0) - expect);
  const double e_sparse = std::abs(sparse.values(0, 0) - expect);
  out << "|err| fpi=" << e_fpi << " nr=" << e_nr << " dense=" << e_dense << " sparse=" << e_sparse
      << " (tol 1e-10)";
  return fpi.converged && nr.converged && dense.converged_mask[0] && sparse.converged_mask[0] &&
         std::max({e_fpi, e_nr, e_dense, e_sparse}) < 1e-10;
}

bool criterion_cross_method(std::ostringstream& out) {
  const auto t0 = Clock::now();
  double worst_dev = 0.0, worst_res = 0.0;
  Index total = 0, both = 0;
  int networks = 0;
  for (Index size : {9, 50, 100, 500, 1000}) {
    for (std::uint64_t rep = 0; rep < 4; ++rep) {
      const std::uint64_t seed = 1000 * static_cast<std::uint64_t>(size) + rep;
      const NetworkModel model = tree(size, seed);
      const LoadMatrix loads = cases(model, 50, seed);
      const VoltageBatch fpi = batch_solve_per_case(model, loads);
      const VoltageBatch nr = batch_solve_nr(model, loads);
      ++networks;
      for (Index j = 0; j < loads.cases(); ++j) {
        ++total;
        if (fpi.converged_mask[j]) worst_res = std::max(worst_res, fpi.residuals[j]);
        if (nr.converged_mask[j]) worst_res = std::max(worst_res, nr.residuals[j]);
        if (!fpi.converged_mask[j] || !nr.converged_mask[j]) continue;
        ++both;
        worst_dev = std::max(worst_dev, (fpi.values.col(j) - nr.values.col(j)).cwiseAbs().maxCoeff());
      }
    }
  }
  const double elapsed = seconds_since(t0);
  out << networks << " networks, " << both << "/" << total << " cases converged by both; max|v_FPI - v_NR| = "
      << worst_dev << " (tol 1e-8); max residual = " << worst_res << " (tol 1e-8); " << elapsed
      << " s (limit 300 s)";
  return both == total && worst_dev < 1e-8 && worst_res < 1e-8 && elapsed < 300.0;
}

bool criterion_equivalence(std::ostringstream& out) {
  struct Cell {
    Index size, tau;
    std::uint64_t seed;
  };
  double worst = 0.0;
  bool iterations_equal = true, single_factorization = true, all_converged = true;
  for (const Cell c : {Cell{9, 1000, 1}, Cell{100, 500, 2}, Cell{500, 100, 3}, Cell{1000, 50, 4}}) {
    const NetworkModel model = tree(c.size, c.seed);
    const LoadMatrix loads = cases(model, c.tau, c.seed);
    const VoltageBatch dense = batch_solve_dense(model, loads);
    const VoltageBatch sparse = batch_solve_sparse(model, loads);
    worst = std::max(worst, max_abs(dense.values - sparse.values));
    iterations_equal = iterations_equal && dense.iterations == sparse.iterations;
    single_factorization = single_factorization && sparse.factorizations == 1;
    all_converged = all_converged && dense.converged_count() == c.tau && sparse.converged_count() == c.tau;
  }
  out << "max|V_dense - V_sparse| = " << worst << " (tol 1e-10); equal iterations: " << std::boolalpha
      << iterations_equal << "; factorizations per batch = 1: " << single_factorization;
  return worst < 1e-10 && iterations_equal && single_factorization && all_converged;
}

// Smallest distance from the origin to the curve f(p, q) = 0, found by
// scanning the ray angle and solving f along each ray.
double parabola_min_distance(const twobus::ParabolaCoeffs<double>& f) {
  auto ray = [&f](double th) {
    const double c = std::cos(th), s = std::sin(th);
    const double a2 = f.g * s * s + f.h * c * s + f.i * c * c;
    const double a1 = f.j * s + f.k * c;
    const double a0 = f.l;  // < 0
    if (std::abs(a2) < 1e-300) return a1 > 0 ? -a0 / a1 : std::numeric_limits<double>::infinity();
    const double disc = a1 * a1 - 4 * a2 * a0;
    if (disc < 0) return std::numeric_limits<double>::infinity();
    // Smallest positive root, computed without cancellation.
    const double q = -0.5 * (a1 + std::copysign(std::sqrt(disc), a1));
    double best = std::numeric_limits<double>::infinity();
    for (double t : {q / a2, a0 / q}) {
      if (t > 0) best = std::min(best, t);
    }
    return best;
  };
  const int n = 720;
  int arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double d = ray(2 * std::numbers::pi * k / n);
    if (d < best) {
      best = d;
      arg = k;
    }
  }
  double a = 2 * std::numbers::pi * (arg - 1) / n, b = 2 * std::numbers::pi * (arg + 1) / n;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (ray(c) < ray(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  return ray(0.5 * (a + b));
}

bool criterion_geometry(std::ostringstream& out) {
  using namespace twobus;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mag(0.02, 2.0), phase(-std::numbers::pi, std::numbers::pi),
      zang(0.0, std::numbers::pi / 2), frac(0.01, 0.99);
  double beta = 0, beta_floor = 0, h_err = 0, delta = 0, vertex = 0;
  int bracket_fail = 0, draws = 0, ill_conditioned = 0;
  while (draws < 1000) {
    const Complex z = std::polar(mag(rng), zang(rng));
    const Complex dir = std::polar(1.0, phase(rng));
    // Boundary along this direction: double root of the |v|² quadratic.
    const Complex a = dir * std::conj(z);
    const double t_max = 1.0 / (2.0 * (std::abs(a) + a.real()));
    const TwoBusSystem<double> sys{z, 1.0, dir * (frac(rng) * t_max)};
    const auto c = load_circles(sys);
    const auto hits = circle_intersections(c);
    if (hits.size() != 2 || c.p_line || c.q_line) continue;
    ++draws;

    const double b = std::abs(radical_intercept(c));
    // Rounding floor of the centre/radius form: eps·(largest squared term)/|2Δc2|.
    const double big = std::max({c.c1p * c.c1p, c.c2p * c.c2p, c.rp * c.rp, c.c1q * c.c1q, c.c2q * c.c2q, c.rq * c.rq});
    const double floor = std::numeric_limits<double>::epsilon() * big / std::abs(2.0 * (c.c2p - c.c2q));
    if (floor > 1e-10) ++ill_conditioned;
    if (b > beta) {
      beta = b;
      beta_floor = floor;
    }
    if (!(std::abs(hits[0]) < std::abs(z) && std::abs(z) < std::abs(hits[1]))) ++bracket_fail;

    const TwoBusSystem<double> tangent{z, 1.0, dir * t_max};
    h_err = std::max(h_err, std::abs(tangency_altitude(load_circles(tangent)) - std::abs(z)));

    const auto f = feasibility_parabola(z.real(), z.imag(), 1.0);
    delta = std::max(delta, std::abs(f.discriminant()));
    vertex = std::max(vertex, std::abs(parabola_min_distance(f) - 1.0 / (4.0 * std::abs(z))));
  }
  out << draws << " draws; |beta| max " << beta << " (1e-10, rounding floor there " << beta_floor << ", "
      << ill_conditioned << " draws with floor above tol); bracketing failures " << bracket_fail
      << "; |h - |z_s|| max " << h_err << " (1e-9); |Delta| max " << delta << " (1e-12); vertex err max "
      << vertex << " (1e-6)";
  return beta < 1e-10 && bracket_fail == 0 && h_err < 1e-9 && delta < 1e-12 && vertex < 1e-6;
}

bool criterion_basin(std::ostringstream& out) {
  using namespace twobus;
  const auto t0 = Clock::now();
  const TwoBusSystem<double> sys{{1.0, 0.5}, 1.0, {0.18, 0.11}};
  GridSpec grid;  // 200 × 200 over [−2, 2]²; cell centres never hit the origin
  const BasinMap fpi = basin_scan(sys, twobus::Method::fpi, grid);
  const BasinMap nr = basin_scan(sys, twobus::Method::nr, grid);

  const NetworkModel model = make_network(sys);
  const FpiMatrices m = assemble_fpi(model, CVector::Constant(1, sys.s_l));
  double k_max = 0.0;
  std::size_t nonzero = 0, high = 0;
  for (const BasinCell& cell : fpi.cells) {
    if (cell.start == Complex{0.0, 0.0}) continue;
    ++nonzero;
    if (cell.cls == BasinClass::high) {
      ++high;
      k_max = std::max(k_max, contraction_estimate(m, CVector::Constant(1, cell.v)));
    }
  }
  const double fpi_high = double(high) / double(nonzero);
  const double nr_low = nr.fraction(BasinClass::low);
  const double elapsed = seconds_since(t0);
  out << "FPI high fraction " << fpi_high << " (>= 0.999); NR low fraction " << nr_low
      << " (> 0.005); max contraction k at FPI solutions " << k_max << " (< 1); " << elapsed
      << " s (limit 120 s)";
  return fpi_high >= 0.999 && nr_low > 0.005 && k_max < 1.0 && elapsed < 120.0;
}

double timed_median(const std::function<void()>& f, int repeats) {
  f();  // warmup
  std::vector<double> t;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    t.push_back(seconds_since(t0));
  }
  return median(t);
}

bool criterion_scaling(std::ostringstream& out) {
  const auto t0 = Clock::now();
  const NetworkModel model = tree(100, 100);
  std::vector<double> taus{100, 1000, 3000, 10000}, times;
  LoadMatrix largest;
  for (double tau : taus) {
    const LoadMatrix loads = cases(model, static_cast<Index>(tau), 7);
    times.push_back(timed_median([&] { (void)batch_solve_dense(model, loads); }, 3));
    largest = loads;
  }
  const ComplexityFit fit = fit_power_law(taus, times);

  const double dense_t = times.back();
  SolveOptions sequential;
  sequential.threads = 1;
  const auto n0 = Clock::now();
  Index nr_converged = 0;
  for (Index j = 0; j < largest.cases(); ++j) {
    nr_converged += nr_solve(model, largest.values.col(j), sequential).converged ? 1 : 0;
  }
  const double nr_t = seconds_since(n0);
  const double speedup = nr_t / dense_t;
  const double elapsed = seconds_since(t0);
  out << "dense t = c*tau^k: k = " << fit.k << " (in [0.8, 1.3]), R^2 = " << fit.r_squared
      << " (> 0.95); times";
  for (double t : times) out << ' ' << t;
  out << " s; tau=10000 dense " << dense_t << " s vs sequential NR " << nr_t << " s, speedup " << speedup
      << "x (>= 5); " << elapsed << " s (limit 600 s)";
  return fit.k >= 0.8 && fit.k <= 1.3 && fit.r_squared > 0.95 && speedup >= 5.0 && nr_converged == largest.cases() &&
         elapsed < 600.0;
}

bool criterion_limits(std::ostringstream& out) {
  const NetworkModel model = tree(100, 55);
  const Index n = model.n_demand();
  // No-load voltage from a dense solve of Y_dd v = −Y_ds v_s.
  const CVector no_load = CMatrix(model.admittance.y_dd).fullPivLu().solve(-CVector(model.slack_injection()));

  const LoadMatrix zero(CMatrix::Zero(n, 20));
  const VoltageBatch d0 = batch_solve_dense(model, zero);
  const VoltageBatch s0 = batch_solve_sparse(model, zero);
  const double zero_err = std::max(max_abs(d0.values.colwise() - no_load), max_abs(s0.values.colwise() - no_load));
  const bool zero_ok = d0.iterations <= 1 && s0.iterations <= 1 && zero_err < 1e-12 &&
                       d0.converged_count() == 20 && s0.converged_count() == 20;

  const LoadMatrix loads = cases(model, 1, 55);
  const CVector s = loads.values.col(0);
  const ZipCoefficients z_only{RVector::Ones(n), RVector::Zero(n), RVector::Zero(n)};
  const NetworkModel z_model = make_network(model.branches, n + 1, {1.0, 0.0}, z_only);
  const SolveResult zr = fpi_solve(z_model, s);
  CMatrix a = CMatrix(model.admittance.y_dd);
  a.diagonal() += s.conjugate();
  const CVector direct = a.fullPivLu().solve(-CVector(model.slack_injection()));
  const double z_err = (zr.v - direct).cwiseAbs().maxCoeff();

  LoadMatrix mixed = cases(model, 200, 56);
  for (Index i = 0; i < n; i += 7) mixed.values.row(i).setZero();
  for (Index j = 0; j < 200; j += 13) mixed.values.col(j).setZero();
  mixed.values(5, 3) = 0.0;
  const VoltageBatch dm = batch_solve_dense(model, mixed);
  const VoltageBatch sm = batch_solve_sparse(model, mixed);
  const double mixed_err = max_abs(dm.values - sm.values);

  out << "s=0: iterations dense " << d0.iterations << " sparse " << s0.iterations << ", err " << zero_err
      << "; alpha_Z=1 vs direct solve " << z_err << " (1e-12); mixed zero-load dense vs sparse " << mixed_err
      << " (1e-10)";
  return zero_ok && zr.converged && z_err < 1e-12 && mixed_err < 1e-10 && dm.converged_count() == 200 &&
         sm.converged_count() == 200;
}

}  // namespace

int main() {
  run(1, "two-bus closed-form agreement", criterion_two_bus);
  run(2, "cross-method oracle FPI vs NR", criterion_cross_method);
  run(3, "dense/sparse equivalence", criterion_equivalence);
  run(4, "two-bus geometry suite", criterion_geometry);
  run(5, "basin reproduction", criterion_basin);
  run(6, "scaling and speedup", criterion_scaling);
  run(7, "zero-load and ZIP limits", criterion_limits);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
