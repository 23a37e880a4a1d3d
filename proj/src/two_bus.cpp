#include "tpf/two_bus.hpp"

#include <algorithm>

#include "tpf/fpi.hpp"
#include "tpf/parallel.hpp"

namespace tpf::twobus {
namespace {

constexpr double kRootMatch = 1e-6;

BasinClass classify(const StartResult& r, Complex high, Complex low) {
  if (!r.converged) return BasinClass::diverged;
  if (std::abs(r.v - high) < kRootMatch) return BasinClass::high;
  if (std::abs(r.v - low) < kRootMatch) return BasinClass::low;
  return BasinClass::diverged;
}

}  // namespace

const char* to_string(BasinClass c) {
  switch (c) {
    case BasinClass::high: return "high";
    case BasinClass::low: return "low";
    case BasinClass::diverged: return "diverged";
  }
  return "?";
}

double BasinMap::fraction(BasinClass c) const {
  if (cells.empty()) return 0.0;
  const auto n = std::count_if(cells.begin(), cells.end(), [c](const BasinCell& x) { return x.cls == c; });
  return static_cast<double>(n) / static_cast<double>(cells.size());
}

NetworkModel make_network(const TwoBusSystem<double>& sys) {
  if (std::abs(sys.z_s) <= 0.0) throw InputError("two-bus: source impedance must be nonzero");
  if (!(sys.v0 > 0.0)) throw InputError("two-bus: v0 must be positive");
  return tpf::make_network({Branch{0, 1, sys.z_s.real(), sys.z_s.imag(), 0.0}}, 2, Complex(sys.v0, 0.0));
}

StartResult nr_from(const TwoBusSystem<double>& sys, Complex v_start, int max_iterations, double tolerance) {
  const Complex k = std::conj(1.0 / sys.z_s);
  const double v0 = sys.v0;
  StartResult r;
  Complex v = v_start;
  for (;;) {
    const double x = v.real(), y = v.imag();
    const Complex g = k * Complex(x * x + y * y - v0 * x, -v0 * y) + sys.s_l;
    if (!std::isfinite(std::abs(g))) break;
    if (std::abs(g) < tolerance) {
      r.converged = true;
      break;
    }
    if (r.iterations >= max_iterations) break;
    const Complex gx = k * Complex(2.0 * x - v0, 0.0);
    const Complex gy = k * Complex(2.0 * y, -v0);
    Eigen::Matrix2d jac;
    jac << gx.real(), gy.real(), gx.imag(), gy.imag();
    const double det = jac.determinant();
    if (det == 0.0 || !std::isfinite(det)) break;
    const Eigen::Vector2d dx = jac.inverse() * Eigen::Vector2d(-g.real(), -g.imag());
    v += Complex(dx[0], dx[1]);
    ++r.iterations;
  }
  r.v = v;
  return r;
}

BasinMap basin_scan(const TwoBusSystem<double>& sys, Method method, const GridSpec& grid, unsigned threads) {
  if (grid.resolution < 1) throw InputError("basin_scan: resolution must be >= 1");
  const auto roots = closed_form_solutions(sys);
  if (roots.size() != 2) throw InputError("basin_scan: system does not have two distinct solutions");

  BasinMap map;
  map.grid = grid;
  map.high_root = roots[0].v;
  map.low_root = roots[1].v;
  const int n = grid.resolution;
  map.cells.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));

  const NetworkModel model = make_network(sys);
  const CVector s = CVector::Constant(1, sys.s_l);
  const FpiMatrices fpi = assemble_fpi(model, s);
  SolveOptions opts;
  opts.tolerance = 1e-12;
  opts.max_iterations = 200;

  const double dre = (grid.re_max - grid.re_min) / n;
  const double dim = (grid.im_max - grid.im_min) / n;
  parallel_for(n, resolve_threads(threads), [&](Index row) {
    for (int col = 0; col < n; ++col) {
      BasinCell& cell = map.cells[static_cast<std::size_t>(row) * n + col];
      cell.start = Complex(grid.re_min + (col + 0.5) * dre, grid.im_min + (static_cast<double>(row) + 0.5) * dim);
      StartResult r;
      if (method == Method::fpi) {
        const SolveResult fr = fpi_iterate(fpi, CVector::Constant(1, cell.start), opts);
        r = {fr.v[0], fr.iterations, fr.converged};
      } else {
        r = nr_from(sys, cell.start, opts.max_iterations, 1e-12);
      }
      cell.v = r.v;
      cell.iterations = r.iterations;
      cell.cls = classify(r, map.high_root, map.low_root);
    }
  });
  return map;
}

}  // namespace tpf::twobus
