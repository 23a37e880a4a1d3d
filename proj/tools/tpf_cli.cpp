// tpf: command-line front end for the batched power-flow solvers.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tpf/bench.hpp"
#include "tpf/io.hpp"
#include "tpf/parallel.hpp"
#include "tpf/synth.hpp"
#include "tpf/tensor_sparse.hpp"
#include "tpf/two_bus.hpp"

namespace fs = std::filesystem;
using namespace tpf;

namespace {

struct SolveArgs {
  std::string network, loads, out, meta;
  std::string method = "dense";
  double tol = 1e-10;
  int max_iter = 100;
};

struct GenNetArgs {
  Index n_buses = 10;
  int k_max = 5;
  std::uint64_t seed = 42;
  double r_min = 0.001, r_max = 0.01, x_min = 0.001, x_max = 0.01;
  std::string out;
};

struct GenLoadsArgs {
  std::string network, out;
  Index tau = 100;
  std::uint64_t seed = 42;
  double load_scale = 1.0, correlation = 0.3, sigma = 0.5;
};

struct TwoBusArgs {
  double rs = 1.0, xs = 0.5, v0 = 1.0, p = 0.18, q = 0.11;
  std::string method = "fpi";
  int resolution = 200;
  double extent = 2.0;
  int samples = 361;
  std::string out, classify_out;
};

struct BenchArgs {
  std::vector<Index> sizes{9};
  std::vector<Index> taus{1};
  std::vector<std::string> methods{"fpi", "dense", "sparse", "nr"};
  int repeats = 3;
  std::uint64_t seed = 42;
  double timeout = 300.0;
  double tol = 1e-10;
  int max_iter = 100;
  bool cross_check = false;
  std::string out;
};

struct FitArgs {
  std::string in, variable = "tau", method, out;
};

std::ostream& num(std::ostream& os, double x) { return os << io::format_double(x); }

NetworkModel load_network(const std::string& path) {
  NetworkModel model = io::read_network(path);
  for (const Diagnostic& d : validate(model)) {
    if (d.kind == Diagnostic::Kind::asymmetric) {
      std::cerr << "warning: " << path << ": " << d.message << '\n';
    } else {
      throw InputError(path + ": " + d.message);
    }
  }
  return model;
}

int run_solve(const SolveArgs& a, unsigned threads) {
  const Method method = parse_method(a.method);
  const NetworkModel model = load_network(a.network);
  const LoadMatrix loads = io::read_loads(a.loads, model.n_demand());

  SolveOptions opts;
  opts.tolerance = a.tol;
  opts.max_iterations = a.max_iter;
  opts.threads = threads;
  opts.check();

  const auto t0 = std::chrono::steady_clock::now();
  const VoltageBatch batch = solve_batch(method, model, loads, opts);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  io::write_voltages(a.out, batch);
  const double residual_max = batch.residuals.size() ? batch.residuals.maxCoeff() : 0.0;
  io::json meta = {{"method", std::string(to_string(method))},
                   {"b_phi", model.n_demand()},
                   {"tau", loads.cases()},
                   {"iterations", batch.iterations},
                   {"converged_count", batch.converged_count()},
                   {"residual_max", residual_max},
                   {"factorizations", batch.factorizations},
                   {"wall_seconds", wall}};
  const std::string meta_path = a.meta.empty() ? a.out + ".meta.json" : a.meta;
  io::write_json(meta_path, meta);
  std::cout << "solved " << loads.cases() << " case(s), " << batch.converged_count() << " converged, "
            << batch.iterations << " iteration(s)\n";
  return 0;
}

int run_gen_net(const GenNetArgs& a) {
  GenSpec spec;
  spec.n_buses = a.n_buses;
  spec.k_max = a.k_max;
  spec.seed = a.seed;
  spec.r_range = {a.r_min, a.r_max};
  spec.x_range = {a.x_min, a.x_max};
  io::write_network(a.out, gen_network(spec));
  return 0;
}

int run_gen_loads(const GenLoadsArgs& a) {
  const NetworkModel model = load_network(a.network);
  GenSpec spec;
  spec.seed = a.seed;
  spec.load_scale = a.load_scale;
  spec.correlation = a.correlation;
  spec.sigma = a.sigma;
  io::write_loads(a.out, gen_scenarios(model, a.tau, spec));
  return 0;
}

twobus::TwoBusSystem<double> two_bus_system(const TwoBusArgs& a) {
  if (a.rs < 0.0) throw InputError("--rs must be >= 0");
  if (a.rs == 0.0 && a.xs == 0.0) throw InputError("--rs and --xs cannot both be zero");
  if (!(a.v0 > 0.0)) throw InputError("--v0 must be > 0");
  return {Complex(a.rs, a.xs), a.v0, Complex(a.p, a.q)};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

int run_circles(const TwoBusArgs& a) {
  const auto sys = two_bus_system(a);
  const auto c = twobus::load_circles(sys);
  auto out = open_out(a.out);
  out << "kind,r_l,x_l\n";
  auto circle = [&](const char* kind, double cx, double cy, double r) {
    for (int k = 0; k < a.samples; ++k) {
      const double t = 2.0 * std::numbers::pi * k / a.samples;
      out << kind << ',';
      num(out, cx + r * std::cos(t)) << ',';
      num(out, cy + r * std::sin(t)) << '\n';
    }
  };
  if (!c.p_line && !c.p_empty) circle("p_circle", c.c1p, c.c2p, c.rp);
  if (!c.q_line && !c.q_empty) circle("q_circle", c.c1q, c.c2q, c.rq);
  const auto hits = twobus::circle_intersections(c);
  for (const Complex z : hits) {
    out << "intersection,";
    num(out, z.real()) << ',';
    num(out, z.imag()) << '\n';
  }
  std::cout << hits.size() << " intersection(s)\n";
  return 0;
}

int run_region(const TwoBusArgs& a) {
  const auto sys = two_bus_system(a);
  const auto coeffs = twobus::feasibility_parabola(a.rs, a.xs, a.v0);
  const double bound = twobus::max_transfer_power(sys.z_s, a.v0);
  auto out = open_out(a.out);
  out << "curve,p,q,distance\n";
  const auto row = [&](const char* curve, Complex s) {
    out << curve << ',';
    num(out, s.real()) << ',';
    num(out, s.imag()) << ',';
    num(out, std::abs(s)) << '\n';
  };
  for (const Complex s : twobus::parabola_locus(a.rs, a.xs, a.v0, 4.0 * bound, a.samples)) row("parabola", s);
  for (int k = 0; k < a.samples; ++k) {
    const double t = 2.0 * std::numbers::pi * k / a.samples;
    row("norm_circle", std::polar(bound, t));
  }
  if (!a.classify_out.empty()) {
    auto grid = open_out(a.classify_out);
    grid << "p,q,class\n";
    const int n = a.resolution;
    const double ext = 4.0 * bound;
    for (int iq = 0; iq < n; ++iq) {
      for (int ip = 0; ip < n; ++ip) {
        const double p = -ext + (ip + 0.5) * 2.0 * ext / n;
        const double q = -ext + (iq + 0.5) * 2.0 * ext / n;
        const char* cls = twobus::norm_feasible(Complex(p, q), sys.z_s, a.v0) ? "norm_feasible"
                          : coeffs(p, q) <= 0.0                            ? "feasible"
                                                                            : "infeasible";
        num(grid, p) << ',';
        num(grid, q) << ',' << cls << '\n';
      }
    }
  }
  std::cout << "vertex distance " << io::format_double(std::abs(twobus::parabola_vertex(a.rs, a.xs, a.v0)))
            << '\n';
  return 0;
}

int run_basin(const TwoBusArgs& a, unsigned threads) {
  const auto sys = two_bus_system(a);
  twobus::Method method;
  if (a.method == "fpi") {
    method = twobus::Method::fpi;
  } else if (a.method == "nr") {
    method = twobus::Method::nr;
  } else {
    throw InputError("--method for basin must be fpi or nr, got '" + a.method + "'");
  }
  twobus::GridSpec grid;
  grid.resolution = a.resolution;
  grid.re_min = grid.im_min = -a.extent;
  grid.re_max = grid.im_max = a.extent;
  const twobus::BasinMap map = twobus::basin_scan(sys, method, grid, threads);
  auto out = open_out(a.out);
  out << "re,im,class,iters\n";
  for (const auto& cell : map.cells) {
    num(out, cell.start.real()) << ',';
    num(out, cell.start.imag()) << ',' << twobus::to_string(cell.cls) << ',' << cell.iterations << '\n';
  }
  std::cout << "high " << map.fraction(twobus::BasinClass::high) << " low "
            << map.fraction(twobus::BasinClass::low) << " diverged "
            << map.fraction(twobus::BasinClass::diverged) << '\n';
  return 0;
}

int run_bench(const BenchArgs& a, unsigned threads) {
  BenchConfig config;
  config.methods.clear();
  for (const auto& m : a.methods) config.methods.push_back(parse_method(m));
  config.sizes = a.sizes;
  config.taus = a.taus;
  config.repeats = a.repeats;
  config.seed = a.seed;
  config.timeout_seconds = a.timeout;
  config.cross_check = a.cross_check;
  config.solve.tolerance = a.tol;
  config.solve.max_iterations = a.max_iter;
  config.solve.threads = threads;
  config.solve.check();
  const auto records = run_benchmark(config, [](const BenchRecord& r) {
    std::cerr << to_string(r.method) << " b_phi=" << r.b_phi << " tau=" << r.tau << " "
              << r.wall_seconds << " s " << r.status << '\n';
  });
  io::write_bench(a.out, records);
  return 0;
}

int run_fit(const FitArgs& a) {
  auto records = io::read_bench(a.in);
  if (!a.method.empty()) {
    const Method m = parse_method(a.method);
    std::erase_if(records, [m](const BenchRecord& r) { return r.method != m; });
  }
  const ComplexityFit fit = fit_complexity(records, parse_fit_variable(a.variable));
  const io::json doc = {{"variable", std::string(to_string(fit.variable))},
                        {"c", fit.c},
                        {"k", fit.k},
                        {"r_squared", fit.r_squared},
                        {"points", fit.points},
                        {"excluded", fit.excluded}};
  if (!a.out.empty()) io::write_json(a.out, doc);
  std::cout << doc.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batched fixed-point power flow"};
  app.require_subcommand(1);

  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: TPF_THREADS or hardware)")->envname("TPF_THREADS");

  SolveArgs solve;
  auto* cmd_solve = app.add_subcommand("solve", "Solve a batch of load cases");
  cmd_solve->add_option("--network", solve.network, "Network JSON")->required();
  cmd_solve->add_option("--loads", solve.loads, "Load CSV")->required();
  cmd_solve->add_option("--out", solve.out, "Voltage CSV")->required();
  cmd_solve->add_option("--meta", solve.meta, "Metadata JSON (default <out>.meta.json)");
  cmd_solve->add_option("--method", solve.method, "fpi|dense|sparse|nr")->capture_default_str();
  cmd_solve->add_option("--tol", solve.tol)->capture_default_str();
  cmd_solve->add_option("--max-iter", solve.max_iter)->capture_default_str();

  GenNetArgs gen_net;
  auto* cmd_gen_net = app.add_subcommand("gen-net", "Generate a random radial network");
  cmd_gen_net->add_option("--n", gen_net.n_buses, "Buses including the slack")->capture_default_str();
  cmd_gen_net->add_option("--kmax", gen_net.k_max)->capture_default_str();
  cmd_gen_net->add_option("--seed", gen_net.seed)->capture_default_str();
  cmd_gen_net->add_option("--r-min", gen_net.r_min)->capture_default_str();
  cmd_gen_net->add_option("--r-max", gen_net.r_max)->capture_default_str();
  cmd_gen_net->add_option("--x-min", gen_net.x_min)->capture_default_str();
  cmd_gen_net->add_option("--x-max", gen_net.x_max)->capture_default_str();
  cmd_gen_net->add_option("--out", gen_net.out, "Network JSON")->required();

  GenLoadsArgs gen_loads;
  auto* cmd_gen_loads = app.add_subcommand("gen-loads", "Generate load scenarios for a network");
  cmd_gen_loads->add_option("--network", gen_loads.network)->required();
  cmd_gen_loads->add_option("--tau", gen_loads.tau)->capture_default_str();
  cmd_gen_loads->add_option("--seed", gen_loads.seed)->capture_default_str();
  cmd_gen_loads->add_option("--load-scale", gen_loads.load_scale)->capture_default_str();
  cmd_gen_loads->add_option("--correlation", gen_loads.correlation)->capture_default_str();
  cmd_gen_loads->add_option("--sigma", gen_loads.sigma)->capture_default_str();
  cmd_gen_loads->add_option("--out", gen_loads.out, "Load CSV")->required();

  TwoBusArgs tb;
  auto* cmd_twobus = app.add_subcommand("twobus", "Two-bus geometry and basin scans");
  cmd_twobus->require_subcommand(1);
  auto add_system = [&tb](CLI::App* c) {
    c->add_option("--rs", tb.rs)->capture_default_str();
    c->add_option("--xs", tb.xs)->capture_default_str();
    c->add_option("--v0", tb.v0)->capture_default_str();
    c->add_option("--p", tb.p)->capture_default_str();
    c->add_option("--q", tb.q)->capture_default_str();
    c->add_option("--out", tb.out)->required();
  };
  auto* cmd_circles = cmd_twobus->add_subcommand("circles", "Constant-p and constant-q loci");
  add_system(cmd_circles);
  cmd_circles->add_option("--samples", tb.samples)->check(CLI::PositiveNumber)->capture_default_str();
  auto* cmd_region = cmd_twobus->add_subcommand("region", "Feasibility parabola and norm bound");
  add_system(cmd_region);
  cmd_region->add_option("--samples", tb.samples)->check(CLI::PositiveNumber)->capture_default_str();
  cmd_region->add_option("--classify-out", tb.classify_out, "(p, q) grid classification CSV");
  cmd_region->add_option("--resolution", tb.resolution)->check(CLI::PositiveNumber)->capture_default_str();
  auto* cmd_basin = cmd_twobus->add_subcommand("basin", "Convergence basin over starting voltages");
  add_system(cmd_basin);
  cmd_basin->add_option("--method", tb.method, "fpi|nr")->capture_default_str();
  cmd_basin->add_option("--resolution", tb.resolution)->check(CLI::PositiveNumber)->capture_default_str();
  cmd_basin->add_option("--extent", tb.extent, "Half width of the start grid")->capture_default_str();

  BenchArgs bench;
  auto* cmd_bench = app.add_subcommand("bench", "Time methods over sizes and case counts");
  cmd_bench->add_option("--sizes", bench.sizes, "Demand bus counts")->delimiter(',');
  cmd_bench->add_option("--taus", bench.taus, "Case counts")->delimiter(',');
  cmd_bench->add_option("--methods", bench.methods)->delimiter(',');
  cmd_bench->add_option("--repeats", bench.repeats)->capture_default_str();
  cmd_bench->add_option("--seed", bench.seed)->capture_default_str();
  cmd_bench->add_option("--timeout", bench.timeout, "Seconds per cell")->capture_default_str();
  cmd_bench->add_option("--tol", bench.tol)->capture_default_str();
  cmd_bench->add_option("--max-iter", bench.max_iter)->capture_default_str();
  cmd_bench->add_flag("--cross-check", bench.cross_check, "Record deviation from the first method");
  cmd_bench->add_option("--out", bench.out, "Benchmark CSV")->required();

  FitArgs fit;
  auto* cmd_fit = app.add_subcommand("fit", "Fit t = c·n^k to benchmark records");
  cmd_fit->add_option("--in", fit.in, "Benchmark CSV")->required();
  cmd_fit->add_option("--variable", fit.variable, "tau|b_phi")->capture_default_str();
  cmd_fit->add_option("--method", fit.method, "Keep only this method");
  cmd_fit->add_option("--out", fit.out, "Fit JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_solve) return run_solve(solve, threads);
    if (*cmd_gen_net) return run_gen_net(gen_net);
    if (*cmd_gen_loads) return run_gen_loads(gen_loads);
    if (*cmd_circles) return run_circles(tb);
    if (*cmd_region) return run_region(tb);
    if (*cmd_basin) return run_basin(tb, threads);
    if (*cmd_bench) return run_bench(bench, threads);
    if (*cmd_fit) return run_fit(fit);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
