#include "tpf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>

#include "tpf/nr.hpp"
#include "tpf/synth.hpp"
#include "tpf/tensor_sparse.hpp"

namespace tpf {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::fpi: return "fpi";
    case Method::dense: return "dense";
    case Method::sparse: return "sparse";
    case Method::nr: return "nr";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "fpi") return Method::fpi;
  if (name == "dense") return Method::dense;
  if (name == "sparse") return Method::sparse;
  if (name == "nr") return Method::nr;
  throw InputError("unknown method '" + std::string(name) + "' (expected fpi|dense|sparse|nr)");
}

std::string_view to_string(FitVariable v) { return v == FitVariable::tau ? "tau" : "b_phi"; }

FitVariable parse_fit_variable(std::string_view name) {
  if (name == "tau") return FitVariable::tau;
  if (name == "b_phi") return FitVariable::b_phi;
  throw InputError("unknown fit variable '" + std::string(name) + "' (expected tau|b_phi)");
}

VoltageBatch solve_batch(Method method, const NetworkModel& model, const LoadMatrix& loads,
                         const SolveOptions& opts) {
  switch (method) {
    case Method::fpi: return batch_solve_per_case(model, loads, opts);
    case Method::dense: return batch_solve_dense(model, loads, opts);
    case Method::sparse: return batch_solve_sparse(model, loads, opts);
    case Method::nr: return batch_solve_nr(model, loads, opts);
  }
  throw InputError("unknown method");
}

double median(std::vector<double> values) {
  if (values.empty()) throw InputError("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<BenchRecord> run_benchmark(const BenchConfig& config,
                                       const std::function<void(const BenchRecord&)>& on_record) {
  if (config.methods.empty() || config.sizes.empty() || config.taus.empty()) {
    throw InputError("benchmark needs at least one method, size and tau");
  }
  if (config.repeats < 1) throw InputError("repeats must be >= 1");

  using Clock = std::chrono::steady_clock;
  std::vector<BenchRecord> records;
  for (Index size : config.sizes) {
    GenSpec spec;
    spec.n_buses = size + 1;
    spec.seed = config.seed + static_cast<std::uint64_t>(size);
    const NetworkModel model = gen_network(spec);
    for (Index tau : config.taus) {
      const LoadMatrix loads = gen_scenarios(model, tau, spec);
      std::optional<VoltageBatch> reference;
      for (Method method : config.methods) {
        BenchRecord rec;
        rec.method = method;
        rec.b_phi = size;
        rec.tau = tau;
        try {
          auto timed = [&](VoltageBatch& out) {
            const auto t0 = Clock::now();
            out = solve_batch(method, model, loads, config.solve);
            return std::chrono::duration<double>(Clock::now() - t0).count();
          };
          VoltageBatch result;
          const double warmup = timed(result);
          std::vector<double> times;
          if (warmup > config.timeout_seconds) {
            rec.status = "timeout";
            times.push_back(warmup);
          } else {
            for (int r = 0; r < config.repeats; ++r) times.push_back(timed(result));
          }
          rec.wall_seconds = median(times);
          rec.repeats = static_cast<int>(times.size());
          rec.iterations = result.iterations;
          rec.converged = result.converged_count();
          if (config.cross_check) {
            if (!reference) {
              reference = result;
              rec.max_deviation = 0.0;
            } else {
              double dev = 0.0;
              for (Index j = 0; j < tau; ++j) {
                if (!reference->converged_mask[j] || !result.converged_mask[j]) continue;
                dev = std::max(dev, (reference->values.col(j) - result.values.col(j)).cwiseAbs().maxCoeff());
              }
              rec.max_deviation = dev;
            }
          }
        } catch (const std::exception& e) {
          rec.status = std::string("failed: ") + e.what();
        }
        if (on_record) on_record(rec);
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

ComplexityFit fit_power_law(std::span<const double> n, std::span<const double> t) {
  if (n.size() != t.size()) throw InputError("fit: size mismatch");
  std::vector<double> lx, ly;
  ComplexityFit fit;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(t[i] > 0.0) || !(n[i] > 0.0)) {
      ++fit.excluded;
      continue;
    }
    lx.push_back(std::log(n[i]));
    ly.push_back(std::log(t[i]));
  }
  if (fit.excluded > 0) {
    std::cerr << "warning: " << fit.excluded << " nonpositive point(s) excluded from fit\n";
  }
  if (lx.size() < 4) throw InputError("fit needs at least 4 positive points, got " + std::to_string(lx.size()));

  const Eigen::Map<const RVector> x(lx.data(), static_cast<Index>(lx.size()));
  const Eigen::Map<const RVector> y(ly.data(), static_cast<Index>(ly.size()));
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  const double syy = (y.array() - my).square().sum();
  fit.k = sxx > 0.0 ? sxy / sxx : 0.0;
  const double log_c = my - fit.k * mx;
  fit.c = std::exp(log_c);
  const double ss_res = (y.array() - (log_c + fit.k * x.array())).square().sum();
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.points = lx.size();
  return fit;
}

ComplexityFit fit_complexity(std::span<const BenchRecord> records, FitVariable variable) {
  std::vector<double> n, t;
  std::optional<Method> method;
  std::optional<Index> fixed;
  for (const BenchRecord& r : records) {
    if (r.status != "ok") continue;
    const Index other = variable == FitVariable::tau ? r.b_phi : r.tau;
    if (method && *method != r.method) throw InputError("fit: records mix methods");
    if (fixed && *fixed != other) throw InputError("fit: records vary more than the fitted variable");
    method = r.method;
    fixed = other;
    n.push_back(static_cast<double>(variable == FitVariable::tau ? r.tau : r.b_phi));
    t.push_back(r.wall_seconds);
  }
  ComplexityFit fit = fit_power_law(n, t);
  fit.variable = variable;
  return fit;
}

}  // namespace tpf
