#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpf/fpi.hpp"
#include "tpf/tensor_dense.hpp"

namespace tpf {

enum class Method { fpi, dense, sparse, nr };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Dispatches a batch to the chosen solver.
VoltageBatch solve_batch(Method method, const NetworkModel& model, const LoadMatrix& loads,
                         const SolveOptions& opts = {});

struct BenchRecord {
  Method method = Method::dense;
  Index b_phi = 0;
  Index tau = 0;
  double wall_seconds = 0.0;  // median of the timed repeats
  int iterations = 0;
  int repeats = 0;
  Index converged = 0;
  std::string status = "ok";  // "ok", "timeout" or "failed: <reason>"
  double max_deviation = -1.0;  // vs the cell's first method; < 0 when not checked
};

struct BenchConfig {
  std::vector<Method> methods{Method::fpi, Method::dense, Method::sparse, Method::nr};
  std::vector<Index> sizes{9};  // bφ
  std::vector<Index> taus{1};
  int repeats = 3;
  std::uint64_t seed = 42;
  SolveOptions solve;
  double timeout_seconds = 300.0;
  bool cross_check = false;
};

/// Times every (size, tau, method) cell: one warmup then `repeats` timed runs,
/// median reported. Each cell uses a network and scenarios seeded from
/// (seed, size) so all methods see the same inputs. A warmup slower than
/// the timeout skips the timed runs and marks the record "timeout".
std::vector<BenchRecord> run_benchmark(const BenchConfig& config,
                                       const std::function<void(const BenchRecord&)>& on_record = {});

double median(std::vector<double> values);

enum class FitVariable { b_phi, tau };

std::string_view to_string(FitVariable v);
FitVariable parse_fit_variable(std::string_view name);

/// t = c·n^k fitted by least squares on (log n, log t).
struct ComplexityFit {
  double c = 0.0;
  double k = 0.0;
  double r_squared = 0.0;
  FitVariable variable = FitVariable::tau;
  std::size_t points = 0;
  std::size_t excluded = 0;  // nonpositive times dropped
};

/// Needs at least four usable points.
ComplexityFit fit_power_law(std::span<const double> n, std::span<const double> t);

/// Fits over records that vary only `variable`; records must share one
/// method and the other dimension. Failed records are skipped.
ComplexityFit fit_complexity(std::span<const BenchRecord> records, FitVariable variable);

}  // namespace tpf
