#include "tpf/tensor_dense.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "batch_iteration.hpp"
#include "tpf/factorization.hpp"
#include "tpf/parallel.hpp"

namespace tpf {
namespace {

// Fixed column chunk so each column's arithmetic is independent of the
// worker count.
constexpr Index kChunkColumns = 64;

}  // namespace

Index PowerTensor::cases() const {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

Index VoltageBatch::converged_count() const {
  return std::count(converged_mask.begin(), converged_mask.end(), true);
}

LoadMatrix reshape_tensor(const PowerTensor& s) {
  const Index tau = s.cases();
  if (tau < 1) throw InputError("power tensor has no cases");
  if (static_cast<Index>(s.data.size()) != tau * s.n_nodes) {
    throw InputError("power tensor data size does not match its shape");
  }
  // Row-major (τ, bφ) storage is the column-major (bφ, τ) matrix.
  CMatrix values = Eigen::Map<const CMatrix>(s.data.data(), s.n_nodes, tau);
  return {std::move(values), s.dims};
}

PowerTensor unreshape(const LoadMatrix& loads) {
  PowerTensor s;
  s.dims = loads.dims;
  s.n_nodes = loads.n_nodes();
  s.data.resize(static_cast<std::size_t>(loads.values.size()));
  Eigen::Map<CMatrix>(s.data.data(), loads.n_nodes(), loads.cases()) = loads.values;
  return s;
}

CMatrix impedance_matrix(const NetworkModel& model) {
  const Index n = model.n_demand();
  const auto lu = factorize(model.admittance.y_dd);
  return lu.solve(CMatrix(CMatrix::Identity(n, n)));
}

VoltageBatch batch_solve_per_case(const NetworkModel& model, const LoadMatrix& loads,
                                  const SolveOptions& opts) {
  opts.check();
  if (loads.n_nodes() != model.n_demand()) {
    throw InputError("load matrix has " + std::to_string(loads.n_nodes()) + " rows, network has " +
                     std::to_string(model.n_demand()) + " demand nodes");
  }
  const Index tau = loads.cases();
  VoltageBatch out;
  out.values.resize(loads.n_nodes(), tau);
  out.residuals.resize(tau);
  std::vector<int> iters(static_cast<std::size_t>(tau), 0);
  std::vector<char> converged(static_cast<std::size_t>(tau), 0);
  std::vector<char> diverged(static_cast<std::size_t>(tau), 0);

  parallel_for(tau, resolve_threads(opts.threads), [&](Index j) {
    const SolveResult r = fpi_solve(model, loads.values.col(j), opts);
    out.values.col(j) = r.v;
    out.residuals[j] = r.residual;
    iters[j] = r.iterations;
    converged[j] = r.converged;
    diverged[j] = r.diverged;
  });

  out.iterations = tau > 0 ? *std::max_element(iters.begin(), iters.end()) : 0;
  out.converged_mask.assign(converged.begin(), converged.end());
  out.diverged_mask.assign(diverged.begin(), diverged.end());
  return out;
}

VoltageBatch batch_solve_dense(const NetworkModel& model, const LoadMatrix& loads,
                               const SolveOptions& opts) {
  if (!model.zip.is_constant_power()) return batch_solve_per_case(model, loads, opts);

  detail::BatchIteration state(model, loads, opts);
  const auto lu = factorize(model.admittance.y_dd);
  const Index n = model.n_demand();
  const CMatrix z_b = lu.solve(CMatrix(CMatrix::Identity(n, n)));
  const CVector w = -lu.solve(model.slack_injection());
  const CMatrix s_conj = loads.values.conjugate();

  const Index tau = loads.cases();
  const Index n_chunks = (tau + kChunkColumns - 1) / kChunkColumns;
  const unsigned workers = resolve_threads(opts.threads);

  while (state.running()) {
    parallel_for(n_chunks, workers, [&](Index chunk) {
      const Index first = chunk * kChunkColumns;
      const Index cols = std::min(kChunkColumns, tau - first);
      CMatrix x(n, cols);
      for (Index c = 0; c < cols; ++c) {
        detail::guarded_reciprocal_conj(state.v.col(first + c), x.col(c));
      }
      x = s_conj.middleCols(first, cols).cwiseProduct(x);
      CMatrix next = -(z_b * x);
      next.colwise() += w;
      for (Index c = 0; c < cols; ++c) state.accept(first + c, next.col(c));
    });
    if (state.finish_iteration()) break;
  }
  return state.finish(model, loads);
}

}  // namespace tpf
