#include "tpf/tensor_sparse.hpp"

#include <algorithm>

#include "batch_iteration.hpp"

namespace tpf {
namespace {

VoltageBatch solve_block(const NetworkModel& model, const LoadMatrix& loads, const SolveOptions& opts,
                         const SparseBatchConfig& config) {
  detail::BatchIteration state(model, loads, opts);
  const BlockSystem sys = assemble_block_system(model, loads, config);
  const auto lu = factorize(sys.m_dot);

  const Index n = sys.block_size;
  const Index tau = loads.cases();
  CVector rhs(n * tau);
  CVector recip(n);
  while (state.running()) {
    for (Index j = 0; j < tau; ++j) {
      detail::guarded_reciprocal_conj(state.v.col(j), recip);
      for (Index i = 0; i < n; ++i) {
        const Index row = j * n + i;
        rhs[row] = (sys.zero_load[row] ? Complex{0.0, 0.0} : recip[i]) + sys.h_dot[row];
      }
    }
    const CVector stacked = lu.solve(rhs);
    for (Index j = 0; j < tau; ++j) state.accept(j, stacked.segment(j * n, n));
    if (state.finish_iteration()) break;
  }
  VoltageBatch out = state.finish(model, loads);
  out.factorizations = 1;
  return out;
}

}  // namespace

BlockSystem assemble_block_system(const NetworkModel& model, const LoadMatrix& loads,
                                  const SparseBatchConfig& config) {
  if (!model.zip.is_constant_power()) {
    throw InputError("sparse tensor formulation requires constant-power loads (alpha_p = 1)");
  }
  const Index n = model.n_demand();
  const Index tau = loads.cases();
  if (loads.n_nodes() != n) {
    throw InputError("load matrix has " + std::to_string(loads.n_nodes()) + " rows, network has " +
                     std::to_string(n) + " demand nodes");
  }
  const SpCMatrix& y_dd = model.admittance.y_dd;
  const auto nnz = static_cast<std::size_t>(y_dd.nonZeros()) * static_cast<std::size_t>(tau);
  if (nnz > config.max_nonzeros) {
    throw InputError("block system would hold " + std::to_string(nnz) + " nonzeros (cap " +
                     std::to_string(config.max_nonzeros) + "); solve the batch in chunks of fewer cases");
  }

  const CVector c = model.slack_injection();
  BlockSystem sys;
  sys.block_size = n;
  sys.h_dot.resize(n * tau);
  sys.zero_load.assign(static_cast<std::size_t>(n * tau), 0);

  // Row scale per stacked row: −1/s* for loaded nodes, 1 otherwise.
  CVector scale(n * tau);
  for (Index j = 0; j < tau; ++j) {
    for (Index i = 0; i < n; ++i) {
      const Index row = j * n + i;
      const Complex s = loads.values(i, j);
      if (s == Complex{0.0, 0.0}) {
        sys.zero_load[row] = 1;
        scale[row] = 1.0;
        sys.h_dot[row] = -c[i];
      } else {
        scale[row] = -1.0 / std::conj(s);
        sys.h_dot[row] = c[i] / std::conj(s);
      }
    }
  }

  // Column-major insertion in order: block j, column k, then Y_dd's column k.
  sys.m_dot = SpCMatrix(n * tau, n * tau);
  SpCMatrix y = y_dd;
  y.makeCompressed();
  Eigen::VectorXi per_col(n * tau);
  for (Index k = 0; k < n; ++k) {
    const int count = static_cast<int>(y.outerIndexPtr()[k + 1] - y.outerIndexPtr()[k]);
    for (Index j = 0; j < tau; ++j) per_col[j * n + k] = count;
  }
  sys.m_dot.reserve(per_col);
  for (Index j = 0; j < tau; ++j) {
    for (Index k = 0; k < n; ++k) {
      for (SpCMatrix::InnerIterator it(y, k); it; ++it) {
        const Index row = j * n + it.row();
        sys.m_dot.insert(row, j * n + k) = scale[row] * it.value();
      }
    }
  }
  sys.m_dot.makeCompressed();
  return sys;
}

VoltageBatch batch_solve_sparse(const NetworkModel& model, const LoadMatrix& loads, const SolveOptions& opts,
                                const SparseBatchConfig& config) {
  opts.check();
  const Index tau = loads.cases();
  const Index chunk = config.chunk_cases > 0 ? config.chunk_cases : tau;
  if (chunk >= tau) return solve_block(model, loads, opts, config);

  VoltageBatch out;
  out.values.resize(loads.n_nodes(), tau);
  out.residuals.resize(tau);
  for (Index first = 0; first < tau; first += chunk) {
    const Index cols = std::min(chunk, tau - first);
    const LoadMatrix part(loads.values.middleCols(first, cols));
    VoltageBatch r = solve_block(model, part, opts, config);
    out.values.middleCols(first, cols) = r.values;
    out.residuals.segment(first, cols) = r.residuals;
    out.converged_mask.insert(out.converged_mask.end(), r.converged_mask.begin(), r.converged_mask.end());
    out.diverged_mask.insert(out.diverged_mask.end(), r.diverged_mask.begin(), r.diverged_mask.end());
    out.iterations = std::max(out.iterations, r.iterations);
    out.factorizations += r.factorizations;
  }
  return out;
}

}  // namespace tpf
