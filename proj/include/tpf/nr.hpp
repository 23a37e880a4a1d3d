#pragma once

#include "tpf/fpi.hpp"
#include "tpf/tensor_dense.hpp"

namespace tpf {

/// Newton–Raphson state in polar coordinates.
struct NrState {
  RVector vm;        // magnitudes
  RVector va;        // angles, radians
  RVector mismatch;  // [ΔP; ΔQ], recomputed from (vm, va)
};

/// Polar Newton–Raphson with all demand nodes as PQ buses. The Jacobian is
/// rebuilt, re-analyzed and re-factorized every iteration. Convergence is
/// max |ΔS| < opts.tolerance. ZIP loads enter the mismatch and Jacobian at
/// each iterate.
SolveResult nr_solve(const NetworkModel& model, const CVector& s, const SolveOptions& opts = {});

/// Iterations nr_solve needs; throws Error when it does not converge.
int nr_iteration_count(const NetworkModel& model, const CVector& s, const SolveOptions& opts = {});

/// One nr_solve per column, parallel over cases.
VoltageBatch batch_solve_nr(const NetworkModel& model, const LoadMatrix& loads, const SolveOptions& opts = {});

}  // namespace tpf
