#pragma once

#include <vector>

#include "tpf/fpi.hpp"

namespace tpf {

/// Load tensor S with shape (…, p, r, t, bφ), stored row-major so the node
/// index varies fastest and cases follow in row-major order of `dims`.
struct PowerTensor {
  std::vector<Index> dims;  // case dimensions (…, p, r, t)
  Index n_nodes = 0;        // bφ
  std::vector<Complex> data;

  [[nodiscard]] Index cases() const;
};

/// Reshaped tensor: bφ × τ, column j is case j.
struct LoadMatrix {
  CMatrix values;
  std::vector<Index> dims;  // original case dims, {τ} when not from a tensor

  LoadMatrix() = default;
  explicit LoadMatrix(CMatrix v) : values(std::move(v)), dims{values.cols()} {}
  LoadMatrix(CMatrix v, std::vector<Index> d) : values(std::move(v)), dims(std::move(d)) {}

  [[nodiscard]] Index n_nodes() const { return values.rows(); }
  [[nodiscard]] Index cases() const { return values.cols(); }
};

/// Voltages for a batch of cases, bφ × τ.
struct VoltageBatch {
  CMatrix values;
  int iterations = 0;               // joint iteration count
  std::vector<bool> converged_mask;
  std::vector<bool> diverged_mask;
  RVector residuals;                // max power mismatch per case
  std::size_t factorizations = 0;   // sparse factorizations performed

  [[nodiscard]] Index cases() const { return values.cols(); }
  [[nodiscard]] Index converged_count() const;
};

LoadMatrix reshape_tensor(const PowerTensor& s);
PowerTensor unreshape(const LoadMatrix& loads);

/// Dense bus impedance matrix Z_B = Y_dd⁻¹ (bφ² complex entries).
CMatrix impedance_matrix(const NetworkModel& model);

/// Batched FPI as matrix–matrix products:
///   V ← −Z_B (S* ⊙ (V*)^∘(−1)) + W,  W = −Z_B Y_ds v_s.
/// All columns iterate jointly until every live column moves less than the
/// tolerance. Networks with non constant-power ZIP loads are solved case by
/// case through fpi_solve.
VoltageBatch batch_solve_dense(const NetworkModel& model, const LoadMatrix& loads,
                               const SolveOptions& opts = {});

/// One fpi_solve per column, parallel over cases.
VoltageBatch batch_solve_per_case(const NetworkModel& model, const LoadMatrix& loads,
                                  const SolveOptions& opts = {});

}  // namespace tpf
