#pragma once

#include <cstddef>
#include <vector>

#include "tpf/factorization.hpp"
#include "tpf/tensor_dense.hpp"

namespace tpf {

/// Block-diagonal system M·V(n+1) = (V(n)*)^∘(−1) + H stacking all cases.
///
/// For case j and a loaded node i the row is −Y_dd[i,:]/s_ij* with
/// H_i = (Y_ds v_s)_i / s_ij*. Rows of unloaded nodes keep the unscaled
/// balance Y_dd[i,:]·v = −(Y_ds v_s)_i and take no reciprocal term.
struct BlockSystem {
  SpCMatrix m_dot;                // (bφ·τ) square, τ diagonal blocks
  CVector h_dot;                  // (bφ·τ)
  std::vector<char> zero_load;    // per stacked row
  Index block_size = 0;           // bφ

  [[nodiscard]] Index cases() const { return block_size == 0 ? 0 : m_dot.rows() / block_size; }
};

struct SparseBatchConfig {
  /// assemble_block_system refuses batches with more stored entries.
  std::size_t max_nonzeros = 150'000'000;
  /// Cases per block system; 0 solves the whole batch as one system.
  Index chunk_cases = 0;
};

BlockSystem assemble_block_system(const NetworkModel& model, const LoadMatrix& loads,
                                  const SparseBatchConfig& config = {});

/// Sparse-tensor FPI: one factorization of M per block system, one
/// forward/back substitution per iteration. Requires constant-power loads.
VoltageBatch batch_solve_sparse(const NetworkModel& model, const LoadMatrix& loads,
                                const SolveOptions& opts = {}, const SparseBatchConfig& config = {});

}  // namespace tpf
