#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tpf/grid_model.hpp"

namespace tpf {

struct SolveOptions {
  double tolerance = 1e-10;        // max |Δv| between iterates (FPI) or max |ΔS| (NR)
  int max_iterations = 100;
  std::optional<CVector> initial_voltage;  // flat start when empty
  double residual_tolerance = 1e-8;        // post-check on the power mismatch
  unsigned threads = 0;                    // batch workers; 0 = default_thread_count()

  void check() const;
};

struct SolveResult {
  CVector v;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  double residual = 0.0;
  std::optional<double> contraction_k;
  /// Per-iteration progress: ‖v(n+1) − v(n)‖₁ for FPI, max mismatch for NR.
  std::vector<double> history;
  /// Iterations in which a near-zero voltage entry had to be lifted.
  int guarded_steps = 0;
  std::string diagnostic;
};

/// Constant operators of the fixed-point map v ← F·(v*)^∘(−1) + w.
///
///   A = diag(α_P ⊙ s*)          (stored as its diagonal)
///   B = diag(α_Z ⊙ s*) + Y_dd
///   c = Y_ds·v_s + α_I ⊙ s*
///   F = −B⁻¹A,  w = −B⁻¹c
struct FpiMatrices {
  CVector a;
  SpCMatrix b;
  CVector c;
  CMatrix f;
  CVector w;

  [[nodiscard]] Index size() const { return w.size(); }
  /// True when A = 0, i.e. the map is constant and one step is exact.
  [[nodiscard]] bool is_linear() const { return (a.array() == Complex{0.0, 0.0}).all(); }
};

/// Builds the FPI operators from one LU factorization of B. Throws
/// SingularMatrixError naming the offending nodes when B cannot be factorized.
FpiMatrices assemble_fpi(const NetworkModel& model, const CVector& s);

/// max|v_s| · (1 + j0) at every demand node.
CVector flat_start(const NetworkModel& model);

/// Iterates the fixed-point map from v0 until max|Δv| < tolerance or the
/// iteration cap. Does not run the power post-check.
SolveResult fpi_iterate(const FpiMatrices& m, const CVector& v0, const SolveOptions& opts);

/// Single-case fixed-point power flow with power-residual post-check.
SolveResult fpi_solve(const NetworkModel& model, const CVector& s, const SolveOptions& opts = {});

/// Power consumed by the ZIP loads at voltage v:
/// α_P s + α_I s ⊙ v + α_Z s ⊙ |v|².
CVector zip_power(const ZipCoefficients& zip, const CVector& v, const CVector& s);

/// Complex power balance per demand node, s_zip(v) + v ⊙ (Y_ds v_s + Y_dd v)*.
CVector power_mismatch(const NetworkModel& model, const CVector& v, const CVector& s);

/// max over nodes of |power_mismatch|.
double power_residual(const NetworkModel& model, const CVector& v, const CVector& s);

/// Norm-1 contraction scalar k = ‖Z_B · diag(α_P ⊙ s* ⊘ |v|²)‖₁ with Z_B = B⁻¹.
/// k < 1 certifies the map is a contraction around v.
double contraction_estimate(const NetworkModel& model, const CVector& v, const CVector& s);

/// Same quantity from already assembled operators (|F_ij| = |Z_B,ij|·|a_j|).
double contraction_estimate(const FpiMatrices& m, const CVector& v);

}  // namespace tpf
