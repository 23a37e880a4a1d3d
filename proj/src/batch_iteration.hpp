#pragma once

// Shared bookkeeping for the joint batch iteration of the dense and sparse
// tensor paths. Both paths produce identical stopping decisions from
// identical iterates.

#include <algorithm>
#include <cmath>
#include <vector>

#include "tpf/fpi.hpp"
#include "tpf/parallel.hpp"
#include "tpf/tensor_dense.hpp"

namespace tpf::detail {

inline constexpr double kVoltageFloor = 1e-12;
inline constexpr double kDivergenceFactor = 1e6;

/// (v*)^∘(−1) with entries below the floor lifted to 1e-12 + j0.
template <typename Derived>
void guarded_reciprocal_conj(const Eigen::MatrixBase<Derived>& v, Eigen::Ref<CVector> out) {
  for (Index i = 0; i < v.size(); ++i) {
    const Complex vi = std::abs(v[i]) < kVoltageFloor ? Complex(kVoltageFloor, 0.0) : Complex(v[i]);
    out[i] = 1.0 / std::conj(vi);
  }
}

class BatchIteration {
 public:
  BatchIteration(const NetworkModel& model, const LoadMatrix& loads, const SolveOptions& opts)
      : opts_(opts),
        v(CMatrix(loads.n_nodes(), loads.cases())),
        step_(static_cast<std::size_t>(loads.cases()), std::numeric_limits<double>::infinity()),
        diverged_(static_cast<std::size_t>(loads.cases()), false),
        constant_(static_cast<std::size_t>(loads.cases()), false) {
    opts.check();
    if (loads.n_nodes() != model.n_demand()) {
      throw InputError("load matrix has " + std::to_string(loads.n_nodes()) + " rows, network has " +
                       std::to_string(model.n_demand()) + " demand nodes");
    }
    const CVector v0 = opts.initial_voltage ? *opts.initial_voltage : flat_start(model);
    if (v0.size() != model.n_demand()) throw InputError("initial voltage has wrong length");
    v.colwise() = v0;
    for (Index j = 0; j < loads.cases(); ++j) {
      constant_[j] = (loads.values.col(j).array() == Complex{0.0, 0.0}).all();
    }
    blowup_ = kDivergenceFactor * std::max(1.0, model.slack.v_s.cwiseAbs().maxCoeff());
  }

  [[nodiscard]] bool live(Index j) const { return diverged_[j] == 0; }
  [[nodiscard]] bool constant(Index j) const { return constant_[j] != 0; }

  /// Records the next iterate of column j and its step size.
  void accept(Index j, const Eigen::Ref<const CVector>& next) {
    if (diverged_[j]) return;
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > blowup_) {
      diverged_[j] = 1;
      return;
    }
    step_[j] = (next - v.col(j)).cwiseAbs().maxCoeff();
    v.col(j) = next;
  }

  /// Advances the iteration counter and applies the joint stopping rule.
  bool finish_iteration() {
    ++iterations;
    for (std::size_t j = 0; j < step_.size(); ++j) {
      if (diverged_[j] || constant_[j]) continue;
      if (!(step_[j] < opts_.tolerance)) return false;
    }
    return true;
  }

  [[nodiscard]] bool running() const { return iterations < opts_.max_iterations; }

  VoltageBatch finish(const NetworkModel& model, const LoadMatrix& loads) {
    VoltageBatch out;
    const Index tau = v.cols();
    out.iterations = iterations;
    out.converged_mask.assign(static_cast<std::size_t>(tau), false);
    out.diverged_mask.assign(static_cast<std::size_t>(tau), false);
    out.residuals = RVector::Constant(tau, std::numeric_limits<double>::infinity());
    std::vector<char> ok(static_cast<std::size_t>(tau), 0);
    parallel_for(tau, resolve_threads(opts_.threads), [&](Index j) {
      if (diverged_[j]) return;
      const double r = power_residual(model, v.col(j), loads.values.col(j));
      out.residuals[j] = r;
      const bool stepped = constant_[j] ? iterations >= 1 : step_[j] < opts_.tolerance;
      ok[j] = stepped && r < opts_.residual_tolerance;
    });
    for (Index j = 0; j < tau; ++j) {
      out.converged_mask[j] = ok[j] != 0;
      out.diverged_mask[j] = diverged_[j] != 0;
    }
    out.values = std::move(v);
    return out;
  }

  int iterations = 0;

 private:
  SolveOptions opts_;

 public:
  CMatrix v;  // current iterate, bφ × τ

 private:
  // Per-column state; char rather than bool so workers can write disjoint
  // columns concurrently.
  std::vector<double> step_;
  std::vector<char> diverged_;
  std::vector<char> constant_;
  double blowup_ = 0.0;
};

}  // namespace tpf::detail
