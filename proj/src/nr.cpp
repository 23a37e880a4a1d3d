#include "tpf/nr.hpp"

#include <algorithm>
#include <cmath>

#include "tpf/factorization.hpp"
#include "tpf/parallel.hpp"

namespace tpf {
namespace {

NrState make_state(const CVector& v) {
  NrState st;
  st.vm = v.cwiseAbs();
  st.va = v.unaryExpr([](Complex z) { return std::arg(z); }).real();
  return st;
}

CVector to_complex(const NrState& st) {
  CVector v(st.vm.size());
  for (Index i = 0; i < v.size(); ++i) v[i] = std::polar(st.vm[i], st.va[i]);
  return v;
}

// Real Jacobian [[∂P/∂θ, ∂P/∂|v|], [∂Q/∂θ, ∂Q/∂|v|]] of the mismatch
// s_zip(v) + v ⊙ (Y_ds v_s + Y_dd v)*.
SpRMatrix jacobian(const NetworkModel& model, const CVector& v, const CVector& current, const CVector& s) {
  const Index n = v.size();
  const SpCMatrix& y = model.admittance.y_dd;
  const ZipCoefficients& zip = model.zip;
  const CVector v_unit = v.cwiseQuotient(v.cwiseAbs().cast<Complex>());

  // dS/dθ = j·diag(v)·conj(diag(i) − Y·diag(v))
  // dS/d|v| = diag(v)·conj(Y·diag(v/|v|)) + conj(diag(i))·diag(v/|v|)
  const SpCMatrix y_v = y * v.asDiagonal();
  const SpCMatrix y_u = y * v_unit.asDiagonal();
  const SpCMatrix ds_da = (Complex(0.0, 1.0) * v).asDiagonal() * SpCMatrix(-y_v.conjugate());
  const SpCMatrix ds_dm = v.asDiagonal() * SpCMatrix(y_u.conjugate());
  CVector diag_a(n);
  CVector diag_m(n);
  for (Index i = 0; i < n; ++i) {
    diag_a[i] = Complex(0.0, 1.0) * v[i] * std::conj(current[i]);
    diag_m[i] = std::conj(current[i]) * v_unit[i];
    // ZIP: α_I s v and α_Z s |v|².
    diag_a[i] += Complex(0.0, 1.0) * zip.alpha_i[i] * s[i] * v[i];
    diag_m[i] += zip.alpha_i[i] * s[i] * v_unit[i] + 2.0 * zip.alpha_z[i] * s[i] * std::abs(v[i]);
  }

  std::vector<RTriplet> t;
  t.reserve(static_cast<std::size_t>(4 * (ds_da.nonZeros() + ds_dm.nonZeros() + 2 * n)));
  auto emit = [&t, n](const SpCMatrix& m, Index col_offset) {
    for (Index k = 0; k < m.outerSize(); ++k) {
      for (SpCMatrix::InnerIterator it(m, k); it; ++it) {
        t.emplace_back(it.row(), col_offset + it.col(), it.value().real());
        t.emplace_back(n + it.row(), col_offset + it.col(), it.value().imag());
      }
    }
  };
  emit(ds_da, 0);
  emit(ds_dm, n);
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, diag_a[i].real());
    t.emplace_back(n + i, i, diag_a[i].imag());
    t.emplace_back(i, n + i, diag_m[i].real());
    t.emplace_back(n + i, n + i, diag_m[i].imag());
  }
  SpRMatrix j(2 * n, 2 * n);
  j.setFromTriplets(t.begin(), t.end());
  return j;
}

}  // namespace

SolveResult nr_solve(const NetworkModel& model, const CVector& s, const SolveOptions& opts) {
  opts.check();
  const Index n = model.n_demand();
  if (s.size() != n) throw InputError("load vector length does not match the network");

  const CVector slack_term = model.slack_injection();
  SolveResult res;
  CVector v = opts.initial_voltage ? *opts.initial_voltage : flat_start(model);
  if (v.size() != n) throw InputError("initial voltage has wrong length");
  NrState st = make_state(v);

  for (;;) {
    v = to_complex(st);
    const CVector current = slack_term + model.admittance.y_dd * v;
    const CVector mis = zip_power(model.zip, v, s) + v.cwiseProduct(current.conjugate());
    st.mismatch.resize(2 * n);
    st.mismatch << mis.real(), mis.imag();
    const double worst = n > 0 ? mis.cwiseAbs().maxCoeff() : 0.0;
    res.history.push_back(worst);

    if (!std::isfinite(worst)) {
      res.diverged = true;
      res.diagnostic = "mismatch diverged at iteration " + std::to_string(res.iterations);
      break;
    }
    if (worst < opts.tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opts.max_iterations) {
      res.diagnostic = "iteration cap reached";
      break;
    }

    RVector dx;
    try {
      const auto lu = factorize(jacobian(model, v, current, s));
      dx = lu.solve(RVector(-st.mismatch));
    } catch (const SingularMatrixError& e) {
      res.diagnostic = std::string("singular Jacobian: ") + e.what();
      break;
    }
    if (!dx.allFinite()) {
      res.diagnostic = "singular Jacobian: non-finite update";
      break;
    }
    st.va += dx.head(n);
    st.vm += dx.tail(n);
    ++res.iterations;
  }

  res.v = to_complex(st);
  res.residual = res.diverged ? std::numeric_limits<double>::infinity() : power_residual(model, res.v, s);
  if (res.converged && !(res.residual < opts.residual_tolerance)) {
    res.converged = false;
    res.diagnostic = "power residual post-check failed";
  }
  return res;
}

int nr_iteration_count(const NetworkModel& model, const CVector& s, const SolveOptions& opts) {
  const SolveResult r = nr_solve(model, s, opts);
  if (!r.converged) throw Error("Newton-Raphson did not converge: " + r.diagnostic);
  return r.iterations;
}

VoltageBatch batch_solve_nr(const NetworkModel& model, const LoadMatrix& loads, const SolveOptions& opts) {
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
    const SolveResult r = nr_solve(model, loads.values.col(j), opts);
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

}  // namespace tpf
