#include "tpf/fpi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tpf/factorization.hpp"

namespace tpf {
namespace {

constexpr double kVoltageFloor = 1e-12;
constexpr double kDivergenceFactor = 1e6;

// Demand nodes in connected components (over B's off-diagonal pattern) that
// have no path to the slack. These make B singular under constant power.
std::vector<Index> floating_nodes(const SpCMatrix& b, const SpCMatrix& y_ds) {
  const Index n = b.rows();
  std::vector<Index> component(static_cast<std::size_t>(n), -1);
  std::vector<Index> floating;
  std::vector<bool> fed(static_cast<std::size_t>(n), false);
  for (Index k = 0; k < y_ds.outerSize(); ++k) {
    for (SpCMatrix::InnerIterator it(y_ds, k); it; ++it) {
      if (it.value() != Complex{0.0, 0.0}) fed[it.row()] = true;
    }
  }
  const SpCMatrix bt = b.transpose();  // row access
  Index next = 0;
  for (Index start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    std::vector<Index> members{start};
    component[start] = next;
    bool reaches_slack = false;
    for (std::size_t q = 0; q < members.size(); ++q) {
      const Index i = members[q];
      reaches_slack = reaches_slack || fed[i];
      for (SpCMatrix::InnerIterator it(bt, i); it; ++it) {
        const Index j = it.row();
        if (j != i && it.value() != Complex{0.0, 0.0} && component[j] < 0) {
          component[j] = next;
          members.push_back(j);
        }
      }
    }
    if (!reaches_slack) floating.insert(floating.end(), members.begin(), members.end());
    ++next;
  }
  std::sort(floating.begin(), floating.end());
  return floating;
}

}  // namespace

void SolveOptions::check() const {
  if (!(tolerance > 0.0)) throw InputError("tolerance must be > 0");
  if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
}

CVector flat_start(const NetworkModel& model) {
  const double mag = model.slack.v_s.cwiseAbs().maxCoeff();
  return CVector::Constant(model.n_demand(), Complex(mag, 0.0));
}

FpiMatrices assemble_fpi(const NetworkModel& model, const CVector& s) {
  const Index n = model.n_demand();
  if (s.size() != n) {
    throw InputError("load vector has " + std::to_string(s.size()) + " entries, network has " +
                     std::to_string(n) + " demand nodes");
  }
  const ZipCoefficients& zip = model.zip;
  const CVector s_conj = s.conjugate();

  FpiMatrices m;
  m.a = zip.alpha_p.cast<Complex>().cwiseProduct(s_conj);
  m.c = model.slack_injection() + zip.alpha_i.cast<Complex>().cwiseProduct(s_conj);
  m.b = model.admittance.y_dd;
  const CVector z_diag = zip.alpha_z.cast<Complex>().cwiseProduct(s_conj);
  if (!(z_diag.array() == Complex{0.0, 0.0}).all()) {
    SpCMatrix d(n, n);
    std::vector<CTriplet> t;
    for (Index i = 0; i < n; ++i) t.emplace_back(i, i, z_diag[i]);
    d.setFromTriplets(t.begin(), t.end());
    m.b = m.b + d;
  }
  m.b.makeCompressed();

  std::optional<SparseFactorization<Complex>> lu;
  try {
    lu.emplace(m.b);
  } catch (const SingularMatrixError& e) {
    const std::vector<Index> nodes = floating_nodes(m.b, model.admittance.y_ds);
    std::ostringstream msg;
    msg << "B is singular";
    if (!nodes.empty()) {
      msg << "; nodes without a path to the slack:";
      for (std::size_t k = 0; k < std::min<std::size_t>(nodes.size(), 20); ++k) msg << ' ' << nodes[k] + 1;
      if (nodes.size() > 20) msg << " ...";
    } else {
      msg << " (" << e.what() << ")";
    }
    throw SingularMatrixError(msg.str());
  }

  m.w = -lu->solve(m.c);
  if (m.is_linear()) {
    m.f = CMatrix::Zero(n, n);
  } else {
    const CMatrix z_b = lu->solve(CMatrix(CMatrix::Identity(n, n)));
    m.f = -(z_b * m.a.asDiagonal());
  }
  return m;
}

SolveResult fpi_iterate(const FpiMatrices& m, const CVector& v0, const SolveOptions& opts) {
  opts.check();
  const Index n = m.size();
  if (v0.size() != n) throw InputError("initial voltage has wrong length");

  SolveResult res;
  res.v = v0;
  const bool linear = m.is_linear();
  const double blowup = kDivergenceFactor * std::max(1.0, m.w.cwiseAbs().maxCoeff());
  CVector reciprocal(n);

  while (res.iterations < opts.max_iterations) {
    bool guarded = false;
    for (Index i = 0; i < n; ++i) {
      Complex vi = res.v[i];
      if (std::abs(vi) < kVoltageFloor) {
        vi = Complex(kVoltageFloor, 0.0);
        guarded = true;
      }
      reciprocal[i] = 1.0 / std::conj(vi);
    }
    res.guarded_steps += guarded ? 1 : 0;

    CVector next = linear ? CVector(m.w) : CVector(m.f * reciprocal + m.w);
    const double step_max = (next - res.v).cwiseAbs().maxCoeff();
    res.history.push_back((next - res.v).cwiseAbs().sum());
    res.v = std::move(next);
    ++res.iterations;

    if (!res.v.allFinite() || res.v.cwiseAbs().maxCoeff() > blowup) {
      res.diverged = true;
      res.diagnostic = "iterates diverged at iteration " + std::to_string(res.iterations);
      return res;
    }
    if (linear || step_max < opts.tolerance) {
      res.converged = true;
      return res;
    }
  }
  res.diagnostic = "iteration cap reached";
  return res;
}

SolveResult fpi_solve(const NetworkModel& model, const CVector& s, const SolveOptions& opts) {
  const FpiMatrices m = assemble_fpi(model, s);
  const CVector v0 = opts.initial_voltage ? *opts.initial_voltage : flat_start(model);
  SolveResult res = fpi_iterate(m, v0, opts);
  if (res.diverged) {
    res.residual = std::numeric_limits<double>::infinity();
    return res;
  }
  res.residual = power_residual(model, res.v, s);
  if (res.converged && !(res.residual < opts.residual_tolerance)) {
    res.converged = false;
    res.diagnostic = "power residual post-check failed";
  }
  if (res.converged && (res.v.array() != Complex{0.0, 0.0}).all()) {
    res.contraction_k = contraction_estimate(m, res.v);
  }
  return res;
}

CVector zip_power(const ZipCoefficients& zip, const CVector& v, const CVector& s) {
  const RVector mag2 = v.cwiseAbs2();
  CVector out(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    out[i] = s[i] * (zip.alpha_p[i] + zip.alpha_i[i] * v[i] + zip.alpha_z[i] * mag2[i]);
  }
  return out;
}

CVector power_mismatch(const NetworkModel& model, const CVector& v, const CVector& s) {
  if (v.size() != model.n_demand() || s.size() != model.n_demand()) {
    throw InputError("power_mismatch: vector lengths do not match the network");
  }
  const CVector current = model.slack_injection() + model.admittance.y_dd * v;
  return zip_power(model.zip, v, s) + v.cwiseProduct(current.conjugate());
}

double power_residual(const NetworkModel& model, const CVector& v, const CVector& s) {
  if (v.size() == 0) return 0.0;
  return power_mismatch(model, v, s).cwiseAbs().maxCoeff();
}

double contraction_estimate(const FpiMatrices& m, const CVector& v) {
  const Index n = m.size();
  if (m.is_linear()) return 0.0;
  double k = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double col = m.f.col(j).cwiseAbs().sum();
    if (col == 0.0) continue;  // zero-load node: infinite load impedance
    const double mag2 = std::norm(v[j]);
    if (mag2 == 0.0) throw InputError("contraction_estimate: zero voltage entry");
    k = std::max(k, col / mag2);
  }
  return k;
}

double contraction_estimate(const NetworkModel& model, const CVector& v, const CVector& s) {
  return contraction_estimate(assemble_fpi(model, s), v);
}

}  // namespace tpf
