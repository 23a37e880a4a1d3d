#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tpf/grid_model.hpp"
#include "tpf/synth.hpp"

namespace tpf::test {

/// Dense nodal admittance summed branch by branch from 2×2 stamps.
inline CMatrix dense_stamp_admittance(const std::vector<Branch>& branches, Index n_buses) {
  CMatrix y = CMatrix::Zero(n_buses, n_buses);
  for (const Branch& br : branches) {
    const Complex ys = Complex(1.0, 0.0) / Complex(br.r, br.x);
    const Complex sh(0.0, br.b_shunt / 2.0);
    Eigen::Matrix2cd stamp;
    stamp << ys + sh, -ys, -ys, ys + sh;
    const Index idx[2] = {br.from, br.to};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) y(idx[a], idx[b]) += stamp(a, b);
  }
  return y;
}

/// Slack bus 0 feeding bus 1 through z.
inline NetworkModel two_bus(Complex z, Complex v0 = {1.0, 0.0}) {
  return make_network({{0, 1, z.real(), z.imag(), 0.0}}, 2, v0);
}

inline NetworkModel random_tree(Index n_demand, std::uint64_t seed) {
  GenSpec spec;
  spec.n_buses = n_demand + 1;
  spec.seed = seed;
  return gen_network(spec);
}

inline LoadMatrix scenarios(const NetworkModel& model, Index tau, std::uint64_t seed, double scale = 1.0) {
  GenSpec spec;
  spec.seed = seed;
  spec.load_scale = scale;
  return gen_scenarios(model, tau, spec);
}

/// Breadth-first reachability from bus 0 over a branch list.
inline bool reaches_all(const std::vector<Branch>& branches, Index n_buses) {
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n_buses));
  for (const Branch& b : branches) {
    adj[b.from].push_back(b.to);
    adj[b.to].push_back(b.from);
  }
  std::vector<char> seen(static_cast<std::size_t>(n_buses), 0);
  std::vector<Index> queue{0};
  seen[0] = 1;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    for (Index n : adj[queue[h]]) {
      if (!seen[n]) {
        seen[n] = 1;
        queue.push_back(n);
      }
    }
  }
  return static_cast<Index>(queue.size()) == n_buses;
}

/// High-voltage two-bus root from the quadratic in |v|², solved independently
/// of the library: v0·v* − |v|² = s·z* for real v0.
inline Complex two_bus_root(Complex z, Complex s, double v0) {
  const Complex a = s * std::conj(z);
  const double b = 2.0 * a.real() - v0 * v0;
  const double u = (-b + std::sqrt(b * b - 4.0 * std::norm(a))) / 2.0;
  return (a + u) / v0;
}

inline double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace tpf::test
