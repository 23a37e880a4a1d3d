#pragma once

#include <cstdint>
#include <vector>

#include "tpf/grid_model.hpp"
#include "tpf/tensor_dense.hpp"

namespace tpf {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct GenSpec {
  Index n_buses = 10;  // including the slack
  int k_max = 5;       // children per node drawn uniformly from 1..k_max
  std::uint64_t seed = 42;
  Interval r_range{0.001, 0.01};
  Interval x_range{0.001, 0.01};
  double load_scale = 1.0;   // 1 puts the mean aggregate load at half the cap
  double correlation = 0.3;  // one-factor correlation of the Gaussian drivers
  double sigma = 0.5;        // lognormal spread

  void check() const;
};

/// Random k-ary tree rooted at bus 0, breadth first: each parent draws its
/// child count from {1..k_max} until n_buses − 1 edges exist. r and x are
/// left at zero.
std::vector<Branch> gen_kary_tree(const GenSpec& spec);

/// Uniform r and x per branch from the GenSpec ranges.
std::vector<Branch> assign_impedances(std::vector<Branch> branches, const GenSpec& spec);

/// Tree plus impedances, slack 1 + j0, constant-power loads.
NetworkModel gen_network(const GenSpec& spec);

/// Aggregate load cap: half the norm bound v_s² / (4 |z_th|) of the weakest
/// bus, as if all load sat at the bus with the largest Thevenin impedance.
double aggregate_power_cap(const NetworkModel& model);

/// τ correlated load cases, bφ × τ. Active power is lognormal driven by a
/// one-factor Gaussian model; power factor is uniform in [0.9, 1.0] lagging.
/// Any case whose aggregate |Σ s| exceeds aggregate_power_cap is scaled back
/// onto the cap.
LoadMatrix gen_scenarios(const NetworkModel& model, Index tau, const GenSpec& spec);

}  // namespace tpf
