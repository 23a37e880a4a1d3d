#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpf/types.hpp"

namespace tpf {

/// A series branch in π-model form, per-unit. Bus 0 is the slack.
struct Branch {
  Index from = 0;
  Index to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_shunt = 0.0;  // total line charging, split half per end
};

/// ZIP load fractions per demand bus-phase. Each entry sums to one.
struct ZipCoefficients {
  RVector alpha_z;
  RVector alpha_i;
  RVector alpha_p;

  static ZipCoefficients constant_power(Index n);

  [[nodiscard]] Index size() const { return alpha_p.size(); }
  [[nodiscard]] bool is_constant_power() const;
  /// Throws InputError when lengths differ, an entry is negative, or a row
  /// does not sum to one within 1e-12.
  void check() const;
};

/// Slack (source) voltages, one complex entry per phase.
struct SlackSpec {
  CVector v_s;

  [[nodiscard]] Index phases() const { return v_s.size(); }
};

/// Nodal admittance split into slack (s) and demand (d) blocks:
///
///   [ i_s ]   [ Y_ss  Y_sd ] [ v_s ]
///   [-i_d ] = [ Y_ds  Y_dd ] [ v_d ]
struct PartitionedAdmittance {
  SpCMatrix y_ss;
  SpCMatrix y_sd;
  SpCMatrix y_ds;
  SpCMatrix y_dd;

  [[nodiscard]] Index n_slack() const { return y_ss.rows(); }
  [[nodiscard]] Index n_demand() const { return y_dd.rows(); }
  /// Reassembles the full (φ + bφ) square matrix.
  [[nodiscard]] SpCMatrix full() const;
};

struct NetworkModel {
  std::vector<Branch> branches;  // empty when built from matrices
  SlackSpec slack;
  ZipCoefficients zip;
  PartitionedAdmittance admittance;

  [[nodiscard]] Index n_demand() const { return admittance.n_demand(); }
  /// Y_ds · v_s, the slack contribution to demand-node currents.
  [[nodiscard]] CVector slack_injection() const { return admittance.y_ds * slack.v_s; }
};

/// Assembles the nodal admittance of a single-phase branch list and splits
/// off bus 0 as the slack. Throws InputError for out-of-range endpoints,
/// self loops, negative resistance, zero impedance, or a disconnected graph.
PartitionedAdmittance build_admittance(std::span<const Branch> branches, Index n_buses);

/// Splits a full square admittance into blocks with the first `n_slack`
/// rows/columns as the slack set.
PartitionedAdmittance partition(const SpCMatrix& full, Index n_slack);

NetworkModel make_network(std::vector<Branch> branches, Index n_buses, Complex v_s = {1.0, 0.0},
                          std::optional<ZipCoefficients> zip = std::nullopt);

/// Network given directly by its demand blocks (e.g. polyphase feeders).
/// Y_sd is taken as Y_dsᵀ and Y_ss as the negated column sums of Y_ds, which
/// is exact for shunt-free reciprocal networks.
NetworkModel make_network_from_matrices(SpCMatrix y_dd, SpCMatrix y_ds, CVector v_s,
                                        std::optional<ZipCoefficients> zip = std::nullopt);

struct Diagnostic {
  enum class Kind { disconnected, asymmetric, singular_y_dd, invalid_zip };
  Kind kind;
  std::string message;
  double value = 0.0;
};

/// Structural checks on a built model; an empty list means the model is
/// usable. Never throws.
std::vector<Diagnostic> validate(const NetworkModel& model);

/// True iff the graph is a spanning tree: n_buses − 1 edges and connected.
bool radial_check(std::span<const Branch> branches, Index n_buses);

bool is_connected(std::span<const Branch> branches, Index n_buses);

/// |diag(Y_dd⁻¹)|: Thevenin impedance magnitude seen from each demand node.
RVector thevenin_impedances(const NetworkModel& model);

}  // namespace tpf
