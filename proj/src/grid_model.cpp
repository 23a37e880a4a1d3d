#include "tpf/grid_model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "tpf/factorization.hpp"

namespace tpf {
namespace {

// Union-find over bus indices.
class DisjointSets {
 public:
  explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }

  Index find(Index a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  void unite(Index a, Index b) { parent_[find(a)] = find(b); }

 private:
  std::vector<Index> parent_;
};

SpCMatrix block(const SpCMatrix& m, Index row, Index col, Index rows, Index cols) {
  SpCMatrix out = m.block(row, col, rows, cols);
  out.makeCompressed();
  return out;
}

}  // namespace

ZipCoefficients ZipCoefficients::constant_power(Index n) {
  return {RVector::Zero(n), RVector::Zero(n), RVector::Ones(n)};
}

bool ZipCoefficients::is_constant_power() const {
  return (alpha_p.array() == 1.0).all() && (alpha_z.array() == 0.0).all() &&
         (alpha_i.array() == 0.0).all();
}

void ZipCoefficients::check() const {
  if (alpha_z.size() != alpha_p.size() || alpha_i.size() != alpha_p.size()) {
    throw InputError("ZIP coefficient vectors have different lengths");
  }
  for (Index i = 0; i < size(); ++i) {
    if (alpha_z[i] < 0.0 || alpha_i[i] < 0.0 || alpha_p[i] < 0.0) {
      throw InputError("ZIP coefficients of node " + std::to_string(i + 1) + " are negative");
    }
    if (std::abs(alpha_z[i] + alpha_i[i] + alpha_p[i] - 1.0) > 1e-12) {
      throw InputError("ZIP coefficients of node " + std::to_string(i + 1) + " do not sum to 1");
    }
  }
}

SpCMatrix PartitionedAdmittance::full() const {
  const Index ns = n_slack();
  const Index n = ns + n_demand();
  std::vector<CTriplet> t;
  t.reserve(static_cast<std::size_t>(y_ss.nonZeros() + y_sd.nonZeros() + y_ds.nonZeros() +
                                     y_dd.nonZeros()));
  auto append = [&t](const SpCMatrix& m, Index r0, Index c0) {
    for (Index k = 0; k < m.outerSize(); ++k) {
      for (SpCMatrix::InnerIterator it(m, k); it; ++it) {
        t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
      }
    }
  };
  append(y_ss, 0, 0);
  append(y_sd, 0, ns);
  append(y_ds, ns, 0);
  append(y_dd, ns, ns);
  SpCMatrix y(n, n);
  y.setFromTriplets(t.begin(), t.end());
  return y;
}

bool is_connected(std::span<const Branch> branches, Index n_buses) {
  if (n_buses <= 0) return false;
  DisjointSets sets(n_buses);
  Index components = n_buses;
  for (const Branch& br : branches) {
    if (br.from < 0 || br.to < 0 || br.from >= n_buses || br.to >= n_buses) return false;
    const Index a = sets.find(br.from);
    const Index b = sets.find(br.to);
    if (a != b) {
      sets.unite(a, b);
      --components;
    }
  }
  return components == 1;
}

bool radial_check(std::span<const Branch> branches, Index n_buses) {
  return static_cast<Index>(branches.size()) == n_buses - 1 && is_connected(branches, n_buses);
}

PartitionedAdmittance partition(const SpCMatrix& full, Index n_slack) {
  const Index n = full.rows();
  if (full.cols() != n || n_slack <= 0 || n_slack >= n) {
    throw InputError("partition: invalid slack count for admittance matrix");
  }
  const Index nd = n - n_slack;
  return {block(full, 0, 0, n_slack, n_slack), block(full, 0, n_slack, n_slack, nd),
          block(full, n_slack, 0, nd, n_slack), block(full, n_slack, n_slack, nd, nd)};
}

PartitionedAdmittance build_admittance(std::span<const Branch> branches, Index n_buses) {
  if (n_buses < 2) throw InputError("network needs at least 2 buses");

  std::vector<CTriplet> stamps;
  stamps.reserve(4 * branches.size());
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const Branch& br = branches[k];
    const std::string where = "branch " + std::to_string(k);
    if (br.from < 0 || br.to < 0 || br.from >= n_buses || br.to >= n_buses) {
      throw InputError(where + ": endpoint outside 0.." + std::to_string(n_buses - 1));
    }
    if (br.from == br.to) throw InputError(where + ": from == to");
    if (br.r < 0.0) throw InputError(where + ": negative resistance");
    if (br.r == 0.0 && br.x == 0.0) throw InputError(where + ": zero impedance");

    const Complex y_series = 1.0 / Complex(br.r, br.x);
    const Complex y_half_shunt(0.0, br.b_shunt / 2.0);
    stamps.emplace_back(br.from, br.from, y_series + y_half_shunt);
    stamps.emplace_back(br.to, br.to, y_series + y_half_shunt);
    stamps.emplace_back(br.from, br.to, -y_series);
    stamps.emplace_back(br.to, br.from, -y_series);
  }
  if (!is_connected(branches, n_buses)) {
    throw InputError("network graph is disconnected");
  }

  SpCMatrix y(n_buses, n_buses);
  y.setFromTriplets(stamps.begin(), stamps.end());
  return partition(y, 1);
}

NetworkModel make_network(std::vector<Branch> branches, Index n_buses, Complex v_s,
                          std::optional<ZipCoefficients> zip) {
  if (std::abs(v_s) <= 0.0) throw InputError("slack voltage must be nonzero");
  NetworkModel model;
  model.admittance = build_admittance(branches, n_buses);
  model.branches = std::move(branches);
  model.slack.v_s = CVector::Constant(1, v_s);
  model.zip = zip ? std::move(*zip) : ZipCoefficients::constant_power(n_buses - 1);
  if (model.zip.size() != model.n_demand()) {
    throw InputError("ZIP coefficients given for " + std::to_string(model.zip.size()) +
                     " nodes, network has " + std::to_string(model.n_demand()));
  }
  model.zip.check();
  return model;
}

NetworkModel make_network_from_matrices(SpCMatrix y_dd, SpCMatrix y_ds, CVector v_s,
                                        std::optional<ZipCoefficients> zip) {
  const Index nd = y_dd.rows();
  if (y_dd.cols() != nd || nd == 0) throw InputError("Y_dd must be square and non-empty");
  if (y_ds.rows() != nd || y_ds.cols() != v_s.size()) {
    throw InputError("Y_ds must be " + std::to_string(nd) + "x" + std::to_string(v_s.size()));
  }
  if ((v_s.array().abs() <= 0.0).any()) throw InputError("slack voltage must be nonzero");

  NetworkModel model;
  model.slack.v_s = std::move(v_s);
  y_dd.makeCompressed();
  y_ds.makeCompressed();
  model.admittance.y_sd = SpCMatrix(y_ds.transpose());
  // Y_ss chosen so slack rows sum to zero.
  const Index ns = y_ds.cols();
  std::vector<CTriplet> t;
  for (Index j = 0; j < ns; ++j) {
    Complex sum{0.0, 0.0};
    for (SpCMatrix::InnerIterator it(y_ds, j); it; ++it) sum += it.value();
    t.emplace_back(j, j, -sum);
  }
  model.admittance.y_ss = SpCMatrix(ns, ns);
  model.admittance.y_ss.setFromTriplets(t.begin(), t.end());
  model.admittance.y_ds = std::move(y_ds);
  model.admittance.y_dd = std::move(y_dd);
  model.zip = zip ? std::move(*zip) : ZipCoefficients::constant_power(nd);
  if (model.zip.size() != nd) {
    throw InputError("ZIP coefficients given for " + std::to_string(model.zip.size()) +
                     " nodes, network has " + std::to_string(nd));
  }
  model.zip.check();
  return model;
}

std::vector<Diagnostic> validate(const NetworkModel& model) {
  std::vector<Diagnostic> out;
  const PartitionedAdmittance& adm = model.admittance;
  const Index ns = adm.n_slack();
  const Index nd = adm.n_demand();

  // Connectivity from the admittance pattern, slack phases merged into one source.
  const SpCMatrix y = adm.full();
  DisjointSets sets(ns + nd);
  for (Index j = 1; j < ns; ++j) sets.unite(0, j);
  for (Index k = 0; k < y.outerSize(); ++k) {
    for (SpCMatrix::InnerIterator it(y, k); it; ++it) {
      if (it.row() != it.col() && it.value() != Complex{0.0, 0.0}) sets.unite(it.row(), it.col());
    }
  }
  std::vector<Index> isolated;
  for (Index i = ns; i < ns + nd; ++i) {
    if (sets.find(i) != sets.find(0)) isolated.push_back(i - ns + 1);
  }
  if (!isolated.empty()) {
    std::ostringstream msg;
    msg << "disconnected component: " << isolated.size() << " demand node(s) not reachable from slack (first: "
        << isolated.front() << ")";
    out.push_back({Diagnostic::Kind::disconnected, msg.str(), static_cast<double>(isolated.size())});
  }

  const SpCMatrix yt = y.transpose();
  const SpCMatrix defect = y - yt;
  double max_defect = 0.0;
  for (Index k = 0; k < defect.outerSize(); ++k) {
    for (SpCMatrix::InnerIterator it(defect, k); it; ++it) max_defect = std::max(max_defect, std::abs(it.value()));
  }
  if (max_defect > 1e-12) {
    out.push_back({Diagnostic::Kind::asymmetric, "symmetry defect max|Y - Y^T| = " + std::to_string(max_defect),
                   max_defect});
  }

  try {
    (void)factorize(adm.y_dd);
  } catch (const Error& e) {
    out.push_back({Diagnostic::Kind::singular_y_dd, std::string("Y_dd not factorizable: ") + e.what(), 0.0});
  }

  try {
    model.zip.check();
    if (model.zip.size() != nd) throw InputError("ZIP length does not match demand count");
  } catch (const InputError& e) {
    out.push_back({Diagnostic::Kind::invalid_zip, e.what(), 0.0});
  }
  return out;
}

RVector thevenin_impedances(const NetworkModel& model) {
  const Index nd = model.n_demand();
  const auto lu = factorize(model.admittance.y_dd);
  RVector z(nd);
  CVector e = CVector::Zero(nd);
  for (Index j = 0; j < nd; ++j) {
    e[j] = 1.0;
    z[j] = std::abs(lu.solve(e)[j]);
    e[j] = 0.0;
  }
  return z;
}

}  // namespace tpf
