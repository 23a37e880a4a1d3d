#include "tpf/synth.hpp"

#include <cmath>
#include <deque>
#include <random>

namespace tpf {
namespace {

// Independent streams for topology, impedances and scenarios.
enum class Stream : std::uint64_t { topology = 1, impedance = 2, scenarios = 3 };

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

double draw(std::mt19937_64& rng, Interval range) {
  if (range.hi == range.lo) return range.lo;
  return std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
}

}  // namespace

void GenSpec::check() const {
  if (n_buses < 2) throw InputError("n_buses must be >= 2");
  if (k_max < 1) throw InputError("k_max must be >= 1");
  if (r_range.lo < 0.0 || r_range.hi < r_range.lo) throw InputError("invalid resistance range");
  if (x_range.hi < x_range.lo) throw InputError("invalid reactance range");
  if (r_range.hi == 0.0 && x_range.lo <= 0.0 && x_range.hi >= 0.0) {
    throw InputError("impedance ranges allow zero-impedance branches");
  }
  if (load_scale < 0.0) throw InputError("load_scale must be >= 0");
  if (correlation < 0.0 || correlation > 1.0) throw InputError("correlation must be in [0, 1]");
  if (sigma < 0.0) throw InputError("sigma must be >= 0");
}

std::vector<Branch> gen_kary_tree(const GenSpec& spec) {
  spec.check();
  auto rng = make_rng(spec.seed, Stream::topology);
  std::uniform_int_distribution<int> children(1, spec.k_max);

  std::vector<Branch> branches;
  branches.reserve(static_cast<std::size_t>(spec.n_buses - 1));
  std::deque<Index> parents{0};
  Index next = 1;
  while (next < spec.n_buses) {
    const Index parent = parents.front();
    parents.pop_front();
    const int k = children(rng);
    for (int c = 0; c < k && next < spec.n_buses; ++c) {
      branches.push_back({parent, next, 0.0, 0.0, 0.0});
      parents.push_back(next++);
    }
  }
  return branches;
}

std::vector<Branch> assign_impedances(std::vector<Branch> branches, const GenSpec& spec) {
  auto rng = make_rng(spec.seed, Stream::impedance);
  for (Branch& br : branches) {
    br.r = draw(rng, spec.r_range);
    br.x = draw(rng, spec.x_range);
  }
  return branches;
}

NetworkModel gen_network(const GenSpec& spec) {
  return make_network(assign_impedances(gen_kary_tree(spec), spec), spec.n_buses);
}

double aggregate_power_cap(const NetworkModel& model) {
  const double v = model.slack.v_s.cwiseAbs().minCoeff();
  const double z_th = thevenin_impedances(model).maxCoeff();
  return 0.5 * v * v / (4.0 * z_th);
}

LoadMatrix gen_scenarios(const NetworkModel& model, Index tau, const GenSpec& spec) {
  spec.check();
  if (tau < 1) throw InputError("tau must be >= 1");
  const Index n = model.n_demand();
  CMatrix s = CMatrix::Zero(n, tau);
  if (spec.load_scale == 0.0) return LoadMatrix(std::move(s));

  const double cap = aggregate_power_cap(model);
  // Mean-one lognormal per node, so the expected aggregate is ≈ load_scale·cap/2.
  const double unit = spec.load_scale * cap / (2.0 * static_cast<double>(n));
  const double a = std::sqrt(spec.correlation);
  const double b = std::sqrt(1.0 - spec.correlation);
  const double shift = -0.5 * spec.sigma * spec.sigma;

  auto rng = make_rng(spec.seed, Stream::scenarios);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> power_factor(0.9, 1.0);
  for (Index j = 0; j < tau; ++j) {
    const double common = normal(rng);
    for (Index i = 0; i < n; ++i) {
      const double z = a * common + b * normal(rng);
      const double p = unit * std::exp(spec.sigma * z + shift);
      const double pf = power_factor(rng);
      const double q = p * std::tan(std::acos(pf));
      s(i, j) = Complex(p, q);
    }
    const double total = std::abs(s.col(j).sum());
    if (total > cap) s.col(j) *= cap / total;
  }
  return LoadMatrix(std::move(s));
}

}  // namespace tpf
