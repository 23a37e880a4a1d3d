#include <doctest.h>

#include "support.hpp"
#include "tpf/synth.hpp"
#include "tpf/tensor_dense.hpp"

using namespace tpf;

namespace {

bool same_branches(const std::vector<Branch>& a, const std::vector<Branch>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].from != b[k].from || a[k].to != b[k].to || a[k].r != b[k].r || a[k].x != b[k].x) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("tree shape") {
  GenSpec spec;
  spec.n_buses = 3;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    spec.seed = seed;
    const auto t = gen_kary_tree(spec);
    CHECK(t.size() == 2);
    CHECK(radial_check(t, 3));
  }
  spec.n_buses = 5000;
  const auto big = gen_kary_tree(spec);
  CHECK(radial_check(big, 5000));
  CHECK(test::reaches_all(big, 5000));
}

TEST_CASE("child counts stay within 1..k_max") {
  GenSpec spec;
  spec.n_buses = 2000;
  spec.k_max = 3;
  const auto t = gen_kary_tree(spec);
  std::vector<int> children(2000, 0);
  for (const Branch& b : t) {
    CHECK(b.from < b.to);  // parents precede children
    ++children[b.from];
  }
  for (int c : children) CHECK(c <= 3);
  // All three counts appear for a large tree.
  CHECK(std::count(children.begin(), children.end(), 1) > 0);
  CHECK(std::count(children.begin(), children.end(), 3) > 0);
}

TEST_CASE("seeded determinism") {
  GenSpec spec;
  spec.n_buses = 9;
  CHECK(same_branches(gen_network(spec).branches, gen_network(spec).branches));
  spec.n_buses = 200;
  const auto model = gen_network(spec);
  const LoadMatrix a = gen_scenarios(model, 30, spec);
  const LoadMatrix b = gen_scenarios(model, 30, spec);
  CHECK(a.values == b.values);
  spec.seed = 43;
  CHECK_FALSE(same_branches(gen_network(spec).branches, model.branches));
}

TEST_CASE("impedance ranges") {
  GenSpec spec;
  spec.n_buses = 300;
  for (const Branch& b : gen_network(spec).branches) {
    CHECK(b.r >= 0.001);
    CHECK(b.r <= 0.01);
    CHECK(b.x >= 0.001);
    CHECK(b.x <= 0.01);
  }
  spec.r_range = {0.005, 0.005};
  spec.x_range = {0.002, 0.002};
  for (const Branch& b : gen_network(spec).branches) {
    CHECK(b.r == 0.005);
    CHECK(b.x == 0.002);
  }
}

TEST_CASE("scenarios: zero scale, power factor and cap") {
  const auto model = test::random_tree(50, 5);
  GenSpec spec;
  spec.load_scale = 0.0;
  CHECK(gen_scenarios(model, 10, spec).values.isZero(0.0));

  spec.load_scale = 3.0;  // forces some cases onto the cap
  const LoadMatrix loads = gen_scenarios(model, 400, spec);
  const double cap = aggregate_power_cap(model);
  for (Index j = 0; j < loads.cases(); ++j) {
    CHECK(std::abs(loads.values.col(j).sum()) <= cap * (1.0 + 1e-12));
    for (Index i = 0; i < loads.n_nodes(); ++i) {
      const Complex s = loads.values(i, j);
      CHECK(s.real() > 0.0);
      const double pf = s.real() / std::abs(s);
      CHECK(pf >= 0.9 - 1e-12);
      CHECK(s.imag() >= 0.0);
    }
  }
  CHECK_THROWS_AS(gen_scenarios(model, 0, spec), InputError);
}

TEST_CASE("zero correlation gives uncorrelated nodes") {
  const auto model = test::random_tree(2, 1);
  GenSpec spec;
  spec.correlation = 0.0;
  spec.load_scale = 0.1;  // stay off the cap
  const LoadMatrix loads = gen_scenarios(model, 4000, spec);
  const RVector x = loads.values.row(0).real().transpose().array().log();
  const RVector y = loads.values.row(1).real().transpose().array().log();
  const double mx = x.mean(), my = y.mean();
  const double r = ((x.array() - mx) * (y.array() - my)).sum() /
                   std::sqrt((x.array() - mx).square().sum() * (y.array() - my).square().sum());
  CHECK(std::abs(r) < 0.1);

  spec.correlation = 0.8;
  const LoadMatrix corr = gen_scenarios(model, 4000, spec);
  const RVector x2 = corr.values.row(0).real().transpose().array().log();
  const RVector y2 = corr.values.row(1).real().transpose().array().log();
  const double mx2 = x2.mean(), my2 = y2.mean();
  const double r2 = ((x2.array() - mx2) * (y2.array() - my2)).sum() /
                    std::sqrt((x2.array() - mx2).square().sum() * (y2.array() - my2).square().sum());
  CHECK(r2 == doctest::Approx(0.8).epsilon(0.1));
}

TEST_CASE("default scenarios converge across seeds") {
  Index total = 0, converged = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto model = test::random_tree(20 + 30 * static_cast<Index>(seed), seed);
    const LoadMatrix loads = test::scenarios(model, 100, seed);
    const auto batch = batch_solve_dense(model, loads);
    total += loads.cases();
    converged += batch.converged_count();
  }
  CHECK(double(converged) >= 0.99 * double(total));
}

TEST_CASE("spec validation") {
  GenSpec spec;
  spec.n_buses = 1;
  CHECK_THROWS_AS(gen_kary_tree(spec), InputError);
  spec = {};
  spec.k_max = 0;
  CHECK_THROWS_AS(gen_kary_tree(spec), InputError);
  spec = {};
  spec.correlation = 1.5;
  CHECK_THROWS_AS(spec.check(), InputError);
}
