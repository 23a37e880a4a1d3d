#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "tpf/io.hpp"

using namespace tpf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tpf_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("17 significant digits round-trip") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 0.0}) {
    CHECK(io::parse_double(io::format_double(x), "x") == x);
  }
  CHECK(std::isnan(io::parse_double("nan", "x")));
  CHECK_THROWS_AS(io::parse_double("1.0abc", "x"), InputError);
  CHECK_THROWS_AS(io::parse_double("", "x"), InputError);
}

TEST_CASE("network JSON round-trip") {
  const auto model = test::random_tree(15, 3);
  const fs::path p = scratch("net.json");
  io::write_network(p, model);
  const auto back = io::read_network(p);
  CHECK(test::max_abs(CMatrix(back.admittance.full()) - CMatrix(model.admittance.full())) == 0.0);
  CHECK(back.branches.size() == model.branches.size());

  // Writing twice gives identical bytes.
  const fs::path q = scratch("net2.json");
  io::write_network(q, back);
  std::ifstream a(p), b(q);
  CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST_CASE("network JSON with ZIP and explicit matrices") {
  const io::json doc = io::json::parse(R"({
    "slack_voltage": [[1.0, 0.0], [-0.5, -0.8660254037844386]],
    "matrix": {
      "n_demand": 2,
      "y_dd": [[0, 0, 10.0, -10.0], [1, 1, 10.0, -10.0]],
      "y_ds": [[0, 0, -10.0, 10.0], [1, 1, -10.0, 10.0]]
    },
    "zip": [[0.1, 0.2, 0.7], [0.0, 0.0, 1.0]]
  })");
  const auto model = io::network_from_json(doc);
  CHECK(model.slack.phases() == 2);
  CHECK(model.n_demand() == 2);
  CHECK(model.zip.alpha_z[0] == 0.1);
  const auto again = io::network_from_json(io::network_to_json(model));
  CHECK(test::max_abs(CMatrix(again.admittance.y_dd) - CMatrix(model.admittance.y_dd)) == 0.0);
  CHECK(again.zip.alpha_i[0] == 0.2);
}

TEST_CASE("network JSON errors name the field") {
  const std::string missing = message_of([] { io::network_from_json(io::json::parse(R"({"n_buses": 2})"), "f.json"); });
  CHECK(missing.find("f.json") != std::string::npos);
  CHECK(missing.find("slack_voltage") != std::string::npos);

  const std::string bad_r = message_of([] {
    io::network_from_json(io::json::parse(R"({"slack_voltage": [1, 0], "n_buses": 2,
      "branches": [{"from": 0, "to": 1, "r": "x", "x": 0.1}]})"), "g.json");
  });
  CHECK(bad_r.find("branches[0].r") != std::string::npos);

  const fs::path p = scratch("broken.json");
  write_text(p, "{ not json");
  CHECK(message_of([&] { io::read_network(p); }).find(p.string()) != std::string::npos);
  CHECK(message_of([] { io::read_network("/nonexistent/net.json"); }).find("/nonexistent/net.json") != std::string::npos);
}

TEST_CASE("load CSV round-trip and diagnostics") {
  const auto model = test::random_tree(4, 1);
  const LoadMatrix loads = test::scenarios(model, 7, 1);
  const fs::path p = scratch("loads.csv");
  io::write_loads(p, loads);
  const LoadMatrix back = io::read_loads(p, 4);
  CHECK(back.values == loads.values);

  const fs::path q = scratch("bad_loads.csv");
  write_text(q, "p_1,q_1\n0.1,0.01\n0.2,oops\n");
  const std::string msg = message_of([&] { io::read_loads(q, 1); });
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("q_1") != std::string::npos);

  write_text(q, "p_1,q_1\n0.1\n");
  CHECK(message_of([&] { io::read_loads(q, 1); }).find("line 2") != std::string::npos);
  write_text(q, "p_1,q_1\n0.1,0.0\n");
  CHECK(message_of([&] { io::read_loads(q, 2); }).find("p_2") != std::string::npos);
}

TEST_CASE("voltage CSV round-trip") {
  VoltageBatch b;
  b.values.resize(2, 3);
  b.values << Complex(1.0, 0.0), Complex(0.99, -0.01), Complex(0.5, 0.2), Complex(0.98, -0.02),
      Complex(0.97, 0.0), Complex(0.1, 0.1);
  b.converged_mask = {true, false, true};
  const fs::path p = scratch("v.csv");
  io::write_voltages(p, b);
  const auto t = io::read_voltages(p);
  CHECK(t.converged == b.converged_mask);
  CHECK(test::max_abs(t.values - b.values) < 1e-15);
}

TEST_CASE("bench CSV round-trip") {
  std::vector<BenchRecord> recs(2);
  recs[0].method = Method::sparse;
  recs[0].b_phi = 100;
  recs[0].tau = 1000;
  recs[0].wall_seconds = 0.123;
  recs[0].iterations = 9;
  recs[0].repeats = 3;
  recs[1].status = "failed: a, b";
  const fs::path p = scratch("bench.csv");
  io::write_bench(p, recs);
  const auto back = io::read_bench(p);
  REQUIRE(back.size() == 2);
  CHECK(back[0].method == Method::sparse);
  CHECK(back[0].tau == 1000);
  CHECK(back[0].wall_seconds == 0.123);
  CHECK(back[1].status == "failed: a; b");
}
