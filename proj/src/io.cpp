#include "tpf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace tpf::io {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  return out;
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw InputError(where + ": expected a number");
  return v.get<double>();
}

Index integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw InputError(where + ": expected an integer");
  return v.get<Index>();
}

Complex complex_pair(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) throw InputError(where + ": expected [re, im]");
  return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
}

SpCMatrix triplets(const json& arr, Index rows, Index cols, const std::string& where) {
  if (!arr.is_array()) throw InputError(where + ": expected an array of [row, col, re, im]");
  std::vector<CTriplet> t;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string at = where + "[" + std::to_string(k) + "]";
    const json& e = arr[k];
    if (!e.is_array() || e.size() != 4) throw InputError(at + ": expected [row, col, re, im]");
    const Index r = integer(e[0], at + "[0]");
    const Index c = integer(e[1], at + "[1]");
    if (r < 0 || r >= rows || c < 0 || c >= cols) throw InputError(at + ": coordinate out of range");
    t.emplace_back(r, c, Complex(number(e[2], at + "[2]"), number(e[3], at + "[3]")));
  }
  SpCMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

json triplets_to_json(const SpCMatrix& m) {
  json arr = json::array();
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SpCMatrix::InnerIterator it(m, k); it; ++it) {
      arr.push_back({it.row(), it.col(), it.value().real(), it.value().imag()});
    }
  }
  return arr;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss << std::setprecision(17) << x;
  return ss.str();
}

double parse_double(const std::string& text, const std::string& where) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw InputError(where + ": '" + text + "' is not a number");
  }
  return value;
}

std::size_t CsvTable::column(const std::string& name, const std::string& source) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw InputError(source + ": line 1: missing column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw InputError(path.string() + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
    table.lines.push_back(line_no);
  }
  if (table.header.empty()) throw InputError(path.string() + ": empty file");
  return table;
}

NetworkModel network_from_json(const json& doc, const std::string& source) {
  if (!doc.is_object()) throw InputError(source + ": expected a JSON object");

  CVector v_s;
  const json& slack = field(doc, "slack_voltage", source);
  if (slack.is_array() && !slack.empty() && slack[0].is_array()) {
    v_s.resize(static_cast<Index>(slack.size()));
    for (std::size_t k = 0; k < slack.size(); ++k) {
      v_s[static_cast<Index>(k)] = complex_pair(slack[k], source + ": slack_voltage[" + std::to_string(k) + "]");
    }
  } else {
    v_s = CVector::Constant(1, complex_pair(slack, source + ": slack_voltage"));
  }

  std::optional<ZipCoefficients> zip;
  if (doc.contains("zip")) {
    const json& z = doc.at("zip");
    if (!z.is_array()) throw InputError(source + ": zip: expected an array of [alpha_z, alpha_i, alpha_p]");
    const auto n = static_cast<Index>(z.size());
    ZipCoefficients c{RVector(n), RVector(n), RVector(n)};
    for (Index i = 0; i < n; ++i) {
      const std::string at = source + ": zip[" + std::to_string(i) + "]";
      const json& e = z[static_cast<std::size_t>(i)];
      if (!e.is_array() || e.size() != 3) throw InputError(at + ": expected [alpha_z, alpha_i, alpha_p]");
      c.alpha_z[i] = number(e[0], at + "[0]");
      c.alpha_i[i] = number(e[1], at + "[1]");
      c.alpha_p[i] = number(e[2], at + "[2]");
    }
    zip = std::move(c);
  }

  if (doc.contains("matrix")) {
    const json& m = doc.at("matrix");
    const std::string where = source + ": matrix";
    const Index nd = integer(field(m, "n_demand", where), where + ".n_demand");
    if (nd < 1) throw InputError(where + ".n_demand: must be >= 1");
    SpCMatrix y_dd = triplets(field(m, "y_dd", where), nd, nd, where + ".y_dd");
    SpCMatrix y_ds = triplets(field(m, "y_ds", where), nd, v_s.size(), where + ".y_ds");
    return make_network_from_matrices(std::move(y_dd), std::move(y_ds), std::move(v_s), std::move(zip));
  }

  if (v_s.size() != 1) throw InputError(source + ": polyphase slack requires a 'matrix' section");
  const Index n_buses = integer(field(doc, "n_buses", source), source + ": n_buses");
  const json& arr = field(doc, "branches", source);
  if (!arr.is_array()) throw InputError(source + ": branches: expected an array");
  std::vector<Branch> branches;
  branches.reserve(arr.size());
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string at = source + ": branches[" + std::to_string(k) + "]";
    const json& b = arr[k];
    Branch br;
    br.from = integer(field(b, "from", at), at + ".from");
    br.to = integer(field(b, "to", at), at + ".to");
    br.r = number(field(b, "r", at), at + ".r");
    br.x = number(field(b, "x", at), at + ".x");
    br.b_shunt = b.contains("b_shunt") ? number(b.at("b_shunt"), at + ".b_shunt") : 0.0;
    branches.push_back(br);
  }
  try {
    return make_network(std::move(branches), n_buses, v_s[0], std::move(zip));
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

json network_to_json(const NetworkModel& model) {
  json doc;
  if (model.slack.phases() == 1) {
    doc["slack_voltage"] = {model.slack.v_s[0].real(), model.slack.v_s[0].imag()};
  } else {
    json arr = json::array();
    for (Index k = 0; k < model.slack.phases(); ++k) arr.push_back({model.slack.v_s[k].real(), model.slack.v_s[k].imag()});
    doc["slack_voltage"] = arr;
  }
  if (!model.branches.empty()) {
    doc["n_buses"] = model.n_demand() + 1;
    json arr = json::array();
    for (const Branch& br : model.branches) {
      arr.push_back({{"from", br.from}, {"to", br.to}, {"r", br.r}, {"x", br.x}, {"b_shunt", br.b_shunt}});
    }
    doc["branches"] = arr;
  } else {
    doc["matrix"] = {{"n_demand", model.n_demand()},
                     {"y_dd", triplets_to_json(model.admittance.y_dd)},
                     {"y_ds", triplets_to_json(model.admittance.y_ds)}};
  }
  if (!model.zip.is_constant_power()) {
    json arr = json::array();
    for (Index i = 0; i < model.zip.size(); ++i) {
      arr.push_back({model.zip.alpha_z[i], model.zip.alpha_i[i], model.zip.alpha_p[i]});
    }
    doc["zip"] = arr;
  }
  return doc;
}

json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

NetworkModel read_network(const std::filesystem::path& path) {
  return network_from_json(read_json(path), path.string());
}

void write_network(const std::filesystem::path& path, const NetworkModel& model) {
  write_json(path, network_to_json(model));
}

LoadMatrix read_loads(const std::filesystem::path& path, Index n_demand) {
  const CsvTable table = read_csv(path);
  const std::string source = path.string();
  std::vector<std::size_t> p_col(static_cast<std::size_t>(n_demand));
  std::vector<std::size_t> q_col(static_cast<std::size_t>(n_demand));
  for (Index i = 0; i < n_demand; ++i) {
    p_col[i] = table.column("p_" + std::to_string(i + 1), source);
    q_col[i] = table.column("q_" + std::to_string(i + 1), source);
  }
  const auto tau = static_cast<Index>(table.rows.size());
  if (tau == 0) throw InputError(source + ": no load cases");
  CMatrix s(n_demand, tau);
  for (Index j = 0; j < tau; ++j) {
    const auto& row = table.rows[j];
    const std::string line = source + ": line " + std::to_string(table.lines[j]);
    for (Index i = 0; i < n_demand; ++i) {
      const std::string& pn = table.header[p_col[i]];
      const std::string& qn = table.header[q_col[i]];
      s(i, j) = Complex(parse_double(row[p_col[i]], line + ": field '" + pn + "'"),
                        parse_double(row[q_col[i]], line + ": field '" + qn + "'"));
    }
  }
  return LoadMatrix(std::move(s));
}

void write_loads(const std::filesystem::path& path, const LoadMatrix& loads) {
  auto out = open_out(path);
  for (Index i = 0; i < loads.n_nodes(); ++i) {
    out << (i ? "," : "") << "p_" << i + 1 << ",q_" << i + 1;
  }
  out << '\n';
  for (Index j = 0; j < loads.cases(); ++j) {
    for (Index i = 0; i < loads.n_nodes(); ++i) {
      const Complex s = loads.values(i, j);
      out << (i ? "," : "") << format_double(s.real()) << ',' << format_double(s.imag());
    }
    out << '\n';
  }
}

void write_voltages(const std::filesystem::path& path, const VoltageBatch& batch) {
  auto out = open_out(path);
  out << "case,converged";
  for (Index i = 0; i < batch.values.rows(); ++i) out << ",vm_" << i + 1 << ",va_" << i + 1;
  out << '\n';
  for (Index j = 0; j < batch.cases(); ++j) {
    out << j << ',' << (batch.converged_mask[j] ? "true" : "false");
    for (Index i = 0; i < batch.values.rows(); ++i) {
      const Complex v = batch.values(i, j);
      out << ',' << format_double(std::abs(v)) << ',' << format_double(std::arg(v));
    }
    out << '\n';
  }
}

VoltageTable read_voltages(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::string source = path.string();
  const std::size_t conv = table.column("converged", source);
  Index n = 0;
  while (std::find(table.header.begin(), table.header.end(), "vm_" + std::to_string(n + 1)) != table.header.end()) ++n;
  VoltageTable out;
  out.values.resize(n, static_cast<Index>(table.rows.size()));
  for (std::size_t j = 0; j < table.rows.size(); ++j) {
    const auto& row = table.rows[j];
    const std::string line = source + ": line " + std::to_string(table.lines[j]);
    out.converged.push_back(row[conv] == "true");
    for (Index i = 0; i < n; ++i) {
      const std::string vm = "vm_" + std::to_string(i + 1);
      const std::string va = "va_" + std::to_string(i + 1);
      out.values(i, static_cast<Index>(j)) =
          std::polar(parse_double(row[table.column(vm, source)], line + ": field '" + vm + "'"),
                     parse_double(row[table.column(va, source)], line + ": field '" + va + "'"));
    }
  }
  return out;
}

void write_bench(const std::filesystem::path& path, std::span<const BenchRecord> records) {
  auto out = open_out(path);
  out << "method,b_phi,tau,wall_seconds,iterations,repeats,converged,max_deviation,status\n";
  for (const BenchRecord& r : records) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << to_string(r.method) << ',' << r.b_phi << ',' << r.tau << ',' << format_double(r.wall_seconds) << ','
        << r.iterations << ',' << r.repeats << ',' << r.converged << ',' << format_double(r.max_deviation) << ','
        << status << '\n';
  }
}

std::vector<BenchRecord> read_bench(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const std::string source = path.string();
  const std::size_t c_method = table.column("method", source);
  const std::size_t c_bphi = table.column("b_phi", source);
  const std::size_t c_tau = table.column("tau", source);
  const std::size_t c_wall = table.column("wall_seconds", source);
  const std::size_t c_iter = table.column("iterations", source);
  const std::size_t c_rep = table.column("repeats", source);
  const std::size_t c_status = table.column("status", source);
  std::vector<BenchRecord> out;
  for (std::size_t j = 0; j < table.rows.size(); ++j) {
    const auto& row = table.rows[j];
    const std::string line = source + ": line " + std::to_string(table.lines[j]);
    BenchRecord r;
    try {
      r.method = parse_method(row[c_method]);
    } catch (const InputError& e) {
      throw InputError(line + ": field 'method': " + e.what());
    }
    r.b_phi = static_cast<Index>(parse_double(row[c_bphi], line + ": field 'b_phi'"));
    r.tau = static_cast<Index>(parse_double(row[c_tau], line + ": field 'tau'"));
    r.wall_seconds = parse_double(row[c_wall], line + ": field 'wall_seconds'");
    r.iterations = static_cast<int>(parse_double(row[c_iter], line + ": field 'iterations'"));
    r.repeats = static_cast<int>(parse_double(row[c_rep], line + ": field 'repeats'"));
    r.status = row[c_status];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tpf::io
