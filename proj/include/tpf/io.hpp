#pragma once

// File formats.
//
// Network (JSON):
//   {
//     "slack_voltage": [re, im]            (or [[re, im], ...] per phase)
//     "n_buses": N,                         bus 0 is the slack
//     "branches": [{"from", "to", "r", "x", "b_shunt"}, ...],
//     "zip": [[alpha_z, alpha_i, alpha_p], ...]        optional, per demand node
//     "matrix": {                                       optional, overrides branches
//       "n_demand": bφ,
//       "y_dd": [[row, col, re, im], ...],              0-based coordinates
//       "y_ds": [[row, col, re, im], ...]
//     }
//   }
//
// Loads (CSV): header p_1,q_1,...,p_bφ,q_bφ (any column order), one row per case.
// Voltages (CSV): case,converged,vm_1,va_1,... magnitude p.u., angle radians.
// All numbers are written with 17 significant digits.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpf/bench.hpp"
#include "tpf/grid_model.hpp"
#include "tpf/tensor_dense.hpp"

namespace tpf::io {

using nlohmann::json;

std::string format_double(double x);

NetworkModel network_from_json(const json& doc, const std::string& source = "<network>");
json network_to_json(const NetworkModel& model);
NetworkModel read_network(const std::filesystem::path& path);
void write_network(const std::filesystem::path& path, const NetworkModel& model);

LoadMatrix read_loads(const std::filesystem::path& path, Index n_demand);
void write_loads(const std::filesystem::path& path, const LoadMatrix& loads);

struct VoltageTable {
  CMatrix values;  // bφ × τ
  std::vector<bool> converged;
};

void write_voltages(const std::filesystem::path& path, const VoltageBatch& batch);
VoltageTable read_voltages(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const json& doc);
json read_json(const std::filesystem::path& path);

void write_bench(const std::filesystem::path& path, std::span<const BenchRecord> records);
std::vector<BenchRecord> read_bench(const std::filesystem::path& path);

/// Minimal comma-separated table with 1-based source line numbers per row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  [[nodiscard]] std::size_t column(const std::string& name, const std::string& source) const;
};

CsvTable read_csv(const std::filesystem::path& path);
double parse_double(const std::string& text, const std::string& where);

}  // namespace tpf::io
