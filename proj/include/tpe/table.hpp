#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tpe/errors.hpp"

namespace tpe {

using Cell = std::variant<double, std::string>;

inline constexpr double absent = std::numeric_limits<double>::quiet_NaN();

inline double or_absent(const std::optional<double>& v) { return v ? *v : absent; }

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size())
      fail(ErrorClass::dimension_mismatch, "table " + name + ": row has " + std::to_string(row.size()) +
                                               " cells, expected " + std::to_string(columns.size()));
    rows.push_back(std::move(row));
  }
};

// 17 significant digits; NaN and infinities become empty cells.
inline std::string format_cell(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  const double v = std::get<double>(c);
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += format_cell(r[i]);
    }
    out += '\n';
  }
  return out;
}

// Write to a sibling temp file, then rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorClass::io, "cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) fail(ErrorClass::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorClass::io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

// <dir>/<name>.csv plus a <dir>/<name>.json sidecar holding the metadata and the column list.
inline void write_table(const Table& t, const std::filesystem::path& dir, nlohmann::ordered_json metadata) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorClass::io, "cannot create output directory " + dir.string() + ": " + ec.message());
  metadata["table"] = t.name;
  metadata["columns"] = t.columns;
  metadata["rows"] = t.rows.size();
  write_atomic(dir / (t.name + ".csv"), to_csv(t));
  write_atomic(dir / (t.name + ".json"), metadata.dump(2) + "\n");
}

}  // namespace tpe
