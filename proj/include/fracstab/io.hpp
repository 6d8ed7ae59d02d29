#pragma once

// Tabular and branch output in CSV and JSON with stable column names.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracstab/errors.hpp"
#include "fracstab/gelfand.hpp"

namespace fracstab::io {

using Cell = std::variant<double, std::int64_t, std::string, bool>;

/// Named columns with one row per record, in insertion order.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size())
      throw DomainError("table row has " + std::to_string(row.size()) + " cells, expected " +
                        std::to_string(columns.size()));
    rows.push_back(std::move(row));
  }
};

/// Shortest text of v with at most `digits` significant digits. Independent
/// of the global locale; non-finite values print as nan, inf, -inf.
inline std::string format_double(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

struct CsvCell {
  std::string operator()(double v) const { return format_double(v, 10); }
  std::string operator()(std::int64_t v) const { return std::to_string(v); }
  std::string operator()(const std::string& v) const { return csv_field(v); }
  std::string operator()(bool v) const { return v ? "true" : "false"; }
};

struct JsonCell {
  nlohmann::json operator()(double v) const {
    if (!std::isfinite(v)) return nullptr;
    return v;
  }
  nlohmann::json operator()(std::int64_t v) const { return v; }
  nlohmann::json operator()(const std::string& v) const { return v; }
  nlohmann::json operator()(bool v) const { return v; }
};

}  // namespace detail

/// Header row, then comma-separated rows; doubles carry 10 significant digits.
inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << detail::csv_field(t.columns[j]);
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << std::visit(detail::CsvCell{}, row[j]);
    os << '\n';
  }
}

/// Array of objects keyed by column name. Non-finite doubles become null.
inline nlohmann::json to_json(const Table& t) {
  auto arr = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t j = 0; j < row.size(); ++j) obj[t.columns[j]] = std::visit(detail::JsonCell{}, row[j]);
    arr.push_back(std::move(obj));
  }
  return arr;
}

/// Serialises with every double written to 17 significant digits, so values
/// round-trip exactly and the text does not depend on the shortest-form
/// algorithm of the JSON library.
inline std::string dump_json(const nlohmann::json& j, int indent = 2) {
  std::string out;
  auto pad = [&](int depth) {
    if (indent >= 0) out += '\n' + std::string(static_cast<std::size_t>(indent * depth), ' ');
  };
  auto rec = [&](auto&& self, const nlohmann::json& v, int depth) -> void {
    if (v.is_number_float()) {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_double(d, 17) : "null";
    } else if (v.is_object()) {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        pad(depth + 1);
        out += nlohmann::json(it.key()).dump() + (indent >= 0 ? ": " : ":");
        self(self, it.value(), depth + 1);
      }
      pad(depth);
      out += '}';
    } else if (v.is_array()) {
      if (v.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars (state vectors, node lists) stay on one line.
      const bool flat = std::none_of(v.begin(), v.end(), [](const nlohmann::json& e) { return e.is_structured(); });
      out += '[';
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += flat && indent >= 0 ? ", " : ",";
        if (!flat) pad(depth + 1);
        self(self, v[i], depth + 1);
      }
      if (!flat) pad(depth);
      out += ']';
    } else {
      out += v.dump();
    }
  };
  rec(rec, j, 0);
  return out + '\n';
}

// ---------------------------------------------------------------------------
// Branches

/// Boundary exponent of a state, or NaN where no fit is possible (u ≡ 0).
inline double boundary_exponent_or_nan(const RadialFunction& state) {
  try {
    return boundary_exponent(state);
  } catch (const AccuracyError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

/// One record per branch point: lambda, sup_norm, mu1, boundary_exponent.
inline Table branch_table(const Branch& b) {
  Table t{{"lambda", "sup_norm", "mu1", "boundary_exponent"}, {}};
  for (const auto& pt : b.points)
    t.add({pt.lambda, pt.sup_norm, pt.mu1, boundary_exponent_or_nan(pt.state)});
  return t;
}

/// Branch summary and records; with `states`, also the grid nodes and one
/// array of nodal values per point, aligned with "nodes".
inline nlohmann::json branch_json(const Branch& b, bool states) {
  nlohmann::json j;
  j["fold_found"] = b.fold_found;
  j["lambda_star"] = std::isfinite(b.lambda_star) ? nlohmann::json(b.lambda_star) : nlohmann::json(nullptr);
  j["points"] = to_json(branch_table(b));
  if (states) {
    j["nodes"] = b.points.empty() ? nlohmann::json::array() : nlohmann::json(b.points.front().state.nodes());
    auto arr = nlohmann::json::array();
    for (const auto& pt : b.points) arr.push_back(pt.state.values());
    j["states"] = std::move(arr);
  }
  return j;
}

}  // namespace fracstab::io
