#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace pcdm::cli {

enum class Format { Csv, Jsonl };

using Cell = std::variant<std::string, double, long long, bool>;

/// Rows with a fixed column set, printed as CSV (header + rows) or as one
/// JSON object per line.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<Cell> row) { rows_.push_back(std::move(row)); }

  void print(std::ostream& out, Format format) const {
    if (format == Format::Csv) {
      for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
      out << '\n';
      for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv(row[i]);
        out << '\n';
      }
      return;
    }
    for (const auto& row : rows_) {
      nlohmann::ordered_json obj;
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::visit([&](const auto& v) { obj[columns_[i]] = v; }, row[i]);
      }
      out << obj.dump() << '\n';
    }
  }

 private:
  static std::string csv(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) {
      if (s->find_first_of(",\"\n") == std::string::npos) return *s;
      std::string q = "\"";
      for (char ch : *s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    if (const auto* d = std::get_if<double>(&c)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", *d);
      return buf;
    }
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<bool>(c) ? "true" : "false";
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

}  // namespace pcdm::cli
