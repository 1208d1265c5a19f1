#pragma once

// CSV output: '#'-prefixed metadata lines, a header row, floats with 12
// significant digits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mimogt {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string format_number(std::size_t v) { return std::to_string(v); }

inline std::string format_hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_meta(std::string key, std::string value) { meta_.emplace_back(std::move(key), std::move(value)); }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("CSV row width does not match header");
    rows_.push_back(std::move(cells));
  }

  [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }
  [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    for (const auto& [k, v] : meta_) os << "# " << k << ": " << v << '\n';
    write_line(os, columns_);
    for (const auto& r : rows_) write_line(os, r);
    return os.str();
  }

 private:
  static void write_line(std::ostringstream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::vector<std::string>> rows_;
};

/// Two-column name/value listing with the names padded to a common width.
inline std::string format_aligned(const std::vector<std::pair<std::string, std::string>>& items) {
  std::size_t width = 0;
  for (const auto& [k, v] : items) width = std::max(width, k.size());
  std::ostringstream os;
  for (const auto& [k, v] : items) os << k << std::string(width - k.size() + 2, ' ') << v << '\n';
  return os.str();
}

}  // namespace mimogt
