#pragma once

// Delimited-text output: fixed column order, header row, 17 significant digits.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace mmq {

inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";  // folds -0
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size()) {
    row(header);
  }

  template <class... Cells>
  void write(const Cells&... cells) {
    static_assert(sizeof...(Cells) > 0);
    std::vector<std::string> fields;
    fields.reserve(sizeof...(Cells));
    (fields.push_back(cell(cells)), ...);
    row(fields);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw std::logic_error("csv row has the wrong number of columns");
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) out_ << ',';
      out_ << fields[k];
    }
    out_ << '\n';
  }

  template <class T>
  static std::string cell(const T& value) {
    if constexpr (std::is_same_v<T, bool>) {
      return value ? "true" : "false";
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(static_cast<double>(value));
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(value);
    } else {
      return std::string(std::string_view(value));
    }
  }

 private:
  std::ostream& out_;
  std::size_t columns_;
};

}  // namespace mmq
