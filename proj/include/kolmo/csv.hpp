/**
 * @file csv.hpp
 * @brief Byte-stable CSV output: shortest round-trip decimal doubles,
 *        fixed column order, LF line endings.
 */
#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace kolmo::csv {

/// Shortest decimal string that parses back to exactly @p v.
[[nodiscard]] inline std::string format(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

[[nodiscard]] inline std::string format(std::uint64_t v) { return std::to_string(v); }
[[nodiscard]] inline std::string format(std::int64_t v) { return std::to_string(v); }
[[nodiscard]] inline std::string format(int v) { return std::to_string(v); }
[[nodiscard]] inline std::string format(unsigned v) { return std::to_string(v); }
[[nodiscard]] inline std::string format(bool v) { return v ? "true" : "false"; }
[[nodiscard]] inline std::string format(std::string_view v) { return std::string(v); }
[[nodiscard]] inline std::string format(const char* v) { return std::string(v); }

/// One CSV row assembled from heterogeneous cells.
class Row {
 public:
  template <class T>
  Row& operator<<(const T& cell) {
    cells_.push_back(format(cell));
    return *this;
  }
  [[nodiscard]] const std::vector<std::string>& cells() const { return cells_; }

 private:
  std::vector<std::string> cells_;
};

inline void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) {
      os << ',';
    }
    os << cells[i];
  }
  os << '\n';
}

inline void write_row(std::ostream& os, const Row& row) { write_row(os, row.cells()); }

}  // namespace kolmo::csv
