#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace bergkern {

/// Shortest round-trip form with 17 significant digits, locale independent.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
  os << '\n';
}

}  // namespace bergkern
