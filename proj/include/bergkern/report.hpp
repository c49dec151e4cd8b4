#pragma once

// Writing run reports: CSV tables plus the echoed config, or a single text summary.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "csv.hpp"
#include "errors.hpp"
#include "experiments.hpp"

namespace bergkern {

enum class report_format { csv, text };

namespace detail {

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_table_csv(std::ostream& os, const report_table& t) {
  std::vector<std::string> row;
  for (const auto& c : t.columns) row.push_back(csv_cell(c));
  write_csv_row(os, row);
  for (const auto& r : t.rows) {
    row.clear();
    for (const auto& c : r) row.push_back(csv_cell(c));
    write_csv_row(os, row);
  }
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
  os.close();
  if (!os) throw error(errc::io_failure, "cannot write " + path.string());
}

}  // namespace detail

/// PASS/FAIL line per check.
inline void write_checks(std::ostream& os, const run_report& rep) {
  for (const auto& c : rep.checks) {
    os << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) os << " (" << c.detail << ")";
    os << '\n';
  }
}

inline std::string text_summary(const run_report& rep) {
  std::ostringstream os;
  os << "config " << rep.config.dump() << '\n';
  for (const auto& t : rep.tables) {
    os << "\n[" << t.name << "]\n";
    std::vector<std::size_t> width(t.columns.size());
    for (std::size_t k = 0; k < t.columns.size(); ++k) width[k] = t.columns[k].size();
    for (const auto& r : t.rows)
      for (std::size_t k = 0; k < r.size() && k < width.size(); ++k) width[k] = std::max(width[k], r[k].size());
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        os << cells[k];
        if (k + 1 < cells.size()) os << std::string(width[k] - cells[k].size() + 2, ' ');
      }
      os << '\n';
    };
    line(t.columns);
    for (const auto& r : t.rows) line(r);
  }
  os << '\n';
  write_checks(os, rep);
  os << (rep.passed() ? "result PASS\n" : "result FAIL\n");
  return os.str();
}

/// csv: config.json, one <table>.csv each, checks.csv. text: report.txt.
inline void emit_report(const run_report& rep, const std::filesystem::path& dir, report_format fmt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw error(errc::io_failure, "cannot create " + dir.string() + ": " + ec.message());
  if (fmt == report_format::text) {
    detail::write_file(dir / "report.txt", text_summary(rep));
    return;
  }
  detail::write_file(dir / "config.json", rep.config.dump(2) + "\n");
  for (const auto& t : rep.tables) {
    std::ostringstream os;
    detail::write_table_csv(os, t);
    detail::write_file(dir / (t.name + ".csv"), os.str());
  }
  std::ostringstream os;
  detail::write_table_csv(os, report_table{"checks", {"check", "pass", "detail"}, [&] {
                                             std::vector<std::vector<std::string>> rows;
                                             for (const auto& c : rep.checks)
                                               rows.push_back({c.name, c.pass ? "1" : "0", c.detail});
                                             return rows;
                                           }()});
  detail::write_file(dir / "checks.csv", os.str());
}

}  // namespace bergkern
