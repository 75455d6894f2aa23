#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace seqsim::csv {

// Shortest decimal form that round-trips the double. Deterministic across
// runs, which matters because output files are compared byte for byte.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline void write(const std::string& path, const std::vector<std::string>& header,
                  const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out)
    throw ConfigError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
  if (!out)
    throw ConfigError("write failed: " + path);
}

inline Table read_numeric(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open: " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("empty csv: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ','))
    t.header.push_back(cell);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      double v = 0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc())
        throw ParseError(path + ": non-numeric cell at line " + std::to_string(lineno));
      row.push_back(v);
    }
    if (row.size() != t.header.size())
      throw ParseError(path + ": column count mismatch at line " + std::to_string(lineno));
    t.rows.push_back(std::move(row));
  }
  return t;
}

} // namespace seqsim::csv
