#pragma once

#include <charconv>
#include <complex>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "spinbench/errors.hpp"
#include "spinbench/trace.hpp"

namespace spinbench::csv {

/// Shortest round-trip representation (deterministic across runs).
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& origin,
                           std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && (s[used] == ' ' || s[used] == '\t' || s[used] == '\r'))
      ++used;
    if (used != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw DataError(origin + ": row " + std::to_string(row) + ": malformed number '" +
                    s + "'");
  }
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

struct Table {
  std::vector<std::string> comments;  // leading '#' lines, markers stripped
  std::vector<std::string> columns;   // header row
  std::vector<std::vector<double>> rows;
};

/// Read a numeric CSV with '#' comment lines and one header row.
inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Table table;
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = 1;
      while (start < line.size() && line[start] == ' ') ++start;
      table.comments.push_back(line.substr(start));
      continue;
    }
    if (!header_seen) {
      for (auto& c : split_fields(line)) table.columns.push_back(c);
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != table.columns.size())
      throw DataError(path + ": row " + std::to_string(row) + ": expected " +
                      std::to_string(table.columns.size()) + " fields, got " +
                      std::to_string(fields.size()));
    std::vector<double> values;
    values.reserve(fields.size());
    for (const auto& f : fields) values.push_back(parse_double(f, path, row));
    table.rows.push_back(std::move(values));
  }
  if (!header_seen) throw DataError(path + ": no header row");
  return table;
}

inline void write_lines(std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << "\n";
}

/// `time_ns,real,imag` with '#' comment header.
inline void write_trace(std::ostream& out, const ComplexTrace& trace,
                        const std::vector<std::string>& comments) {
  write_lines(out, comments);
  out << "time_ns,real,imag\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << format_double(trace.times_ns[i]) << ',' << format_double(trace.values[i].real())
        << ',' << format_double(trace.values[i].imag()) << "\n";
}

inline void write_trace(const std::string& path, const ComplexTrace& trace,
                        const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_trace(out, trace, comments);
}

inline ComplexTrace read_trace(const std::string& path) {
  const Table table = read_table(path);
  if (table.columns.size() < 2)
    throw DataError(path + ": trace needs time plus at least one value column");
  ComplexTrace trace;
  for (const auto& row : table.rows) {
    trace.times_ns.push_back(row[0]);
    trace.values.emplace_back(row[1], table.columns.size() > 2 ? row[2] : 0.0);
  }
  for (const auto& c : table.comments)
    trace.meta += trace.meta.empty() ? c : "; " + c;
  return trace;
}

/// `temperature_K,value` rows for rate or heat-capacity data.
struct TemperatureSeries {
  std::vector<double> temperature_K;
  std::vector<double> value;
  std::vector<std::string> comments;
};

inline TemperatureSeries read_temperature_series(const std::string& path) {
  const Table table = read_table(path);
  if (table.columns.size() != 2)
    throw DataError(path + ": expected two columns `temperature_K,value`");
  TemperatureSeries series;
  series.comments = table.comments;
  for (const auto& row : table.rows) {
    series.temperature_K.push_back(row[0]);
    series.value.push_back(row[1]);
  }
  return series;
}

inline void write_temperature_series(const std::string& path,
                                     const std::vector<double>& temperature_K,
                                     const std::vector<double>& value,
                                     const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_lines(out, comments);
  out << "temperature_K,value\n";
  for (std::size_t i = 0; i < temperature_K.size(); ++i)
    out << format_double(temperature_K[i]) << ',' << format_double(value[i]) << "\n";
}

} // namespace spinbench::csv
