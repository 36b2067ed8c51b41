#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spinbench/errors.hpp"

namespace spinbench {

/// One magnetic isotope: label, nuclear spin, gyromagnetic ratio over 2π.
struct NucleusSpec {
  std::string label;  // e.g. "1H", "11B"
  double spin_I = 0.0;
  double gamma_bar_MHz_per_T = 0.0;  // signed

  /// Nuclear Larmor frequency magnitude at field b0 [MHz].
  double larmor_MHz(double b0_T) const {
    return std::abs(gamma_bar_MHz_per_T) * b0_T;
  }
};

/// Nuclear-constants table, loaded from the shipped data file.
/// Format: one record per line, `label,spin_I,gamma_bar_MHz_per_T`,
/// '#' starts a comment, blank lines ignored.
class IsotopeTable {
 public:
  IsotopeTable() = default;

  static IsotopeTable parse(std::istream& in, const std::string& origin = "<stream>") {
    IsotopeTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

      std::istringstream fields(line);
      std::string label, spin_str, gamma_str;
      if (!std::getline(fields, label, ',') || !std::getline(fields, spin_str, ',') ||
          !std::getline(fields, gamma_str)) {
        throw DataError(origin + ":" + std::to_string(lineno) +
                        ": expected `label,spin_I,gamma_bar_MHz_per_T`");
      }
      NucleusSpec spec;
      spec.label = trimmed(label);
      try {
        spec.spin_I = std::stod(spin_str);
        spec.gamma_bar_MHz_per_T = std::stod(gamma_str);
      } catch (const std::exception&) {
        throw DataError(origin + ":" + std::to_string(lineno) + ": malformed number");
      }
      if (spec.label.empty())
        throw DataError(origin + ":" + std::to_string(lineno) + ": empty label");
      if (spec.spin_I <= 0.0)
        throw DataError(origin + ":" + std::to_string(lineno) +
                        ": spin_I must be positive for a magnetic isotope");
      if (table.find(spec.label))
        throw DataError(origin + ":" + std::to_string(lineno) + ": duplicate label '" +
                        spec.label + "'");
      table.entries_.push_back(std::move(spec));
    }
    return table;
  }

  static IsotopeTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open isotope table '" + path + "'");
    return parse(in, path);
  }

  const NucleusSpec* find(const std::string& label) const {
    const auto it = std::find_if(entries_.begin(), entries_.end(),
                                 [&](const NucleusSpec& n) { return n.label == label; });
    return it == entries_.end() ? nullptr : &*it;
  }

  const NucleusSpec& at(const std::string& label) const {
    if (const NucleusSpec* n = find(label)) return *n;
    throw DataError("isotope '" + label + "' not in table");
  }

  const std::vector<NucleusSpec>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  static std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::vector<NucleusSpec> entries_;
};

} // namespace spinbench
