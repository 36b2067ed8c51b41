#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spinbench/dsp.hpp"
#include "spinbench/errors.hpp"
#include "spinbench/isotopes.hpp"
#include "spinbench/trace.hpp"

namespace spinbench {

/// A spectral peak matched to the n-th harmonic of a nuclear Larmor
/// frequency. When several ladder entries fall within the tolerance of the
/// same peak, every candidate is reported and flagged ambiguous.
struct PeakAssignment {
  double frequency_MHz = 0.0;  // observed peak position
  std::string nucleus;
  int harmonic = 1;
  double deviation_MHz = 0.0;  // |observed − n·ω_I|
  double magnitude = 0.0;
  bool ambiguous = false;
  std::optional<double> normalized_frequency;  // observed / 1ω(¹H)
};

struct AssignmentResult {
  std::vector<PeakAssignment> assignments;
  std::vector<std::pair<double, double>> unassigned;  // (frequency, magnitude)
  std::optional<double> anchor_MHz;                   // 1ω(¹H) when available
};

/// Match peaks against n·|γ̄|·B0 ladders for every isotope in the table.
/// Each peak keeps all candidates within `tolerance_MHz` (the closest
/// first); peaks with no candidate end up in `unassigned`.
inline AssignmentResult assign_nuclei(std::span<const std::pair<double, double>> peaks,
                                      double b0_T, const IsotopeTable& table,
                                      int n_max, double tolerance_MHz) {
  if (tolerance_MHz <= 0.0) throw DomainError("assign_nuclei: tolerance must be positive");
  if (n_max < 1) throw DomainError("assign_nuclei: n_max must be >= 1");
  if (b0_T <= 0.0) throw DomainError("assign_nuclei: field must be positive");
  if (table.empty()) throw DataError("assign_nuclei: empty isotope table");

  AssignmentResult result;
  if (const NucleusSpec* proton = table.find("1H"))
    result.anchor_MHz = proton->larmor_MHz(b0_T);

  std::vector<std::pair<double, double>> sorted_peaks(peaks.begin(), peaks.end());
  std::sort(sorted_peaks.begin(), sorted_peaks.end());

  for (const auto& [freq, mag] : sorted_peaks) {
    std::vector<PeakAssignment> candidates;
    for (const auto& nucleus : table.entries()) {
      const double base = nucleus.larmor_MHz(b0_T);
      if (base <= 0.0) continue;
      for (int n = 1; n <= n_max; ++n) {
        const double dev = std::abs(freq - n * base);
        if (dev <= tolerance_MHz) {
          PeakAssignment a;
          a.frequency_MHz = freq;
          a.nucleus = nucleus.label;
          a.harmonic = n;
          a.deviation_MHz = dev;
          a.magnitude = mag;
          if (result.anchor_MHz) a.normalized_frequency = freq / *result.anchor_MHz;
          candidates.push_back(std::move(a));
        }
      }
    }
    if (candidates.empty()) {
      result.unassigned.emplace_back(freq, mag);
      continue;
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const PeakAssignment& a, const PeakAssignment& b) {
                if (a.deviation_MHz != b.deviation_MHz)
                  return a.deviation_MHz < b.deviation_MHz;
                return a.nucleus < b.nucleus;
              });
    const bool ambiguous = candidates.size() > 1;
    for (auto& c : candidates) {
      c.ambiguous = ambiguous;
      result.assignments.push_back(std::move(c));
    }
  }
  return result;
}

/// Processing configuration for the time-domain → frequency-domain chain.
/// `min_frequency_MHz` drops peaks inside the low-frequency lobe left by the
/// polynomial background subtraction (set to 0 to keep everything).
struct EseemConfig {
  int background_degree = 3;
  int zero_fill_factor = 4;
  double prominence = 0.05;
  double tolerance_MHz = 0.3;
  int n_max = 4;
  double min_frequency_MHz = 2.0;
  double b0_T = 0.0;  // required
};

/// Full pipeline in fixed order: polynomial background subtraction,
/// Hamming apodization, zero-filled FFT, peak picking, nucleus assignment.
inline std::pair<FreqSpectrum, AssignmentResult> process_eseem(
    const TimeTrace& raw, const EseemConfig& config, const IsotopeTable& table) {
  if (config.b0_T <= 0.0) throw DomainError("process_eseem: field b0 required");
  if (config.min_frequency_MHz < 0.0)
    throw DomainError("process_eseem: negative frequency cutoff");

  const TimeTrace corrected = subtract_background(raw, config.background_degree);
  const TimeTrace windowed = apodize_hamming(corrected);
  FreqSpectrum spectrum = transform(windowed, config.zero_fill_factor);
  auto peaks = find_peaks(spectrum, config.prominence);
  std::erase_if(peaks, [&](const std::pair<double, double>& p) {
    return p.first < config.min_frequency_MHz;
  });
  AssignmentResult assignments =
      assign_nuclei(peaks, config.b0_T, table, config.n_max, config.tolerance_MHz);
  spectrum.normalization_anchor_MHz = assignments.anchor_MHz;
  return {std::move(spectrum), std::move(assignments)};
}

} // namespace spinbench
