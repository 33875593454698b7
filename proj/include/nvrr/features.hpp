#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "nvrr/errors.hpp"

namespace nvrr {

inline uint32_t total_count(std::span<const uint16_t> trace) {
  uint32_t total = 0;
  for (const uint16_t c : trace) total += c;
  return total;
}

// Running sum of the per-repetition counts; the last element is the total
// photon number the threshold method uses.
inline std::vector<double> cumulative_counts(std::span<const uint16_t> trace) {
  if (trace.empty()) throw invalid_parameter("cumsum: empty trace");
  std::vector<double> out(trace.size());
  double run = 0.0;
  for (size_t i = 0; i < trace.size(); ++i) out[i] = (run += trace[i]);
  return out;
}

// Network input: cumulative sum divided by the stored normalization scale
// (the training-set mean of bright totals).
inline Eigen::VectorXd cumsum_preprocess(std::span<const uint16_t> trace,
                                         double norm_scale) {
  if (trace.empty()) throw invalid_parameter("cumsum: empty trace");
  Eigen::VectorXd out(static_cast<Eigen::Index>(trace.size()));
  const double inv = norm_scale != 0.0 ? 1.0 / norm_scale : 1.0;
  double run = 0.0;
  for (size_t i = 0; i < trace.size(); ++i) {
    run += trace[i];
    out(static_cast<Eigen::Index>(i)) = run * inv;
  }
  return out;
}

}  // namespace nvrr
