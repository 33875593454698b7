#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nvrr/errors.hpp"
#include "nvrr/features.hpp"

namespace nvrr {

// Two-state prediction. p_bright + p_dark = 1; the threshold method emits
// degenerate probabilities (0/1).
struct Prediction {
  double p_bright = 0.0;
  double p_dark = 1.0;
  bool bright = false;
  bool discarded = false;
};

// Total-photon-count discriminator. A trace is bright iff its total exceeds
// n_th; a total equal to n_th counts as dark. The optional (n_dark, n_bright)
// band discards totals strictly between the two thresholds.
struct ThresholdModel {
  int n_th = 0;
  std::optional<std::pair<int, int>> band;

  void set_band(int n_dark, int n_bright) {
    if (!(n_dark <= n_th && n_th <= n_bright))
      throw invalid_parameter("threshold band must satisfy n_dark <= n_th <= n_bright");
    band = {n_dark, n_bright};
  }
};

// Integer threshold maximizing the balanced fidelity on the training totals;
// ties resolve toward the smaller threshold. bright entries are 0/1 flags.
inline ThresholdModel fit_threshold(std::span<const uint32_t> totals,
                                    std::span<const uint8_t> bright) {
  if (totals.size() != bright.size())
    throw invalid_parameter("fit_threshold: size mismatch");
  int n_bright = 0, n_dark = 0;
  uint32_t max_total = 0;
  for (size_t i = 0; i < totals.size(); ++i) {
    (bright[i] ? n_bright : n_dark) += 1;
    max_total = std::max(max_total, totals[i]);
  }
  if (n_bright == 0 || n_dark == 0)
    throw invalid_parameter("fit_threshold: both classes must be present");

  // hist[t] = counts with total == t; scanning th from low to high moves
  // totals <= th into the dark side.
  std::vector<int> hist_bright(max_total + 2, 0), hist_dark(max_total + 2, 0);
  for (size_t i = 0; i < totals.size(); ++i)
    (bright[i] ? hist_bright : hist_dark)[totals[i]] += 1;

  int dark_below = 0, bright_below = 0;  // counts with total <= th
  int best_th = -1;
  double best_f = 0.5;  // th = -1: everything classified bright
  for (int th = 0; th <= static_cast<int>(max_total); ++th) {
    dark_below += hist_dark[th];
    bright_below += hist_bright[th];
    const double f_dark = static_cast<double>(dark_below) / n_dark;
    const double f_bright = static_cast<double>(n_bright - bright_below) / n_bright;
    const double f = 0.5 * (f_bright + f_dark);
    if (f > best_f) {
      best_f = f;
      best_th = th;
    }
  }
  ThresholdModel model;
  model.n_th = best_th;
  return model;
}

inline Prediction classify_threshold_total(const ThresholdModel& model,
                                           uint32_t total) {
  Prediction p;
  p.bright = static_cast<int>(total) > model.n_th;
  p.p_bright = p.bright ? 1.0 : 0.0;
  p.p_dark = 1.0 - p.p_bright;
  if (model.band) {
    const auto [n_dark, n_bright] = *model.band;
    p.discarded = static_cast<int>(total) > n_dark && static_cast<int>(total) < n_bright;
  }
  return p;
}

inline Prediction classify_threshold(const ThresholdModel& model,
                                     std::span<const uint16_t> trace) {
  return classify_threshold_total(model, total_count(trace));
}

}  // namespace nvrr
