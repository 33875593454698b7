#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvrr/simulate.hpp"
#include "nvrr/threshold.hpp"

namespace nvrr {

struct FidelityTriple {
  double f = 0.0;         // (f_bright + f_dark) / 2
  double f_bright = 0.0;  // fraction of bright traces read out correctly
  double f_dark = 0.0;    // fraction of dark traces read out correctly
};

// Balanced readout fidelity. Bright means m_I in {0,-1}; both classes must be
// present among the labels.
inline FidelityTriple fidelity(std::span<const Prediction> predictions,
                               std::span<const Label> labels) {
  if (predictions.size() != labels.size())
    throw invalid_parameter("fidelity: predictions/labels size mismatch");
  int n_bright = 0, n_dark = 0, ok_bright = 0, ok_dark = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (is_bright(labels[i])) {
      ++n_bright;
      ok_bright += predictions[i].bright ? 1 : 0;
    } else {
      ++n_dark;
      ok_dark += predictions[i].bright ? 0 : 1;
    }
  }
  if (n_bright == 0 || n_dark == 0)
    throw invalid_parameter("fidelity: both classes must be present");
  FidelityTriple t;
  t.f_bright = static_cast<double>(ok_bright) / n_bright;
  t.f_dark = static_cast<double>(ok_dark) / n_dark;
  t.f = 0.5 * (t.f_bright + t.f_dark);
  return t;
}

// Mean and sample standard deviation (ddof = 1) of repeated trainings.
struct MethodStats {
  std::vector<double> per_seed;          // balanced fidelity per training seed
  double mean = 0.0;
  double stddev = 0.0;
  double f_bright_mean = 0.0;
  double f_dark_mean = 0.0;

  static MethodStats from(const std::vector<FidelityTriple>& runs) {
    MethodStats s;
    for (const auto& r : runs) {
      s.per_seed.push_back(r.f);
      s.mean += r.f;
      s.f_bright_mean += r.f_bright;
      s.f_dark_mean += r.f_dark;
    }
    const double n = static_cast<double>(runs.size());
    s.mean /= n;
    s.f_bright_mean /= n;
    s.f_dark_mean /= n;
    if (runs.size() > 1) {
      double ss = 0.0;
      for (const double f : s.per_seed) ss += (f - s.mean) * (f - s.mean);
      s.stddev = std::sqrt(ss / (n - 1.0));
    }
    return s;
  }

  nlohmann::json to_json() const {
    return {{"mean", mean},
            {"std", stddev},
            {"f_bright_mean", f_bright_mean},
            {"f_dark_mean", f_dark_mean},
            {"per_seed", per_seed}};
  }
};

// One (method, sweep point) record.
struct FidelityReport {
  std::string method;
  double f = 0.0, f_bright = 0.0, f_dark = 0.0;  // seed means; f is their exact average
  double f_mean = 0.0, f_std = 0.0;              // over repeated trainings
  int repetitions = 0;
  double a_perp = 0.0, k_ion_coeff = 0.0;
  double discard_ratio = 0.0;
  int n_test = 0, n_seeds = 0;
  std::string manifest_hash;

  static FidelityReport from_stats(const std::string& method, const MethodStats& s) {
    FidelityReport r;
    r.method = method;
    r.f_bright = s.f_bright_mean;
    r.f_dark = s.f_dark_mean;
    r.f = 0.5 * (r.f_bright + r.f_dark);
    r.f_mean = s.mean;
    r.f_std = s.stddev;
    r.n_seeds = static_cast<int>(s.per_seed.size());
    return r;
  }

  nlohmann::json to_json() const {
    return {{"method", method},
            {"f", f},
            {"f_bright", f_bright},
            {"f_dark", f_dark},
            {"f_mean", f_mean},
            {"f_std", f_std},
            {"repetitions", repetitions},
            {"a_perp", a_perp},
            {"k_ion_coeff", k_ion_coeff},
            {"discard_ratio", discard_ratio},
            {"n_test", n_test},
            {"n_seeds", n_seeds},
            {"manifest_hash", manifest_hash}};
  }
};

}  // namespace nvrr
