#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvrr/binio.hpp"
#include "nvrr/parallel.hpp"
#include "nvrr/params.hpp"
#include "nvrr/simulate.hpp"

namespace nvrr {

inline constexpr const char* kRngScheme = "splitmix64-derive-v1";
inline constexpr int kDatasetFormatVersion = 1;

struct ClassMix {
  double dark = 0.50;
  double bright0 = 0.25;
  double brightm1 = 0.25;

  void validate() const {
    if (dark < 0 || bright0 < 0 || brightm1 < 0 ||
        std::abs(dark + bright0 + brightm1 - 1.0) > 1e-9)
      throw invalid_parameter("class mix proportions must be >= 0 and sum to 1");
  }
};

// Deterministic apportionment (floor + largest remainder, ties by class order).
inline std::array<int, 3> class_counts(int n_traces, const ClassMix& mix) {
  mix.validate();
  const double ideal[3] = {n_traces * mix.dark, n_traces * mix.bright0,
                           n_traces * mix.brightm1};
  std::array<int, 3> counts{};
  int assigned = 0;
  for (int c = 0; c < 3; ++c) {
    counts[c] = static_cast<int>(std::floor(ideal[c]));
    assigned += counts[c];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return ideal[a] - std::floor(ideal[a]) > ideal[b] - std::floor(ideal[b]);
  });
  for (int i = 0; assigned < n_traces; ++i, ++assigned) counts[order[i % 3]] += 1;
  return counts;
}

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  int n_traces = 0;
  int repetitions = 0;
  std::array<int, 3> counts{};  // dark, bright0, brightm1
  PhysicalParams params;
  uint64_t master_seed = 0;
  std::string rng_scheme = kRngScheme;
  std::string config_hash;  // run-config fingerprint, empty for API use

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format_version"] = format_version;
    j["n_traces"] = n_traces;
    j["repetitions"] = repetitions;
    j["counts"] = {{"dark", counts[0]}, {"bright0", counts[1]}, {"brightm1", counts[2]}};
    PhysicalParams copy = params;
    nlohmann::json pj;
    detail::for_each_param_field(copy, [&](const char* k, double& v) { pj[k] = v; });
    j["params"] = pj;
    j["master_seed"] = master_seed;
    j["rng_scheme"] = rng_scheme;
    j["config_hash"] = config_hash;
    return j;
  }

  static DatasetManifest from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kDatasetFormatVersion)
      throw io_error("unsupported dataset format version");
    m.n_traces = j.at("n_traces").get<int>();
    m.repetitions = j.at("repetitions").get<int>();
    m.counts = {j.at("counts").at("dark").get<int>(),
                j.at("counts").at("bright0").get<int>(),
                j.at("counts").at("brightm1").get<int>()};
    detail::for_each_param_field(m.params, [&](const char* k, double& v) {
      v = j.at("params").at(k).get<double>();
    });
    m.master_seed = j.at("master_seed").get<uint64_t>();
    m.rng_scheme = j.at("rng_scheme").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    return m;
  }

  // Canonical fingerprint (nlohmann dumps objects with sorted keys).
  std::string hash() const { return hash_hex(fnv1a64(to_json().dump())); }
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Trajectory> traces;
};

// Labeled dataset with per-trace seeds derived from the master seed; identical
// output for any worker count. Traces are ordered dark, bright0, brightm1.
inline Dataset generate_dataset(uint64_t master_seed, int n_traces, int repetitions,
                                const ClassMix& mix, const PhysicalParams& params,
                                int workers = 0) {
  if (n_traces < 2) throw invalid_parameter("generate_dataset: need n_traces >= 2");
  if (repetitions < 1) throw invalid_parameter("generate_dataset: repetitions >= 1");
  const auto counts = class_counts(n_traces, mix);

  Dataset ds;
  ds.manifest.n_traces = n_traces;
  ds.manifest.repetitions = repetitions;
  ds.manifest.counts = counts;
  ds.manifest.params = params;
  ds.manifest.master_seed = master_seed;

  std::vector<Label> labels(n_traces);
  int at = 0;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < counts[c]; ++i) labels[at++] = static_cast<Label>(c);

  const ReadoutKernel kernel = ReadoutKernel::build(params);
  ds.traces.resize(n_traces);
  parallel_for(n_traces, workers, [&](int64_t i) {
    const uint64_t seed = RngStream::derive(master_seed, static_cast<uint64_t>(i)).next_u64();
    ds.traces[i] = simulate_trajectory(seed, labels[i], repetitions, kernel);
  });
  return ds;
}

struct CalibrationOptions {
  int n_traces = 1500;      // bright traces per evaluation
  uint64_t seed = 0x5EEDCA11;  // common random numbers across beta evaluations
  double beta_lo = 1e-4;
  double beta_hi = 4.0;
  double rel_tol = 0.005;   // on the achieved mean vs target
  int max_iters = 60;
  int workers = 0;
};

namespace detail {

inline double mean_bright_total(const PhysicalParams& params, int repetitions,
                                const CalibrationOptions& opt) {
  const ReadoutKernel kernel = ReadoutKernel::build(params);
  std::vector<double> totals(opt.n_traces);
  parallel_for(opt.n_traces, opt.workers, [&](int64_t i) {
    const uint64_t seed = RngStream::derive(opt.seed, static_cast<uint64_t>(i)).next_u64();
    const Trajectory t = simulate_trajectory(seed, Label::kBrightMi0, repetitions, kernel);
    totals[i] = std::accumulate(t.counts.begin(), t.counts.end(), 0.0);
  });
  return std::accumulate(totals.begin(), totals.end(), 0.0) / opt.n_traces;
}

}  // namespace detail

// Laser power such that a bright-state trajectory of `repetitions` readouts
// yields `target_total_photons` detected photons on average. Bisection over
// beta with common random numbers, so the objective is deterministic and
// monotone; the same target across parameter sets equalizes the photon budget.
inline double calibrate_beta(const PhysicalParams& params_template,
                             double target_total_photons, int repetitions,
                             const CalibrationOptions& opt = {}) {
  if (!(target_total_photons > 0.0))
    throw invalid_parameter("calibrate_beta: target must be > 0");
  double lo = opt.beta_lo, hi = opt.beta_hi;
  auto mean_at = [&](double beta) {
    return detail::mean_bright_total(params_template.with_beta(beta), repetitions, opt);
  };
  double f_lo = mean_at(lo), f_hi = mean_at(hi);
  if (f_lo > target_total_photons || f_hi < target_total_photons)
    throw calibration_error("calibrate_beta: target " +
                            std::to_string(target_total_photons) +
                            " not bracketed by beta range [" + std::to_string(lo) +
                            ", " + std::to_string(hi) + "]");
  double mid = 0.5 * (lo + hi), f_mid = 0.0;
  for (int it = 0; it < opt.max_iters; ++it) {
    mid = 0.5 * (lo + hi);
    f_mid = mean_at(mid);
    if (std::abs(f_mid - target_total_photons) <= 0.2 * opt.rel_tol * target_total_photons)
      return mid;
    (f_mid < target_total_photons ? lo : hi) = mid;
    if ((hi - lo) < 1e-6 * mid) break;
  }
  if (std::abs(f_mid - target_total_photons) > opt.rel_tol * target_total_photons)
    throw calibration_error("calibrate_beta: did not converge to target");
  return mid;
}

}  // namespace nvrr
