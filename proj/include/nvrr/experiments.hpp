#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "nvrr/dataset.hpp"
#include "nvrr/fidelity.hpp"
#include "nvrr/kmeans.hpp"
#include "nvrr/model_io.hpp"
#include "nvrr/parallel.hpp"
#include "nvrr/shallow_net.hpp"
#include "nvrr/threshold.hpp"

namespace nvrr {

// ---------------------------------------------------------------------------
// Shared helpers on truncated views. A trajectory simulated for N_max readouts
// restricted to its first N repetitions is distributed exactly like an N-rep
// experiment, so sweeps reuse one dataset per cell and truncate.

inline std::span<const uint16_t> head(const Trajectory& t, int reps) {
  if (static_cast<int>(t.counts.size()) < reps)
    throw invalid_parameter("trace shorter than requested repetitions");
  return {t.counts.data(), static_cast<size_t>(reps)};
}

inline std::vector<uint32_t> totals_at(const std::vector<Trajectory>& traces, int reps) {
  std::vector<uint32_t> totals(traces.size());
  for (size_t i = 0; i < traces.size(); ++i) totals[i] = total_count(head(traces[i], reps));
  return totals;
}

inline std::vector<uint8_t> bright_flags(const std::vector<Trajectory>& traces) {
  std::vector<uint8_t> b(traces.size());
  for (size_t i = 0; i < traces.size(); ++i) b[i] = is_bright(traces[i].label) ? 1 : 0;
  return b;
}

inline std::vector<Label> labels_of(const std::vector<Trajectory>& traces) {
  std::vector<Label> l(traces.size());
  for (size_t i = 0; i < traces.size(); ++i) l[i] = traces[i].label;
  return l;
}

inline bool has_flip_before(const Trajectory& t, int reps) {
  for (const FlipEvent& f : t.flips)
    if (static_cast<int>(f.repetition) < reps) return true;
  return false;
}

inline ThresholdModel fit_threshold_at(const std::vector<Trajectory>& train, int reps) {
  const auto totals = totals_at(train, reps);
  const auto bright = bright_flags(train);
  return fit_threshold(totals, bright);
}

inline std::vector<Prediction> predict_tm(const ThresholdModel& model,
                                          const std::vector<Trajectory>& test,
                                          int reps) {
  std::vector<Prediction> p(test.size());
  for (size_t i = 0; i < test.size(); ++i)
    p[i] = classify_threshold(model, head(test[i], reps));
  return p;
}

inline std::vector<Prediction> predict_ml(const ShallowNet& net,
                                          const std::vector<Trajectory>& test) {
  std::vector<Prediction> p(test.size());
  for (size_t i = 0; i < test.size(); ++i)
    p[i] = predict_shallow_net(net, head(test[i], net.input_dim()));
  return p;
}

// Cross-parameter evaluation: longer traces are truncated to the network's
// input length; shorter ones are a contract error (no padding).
inline Prediction predict_truncated(const ShallowNet& net,
                                    std::span<const uint16_t> trace) {
  if (static_cast<int>(trace.size()) < net.input_dim())
    throw invalid_parameter(
        "predict_truncated: trace shorter than network input; padding is not supported");
  return predict_shallow_net(net, trace.subspan(0, static_cast<size_t>(net.input_dim())));
}

// One trained network per seed; the usual "repeat 10 trainings" ensemble.
struct MlEnsemble {
  std::vector<ShallowNet> nets;
  std::vector<TrainResult> logs;  // per-seed training logs (same order)
};

// Trains n_seeds networks (seed stream derive(train_seed, s)) concurrently;
// each training is single-threaded and deterministic.
inline MlEnsemble train_ensemble(const std::vector<Trajectory>& train, int reps,
                                 int n_seeds, uint64_t train_seed,
                                 const TrainOptions& opt = {}, int workers = 0) {
  MlEnsemble ens;
  ens.nets.resize(n_seeds);
  ens.logs.resize(n_seeds);
  parallel_for(n_seeds, workers, [&](int64_t s) {
    const uint64_t seed = RngStream::derive(train_seed, static_cast<uint64_t>(s)).next_u64();
    TrainResult r = train_shallow_net(train, seed, opt, reps);
    ens.nets[s] = r.net;
    ens.logs[s] = std::move(r);
  });
  return ens;
}

inline MethodStats eval_tm(const std::vector<Trajectory>& train,
                           const std::vector<Trajectory>& test, int reps) {
  const ThresholdModel model = fit_threshold_at(train, reps);
  const auto preds = predict_tm(model, test, reps);
  const auto labels = labels_of(test);
  return MethodStats::from({fidelity(preds, labels)});
}

inline MethodStats eval_ensemble(const MlEnsemble& ens,
                                 const std::vector<Trajectory>& test) {
  const auto labels = labels_of(test);
  std::vector<FidelityTriple> runs;
  runs.reserve(ens.nets.size());
  for (const ShallowNet& net : ens.nets)
    runs.push_back(fidelity(predict_ml(net, test), labels));
  return MethodStats::from(runs);
}

// ---------------------------------------------------------------------------
// Repetition sweep (fidelity vs N, N_opt of the threshold method).

struct SweepNOptions {
  std::vector<int> n_list;
  int n_train = 10000;
  int n_test = 4000;
  int n_seeds = 10;
  uint64_t data_seed = 1;
  uint64_t train_seed = 2;
  TrainOptions train_opt;
  int workers = 0;
  bool ml_at_every_n = true;  // false: ML only at the TM optimum and max N
};

struct SweepNPoint {
  int repetitions = 0;
  MethodStats tm;
  std::optional<MethodStats> ml;
};

struct SweepNResult {
  std::vector<SweepNPoint> points;
  int n_opt = 0;  // argmax of TM fidelity, ties toward smaller N
  double beta = 0.0;
  std::string train_hash, test_hash;
};

inline SweepNResult sweep_repetitions(const Dataset& train, const Dataset& test,
                                      const SweepNOptions& opt) {
  if (opt.n_list.empty()) throw invalid_parameter("sweep: empty N list");
  SweepNResult result;
  result.beta = train.manifest.params.beta;
  result.train_hash = train.manifest.hash();
  result.test_hash = test.manifest.hash();

  std::vector<int> ns = opt.n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  for (const int n : ns) {
    SweepNPoint point;
    point.repetitions = n;
    point.tm = eval_tm(train.traces, test.traces, n);
    result.points.push_back(std::move(point));
  }
  int best = 0;
  for (size_t i = 1; i < result.points.size(); ++i)
    if (result.points[i].tm.mean > result.points[best].tm.mean) best = static_cast<int>(i);
  result.n_opt = result.points[best].repetitions;

  for (SweepNPoint& point : result.points) {
    const bool wanted = opt.ml_at_every_n || point.repetitions == result.n_opt ||
                        point.repetitions == ns.back();
    if (!wanted) continue;
    const MlEnsemble ens =
        train_ensemble(train.traces, point.repetitions, opt.n_seeds,
                       RngStream::derive(opt.train_seed, point.repetitions).next_u64(),
                       opt.train_opt, opt.workers);
    point.ml = eval_ensemble(ens, test.traces);
  }
  return result;
}

inline SweepNResult sweep_repetitions(const PhysicalParams& params,
                                      const SweepNOptions& opt) {
  const int n_max = *std::max_element(opt.n_list.begin(), opt.n_list.end());
  const Dataset train = generate_dataset(RngStream::derive(opt.data_seed, 0).next_u64(),
                                         opt.n_train, n_max, {}, params, opt.workers);
  const Dataset test = generate_dataset(RngStream::derive(opt.data_seed, 1).next_u64(),
                                        opt.n_test, n_max, {}, params, opt.workers);
  return sweep_repetitions(train, test, opt);
}

// ---------------------------------------------------------------------------
// Parameter sweep: for each (A_perp, k_ion) cell, recalibrate beta to the
// common photon budget, find the cell's N_opt on the grid, and report TM/ML at
// N_opt and at the maximum N.

struct SweepParamsOptions {
  std::vector<double> a_perp_list;
  std::vector<double> k_ion_list;
  std::vector<int> n_grid;
  double calib_target = 0.0;  // detected bright photons over calib at max N
  CalibrationOptions calib;
  int n_train = 10000;
  int n_test = 4000;
  int n_seeds = 10;
  uint64_t data_seed = 1;
  uint64_t train_seed = 2;
  TrainOptions train_opt;
  int workers = 0;
};

struct ParamCellReport {
  double a_perp = 0.0, k_ion_coeff = 0.0, beta = 0.0;
  int n_opt = 0;
  int n_max = 0;
  MethodStats tm_at_nopt, ml_at_nopt, tm_at_nmax, ml_at_nmax;
  std::string train_hash, test_hash;
};

inline ParamCellReport run_param_cell(const PhysicalParams& base, double a_perp,
                                      double k_ion, const SweepParamsOptions& opt) {
  PhysicalParams cell = base;
  cell.a_perp = a_perp;
  cell.k_ion_coeff = k_ion;
  const int n_max = *std::max_element(opt.n_grid.begin(), opt.n_grid.end());

  ParamCellReport report;
  report.a_perp = a_perp;
  report.k_ion_coeff = k_ion;
  report.n_max = n_max;

  CalibrationOptions calib = opt.calib;
  calib.workers = opt.workers;
  report.beta = calibrate_beta(cell, opt.calib_target, n_max, calib);
  cell.beta = report.beta;

  const uint64_t cell_key = fnv1a64(std::to_string(a_perp) + "/" + std::to_string(k_ion));
  const Dataset train =
      generate_dataset(RngStream::derive(opt.data_seed, cell_key).next_u64(),
                       opt.n_train, n_max, {}, cell, opt.workers);
  const Dataset test =
      generate_dataset(RngStream::derive(opt.data_seed, cell_key + 1).next_u64(),
                       opt.n_test, n_max, {}, cell, opt.workers);
  report.train_hash = train.manifest.hash();
  report.test_hash = test.manifest.hash();

  SweepNOptions sweep;
  sweep.n_list = opt.n_grid;
  sweep.n_seeds = opt.n_seeds;
  sweep.train_seed = RngStream::derive(opt.train_seed, cell_key).next_u64();
  sweep.train_opt = opt.train_opt;
  sweep.workers = opt.workers;
  sweep.ml_at_every_n = false;
  const SweepNResult swept = sweep_repetitions(train, test, sweep);

  report.n_opt = swept.n_opt;
  for (const SweepNPoint& p : swept.points) {
    if (p.repetitions == swept.n_opt) {
      report.tm_at_nopt = p.tm;
      if (p.ml) report.ml_at_nopt = *p.ml;
    }
    if (p.repetitions == n_max) {
      report.tm_at_nmax = p.tm;
      if (p.ml) report.ml_at_nmax = *p.ml;
    }
  }
  return report;
}

inline std::vector<ParamCellReport> sweep_parameters(const PhysicalParams& base,
                                                     const SweepParamsOptions& opt) {
  if (opt.a_perp_list.empty() || opt.k_ion_list.empty() || opt.n_grid.empty())
    throw invalid_parameter("sweep_parameters: empty sweep axes");
  std::vector<ParamCellReport> grid;
  for (const double a : opt.a_perp_list)
    for (const double k : opt.k_ion_list)
      grid.push_back(run_param_cell(base, a, k, opt));
  return grid;
}

// ---------------------------------------------------------------------------
// Preparation-by-measurement discard curves.

struct DiscardPoint {
  double target_ratio = 0.0;
  double tm_realized = 0.0;
  MethodStats tm;  // single entry; the threshold method has no training noise
  double ml_realized = 0.0;
  MethodStats ml;
};

namespace detail {

// Width of the symmetric TM band whose realized discard ratio on `totals`
// comes closest to the target.
inline std::pair<int, double> tm_band_for_ratio(const ThresholdModel& model,
                                                std::span<const uint32_t> totals,
                                                double target) {
  const int max_total =
      static_cast<int>(*std::max_element(totals.begin(), totals.end()));
  int best_w = 0;
  double best_realized = 0.0, best_err = std::abs(target);
  for (int w = 0; w <= max_total + 1; ++w) {
    int discarded = 0;
    for (const uint32_t t : totals) {
      const int ti = static_cast<int>(t);
      if (ti > model.n_th - w && ti < model.n_th + w) ++discarded;
    }
    const double realized = static_cast<double>(discarded) / totals.size();
    if (std::abs(realized - target) < best_err) {
      best_err = std::abs(realized - target);
      best_w = w;
      best_realized = realized;
    }
    if (realized >= 1.0) break;
  }
  return {best_w, best_realized};
}

// Confidence threshold t whose realized ML discard ratio comes closest to the
// target: a quantile of the winning-probability margins.
inline double ml_threshold_for_ratio(std::span<const Prediction> preds, double target) {
  std::vector<double> margins(preds.size());
  for (size_t i = 0; i < preds.size(); ++i)
    margins[i] = std::max(preds[i].p_bright, preds[i].p_dark) - 0.5;
  std::sort(margins.begin(), margins.end());
  const int n = static_cast<int>(margins.size());
  int k = static_cast<int>(std::lround(target * n));
  k = std::clamp(k, 0, n);
  if (k == 0) return 0.0;
  const double below = margins[k - 1];
  const double above = k < n ? margins[k] : 0.5;
  double t = 0.5 * (below + above);
  if (!(t < 0.5)) t = std::nextafter(0.5, 0.0);
  return t;
}

}  // namespace detail

inline std::vector<DiscardPoint> discard_curve(const ThresholdModel& tm,
                                               const MlEnsemble& ens,
                                               const std::vector<Trajectory>& test,
                                               int reps,
                                               std::span<const double> targets) {
  const auto labels = labels_of(test);
  const auto totals = totals_at(test, reps);

  std::vector<std::vector<Prediction>> ml_preds;
  ml_preds.reserve(ens.nets.size());
  for (const ShallowNet& net : ens.nets) ml_preds.push_back(predict_ml(net, test));

  std::vector<DiscardPoint> curve;
  for (const double target : targets) {
    DiscardPoint point;
    point.target_ratio = target;

    // Threshold method: symmetric band around n_th.
    const auto [w, realized] = detail::tm_band_for_ratio(tm, totals, target);
    point.tm_realized = realized;
    ThresholdModel banded = tm;
    banded.set_band(tm.n_th - w, tm.n_th + w);
    std::vector<Prediction> kept_preds;
    std::vector<Label> kept_labels;
    for (size_t i = 0; i < test.size(); ++i) {
      const Prediction p = classify_threshold_total(banded, totals[i]);
      if (p.discarded) continue;
      kept_preds.push_back(p);
      kept_labels.push_back(labels[i]);
    }
    point.tm = MethodStats::from({fidelity(kept_preds, kept_labels)});

    // Network: confidence filter per seed.
    std::vector<FidelityTriple> runs;
    double realized_sum = 0.0;
    for (const auto& preds : ml_preds) {
      const double t = detail::ml_threshold_for_ratio(preds, target);
      const auto [kept_idx, ratio] = discard_filter_ml(preds, t);
      realized_sum += ratio;
      std::vector<Prediction> kp;
      std::vector<Label> kl;
      for (const size_t i : kept_idx) {
        kp.push_back(preds[i]);
        kl.push_back(labels[i]);
      }
      runs.push_back(fidelity(kp, kl));
    }
    point.ml = MethodStats::from(runs);
    point.ml_realized = realized_sum / static_cast<double>(ml_preds.size());
    curve.push_back(std::move(point));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Flip-trace analysis (which method survives a nuclear flip).

struct FlipReport {
  int n_traces = 0;
  int n_flip = 0;
  double tm_acc_flip = 0.0, ml_acc_flip = 0.0;
  double tm_acc_noflip = 0.0, ml_acc_noflip = 0.0;
  double ml_correct_fraction = 0.0;  // share of flip traces the network recovers
  std::vector<int> first_flip_ml_correct;  // first-flip repetition indices
  std::vector<int> first_flip_ml_wrong;
  double median_first_flip_ml_correct = -1.0;
  double median_first_flip_ml_wrong = -1.0;
};

namespace detail {

inline double median_of(std::vector<int> v) {
  if (v.empty()) return -1.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline FlipReport flip_analysis(const std::vector<Trajectory>& test,
                                std::span<const Prediction> tm_preds,
                                std::span<const Prediction> ml_preds, int reps) {
  if (tm_preds.size() != test.size() || ml_preds.size() != test.size())
    throw invalid_parameter("flip_analysis: prediction count mismatch");
  FlipReport rep;
  rep.n_traces = static_cast<int>(test.size());
  int tm_ok_flip = 0, ml_ok_flip = 0, tm_ok_noflip = 0, ml_ok_noflip = 0, n_noflip = 0;
  for (size_t i = 0; i < test.size(); ++i) {
    const bool truth = is_bright(test[i].label);
    const bool tm_ok = tm_preds[i].bright == truth;
    const bool ml_ok = ml_preds[i].bright == truth;
    if (has_flip_before(test[i], reps)) {
      ++rep.n_flip;
      tm_ok_flip += tm_ok;
      ml_ok_flip += ml_ok;
      int first = reps;
      for (const FlipEvent& f : test[i].flips)
        if (static_cast<int>(f.repetition) < reps) {
          first = static_cast<int>(f.repetition);
          break;
        }
      (ml_ok ? rep.first_flip_ml_correct : rep.first_flip_ml_wrong).push_back(first);
    } else {
      ++n_noflip;
      tm_ok_noflip += tm_ok;
      ml_ok_noflip += ml_ok;
    }
  }
  if (rep.n_flip > 0) {
    rep.tm_acc_flip = static_cast<double>(tm_ok_flip) / rep.n_flip;
    rep.ml_acc_flip = static_cast<double>(ml_ok_flip) / rep.n_flip;
    rep.ml_correct_fraction = rep.ml_acc_flip;
  }
  if (n_noflip > 0) {
    rep.tm_acc_noflip = static_cast<double>(tm_ok_noflip) / n_noflip;
    rep.ml_acc_noflip = static_cast<double>(ml_ok_noflip) / n_noflip;
  }
  rep.median_first_flip_ml_correct = detail::median_of(rep.first_flip_ml_correct);
  rep.median_first_flip_ml_wrong = detail::median_of(rep.first_flip_ml_wrong);
  return rep;
}

// ---------------------------------------------------------------------------
// Robustness of a fixed network against parameter drift.

struct RobustnessRow {
  double a_perp = 0.0, k_ion_coeff = 0.0, beta = 0.0;
  int n_opt = 0;       // of the test cell
  int n_eval = 0;      // repetitions fed to the fixed network (after truncation)
  double tm_f = 0.0;
  MethodStats ml_native;
  MethodStats network_r;
  std::string test_hash;
};

// Evaluates a fixed ensemble (trained elsewhere) on freshly generated data of
// another parameter cell at that cell's N_opt, truncating traces to the
// network input. Native TM and ML baselines come from the same data.
inline RobustnessRow evaluate_network_r(const MlEnsemble& network_r,
                                        const PhysicalParams& base, double a_perp,
                                        double k_ion, const SweepParamsOptions& opt) {
  const ParamCellReport cell = run_param_cell(base, a_perp, k_ion, opt);
  RobustnessRow row;
  row.a_perp = a_perp;
  row.k_ion_coeff = k_ion;
  row.beta = cell.beta;
  row.n_opt = cell.n_opt;
  row.tm_f = cell.tm_at_nopt.mean;
  row.ml_native = cell.ml_at_nopt;

  const int input = network_r.nets.front().input_dim();
  if (cell.n_opt < input)
    throw invalid_parameter(
        "network R input exceeds the test cell's N_opt; padding is not supported");
  row.n_eval = input;

  PhysicalParams params = base;
  params.a_perp = a_perp;
  params.k_ion_coeff = k_ion;
  params.beta = cell.beta;
  const uint64_t cell_key = fnv1a64(std::to_string(a_perp) + "/" + std::to_string(k_ion));
  const Dataset test =
      generate_dataset(RngStream::derive(opt.data_seed, cell_key + 1).next_u64(),
                       opt.n_test, cell.n_max, {}, params, opt.workers);
  row.test_hash = test.manifest.hash();

  const auto labels = labels_of(test.traces);
  std::vector<FidelityTriple> runs;
  for (const ShallowNet& net : network_r.nets) {
    std::vector<Prediction> preds(test.traces.size());
    for (size_t i = 0; i < test.traces.size(); ++i)
      preds[i] = predict_truncated(net, head(test.traces[i], cell.n_opt));
    runs.push_back(fidelity(preds, labels));
  }
  row.network_r = MethodStats::from(runs);
  return row;
}

}  // namespace nvrr
