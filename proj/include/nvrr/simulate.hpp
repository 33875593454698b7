#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "nvrr/effective_rates.hpp"
#include "nvrr/levels.hpp"
#include "nvrr/rng.hpp"

namespace nvrr {

// Per-level channel list prepared for sampling. Channels below a relative
// floor of the row total are numerical dust from the eigensolver and are
// dropped (the genuine mixing channels sit many orders of magnitude higher).
struct JumpTable {
  struct Channel {
    int target;
    double rate;       // MHz
    double cum_rate;   // running sum within the row
    double emit_frac;  // photon-emitting share of this channel
  };
  std::array<std::vector<Channel>, kNumLevels> rows;
  std::array<double, kNumLevels> total_rate{};

  static JumpTable from(const EffectiveRateTable& table) {
    constexpr double kChannelFloor = 1e-15;
    JumpTable jt;
    for (int m = 0; m < kNumLevels; ++m) {
      const double row_total = table.rate.row(m).sum();
      double cum = 0.0;
      for (int n = 0; n < kNumLevels; ++n) {
        const double r = table.rate(m, n);
        if (r <= kChannelFloor * row_total) continue;
        cum += r;
        jt.rows[m].push_back({n, r, cum, table.emit_fraction(m, n)});
      }
      jt.total_rate[m] = cum;
    }
    return jt;
  }
};

struct JumpResult {
  bool absorbing = false;  // no outgoing rate; dwell is infinite
  double dwell_us = 0.0;
  int next = -1;
  bool photon_emitted = false;
  std::optional<std::pair<int, int>> nuclear_flip;  // (from m_I, to m_I)
};

inline JumpResult sample_jump(RngStream& rng, int level, const JumpTable& table) {
  JumpResult res;
  const double total = table.total_rate[level];
  if (total <= 0.0) {
    res.absorbing = true;
    return res;
  }
  res.dwell_us = rng.exponential(total);
  const double u = rng.next_double() * total;
  const auto& row = table.rows[level];
  size_t lo = 0, hi = row.size() - 1;
  while (lo < hi) {
    const size_t mid = (lo + hi) / 2;
    if (row[mid].cum_rate > u) hi = mid; else lo = mid + 1;
  }
  const auto& ch = row[lo];
  res.next = ch.target;
  res.photon_emitted = ch.emit_frac > 0.0 && rng.bernoulli(ch.emit_frac);
  const int mi_from = LevelBasis::mi(level);
  const int mi_to = LevelBasis::mi(ch.target);
  if (mi_from != mi_to) res.nuclear_flip = std::make_pair(mi_from, mi_to);
  return res;
}

// Everything fixed across repetitions: the bare and laser-off rate matrices
// folded with the excited-state mixing into two sampling tables.
struct ReadoutKernel {
  PhysicalParams params;
  EffectiveRateTable on_rates;
  EffectiveRateTable off_rates;
  JumpTable on;
  JumpTable off;

  static ReadoutKernel build(const PhysicalParams& params) {
    params.validate();
    ReadoutKernel k;
    k.params = params;
    const HamiltonianSpec h = build_hamiltonian(params);
    k.on_rates = build_effective_rates(h, build_rate_matrix(params));
    k.off_rates = build_effective_rates(h, build_rate_matrix(params.with_beta(0.0)));
    k.on = JumpTable::from(k.on_rates);
    k.off = JumpTable::from(k.off_rates);
    return k;
  }
};

struct PulseOutcome {
  int detected_photons = 0;
  int end_level = -1;
  std::vector<std::pair<int, int>> flips;  // (from m_I, to m_I), in order
};

namespace detail {

inline void run_segment(RngStream& rng, int& level, const JumpTable& table,
                        double duration_us, double collection_efficiency,
                        PulseOutcome& out) {
  double t = 0.0;
  for (;;) {
    const JumpResult j = sample_jump(rng, level, table);
    if (j.absorbing) return;
    t += j.dwell_us;
    if (t > duration_us) return;  // jump would land after the segment ends
    if (j.photon_emitted && rng.bernoulli(collection_efficiency))
      ++out.detected_photons;
    if (j.nuclear_flip) out.flips.push_back(*j.nuclear_flip);
    level = j.next;
  }
}

}  // namespace detail

// One readout repetition: illumination for pulse_on_us, then a laser-off
// window of pulse_off_us during which leftover excited/singlet population
// drains back to the ground states. Photons detected in either phase count;
// each emitted photon is detected independently with collection_efficiency.
inline PulseOutcome simulate_readout_pulse(RngStream& rng, int start_level,
                                           const ReadoutKernel& kernel) {
  PulseOutcome out;
  int level = start_level;
  detail::run_segment(rng, level, kernel.on, kernel.params.pulse_on_us,
                      kernel.params.collection_efficiency, out);
  if (kernel.params.pulse_off_us > 0.0)
    detail::run_segment(rng, level, kernel.off, kernel.params.pulse_off_us,
                        kernel.params.collection_efficiency, out);
  out.end_level = level;
  return out;
}

// Perfect CNOT on the NV- ground state: swaps |m_s=0,m_I=+1> and
// |m_s=+1,m_I=+1>, identity everywhere else (including NV0 and the singlet,
// where the microwave transition is undefined).
inline int apply_cnot(int level) {
  static const int a = LevelBasis::index(Manifold::kNvmGround, 0, +1);
  static const int b = LevelBasis::index(Manifold::kNvmGround, +2, +1);
  if (level == a) return b;
  if (level == b) return a;
  return level;
}

enum class Label : uint8_t { kDark = 0, kBrightMi0 = 1, kBrightMim1 = 2 };

inline bool is_bright(Label l) { return l != Label::kDark; }

inline int initial_mi(Label l) {
  switch (l) {
    case Label::kDark: return +1;
    case Label::kBrightMi0: return 0;
    case Label::kBrightMim1: return -1;
  }
  throw invalid_parameter("bad label");
}

inline const char* label_name(Label l) {
  switch (l) {
    case Label::kDark: return "dark";
    case Label::kBrightMi0: return "bright0";
    case Label::kBrightMim1: return "brightm1";
  }
  return "?";
}

struct FlipEvent {
  uint32_t repetition;
  int8_t from_mi;
  int8_t to_mi;
};

struct Trajectory {
  std::vector<uint16_t> counts;  // detected photons per repetition
  Label label = Label::kDark;
  std::vector<FlipEvent> flips;
  uint64_t seed = 0;
};

// Full repetitive-readout experiment: start in NV- gs m_s=0 with the nuclear
// state of the label, then N times {CNOT; readout pulse}. Reproducible from
// the seed alone.
inline Trajectory simulate_trajectory(uint64_t seed, Label label, int repetitions,
                                      const ReadoutKernel& kernel) {
  if (repetitions < 1)
    throw invalid_parameter("simulate_trajectory: repetitions must be >= 1");
  RngStream rng(seed);
  Trajectory traj;
  traj.label = label;
  traj.seed = seed;
  traj.counts.resize(repetitions);

  int level = LevelBasis::index(Manifold::kNvmGround, 0, initial_mi(label));
  for (int rep = 0; rep < repetitions; ++rep) {
    level = apply_cnot(level);
    const PulseOutcome out = simulate_readout_pulse(rng, level, kernel);
    traj.counts[rep] = static_cast<uint16_t>(out.detected_photons);
    for (const auto& [from, to] : out.flips)
      traj.flips.push_back({static_cast<uint32_t>(rep), static_cast<int8_t>(from),
                            static_cast<int8_t>(to)});
    level = out.end_level;
  }
  return traj;
}

}  // namespace nvrr
