#pragma once

#include <Eigen/Dense>
#include <array>
#include <bitset>

#include "nvrr/levels.hpp"
#include "nvrr/params.hpp"

namespace nvrr {

using Matrix33 = Eigen::Matrix<double, kNumLevels, kNumLevels>;

// Incoherent transition rates between the 33 levels, entry (m, n) = rate from
// m to n in MHz. Every rate conserves m_I; nuclear flips enter only through
// the coherent excited-state mixing. photon_emitting marks the jumps whose
// fluorescence lands in the detection band (NV- radiative decay only; NV0
// emits at a different wavelength and is filtered out).
struct RateMatrix {
  Matrix33 rates = Matrix33::Zero();
  std::array<std::bitset<kNumLevels>, kNumLevels> photon_emitting{};

  bool emits(int from, int to) const { return photon_emitting[from][to]; }
};

// Laser-driven channels (spin-conserving pumping at beta*k_r in both charge
// states, ionization, deionization) all scale linearly with beta, so the
// laser-off matrix is exactly build_rate_matrix(params.with_beta(0)).
inline RateMatrix build_rate_matrix(const PhysicalParams& params) {
  params.validate();
  RateMatrix rm;
  auto& r = rm.rates;
  const double pump = params.beta * params.k_r;
  const double k_ion = params.k_ion();
  const double k_deion = params.k_deion();

  const auto idx = [](Manifold man, int ms_twice, int mi) {
    return LevelBasis::index(man, ms_twice, mi);
  };

  for (int mi = -1; mi <= 1; ++mi) {
    // NV- optical cycle, spin-conservative.
    for (int ms2 : {-2, 0, 2}) {
      const int gs = idx(Manifold::kNvmGround, ms2, mi);
      const int es = idx(Manifold::kNvmExcited, ms2, mi);
      r(gs, es) += pump;
      r(es, gs) += params.k_r;
      rm.photon_emitting[es][gs] = true;
    }
    // Intersystem crossing into the singlet (k67 = k47).
    const int singlet = idx(Manifold::kNvmSinglet, 0, mi);
    r(idx(Manifold::kNvmExcited, -2, mi), singlet) += params.k47;
    r(idx(Manifold::kNvmExcited, +2, mi), singlet) += params.k47;
    r(idx(Manifold::kNvmExcited, 0, mi), singlet) += params.k57;
    // Singlet decay (k73 = k71), preferentially repolarizing to m_s=0.
    r(singlet, idx(Manifold::kNvmGround, -2, mi)) += params.k71;
    r(singlet, idx(Manifold::kNvmGround, 0, mi)) += params.k72;
    r(singlet, idx(Manifold::kNvmGround, +2, mi)) += params.k71;

    // NV0 optical cycle; same k_r, no detectable photon.
    for (int ms2 : {-1, +1}) {
      const int gs0 = idx(Manifold::kNv0Ground, ms2, mi);
      const int es0 = idx(Manifold::kNv0Excited, ms2, mi);
      r(gs0, es0) += pump;
      r(es0, gs0) += params.k_r;
    }

    // Ionization NV- es -> NV0 gs with the configured doublet branching, and
    // deionization NV0 es -> NV- gs m_s=0 (repolarizing into the pumped
    // manifold). Both happen only from excited states under illumination.
    for (int ms2 : {-2, 0, 2}) {
      const int es = idx(Manifold::kNvmExcited, ms2, mi);
      r(es, idx(Manifold::kNv0Ground, +1, mi)) += k_ion * params.ion_branch_plus;
      r(es, idx(Manifold::kNv0Ground, -1, mi)) += k_ion * (1.0 - params.ion_branch_plus);
    }
    for (int ms2 : {-1, +1}) {
      const int es0 = idx(Manifold::kNv0Excited, ms2, mi);
      r(es0, idx(Manifold::kNvmGround, 0, mi)) += k_deion;
    }
  }
  return rm;
}

}  // namespace nvrr
