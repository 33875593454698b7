#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "nvrr/levels.hpp"
#include "nvrr/params.hpp"
#include "nvrr/rate_matrix.hpp"

namespace nvrr {

// Coherent excited-state Hamiltonian on the 33-level basis, stored in angular
// MHz (rad/us). This is the single point where plain frequencies are converted
// to angular ones. The matrix is real symmetric: it is block diagonal with
//   NV- excited 9x9:  D_es*Sz^2 + Q*Iz^2 + ge*B*Sz + gn*B*Iz
//                     + Apar*Sz*Iz + (Aperp/2)(S+I- + S-I+)     (spin-1 x spin-1)
//   NV0 excited 6x6:  Q*Iz^2 + ge*B*Sz + gn*B*Iz
//                     + Cpar*Sz*Iz + (Cperp/2)(S+I- + S-I+)     (spin-1/2 x spin-1)
// and zero on every ground-state and singlet level (the ground-state
// Hamiltonian has no effect on the readout and is not modeled).
struct HamiltonianSpec {
  Matrix33 matrix = Matrix33::Zero();
};

namespace detail {

// <m+1| S+ |m> for spin s.
inline double ladder_up(double s, double m) {
  return std::sqrt(s * (s + 1.0) - m * (m + 1.0));
}

}  // namespace detail

inline HamiltonianSpec build_hamiltonian(const PhysicalParams& params) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  HamiltonianSpec spec;
  auto& h = spec.matrix;

  const double delta_es = params.delta_es_ghz * 1e3;       // GHz -> MHz
  const double gn_b = params.gamma_n * 1e-3 * params.b_field;  // kHz/G -> MHz
  const double ge_b = params.gamma_e * params.b_field;

  struct Block {
    Manifold manifold;
    double spin;       // electronic spin quantum number
    double zfs;        // coefficient of Sz^2
    double hf_par;     // Sz*Iz coefficient
    double hf_perp;    // (S+I- + S-I+)/2 coefficient
  };
  const Block blocks[2] = {
      {Manifold::kNvmExcited, 1.0, delta_es, params.a_par, params.a_perp},
      {Manifold::kNv0Excited, 0.5, 0.0, params.c_par, params.c_perp},
  };

  for (const Block& b : blocks) {
    const int ms2_max = static_cast<int>(2 * b.spin);
    for (int ms2 = -ms2_max; ms2 <= ms2_max; ms2 += 2) {
      const double ms = 0.5 * ms2;
      for (int mi = -1; mi <= 1; ++mi) {
        const int row = LevelBasis::index(b.manifold, ms2, mi);
        h(row, row) = b.zfs * ms * ms + params.q_mhz * mi * mi + ge_b * ms +
                      gn_b * mi + b.hf_par * ms * mi;
        // Flip-flop term: |ms, mI> <-> |ms+1, mI-1>.
        if (ms2 + 2 <= ms2_max && mi - 1 >= -1) {
          const int col = LevelBasis::index(b.manifold, ms2 + 2, mi - 1);
          const double elem = 0.5 * b.hf_perp * detail::ladder_up(b.spin, ms) *
                              detail::ladder_up(1.0, static_cast<double>(mi - 1));
          h(row, col) = elem;
          h(col, row) = elem;
        }
      }
    }
  }

  h *= two_pi;  // MHz -> angular MHz
  return spec;
}

}  // namespace nvrr
