#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "nvrr/hamiltonian.hpp"
#include "nvrr/levels.hpp"
#include "nvrr/rate_matrix.hpp"

namespace nvrr {

// Relative tolerance for the Hermiticity contract and for grouping eigenvalues
// into degenerate clusters (as a fraction of the spectral range).
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kDegeneracyTol = 1e-6;

namespace detail {

inline void check_hermitian(const Matrix33& h) {
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTol * scale)
    throw contract_error("effective rates: Hamiltonian is not Hermitian");
}

// Connected components of the off-diagonal sparsity pattern. Levels a
// Hamiltonian never couples evolve trivially, so their time-averaged
// population is an exact delta; only genuine blocks get eigensolved.
inline std::vector<std::vector<int>> coupling_components(const Matrix33& h) {
  std::array<int, kNumLevels> root;
  for (int i = 0; i < kNumLevels; ++i) root[i] = i;
  std::function<int(int)> find = [&](int a) {
    while (root[a] != a) a = root[a] = root[root[a]];
    return a;
  };
  for (int i = 0; i < kNumLevels; ++i)
    for (int j = i + 1; j < kNumLevels; ++j)
      if (h(i, j) != 0.0) root[find(i)] = find(j);

  std::vector<std::vector<int>> comps(kNumLevels);
  for (int i = 0; i < kNumLevels; ++i) comps[find(i)].push_back(i);
  std::erase_if(comps, [](const auto& c) { return c.empty(); });
  return comps;
}

}  // namespace detail

// Long-time-averaged populations: column m holds P(i|m), the time average of
// |<i|psi(t)>|^2 for psi(0) = |m>. Via the eigendecomposition H = U L U^T this
// is sum_j (P_j)_{im}^2 with P_j the projector onto the j-th eigenvalue
// cluster; clusters keep cross terms of (numerically) degenerate eigenvalues,
// which makes the zero blocks come out as exact identity.
inline Matrix33 effective_population_matrix(const HamiltonianSpec& hamiltonian) {
  const Matrix33& h = hamiltonian.matrix;
  detail::check_hermitian(h);

  Matrix33 pop = Matrix33::Identity();
  const auto comps = detail::coupling_components(h);

  // Spectral range over the full matrix, for the degeneracy threshold.
  double lo = 0.0, hi = 0.0;
  std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> solved;
  std::vector<const std::vector<int>*> solved_comp;
  for (const auto& comp : comps) {
    if (comp.size() == 1) {
      const double d = h(comp[0], comp[0]);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      continue;  // identity column already in place
    }
    Eigen::MatrixXd sub(comp.size(), comp.size());
    for (size_t a = 0; a < comp.size(); ++a)
      for (size_t b = 0; b < comp.size(); ++b) sub(a, b) = h(comp[a], comp[b]);
    solved.emplace_back(sub);
    if (solved.back().info() != Eigen::Success)
      throw contract_error("effective rates: eigendecomposition failed");
    solved_comp.push_back(&comp);
    lo = std::min(lo, solved.back().eigenvalues().minCoeff());
    hi = std::max(hi, solved.back().eigenvalues().maxCoeff());
  }
  const double gap_tol = kDegeneracyTol * std::max(hi - lo, 0.0);

  for (size_t s = 0; s < solved.size(); ++s) {
    const auto& comp = *solved_comp[s];
    const auto& evals = solved[s].eigenvalues();
    const auto& evecs = solved[s].eigenvectors();
    const int n = static_cast<int>(comp.size());

    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(n, n);
    int cluster_begin = 0;
    for (int k = 1; k <= n; ++k) {
      if (k < n && evals(k) - evals(k - 1) <= gap_tol) continue;
      const auto basis = evecs.middleCols(cluster_begin, k - cluster_begin);
      block += (basis * basis.transpose()).cwiseAbs2();
      cluster_begin = k;
    }
    for (int a = 0; a < n; ++a) {
      pop(comp[a], comp[a]) = 0.0;
      for (int b = 0; b < n; ++b) pop(comp[a], comp[b]) = block(a, b);
    }
  }
  return pop;
}

// Column view of the above for a single entry level.
inline Eigen::Matrix<double, kNumLevels, 1> effective_population_vector(
    const HamiltonianSpec& hamiltonian, int entry_level) {
  if (entry_level < 0 || entry_level >= kNumLevels)
    throw invalid_parameter("effective_population_vector: bad entry level");
  return effective_population_matrix(hamiltonian).col(entry_level);
}

// Born-Oppenheimer-averaged jump rates: once the system has jumped into level
// m, its coherent evolution spreads population over the block, so the observed
// rate into n is eff(m,n) = sum_i P(i|m) k(i,n). emit_fraction carries the
// share of each effective channel fed by photon-emitting bare transitions.
struct EffectiveRateTable {
  Matrix33 rate = Matrix33::Zero();
  Matrix33 emit_fraction = Matrix33::Zero();
  Matrix33 population = Matrix33::Identity();  // derivation metadata
};

inline EffectiveRateTable build_effective_rates(const HamiltonianSpec& hamiltonian,
                                                const RateMatrix& bare) {
  EffectiveRateTable table;
  table.population = effective_population_matrix(hamiltonian);

  for (int m = 0; m < kNumLevels; ++m) {
    for (int n = 0; n < kNumLevels; ++n) {
      double total = 0.0, emitting = 0.0;
      for (int i = 0; i < kNumLevels; ++i) {
        const double contrib = table.population(i, m) * bare.rates(i, n);
        total += contrib;
        if (bare.emits(i, n)) emitting += contrib;
      }
      table.rate(m, n) = total;
      table.emit_fraction(m, n) = total > 0.0 ? emitting / total : 0.0;
    }
  }
  return table;
}

}  // namespace nvrr
