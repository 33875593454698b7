#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "nvrr/errors.hpp"

namespace nvrr {

// Electronic manifolds of the NV-/NV0 system. The negative charge state has a
// spin-1 ground and excited triplet plus a metastable singlet; the neutral
// charge state has spin-1/2 ground and excited doublets.
enum class Manifold : uint8_t {
  kNvmGround = 0,
  kNvmExcited,
  kNvmSinglet,
  kNv0Ground,
  kNv0Excited,
};

struct ElectronicLevel {
  Manifold manifold;
  int ms_twice;  // 2*m_s, so spin-1/2 sublevels stay integral; 0 for the singlet
};

inline constexpr int kNumElectronic = 11;
inline constexpr int kNumNuclear = 3;  // 14N is spin-1: m_I in {-1, 0, +1}
inline constexpr int kNumLevels = kNumElectronic * kNumNuclear;

// Fixed electronic ordering; the global basis index is elec * 3 + (m_I + 1).
inline constexpr std::array<ElectronicLevel, kNumElectronic> kElectronicLevels = {{
    {Manifold::kNvmGround, -2},  {Manifold::kNvmGround, 0},  {Manifold::kNvmGround, +2},
    {Manifold::kNvmExcited, -2}, {Manifold::kNvmExcited, 0}, {Manifold::kNvmExcited, +2},
    {Manifold::kNvmSinglet, 0},
    {Manifold::kNv0Ground, -1},  {Manifold::kNv0Ground, +1},
    {Manifold::kNv0Excited, -1}, {Manifold::kNv0Excited, +1},
}};

// The 33-level basis: 11 electronic levels times 3 nuclear sublevels, with a
// bijective (electronic, m_I) <-> index map.
class LevelBasis {
 public:
  static constexpr int size() { return kNumLevels; }

  static int index(Manifold manifold, int ms_twice, int mi) {
    check_mi(mi);
    for (int e = 0; e < kNumElectronic; ++e) {
      if (kElectronicLevels[e].manifold == manifold &&
          kElectronicLevels[e].ms_twice == ms_twice) {
        return e * kNumNuclear + (mi + 1);
      }
    }
    throw invalid_parameter("LevelBasis: no such electronic level");
  }

  static const ElectronicLevel& electronic(int level) {
    check_level(level);
    return kElectronicLevels[level / kNumNuclear];
  }

  static Manifold manifold(int level) { return electronic(level).manifold; }
  static int ms_twice(int level) { return electronic(level).ms_twice; }
  static int mi(int level) {
    check_level(level);
    return level % kNumNuclear - 1;
  }

  static bool is_nv_minus(int level) {
    const Manifold m = manifold(level);
    return m == Manifold::kNvmGround || m == Manifold::kNvmExcited ||
           m == Manifold::kNvmSinglet;
  }
  static bool is_nv_zero(int level) { return !is_nv_minus(level); }
  static bool is_excited(int level) {
    const Manifold m = manifold(level);
    return m == Manifold::kNvmExcited || m == Manifold::kNv0Excited;
  }

  static std::string name(int level) {
    const ElectronicLevel& e = electronic(level);
    const int m = mi(level);
    std::string s;
    switch (e.manifold) {
      case Manifold::kNvmGround:  s = "NV-_gs(ms=" + ms_str(e.ms_twice); break;
      case Manifold::kNvmExcited: s = "NV-_es(ms=" + ms_str(e.ms_twice); break;
      case Manifold::kNvmSinglet: s = "NV-_singlet(";                    break;
      case Manifold::kNv0Ground:  s = "NV0_gs(ms=" + ms_str(e.ms_twice); break;
      case Manifold::kNv0Excited: s = "NV0_es(ms=" + ms_str(e.ms_twice); break;
    }
    if (e.manifold != Manifold::kNvmSinglet) s += ",";
    s += "mI=" + std::string(m > 0 ? "+1" : (m == 0 ? "0" : "-1")) + ")";
    return s;
  }

 private:
  static std::string ms_str(int ms_twice) {
    switch (ms_twice) {
      case -2: return "-1";
      case -1: return "-1/2";
      case 0:  return "0";
      case +1: return "+1/2";
      case +2: return "+1";
    }
    return "?";
  }
  static void check_level(int level) {
    if (level < 0 || level >= kNumLevels)
      throw invalid_parameter("LevelBasis: level index out of range");
  }
  static void check_mi(int mi) {
    if (mi < -1 || mi > 1) throw invalid_parameter("LevelBasis: m_I out of range");
  }
};

}  // namespace nvrr
