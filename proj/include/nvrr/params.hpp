#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "nvrr/errors.hpp"

namespace nvrr {

// All rates and Hamiltonian constants of the 33-level model. Rates are plain
// MHz (= 1/us); Hamiltonian frequencies keep the units noted per field and are
// converted to angular MHz in one place when the Hamiltonian is assembled.
struct PhysicalParams {
  // Incoherent transition rates, MHz.
  double k_r = 65.9;   // radiative decay, both charge states
  double k47 = 92.1;   // NV- es (m_s=+-1) -> singlet; k67 is identical
  double k57 = 11.4;   // NV- es (m_s=0)  -> singlet
  double k71 = 1.18;   // singlet -> NV- gs (m_s=+-1); k73 is identical
  double k72 = 4.84;   // singlet -> NV- gs (m_s=0)

  double beta = 1.0;          // laser power relative to the optical rate
  double k_ion_coeff = 90.0;  // MHz per unit beta; k_ion = k_ion_coeff * beta
  double k_deion_factor = 2.0;

  // Hyperfine and field constants.
  double a_par = -40.0;      // MHz, NV- excited state
  double a_perp = -50.0;     // MHz, NV- excited state (flip-flop strength)
  double c_par = -40.0;      // MHz, NV0 excited state
  double c_perp = -40.0;     // MHz, NV0 excited state
  double delta_es_ghz = 1.42;   // NV- excited-state zero-field splitting
  double q_mhz = -4.945;        // nuclear quadrupole
  double gamma_e = 2.802;       // MHz/G
  double gamma_n = -0.308;      // kHz/G
  double b_field = 7500.0;      // Gauss, along the NV axis

  double collection_efficiency = 0.30;

  // Readout pulse timing, microseconds. Off-time of zero disables the
  // between-repetition relaxation drain.
  double pulse_on_us = 0.4;
  double pulse_off_us = 1.0;

  // Ionization selection rule: fraction of k_ion feeding NV0 gs (m_s=+1/2);
  // the remainder feeds m_s=-1/2. Deionization always targets NV- gs m_s=0.
  double ion_branch_plus = 0.5;

  double k_ion() const { return k_ion_coeff * beta; }
  double k_deion() const { return k_deion_factor * k_ion(); }

  PhysicalParams with_beta(double b) const {
    PhysicalParams p = *this;
    p.beta = b;
    return p;
  }

  void validate() const {
    auto nonneg = [](double v, const char* n) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw invalid_parameter(std::string("params: ") + n + " must be >= 0");
    };
    nonneg(k_r, "k_r");
    nonneg(k47, "k47");
    nonneg(k57, "k57");
    nonneg(k71, "k71");
    nonneg(k72, "k72");
    nonneg(beta, "beta");
    nonneg(k_ion_coeff, "k_ion_coeff");
    nonneg(k_deion_factor, "k_deion_factor");
    nonneg(pulse_on_us, "pulse_on_us");
    nonneg(pulse_off_us, "pulse_off_us");
    if (!(collection_efficiency >= 0.0 && collection_efficiency <= 1.0))
      throw invalid_parameter("params: collection_efficiency must be in [0,1]");
    if (!(ion_branch_plus >= 0.0 && ion_branch_plus <= 1.0))
      throw invalid_parameter("params: ion_branch_plus must be in [0,1]");
    if (!(pulse_on_us > 0.0))
      throw invalid_parameter("params: pulse_on_us must be > 0");
  }
};

// Reference parameter set: the fixed rates and Hamiltonian constants with the
// two experimentally uncertain knobs (transverse hyperfine strength and the
// ionization coefficient) plus laser power supplied by the caller.
inline PhysicalParams default_params(double a_perp_mhz, double k_ion_coeff_mhz,
                                     double beta) {
  if (!(beta > 0.0))
    throw invalid_parameter("default_params: beta must be > 0");
  if (!(k_ion_coeff_mhz > 0.0))
    throw invalid_parameter("default_params: k_ion_coeff must be > 0");
  PhysicalParams p;
  p.a_perp = a_perp_mhz;
  p.k_ion_coeff = k_ion_coeff_mhz;
  p.beta = beta;
  return p;
}

namespace detail {

template <typename Fn>
void for_each_param_field(PhysicalParams& p, Fn&& fn) {
  fn("k_r", p.k_r);
  fn("k47", p.k47);
  fn("k57", p.k57);
  fn("k71", p.k71);
  fn("k72", p.k72);
  fn("beta", p.beta);
  fn("k_ion_coeff", p.k_ion_coeff);
  fn("k_deion_factor", p.k_deion_factor);
  fn("a_par", p.a_par);
  fn("a_perp", p.a_perp);
  fn("c_par", p.c_par);
  fn("c_perp", p.c_perp);
  fn("delta_es_ghz", p.delta_es_ghz);
  fn("q_mhz", p.q_mhz);
  fn("gamma_e", p.gamma_e);
  fn("gamma_n", p.gamma_n);
  fn("b_field", p.b_field);
  fn("collection_efficiency", p.collection_efficiency);
  fn("pulse_on_us", p.pulse_on_us);
  fn("pulse_off_us", p.pulse_off_us);
  fn("ion_branch_plus", p.ion_branch_plus);
}

}  // namespace detail

// key = value parameter file. One key per line, '#' starts a comment, keys
// not present keep their defaults, unknown keys are rejected.
inline PhysicalParams parse_params(std::istream& in) {
  PhysicalParams p;
  std::map<std::string, double*> fields;
  detail::for_each_param_field(p, [&](const char* k, double& v) { fields[k] = &v; });

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw invalid_parameter("params line " + std::to_string(lineno) +
                                ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = fields.find(key);
    if (it == fields.end())
      throw invalid_parameter("params line " + std::to_string(lineno) +
                              ": unknown key '" + key + "'");
    try {
      size_t pos = 0;
      *it->second = std::stod(val, &pos);
      if (pos != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw invalid_parameter("params line " + std::to_string(lineno) +
                              ": bad value for '" + key + "'");
    }
  }
  p.validate();
  return p;
}

inline PhysicalParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open params file: " + path);
  return parse_params(in);
}

inline std::string params_to_string(const PhysicalParams& params) {
  std::ostringstream out;
  out.precision(17);
  out << "# nvrr physical parameters (rates in MHz, times in us)\n";
  PhysicalParams copy = params;
  detail::for_each_param_field(copy, [&](const char* k, double& v) {
    out << k << " = " << v << "\n";
  });
  return out.str();
}

inline void save_params(const std::string& path, const PhysicalParams& params) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write params file: " + path);
  out << params_to_string(params);
  if (!out) throw io_error("failed writing params file: " + path);
}

}  // namespace nvrr
