#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <string_view>

#include "mimoee/error.hpp"
#include "mimoee/system_model.hpp"

namespace mimoee {

enum class Precoder { MRT, ZFBF };

inline const char* to_string(Precoder p) { return p == Precoder::MRT ? "MRT" : "ZFBF"; }

/// Component-level BS power model: amplifier, supply/cooling losses, RF chains
/// and flop-counted signal processing.
template <std::floating_point Scalar = double>
struct PowerModel {
  Scalar amplifier_efficiency{};   ///< eta_PA in (0, 1]
  Scalar dc_loss{};                ///< sigma_DC in [0, 1)
  Scalar mains_loss{};             ///< sigma_MS in [0, 1)
  Scalar cooling_loss{};           ///< sigma_cool in [0, 1)
  Scalar rf_power{};               ///< W per antenna
  Scalar baseband_dl_power{};      ///< W per antenna, downlink phase
  Scalar baseband_ul_power{};      ///< W per antenna, training phase
  Scalar flops_per_antenna_user{}; ///< R_flops,0
  Scalar computing_efficiency{};   ///< eta_C, flops/W
  bool zero_forcing = false;       ///< delta_ZF
};

/// Amplifier factor and per-antenna circuit powers of the lumped model
/// P_BS ~ (1 - tau) eta P + M P_0.
template <std::floating_point Scalar = double>
struct PowerCoefficients {
  Scalar amplifier_factor{};   ///< eta
  Scalar circuit_power{};      ///< P_c, W per antenna
  Scalar beamforming_power{};  ///< P_sp, W per antenna per user
};

template <std::floating_point Scalar = double>
struct EquivalentPower {
  Scalar amplifier_factor{};   ///< eta
  Scalar circuit_power{};      ///< P_c
  Scalar beamforming_power{};  ///< P_sp
  Scalar per_antenna_power{};  ///< P_0
};

/// K + delta_ZF K^2, the per-antenna beamforming operation count in units of P_sp.
template <std::floating_point Scalar = double>
Scalar beamforming_load(int users, Precoder precoder) {
  const Scalar k = Scalar(users);
  return precoder == Precoder::ZFBF ? k + k * k : k;
}

template <std::floating_point Scalar>
void validate(const PowerModel<Scalar>& pm) {
  const auto in_unit = [](Scalar x) { return x >= 0 && x < 1; };
  if (!(pm.amplifier_efficiency > 0 && pm.amplifier_efficiency <= 1))
    throw ConfigError(ConfigErrc::InvalidPowerModel, "eta_PA must lie in (0, 1]");
  if (!in_unit(pm.dc_loss) || !in_unit(pm.mains_loss) || !in_unit(pm.cooling_loss))
    throw ConfigError(ConfigErrc::InvalidPowerModel, "loss factors must lie in [0, 1)");
  if (pm.rf_power < 0 || pm.baseband_dl_power < 0 || pm.baseband_ul_power < 0 ||
      pm.flops_per_antenna_user < 0)
    throw ConfigError(ConfigErrc::InvalidPowerModel, "circuit powers must be non-negative");
  if (pm.flops_per_antenna_user > 0 && !(pm.computing_efficiency > 0))
    throw ConfigError(ConfigErrc::InvalidPowerModel, "eta_C must be positive");
}

/// (1 - sigma_DC)(1 - sigma_MS)(1 - sigma_cool)
template <std::floating_point Scalar>
Scalar supply_factor(const PowerModel<Scalar>& pm) {
  return (Scalar(1) - pm.dc_loss) * (Scalar(1) - pm.mains_loss) * (Scalar(1) - pm.cooling_loss);
}

template <std::floating_point Scalar>
Scalar amplifier_factor(const PowerModel<Scalar>& pm) {
  return Scalar(1) / (pm.amplifier_efficiency * supply_factor(pm));
}

template <std::floating_point Scalar>
Scalar flop_power(const PowerModel<Scalar>& pm) {
  return pm.flops_per_antenna_user > 0 ? pm.flops_per_antenna_user / pm.computing_efficiency
                                       : Scalar(0);
}

template <std::floating_point Scalar>
Precoder precoder_of(const PowerModel<Scalar>& pm) {
  return pm.zero_forcing ? Precoder::ZFBF : Precoder::MRT;
}

/// Collapses a component model into (eta, P_c, P_sp, P_0) for the given configuration.
template <std::floating_point Scalar>
EquivalentPower<Scalar> equivalent_params(const PowerModel<Scalar>& pm,
                                          const SystemConfig<Scalar>& cfg) {
  validate(pm);
  validate(cfg);
  const Scalar supply = supply_factor(pm);
  const Scalar tau =
      Scalar(cfg.users) * Scalar(cfg.pilot_length) / Scalar(cfg.coherence_block);
  EquivalentPower<Scalar> eq;
  eq.amplifier_factor = amplifier_factor(pm);
  eq.circuit_power =
      (pm.rf_power + (Scalar(1) - tau) * pm.baseband_dl_power + tau * pm.baseband_ul_power) /
      supply;
  eq.beamforming_power = flop_power(pm) / supply;
  eq.per_antenna_power =
      (pm.rf_power + pm.baseband_dl_power) / supply +
      beamforming_load<Scalar>(cfg.users, precoder_of(pm)) * eq.beamforming_power;
  return eq;
}

/// P_0 = P_c + (K + delta_ZF K^2) P_sp for published (eta, P_c, P_sp) triples.
template <std::floating_point Scalar>
EquivalentPower<Scalar> equivalent_power(const PowerCoefficients<Scalar>& coeffs, int users,
                                         Precoder precoder) {
  return {coeffs.amplifier_factor, coeffs.circuit_power, coeffs.beamforming_power,
          coeffs.circuit_power + beamforming_load<Scalar>(users, precoder) * coeffs.beamforming_power};
}

/// Scales the amplifier factor by a (negative-dB) feeder loss between PA and antenna.
template <std::floating_point Scalar>
EquivalentPower<Scalar> with_feeder_loss(EquivalentPower<Scalar> eq, Scalar feeder_db) {
  eq.amplifier_factor /= std::pow(Scalar(10), feeder_db / Scalar(10));
  return eq;
}

/// Total BS consumption from the component model, signal processing for
/// beamforming and channel estimation included.
template <std::floating_point Scalar>
Scalar bs_power_full(const PowerModel<Scalar>& pm, const SystemConfig<Scalar>& cfg,
                     Scalar transmit_power) {
  validate(pm);
  if (transmit_power < 0) throw DomainError("transmit power must be non-negative");
  const long pilot_symbols = static_cast<long>(cfg.users) * cfg.pilot_length;
  if (pilot_symbols < 1) throw DomainError("log2(K*T_tr) undefined for K*T_tr < 1");
  const Scalar m = Scalar(cfg.antennas);
  const Scalar tau = Scalar(pilot_symbols) / Scalar(cfg.coherence_block);
  const Scalar flops = flop_power(pm);
  const Scalar beamforming = m * beamforming_load<Scalar>(cfg.users, precoder_of(pm)) * flops;
  const Scalar estimation = m * std::log2(Scalar(pilot_symbols)) * flops;
  const Scalar per_antenna =
      pm.rf_power + (Scalar(1) - tau) * pm.baseband_dl_power + tau * pm.baseband_ul_power;
  return ((Scalar(1) - tau) * transmit_power / pm.amplifier_efficiency +
          (Scalar(1) - tau) * beamforming + tau * estimation + m * per_antenna) /
         supply_factor(pm);
}

/// Lumped consumption (1 - tau) eta P + M P_0.
template <std::floating_point Scalar>
Scalar bs_power(const EquivalentPower<Scalar>& eq, const SystemConfig<Scalar>& cfg,
                Scalar training_fraction, Scalar transmit_power) {
  return (Scalar(1) - training_fraction) * eq.amplifier_factor * transmit_power +
         Scalar(cfg.antennas) * eq.per_antenna_power;
}

template <std::floating_point Scalar = double>
struct PowerModelGap {
  Scalar full{};
  Scalar lumped{};
  Scalar relative_gap{};  ///< (lumped - full) / full
};

/// Reports how far the lumped model drifts from the component model.
template <std::floating_point Scalar>
PowerModelGap<Scalar> power_model_gap(const PowerModel<Scalar>& pm,
                                      const SystemConfig<Scalar>& cfg, Scalar transmit_power) {
  const Scalar tau =
      Scalar(cfg.users) * Scalar(cfg.pilot_length) / Scalar(cfg.coherence_block);
  PowerModelGap<Scalar> gap;
  gap.full = bs_power_full(pm, cfg, transmit_power);
  gap.lumped = bs_power(equivalent_params(pm, cfg), cfg, tau, transmit_power);
  gap.relative_gap = (gap.lumped - gap.full) / gap.full;
  return gap;
}

// ---------------------------------------------------------------------------
// Published hardware presets.

enum class PresetName { GreenTouch2012, GreenTouch2020, LteMacro, LteMicro, LtePico, LteFemto };

inline constexpr std::array<PresetName, 6> all_presets{
    PresetName::GreenTouch2012, PresetName::GreenTouch2020, PresetName::LteMacro,
    PresetName::LteMicro,       PresetName::LtePico,        PresetName::LteFemto};

inline const char* to_string(PresetName name) {
  switch (name) {
    case PresetName::GreenTouch2012: return "GreenTouch2012";
    case PresetName::GreenTouch2020: return "GreenTouch2020";
    case PresetName::LteMacro: return "LTE_Macro";
    case PresetName::LteMicro: return "LTE_Micro";
    case PresetName::LtePico: return "LTE_Pico";
    case PresetName::LteFemto: return "LTE_Femto";
  }
  return "";
}

/// alpha(d) = 10^(intercept_exponent) / d^path_exponent evaluated at the cell radius.
struct PathLoss {
  double intercept_exponent = 0;  ///< log10 of the 1 m gain
  double path_exponent = 0;
  double cell_radius = 0;         ///< m

  double gain_at_edge() const {
    return std::pow(10.0, intercept_exponent) / std::pow(cell_radius, path_exponent);
  }
};

struct PowerPreset {
  PresetName name{};
  PowerCoefficients<double> coefficients;
  std::optional<int> antennas;       ///< overrides M
  std::optional<int> users;          ///< overrides K
  std::optional<double> max_power;   ///< P_max, W
  double feeder_loss_db = 0;         ///< applied to LTE presets only
  std::optional<PathLoss> path_loss;
};

inline PowerPreset preset(PresetName name) {
  switch (name) {
    case PresetName::GreenTouch2012:
      return {name, {2.51, 1.42, 3.1e-3}, {}, {}, {}, 0.0, {}};
    case PresetName::GreenTouch2020:
      return {name, {2.51, 0.2, 0.4e-3}, {}, {}, {}, 0.0, {}};
    case PresetName::LteMacro:
      return {name, {3.24, 31.7, 7.8e-3}, 8, 8, 40.0, -3.0, PathLoss{-3.53, 3.76, 250.0}};
    case PresetName::LteMicro:
      return {name, {4.04, 21.4, 23.5e-3}, 4, 4, 6.3, 0.0, PathLoss{-3.53, 3.76, 100.0}};
    case PresetName::LtePico:
      return {name, {13.72, 2.6, 2.7e-3}, 4, 4, 0.13, 0.0, PathLoss{-3.06, 3.67, 50.0}};
    case PresetName::LteFemto:
      return {name, {21.11, 1.9, 7.2e-3}, 2, 2, 0.05, 0.0, PathLoss{-3.06, 3.67, 30.0}};
  }
  throw ConfigError(ConfigErrc::UnknownPreset, "unhandled preset enumerator");
}

inline PresetName parse_preset_name(std::string_view text) {
  for (PresetName p : all_presets)
    if (text == to_string(p)) return p;
  throw ConfigError(ConfigErrc::UnknownPreset, std::string(text));
}

inline PowerPreset preset(std::string_view text) { return preset(parse_preset_name(text)); }

}  // namespace mimoee
