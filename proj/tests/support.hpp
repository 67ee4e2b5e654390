#pragma once

#include <cmath>
#include <random>

#include "mimoee/mimoee.hpp"

namespace mimoee::test {

/// -174 dBm/Hz over 20 MHz, in W.
inline double thermal_noise_20mhz() { return std::pow(10.0, -17.4 - 3.0) * 20e6; }

/// 10^-3.53 / 250^3.76: the macro-cell path loss at the cell edge.
inline double edge_gain() { return std::pow(10.0, -3.53) / std::pow(250.0, 3.76); }

/// Seven-cell downlink with K = 8, rho = 2, chi = 0.1 and full pilot reuse by default.
inline SystemConfig<double> reference_config(int antennas = 128, int pilot_reuse = 7) {
  SystemConfig<double> c;
  c.antennas = antennas;
  c.angles = antennas / 2;
  c.users = 8;
  c.cells = 7;
  c.pilot_reuse = pilot_reuse;
  c.coherence_block = 1500;
  c.pilot_length = 1;
  c.pilot_power = 0.2;
  c.bs_noise_power = thermal_noise_20mhz();
  c.ue_noise_power = thermal_noise_20mhz();
  c.channel_gain = edge_gain();
  c.cross_gain = 0.1;
  c.bandwidth = 20e6;
  return c;
}

/// Same SINRs as reference_config with the path loss folded into the noise (alpha = 1).
inline SystemConfig<double> normalized_config(int antennas = 128, int pilot_reuse = 7) {
  SystemConfig<double> c = reference_config(antennas, pilot_reuse);
  c.bs_noise_power /= c.channel_gain;
  c.ue_noise_power /= c.channel_gain;
  c.channel_gain = 1.0;
  return c;
}

inline EquivalentPower<double> reference_power(PresetName name, const SystemConfig<double>& cfg,
                                               Precoder precoder) {
  return equivalent_power(preset(name).coefficients, cfg.users, precoder);
}

/// A random configuration satisfying every SystemConfig invariant, with K >= 2 and
/// M large enough for the ZFBF closed forms.
inline SystemConfig<double> random_config(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> cells(1, 19), users(2, 24), rho_pick(1, 4), log_m(5, 12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SystemConfig<double> c;
  c.cells = cells(rng);
  c.pilot_reuse = std::uniform_int_distribution<int>(1, c.cells)(rng);
  c.users = users(rng);
  const int rho = rho_pick(rng);
  int m = 1 << log_m(rng);
  while (m < 4 * rho * c.users) m *= 2;
  c.antennas = m;
  c.angles = m / rho;
  c.coherence_block = 200 + int(unit(rng) * 2000);
  c.pilot_length = 1 + int(unit(rng) * 3);
  if (c.users * c.pilot_length >= c.coherence_block) c.pilot_length = 1;
  c.pilot_power = std::pow(10.0, -2 + 2 * unit(rng));
  c.bs_noise_power = thermal_noise_20mhz() * std::pow(10.0, unit(rng));
  c.ue_noise_power = thermal_noise_20mhz() * std::pow(10.0, unit(rng));
  c.channel_gain = edge_gain() * std::pow(10.0, 3 * unit(rng) - 1.5);
  c.cross_gain = 0.01 + 0.99 * unit(rng);
  c.bandwidth = 20e6;
  return c;
}

}  // namespace mimoee::test
