#pragma once

#include <concepts>
#include <limits>
#include <string>

#include "mimoee/error.hpp"

namespace mimoee {

/**
 * Physical-layer configuration of a symmetric multi-cell downlink.
 *
 * Every cell has the same number of antennas and users, every user shares the
 * same correlation basis (N angles of arrival out of M), and every interfering
 * cell is attenuated by the same cross-gain ratio. Units are SI throughout;
 * gains are linear.
 */
template <std::floating_point Scalar = double>
struct SystemConfig {
  int antennas = 0;          ///< M, BS antennas
  int users = 0;             ///< K, users per cell
  int cells = 0;             ///< L
  int pilot_reuse = 0;       ///< L_P, cells sharing one pilot set (1 = no contamination)
  int coherence_block = 0;   ///< T, channel uses per coherence block
  int pilot_length = 0;      ///< T_tr, channel uses per user pilot
  Scalar pilot_power{};      ///< W, uplink pilot power
  Scalar bs_noise_power{};   ///< W, noise at the BS during training
  Scalar ue_noise_power{};   ///< W, noise at the user
  Scalar channel_gain{};     ///< alpha, average gain incl. path loss
  Scalar cross_gain{};       ///< chi in (0, 1], interfering-to-serving gain ratio
  int angles = 0;            ///< N <= M, dimension of the shared correlation basis
  Scalar bandwidth{};        ///< Hz
  bool perfect_training = false;  ///< treat the training SNR as infinite
};

/// Scalars derived once from a SystemConfig.
template <std::floating_point Scalar = double>
struct DerivedParams {
  Scalar training_snr{};         ///< gamma_tr; +inf with perfect training
  Scalar training_noise{};       ///< 1/(gamma_tr * alpha); exactly 0 with perfect training
  Scalar estimation_accuracy{};  ///< v in (0, 1]
  Scalar interference_load{};    ///< 1 + chi (L - 1)
  Scalar pilot_load{};           ///< 1 + chi (L_P - 1)
  Scalar correlation{};          ///< rho = M / N
  Scalar training_fraction{};    ///< K T_tr / T
  Scalar noise_term{};           ///< G = K sigma^2 / (v alpha), W
};

/// Throws ConfigError naming the first violated invariant.
template <std::floating_point Scalar>
void validate(const SystemConfig<Scalar>& cfg) {
  if (cfg.antennas <= 0 || cfg.users <= 0 || cfg.cells <= 0 || cfg.pilot_reuse <= 0 ||
      cfg.coherence_block <= 0 || cfg.pilot_length <= 0 || cfg.angles <= 0)
    throw ConfigError(ConfigErrc::NonPositiveCount, "M, K, L, L_P, T, T_tr and N must be positive");
  if (cfg.pilot_reuse > cfg.cells)
    throw ConfigError(ConfigErrc::PilotReuseOutOfRange,
                      "L_P=" + std::to_string(cfg.pilot_reuse) + " exceeds L=" +
                          std::to_string(cfg.cells));
  if (static_cast<long>(cfg.users) * cfg.pilot_length >= cfg.coherence_block)
    throw ConfigError(ConfigErrc::TrainingExceedsBlock,
                      "K*T_tr=" + std::to_string(static_cast<long>(cfg.users) * cfg.pilot_length) +
                          " >= T=" + std::to_string(cfg.coherence_block));
  if (cfg.angles > cfg.antennas)
    throw ConfigError(ConfigErrc::BasisTooLarge,
                      "N=" + std::to_string(cfg.angles) + " > M=" + std::to_string(cfg.antennas));
  if (!(cfg.cross_gain > 0) || !(cfg.cross_gain <= 1))
    throw ConfigError(ConfigErrc::ChiOutOfRange, "chi must lie in (0, 1]");
  if (!(cfg.pilot_power > 0) || !(cfg.bs_noise_power > 0) || !(cfg.ue_noise_power > 0))
    throw ConfigError(ConfigErrc::NonPositivePower, "pilot and noise powers must be positive");
  if (!(cfg.channel_gain > 0))
    throw ConfigError(ConfigErrc::NonPositiveGain, "alpha must be positive");
  if (!(cfg.bandwidth > 0))
    throw ConfigError(ConfigErrc::NonPositiveBandwidth, "B must be positive");
}

template <std::floating_point Scalar>
DerivedParams<Scalar> derive_params(const SystemConfig<Scalar>& cfg) {
  validate(cfg);
  DerivedParams<Scalar> dp;
  const Scalar pilot_energy = Scalar(cfg.users) * Scalar(cfg.pilot_length) * cfg.pilot_power;
  if (cfg.perfect_training) {
    dp.training_snr = std::numeric_limits<Scalar>::infinity();
    dp.training_noise = Scalar(0);
  } else {
    dp.training_snr = pilot_energy / cfg.bs_noise_power;
    dp.training_noise = Scalar(1) / (dp.training_snr * cfg.channel_gain);
  }
  const Scalar inv_snr = cfg.perfect_training ? Scalar(0) : cfg.bs_noise_power / pilot_energy;

  dp.correlation = Scalar(cfg.antennas) / Scalar(cfg.angles);
  dp.pilot_load = Scalar(1) + cfg.cross_gain * Scalar(cfg.pilot_reuse - 1);
  dp.interference_load = Scalar(1) + cfg.cross_gain * Scalar(cfg.cells - 1);

  const Scalar signal_scale = cfg.channel_gain * dp.correlation;
  dp.estimation_accuracy = signal_scale / (signal_scale * dp.pilot_load + inv_snr);
  dp.training_fraction =
      Scalar(cfg.users) * Scalar(cfg.pilot_length) / Scalar(cfg.coherence_block);
  dp.noise_term = Scalar(cfg.users) * cfg.ue_noise_power /
                  (dp.estimation_accuracy * cfg.channel_gain);
  return dp;
}

}  // namespace mimoee
