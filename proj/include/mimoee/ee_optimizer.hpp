#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "mimoee/asymptotic_rates.hpp"
#include "mimoee/error.hpp"
#include "mimoee/power_model.hpp"
#include "mimoee/system_model.hpp"

namespace mimoee {

enum class OptimizationMethod { Exact, ClosedForm, ZeroCircuit };

template <std::floating_point Scalar = double>
struct OperatingPoint {
  Scalar power{};  ///< P*, W
  Scalar ee{};     ///< bit/J
  Scalar rate{};   ///< per-BS rate at P*, bits/s
  OptimizationMethod method = OptimizationMethod::Exact;
};

/// Downlink EE at transmit power P, bit/J.
template <std::floating_point Scalar>
Scalar ee_of_power(const RateTerms<Scalar>& t, const EquivalentPower<Scalar>& eq,
                   const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>& dp,
                   Scalar transmit_power) {
  const Scalar useful = Scalar(1) - dp.training_fraction;
  return useful * asymptotic_rate(t, cfg, transmit_power) /
         bs_power(eq, cfg, dp.training_fraction, transmit_power);
}

/// Network-wide EE over L identical cells: sum of cell rates over L BS powers.
template <std::floating_point Scalar>
Scalar network_ee(const RateTerms<Scalar>& t, const EquivalentPower<Scalar>& eq,
                  const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>& dp,
                  Scalar transmit_power) {
  const Scalar useful = Scalar(1) - dp.training_fraction;
  Scalar sum_rate = 0;
  for (int cell = 0; cell < cfg.cells; ++cell) sum_rate += asymptotic_rate(t, cfg, transmit_power);
  return useful * sum_rate /
         (Scalar(cfg.cells) * bs_power(eq, cfg, dp.training_fraction, transmit_power));
}

/// M P_0 / ((1 - tau) eta), the circuit power expressed in transmit-power units.
template <std::floating_point Scalar>
Scalar circuit_equivalent(const EquivalentPower<Scalar>& eq, const SystemConfig<Scalar>& cfg,
                          const DerivedParams<Scalar>& dp) {
  return Scalar(cfg.antennas) * eq.per_antenna_power /
         ((Scalar(1) - dp.training_fraction) * eq.amplifier_factor);
}

/// First-order optimality residual; positive below P*, negative above.
template <std::floating_point Scalar>
Scalar kkt_residual(Scalar transmit_power, const RateTerms<Scalar>& t,
                    const EquivalentPower<Scalar>& eq, const SystemConfig<Scalar>& cfg,
                    const DerivedParams<Scalar>& dp) {
  const Scalar p = transmit_power;
  const Scalar s = t.signal;
  const Scalar i = t.interference();
  const Scalar g = t.noise;
  return (p + circuit_equivalent(eq, cfg, dp)) * s * g / (((s + i) * p + g) * (i * p + g)) -
         std::log1p(s * p / (i * p + g));
}

struct ExactSearchOptions {
  double lower = 1e-6;          ///< W
  double upper = 1e6;           ///< W
  double relative_tolerance = 1e-10;
  int max_iterations = 400;
};

namespace detail {

/// Golden-section maximization of EE over log-power.
template <std::floating_point Scalar, class Objective>
Scalar golden_section_log(Objective&& ee, Scalar lo, Scalar hi, Scalar rel_tol, int max_it) {
  const Scalar inv_phi = (std::sqrt(Scalar(5)) - 1) / 2;
  Scalar a = std::log(lo), b = std::log(hi);
  Scalar c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  Scalar fc = ee(std::exp(c)), fd = ee(std::exp(d));
  for (int it = 0; it < max_it && (b - a) > rel_tol; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - inv_phi * (b - a);
      fc = ee(std::exp(c));
    } else {
      a = c; c = d; fc = fd;
      d = a + inv_phi * (b - a);
      fd = ee(std::exp(d));
    }
  }
  return std::exp((a + b) / 2);
}

}  // namespace detail

/**
 * Global EE maximizer over P >= 0.
 *
 * EE(P) is pseudoconcave, so the KKT residual changes sign exactly once;
 * bisection on its sign over log-power brackets the root. If the residual
 * becomes non-finite the search falls back to golden-section on EE itself.
 */
template <std::floating_point Scalar>
OperatingPoint<Scalar> optimize_power_exact(const RateTerms<Scalar>& t,
                                            const EquivalentPower<Scalar>& eq,
                                            const SystemConfig<Scalar>& cfg,
                                            const DerivedParams<Scalar>& dp,
                                            const ExactSearchOptions& opts = {}) {
  if (!(Scalar(cfg.antennas) * eq.per_antenna_power > 0))
    throw DomainError("exact optimizer requires M*P_0 > 0; use zero_circuit_ee");
  const auto residual = [&](Scalar p) { return kkt_residual(p, t, eq, cfg, dp); };
  const auto objective = [&](Scalar p) { return ee_of_power(t, eq, cfg, dp, p); };

  Scalar lo = Scalar(opts.lower), hi = Scalar(opts.upper);
  const Scalar r_lo = residual(lo), r_hi = residual(hi);
  if (!(r_lo > 0) || !(r_hi < 0))
    throw BracketFailure("KKT residual has no sign change on [" + std::to_string(opts.lower) +
                         ", " + std::to_string(opts.upper) + "] W (" + std::to_string(r_lo) +
                         ", " + std::to_string(r_hi) + ")");

  Scalar log_lo = std::log(lo), log_hi = std::log(hi);
  bool ill_conditioned = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (log_hi - log_lo <= Scalar(opts.relative_tolerance)) break;
    const Scalar mid = (log_lo + log_hi) / 2;
    const Scalar r = residual(std::exp(mid));
    if (!std::isfinite(r)) {
      ill_conditioned = true;
      break;
    }
    if (r > 0)
      log_lo = mid;
    else
      log_hi = mid;
  }

  OperatingPoint<Scalar> op;
  op.method = OptimizationMethod::Exact;
  op.power = ill_conditioned
                 ? detail::golden_section_log<Scalar>(objective, std::exp(log_lo), std::exp(log_hi),
                                                      Scalar(opts.relative_tolerance),
                                                      opts.max_iterations)
                 : std::exp((log_lo + log_hi) / 2);
  op.rate = asymptotic_rate(t, cfg, op.power);
  op.ee = objective(op.power);
  return op;
}

/// Maximal EE when M P_0 = 0, reached as P -> 0.
template <std::floating_point Scalar>
Scalar zero_circuit_ee(const RateTerms<Scalar>& t, const EquivalentPower<Scalar>& eq,
                       const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>&) {
  return cfg.bandwidth * Scalar(cfg.users) * std::numbers::log2e_v<Scalar> /
         eq.amplifier_factor * t.signal / t.noise;
}

/// Closed-form P* for large M (main-text form, alpha in the denominator).
template <std::floating_point Scalar>
Scalar approx_optimal_power(const RateTerms<Scalar>& t, const EquivalentPower<Scalar>& eq,
                            const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>& dp) {
  const Scalar s = t.signal;
  const Scalar i = t.interference();
  if (!(i > 0)) return std::numeric_limits<Scalar>::infinity();
  const Scalar useful = Scalar(1) - dp.training_fraction;
  const Scalar noise_scale = Scalar(cfg.users) * cfg.ue_noise_power *
                             (dp.training_noise / dp.correlation + dp.pilot_load);
  const Scalar scale = std::sqrt(Scalar(cfg.antennas) * eq.per_antenna_power * noise_scale /
                                 (useful * eq.amplifier_factor * cfg.channel_gain));
  return scale * std::sqrt((Scalar(1) / i - Scalar(1) / (s + i)) / std::log1p(s / i));
}

template <std::floating_point Scalar>
OperatingPoint<Scalar> optimize_power_closed_form(const RateTerms<Scalar>& t,
                                                  const EquivalentPower<Scalar>& eq,
                                                  const SystemConfig<Scalar>& cfg,
                                                  const DerivedParams<Scalar>& dp) {
  OperatingPoint<Scalar> op;
  op.method = OptimizationMethod::ClosedForm;
  op.power = approx_optimal_power(t, eq, cfg, dp);
  op.rate = asymptotic_rate(t, cfg, op.power);
  op.ee = ee_of_power(t, eq, cfg, dp, op.power);
  return op;
}

/**
 * Closed-form maximal EE
 *
 *   EE* ~ (1 - tau) B K / P_0 * log2(1 + S / (I + c / f)) / (M + c f)
 *
 * with f = sqrt((M/I - M/(S+I)) / ln(1 + S/I)) and
 * c = sqrt((1 - tau) eta K sigma^2 (1/(rho gamma alpha) + Lbar_P) / (alpha P_0)),
 * i.e. the EE evaluated at approx_optimal_power.
 */
template <std::floating_point Scalar>
Scalar approx_max_ee(const RateTerms<Scalar>& t, const EquivalentPower<Scalar>& eq,
                     const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>& dp) {
  const Scalar m = Scalar(cfg.antennas);
  const Scalar s = t.signal;
  const Scalar i = t.interference();
  const Scalar useful = Scalar(1) - dp.training_fraction;
  const Scalar p0 = eq.per_antenna_power;
  const Scalar c = std::sqrt(useful * eq.amplifier_factor * Scalar(cfg.users) * cfg.ue_noise_power *
                             (dp.training_noise / dp.correlation + dp.pilot_load) /
                             (cfg.channel_gain * p0));
  const Scalar f = std::sqrt((m / i - m / (s + i)) / std::log1p(s / i));
  return useful * cfg.bandwidth * Scalar(cfg.users) / p0 *
         std::log2(Scalar(1) + s / (i + c / f)) / (m + c * f);
}

/// Gap between the rate at P -> inf and the rate at the closed-form P*, bits/s.
template <std::floating_point Scalar>
Scalar rate_gap(const RateTerms<Scalar>& t, const EquivalentPower<Scalar>& eq,
                const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>& dp) {
  const Scalar s = t.signal;
  const Scalar i = t.interference();
  if (!(i > 0)) throw InfiniteGap();
  const Scalar useful = Scalar(1) - dp.training_fraction;
  const Scalar ratio = useful * eq.amplifier_factor * Scalar(cfg.users) * cfg.ue_noise_power /
                       (eq.per_antenna_power * dp.estimation_accuracy * cfg.channel_gain) *
                       (Scalar(1) / s + Scalar(1) / i) * std::log1p(s / i) /
                       Scalar(cfg.antennas);
  return cfg.bandwidth * Scalar(cfg.users) * std::log2(Scalar(1) + std::sqrt(ratio));
}

enum class Contamination { Absent, Present };

/// Leading-order P*(M) from the antenna-scaling table.
template <std::floating_point Scalar>
Scalar power_scaling_law(Contamination regime, const RateTerms<Scalar>& t,
                         const EquivalentPower<Scalar>& eq, const SystemConfig<Scalar>& cfg,
                         const DerivedParams<Scalar>& dp, int antennas) {
  const Scalar useful = Scalar(1) - dp.training_fraction;
  const Scalar base = eq.per_antenna_power * Scalar(cfg.users) * cfg.ue_noise_power *
                      (dp.training_noise / dp.correlation + dp.pilot_load) /
                      (useful * eq.amplifier_factor * cfg.channel_gain);
  if (regime == Contamination::Absent) {
    const Scalar m = Scalar(antennas);
    return std::sqrt(base / t.other_interference * m / std::log(m));
  }
  const Scalar x = cfg.cross_gain * (dp.pilot_load - 1);
  if (!(x > 0)) throw DomainError("contaminated scaling law requires L_P > 1");
  return std::sqrt(base * (Scalar(1) / x - Scalar(1) / (Scalar(1) + x)) /
                   std::log1p(Scalar(1) / x));
}

/// Leading-order EE*(M) from the antenna-scaling table.
template <std::floating_point Scalar>
Scalar ee_scaling_law(Contamination regime, const RateTerms<Scalar>&,
                      const EquivalentPower<Scalar>& eq, const SystemConfig<Scalar>& cfg,
                      const DerivedParams<Scalar>& dp, int antennas) {
  const Scalar m = Scalar(antennas);
  const Scalar prefactor = (Scalar(1) - dp.training_fraction) * cfg.bandwidth *
                           Scalar(cfg.users) / eq.per_antenna_power;
  if (regime == Contamination::Absent) return prefactor * std::log2(m) / m;
  const Scalar x = cfg.cross_gain * (dp.pilot_load - 1);
  if (!(x > 0)) throw DomainError("contaminated scaling law requires L_P > 1");
  return prefactor * std::log2(Scalar(1) + Scalar(1) / x) / m;
}

template <std::floating_point Scalar = double>
struct UserSearchEntry {
  int users = 0;
  std::optional<OperatingPoint<Scalar>> point;  ///< empty when infeasible for this K
};

template <std::floating_point Scalar = double>
struct JointSearchResult {
  int users = 0;  ///< K*
  OperatingPoint<Scalar> point;
  std::vector<UserSearchEntry<Scalar>> table;
};

/**
 * Grid search over K with the exact power optimizer at each K.
 *
 * P_0, tau, the training SNR and the rate terms are all rebuilt per K.
 * Values of K that violate the configuration invariants or leave the ZFBF
 * validity region are skipped. Ties resolve toward the smaller K.
 */
template <std::floating_point Scalar>
JointSearchResult<Scalar> joint_user_power_search(const SystemConfig<Scalar>& base,
                                                  const PowerCoefficients<Scalar>& coeffs,
                                                  std::span<const int> user_range,
                                                  Precoder precoder) {
  JointSearchResult<Scalar> out;
  bool found = false;
  for (int k : user_range) {
    UserSearchEntry<Scalar> entry{k, {}};
    SystemConfig<Scalar> cfg = base;
    cfg.users = k;
    try {
      const DerivedParams<Scalar> dp = derive_params(cfg);
      const RateTerms<Scalar> t = rate_terms(precoder, cfg, dp);
      const EquivalentPower<Scalar> eq = equivalent_power(coeffs, k, precoder);
      entry.point = optimize_power_exact(t, eq, cfg, dp);
    } catch (const ConfigError&) {
    } catch (const NonPositiveTerm&) {
    }
    if (entry.point && (!found || entry.point->ee > out.point.ee)) {
      out.users = k;
      out.point = *entry.point;
      found = true;
    }
    out.table.push_back(entry);
  }
  if (!found) throw ConfigError(ConfigErrc::EmptyUserRange, "no feasible K in the search range");
  return out;
}

}  // namespace mimoee
