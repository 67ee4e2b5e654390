#pragma once

#include <cmath>
#include <concepts>
#include <limits>

#include "mimoee/error.hpp"
#include "mimoee/power_model.hpp"
#include "mimoee/system_model.hpp"

namespace mimoee {

/**
 * Deterministic-equivalent decomposition of one user's SINR.
 *
 * Signal and interference powers are normalized by v*alpha, so that
 * SINR(P) = signal / (coherent + other + noise / P).
 */
template <std::floating_point Scalar = double>
struct RateTerms {
  Scalar signal{};                 ///< S
  Scalar coherent_interference{};  ///< I_P, inter-cell interference from pilot reuse
  Scalar other_interference{};     ///< I_nP, multi-user plus non-coherent inter-cell
  Scalar noise{};                  ///< G = K sigma^2 / (v alpha), W
  Precoder precoder = Precoder::MRT;

  Scalar interference() const { return coherent_interference + other_interference; }
};

template <std::floating_point Scalar>
RateTerms<Scalar> mrt_terms(const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>& dp) {
  const Scalar m = Scalar(cfg.antennas);
  const Scalar k = Scalar(cfg.users);
  const Scalar rho = dp.correlation;
  RateTerms<Scalar> t;
  t.precoder = Precoder::MRT;
  t.signal = m + dp.training_noise + (dp.pilot_load - 1) * rho;
  t.coherent_interference = cfg.cross_gain * (dp.pilot_load - 1) * (m - rho);
  t.other_interference =
      (k * dp.interference_load - 1) * (rho * dp.pilot_load + dp.training_noise);
  t.noise = dp.noise_term;
  return t;
}

/// Throws NonPositiveTerm when M is too small relative to rho*K for the limit to apply.
template <std::floating_point Scalar>
RateTerms<Scalar> zf_terms(const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>& dp) {
  const Scalar m = Scalar(cfg.antennas);
  const Scalar k = Scalar(cfg.users);
  const Scalar rho = dp.correlation;
  RateTerms<Scalar> t;
  t.precoder = Precoder::ZFBF;
  t.signal = m + dp.training_noise + (dp.pilot_load - 1 - k) * rho;
  t.coherent_interference = cfg.cross_gain * (dp.pilot_load - 1) * (m - 2 * rho * k);
  t.other_interference =
      (k * dp.interference_load - 1) * (rho * dp.pilot_load + dp.training_noise) -
      rho * (k - 1);
  t.noise = dp.noise_term;
  if (!(t.signal > 0))
    throw NonPositiveTerm("ZFBF signal term " + std::to_string(double(t.signal)) +
                          " at M=" + std::to_string(cfg.antennas));
  if (t.coherent_interference < 0)
    throw NonPositiveTerm("ZFBF coherent interference term " +
                          std::to_string(double(t.coherent_interference)) +
                          " at M=" + std::to_string(cfg.antennas));
  if (t.other_interference < 0)
    throw NonPositiveTerm("ZFBF multi-user interference term " +
                          std::to_string(double(t.other_interference)));
  return t;
}

template <std::floating_point Scalar>
RateTerms<Scalar> rate_terms(Precoder precoder, const SystemConfig<Scalar>& cfg,
                             const DerivedParams<Scalar>& dp) {
  return precoder == Precoder::MRT ? mrt_terms(cfg, dp) : zf_terms(cfg, dp);
}

/// Per-user SINR at transmit power P; P = +inf gives the interference-limited value.
template <std::floating_point Scalar>
Scalar sinr(const RateTerms<Scalar>& t, Scalar transmit_power) {
  if (transmit_power < 0) throw DomainError("transmit power must be non-negative");
  if (transmit_power == 0) return Scalar(0);
  if (std::isinf(transmit_power)) {
    const Scalar i = t.interference();
    return i > 0 ? t.signal / i : std::numeric_limits<Scalar>::infinity();
  }
  return t.signal / (t.interference() + t.noise / transmit_power);
}

/// B K log2(1 + SINR), bits/s per BS.
template <std::floating_point Scalar>
Scalar asymptotic_rate(const RateTerms<Scalar>& t, const SystemConfig<Scalar>& cfg,
                       Scalar transmit_power) {
  return cfg.bandwidth * Scalar(cfg.users) * std::log2(Scalar(1) + sinr(t, transmit_power));
}

/// Rate as P -> inf; +inf only for interference-free ZFBF.
template <std::floating_point Scalar>
Scalar max_rate(const RateTerms<Scalar>& t, const SystemConfig<Scalar>& cfg) {
  return asymptotic_rate(t, cfg, std::numeric_limits<Scalar>::infinity());
}

template <std::floating_point Scalar = double>
struct RateLimits {
  Scalar gap_no_pc{};        ///< B K log2(1 + (I_nP^M - I_nP^Z)/(I_nP^Z + G/P)), bits/s
  Scalar slope_mrt{};        ///< d(I_P + I_nP)/dM for MRT
  Scalar slope_zf{};         ///< same for ZFBF
  Scalar leading_slope{};    ///< chi (Lbar_P - 1)
  bool identical_with_pc = false;
};

/**
 * Large-M comparison of MRT and ZFBF.
 *
 * Without pilot contamination the ZFBF advantage tends to a constant rate
 * gap; with contamination both interference sums grow like chi (Lbar_P - 1) M,
 * so the two rates coincide in the limit.
 */
template <std::floating_point Scalar>
RateLimits<Scalar> rate_limit_terms(const RateTerms<Scalar>& t_mrt, const RateTerms<Scalar>& t_zf,
                                    const SystemConfig<Scalar>& cfg,
                                    const DerivedParams<Scalar>& dp, Scalar transmit_power) {
  RateLimits<Scalar> out;
  const Scalar noise = std::isinf(transmit_power) ? Scalar(0) : t_zf.noise / transmit_power;
  out.gap_no_pc = cfg.bandwidth * Scalar(cfg.users) *
                  std::log2(Scalar(1) + (t_mrt.other_interference - t_zf.other_interference) /
                                            (t_zf.other_interference + noise));

  // Interference sums are affine in M; recover the slope from two evaluations.
  SystemConfig<Scalar> far = cfg;
  far.antennas = cfg.antennas * 2;
  far.angles = cfg.angles * 2;
  const DerivedParams<Scalar> dp_far = derive_params(far);
  const RateTerms<Scalar> mrt_far = mrt_terms(far, dp_far);
  const RateTerms<Scalar> zf_far = zf_terms(far, dp_far);
  const Scalar dm = Scalar(far.antennas - cfg.antennas);
  out.slope_mrt = (mrt_far.interference() - t_mrt.interference()) / dm;
  out.slope_zf = (zf_far.interference() - t_zf.interference()) / dm;
  out.leading_slope = cfg.cross_gain * (dp.pilot_load - 1);
  const Scalar tol = Scalar(1e-9) * std::max(Scalar(1), std::abs(out.leading_slope));
  out.identical_with_pc = out.leading_slope > 0 &&
                          std::abs(out.slope_mrt - out.leading_slope) <= tol &&
                          std::abs(out.slope_zf - out.leading_slope) <= tol;
  return out;
}

}  // namespace mimoee
