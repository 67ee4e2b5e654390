#pragma once

#include <cmath>
#include <concepts>
#include <limits>

#include "mimoee/error.hpp"
#include "mimoee/system_model.hpp"

namespace mimoee {

/**
 * Deterministic equivalent of regularized zero-forcing with ridge M*phi.
 *
 * The estimated-channel covariance has N eigenvalues v*alpha*rho and M - N
 * zeros, so every normalized trace reduces to a scalar expression:
 *
 *   delta   = (1/M) tr(Phi T),        T   = (K/M Phi / (1 + delta) + phi I)^-1
 *   delta'  = (1/M) tr(Phi T'),       T'  = T (I   + K/M Phi delta'  / (1+delta)^2) T
 *   delta'' = (1/M) tr(Phi T''),      T'' = T (Phi + K/M Phi delta'' / (1+delta)^2) T
 *
 * delta' equals -d(delta)/d(phi). As phi -> 0 the state reproduces the ZFBF
 * deterministic equivalents.
 */
template <std::floating_point Scalar = double>
struct RzfState {
  Scalar phi{};
  Scalar delta{};
  Scalar delta_prime{};
  Scalar delta_dprime{};
  Scalar lambda_bar{};          ///< M^2 (1 + delta)^2 / delta'
  Scalar residual{};            ///< relative fixed-point residual at exit
  long iterations = 0;
};

struct RzfOptions {
  double damping = 0.5;
  double tolerance = 1e-12;
  long max_iterations = 100000;
};

template <std::floating_point Scalar>
RzfState<Scalar> rzf_fixed_point(const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>& dp,
                                 Scalar phi, const RzfOptions& opts = {}) {
  if (!(phi > 0)) throw DomainError("RZF regularization must be positive");
  const Scalar m = Scalar(cfg.antennas);
  const Scalar load = Scalar(cfg.users) / m;
  const Scalar rank_fraction = Scalar(cfg.angles) / m;
  const Scalar eig = dp.estimation_accuracy * cfg.channel_gain * dp.correlation;

  const auto resolvent = [&](Scalar delta) {
    return Scalar(1) / (load * eig / (Scalar(1) + delta) + phi);
  };
  const auto map = [&](Scalar delta) { return rank_fraction * eig * resolvent(delta); };

  const Scalar damping = Scalar(opts.damping);
  Scalar delta = rank_fraction * eig / phi;
  Scalar residual = std::numeric_limits<Scalar>::infinity();
  long it = 0;
  for (; it < opts.max_iterations; ++it) {
    const Scalar next = map(delta);
    residual = std::abs(next - delta) / std::abs(next);
    delta = (Scalar(1) - damping) * next + damping * delta;
    if (residual < Scalar(opts.tolerance)) break;
  }
  if (!(residual < Scalar(opts.tolerance))) throw NonConvergence(double(residual), it);

  const Scalar t = resolvent(delta);
  const Scalar one_plus = Scalar(1) + delta;
  const Scalar base = rank_fraction * eig * t * t;
  const Scalar denom = Scalar(1) - base * load * eig / (one_plus * one_plus);

  RzfState<Scalar> s;
  s.phi = phi;
  s.delta = delta;
  s.delta_prime = base / denom;
  s.delta_dprime = base * eig / denom;
  s.lambda_bar = m * m * one_plus * one_plus / s.delta_prime;
  s.residual = residual;
  s.iterations = it + 1;
  return s;
}

/// Per-interferer normalized powers of the RZF SINR; multiply by M / (v alpha)
/// to compare with the ZFBF closed-form terms.
template <std::floating_point Scalar = double>
struct RzfSinrTerms {
  Scalar signal{};
  Scalar coherent{};        ///< one co-pilot cell, same user index
  Scalar intra_cell{};      ///< one other user of the serving cell
  Scalar copilot_other{};   ///< one other user of a co-pilot cell
  Scalar non_copilot{};     ///< one user of a cell with a different pilot set
};

template <std::floating_point Scalar>
RzfSinrTerms<Scalar> rzf_sinr_terms(const RzfState<Scalar>& s, const SystemConfig<Scalar>& cfg,
                                    const DerivedParams<Scalar>& dp) {
  const Scalar m = Scalar(cfg.antennas);
  const Scalar v = dp.estimation_accuracy;
  const Scalar chi = cfg.cross_gain;
  const Scalar d = s.delta;
  const Scalar tail = Scalar(1) / ((Scalar(1) + d) * (Scalar(1) + d));
  const Scalar ratio = s.delta_dprime / (m * s.delta_prime);
  RzfSinrTerms<Scalar> r;
  r.signal = (m * d * d + (Scalar(1) / v - 1) * s.delta_dprime) / (m * s.delta_prime);
  r.coherent =
      (m * chi * chi * d * d + (Scalar(1) / v - chi) * chi * s.delta_dprime) / (m * s.delta_prime);
  r.intra_cell = ratio * (Scalar(1) / v - 1 + tail);
  r.copilot_other = ratio * (chi / v - chi * chi + chi * chi * tail);
  r.non_copilot = ratio * chi / v;
  return r;
}

/// Assembled deterministic-equivalent SINR of RZF at transmit power P.
template <std::floating_point Scalar>
Scalar rzf_sinr(const RzfState<Scalar>& s, const SystemConfig<Scalar>& cfg,
                const DerivedParams<Scalar>& dp, Scalar transmit_power) {
  const RzfSinrTerms<Scalar> r = rzf_sinr_terms(s, cfg, dp);
  const Scalar k = Scalar(cfg.users);
  const Scalar copilot = Scalar(cfg.pilot_reuse - 1);
  const Scalar others = Scalar(cfg.cells - cfg.pilot_reuse);
  const Scalar interference = copilot * r.coherent + (k - 1) * r.intra_cell +
                              copilot * (k - 1) * r.copilot_other + others * k * r.non_copilot;
  const Scalar noise = k * cfg.ue_noise_power / (Scalar(cfg.antennas) * transmit_power);
  return r.signal / (interference + noise);
}

}  // namespace mimoee
