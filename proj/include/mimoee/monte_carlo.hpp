#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mimoee/error.hpp"
#include "mimoee/parallel.hpp"
#include "mimoee/power_model.hpp"
#include "mimoee/system_model.hpp"

/// Link-level Monte Carlo oracle for the closed-form rates.
///
/// All channels of the symmetric model live in the column span of one shared
/// M x N basis, so realizations are stored as N-dimensional coordinates; the
/// M-dimensional vectors are recovered as basis * coordinates. Inner products,
/// norms and the zero-forcing pseudo-inverse are invariant under that map.
namespace mimoee::mc {

template <std::floating_point Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <std::floating_point Scalar>
using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <std::floating_point Scalar>
using RVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Independent generator for stream `stream` of sub-index `index` under `seed`.
inline std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t index, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    stream};
  return std::mt19937_64(seq);
}

/// i.i.d. CN(0, variance) entries, real and imaginary parts each of variance/2.
template <std::floating_point Scalar, class Rng>
CMatrix<Scalar> complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                 Scalar variance = Scalar(1)) {
  std::normal_distribution<Scalar> normal(Scalar(0), std::sqrt(variance / Scalar(2)));
  CMatrix<Scalar> out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Scalar re = normal(rng);
      const Scalar im = normal(rng);
      out(r, c) = {re, im};
    }
  return out;
}

/// First N columns of a random unitary matrix (thin QR of an M x N Gaussian).
template <std::floating_point Scalar = double>
CMatrix<Scalar> gen_basis(int antennas, int angles, std::uint64_t seed) {
  if (angles <= 0 || antennas <= 0)
    throw ConfigError(ConfigErrc::NonPositiveCount, "basis dimensions must be positive");
  if (angles > antennas)
    throw ConfigError(ConfigErrc::BasisTooLarge,
                      "N=" + std::to_string(angles) + " > M=" + std::to_string(antennas));
  auto rng = derived_rng(seed, 0, 0xB45);
  const CMatrix<Scalar> gaussian = complex_gaussian<Scalar>(antennas, angles, rng);
  Eigen::HouseholderQR<CMatrix<Scalar>> qr(gaussian);
  return qr.householderQ() * CMatrix<Scalar>::Identity(antennas, angles);
}

/// Pilot-sharing groups are consecutive blocks of L_P cells.
template <std::floating_point Scalar>
bool shares_pilots(const SystemConfig<Scalar>& cfg, int a, int b) {
  return a / cfg.pilot_reuse == b / cfg.pilot_reuse;
}

/// One small-scale fading realization.
template <std::floating_point Scalar = double>
struct ChannelRealization {
  int cells = 0;
  std::uint64_t index = 0;
  /// links[bs * L + cell]: N x K coordinates of the channels from BS `bs` to the users of `cell`.
  std::vector<CMatrix<Scalar>> links;
  /// training_noise[bs]: N x K coordinates of the projected pilot noise at BS `bs`.
  std::vector<CMatrix<Scalar>> training_noise;

  const CMatrix<Scalar>& link(int bs, int cell) const { return links[bs * cells + cell]; }
};

/// Random-access sequence of channel realizations; realization i depends only
/// on (seed, i), so any partition across threads gives identical samples.
template <std::floating_point Scalar = double>
class ChannelBatch {
 public:
  ChannelBatch(const SystemConfig<Scalar>& cfg, std::shared_ptr<const CMatrix<Scalar>> basis,
               std::size_t count, std::uint64_t seed)
      : cfg_(cfg), basis_(std::move(basis)), count_(count), seed_(seed) {
    validate(cfg_);
    if (cfg_.cells % cfg_.pilot_reuse != 0)
      throw ConfigError(ConfigErrc::PilotGroupsUneven,
                        "Monte Carlo needs L divisible by L_P (L=" + std::to_string(cfg_.cells) +
                            ", L_P=" + std::to_string(cfg_.pilot_reuse) + ")");
    if (basis_->rows() != cfg_.antennas || basis_->cols() != cfg_.angles)
      throw ConfigError(ConfigErrc::BasisTooLarge, "basis shape does not match M x N");
  }

  std::size_t size() const { return count_; }
  std::uint64_t seed() const { return seed_; }
  const CMatrix<Scalar>& basis() const { return *basis_; }
  const SystemConfig<Scalar>& config() const { return cfg_; }

  ChannelRealization<Scalar> operator[](std::size_t index) const {
    auto rng = derived_rng(seed_, index, 0xC4A);
    const int l_count = cfg_.cells;
    const Scalar rho = Scalar(cfg_.antennas) / Scalar(cfg_.angles);
    ChannelRealization<Scalar> r;
    r.cells = l_count;
    r.index = index;
    r.links.reserve(static_cast<std::size_t>(l_count) * l_count);
    for (int bs = 0; bs < l_count; ++bs)
      for (int cell = 0; cell < l_count; ++cell) {
        const Scalar gain = cfg_.channel_gain * (bs == cell ? Scalar(1) : cfg_.cross_gain) * rho;
        r.links.push_back(complex_gaussian<Scalar>(cfg_.angles, cfg_.users, rng, gain));
      }
    r.training_noise.reserve(l_count);
    for (int bs = 0; bs < l_count; ++bs)
      r.training_noise.push_back(
          complex_gaussian<Scalar>(cfg_.angles, cfg_.users, rng, cfg_.bs_noise_power));
    return r;
  }

  /// h_{bs,cell,user} as an M-vector.
  CVector<Scalar> channel(const ChannelRealization<Scalar>& r, int bs, int cell, int user) const {
    return *basis_ * r.link(bs, cell).col(user);
  }

 private:
  SystemConfig<Scalar> cfg_;
  std::shared_ptr<const CMatrix<Scalar>> basis_;
  std::size_t count_;
  std::uint64_t seed_;
};

template <std::floating_point Scalar>
ChannelBatch<Scalar> sample_channels(const SystemConfig<Scalar>& cfg,
                                     const DerivedParams<Scalar>&,
                                     std::shared_ptr<const CMatrix<Scalar>> basis,
                                     std::size_t count, std::uint64_t seed) {
  return ChannelBatch<Scalar>(cfg, std::move(basis), count, seed);
}

/// MMSE estimates of every BS's own users, N x K coordinates per cell.
template <std::floating_point Scalar = double>
struct ChannelEstimates {
  std::vector<CMatrix<Scalar>> own;

  /// Estimation error of cell `cell` (true minus estimate), coordinates.
  CMatrix<Scalar> error(const ChannelRealization<Scalar>& r, int cell) const {
    return r.link(cell, cell) - own[cell];
  }
};

/**
 * The estimate of h_jjk is R_jj Q y with y the pilot observation summed over
 * co-pilot cells. With a shared projector basis R_jj Q = v R R^H, so in basis
 * coordinates the estimate is v times the observation.
 */
template <std::floating_point Scalar>
ChannelEstimates<Scalar> mmse_estimate(const ChannelRealization<Scalar>& r,
                                       const SystemConfig<Scalar>& cfg,
                                       const DerivedParams<Scalar>& dp) {
  const Scalar noise_scale =
      cfg.perfect_training
          ? Scalar(0)
          : Scalar(1) / std::sqrt(Scalar(cfg.users) * Scalar(cfg.pilot_length) * cfg.pilot_power);
  ChannelEstimates<Scalar> est;
  est.own.reserve(cfg.cells);
  for (int bs = 0; bs < cfg.cells; ++bs) {
    CMatrix<Scalar> observation = r.training_noise[bs] * noise_scale;
    for (int cell = 0; cell < cfg.cells; ++cell)
      if (shares_pilots(cfg, bs, cell)) observation += r.link(bs, cell);
    est.own.push_back(dp.estimation_accuracy * observation);
  }
  return est;
}

/// Per-cell beamforming vectors (unnormalized) and their normalizers 1/||w||^2.
template <std::floating_point Scalar = double>
struct Beamformer {
  Precoder kind = Precoder::MRT;
  std::vector<CMatrix<Scalar>> beams;
  std::vector<RVector<Scalar>> normalizers;

  /// Unit-norm beams of one cell.
  CMatrix<Scalar> unit_beams(int cell) const {
    return beams[cell] * normalizers[cell].cwiseSqrt().asDiagonal();
  }
};

/// MRT uses the estimates; ZFBF uses H (H^H H)^-1. Throws SingularEstimate on rank loss.
template <std::floating_point Scalar>
Beamformer<Scalar> precode(const ChannelEstimates<Scalar>& est, Precoder kind) {
  Beamformer<Scalar> bf;
  bf.kind = kind;
  bf.beams.reserve(est.own.size());
  for (std::size_t cell = 0; cell < est.own.size(); ++cell) {
    const CMatrix<Scalar>& h = est.own[cell];
    if (kind == Precoder::MRT) {
      bf.beams.push_back(h);
    } else {
      Eigen::ColPivHouseholderQR<CMatrix<Scalar>> qr(h);
      if (qr.rank() < h.cols()) throw SingularEstimate(static_cast<int>(cell));
      const CMatrix<Scalar> gram = h.adjoint() * h;
      bf.beams.push_back(h * gram.llt().solve(CMatrix<Scalar>::Identity(h.cols(), h.cols())));
    }
    bf.normalizers.push_back(bf.beams.back().colwise().squaredNorm().cwiseInverse().transpose());
  }
  return bf;
}

/// Received powers of one user, split as in the SINR definition.
template <std::floating_point Scalar = double>
struct UserPowers {
  Scalar signal{};
  Scalar coherent{};  ///< same pilot index in co-pilot cells
  Scalar other{};     ///< multi-user and non-coherent inter-cell
};

/// Powers seen by every user of `cell` for unit total transmit power per user stream.
template <std::floating_point Scalar>
std::vector<UserPowers<Scalar>> user_powers(const ChannelRealization<Scalar>& r,
                                            const Beamformer<Scalar>& bf,
                                            const SystemConfig<Scalar>& cfg, int cell = 0) {
  std::vector<UserPowers<Scalar>> out(cfg.users);
  for (int bs = 0; bs < cfg.cells; ++bs) {
    // gains(k, m) = |h_{bs,cell,k}^H w_{bs,m}|^2 with unit-norm beams.
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gains =
        (r.link(bs, cell).adjoint() * bf.unit_beams(bs)).cwiseAbs2();
    const bool copilot = shares_pilots(cfg, bs, cell);
    for (int k = 0; k < cfg.users; ++k) {
      const Scalar row = gains.row(k).sum();
      const Scalar same = gains(k, k);
      if (bs == cell) {
        out[k].signal += same;
        out[k].other += row - same;
      } else if (copilot) {
        out[k].coherent += same;
        out[k].other += row - same;
      } else {
        out[k].other += row;
      }
    }
  }
  return out;
}

template <std::floating_point Scalar>
Scalar sum_rate(std::span<const UserPowers<Scalar>> users, const SystemConfig<Scalar>& cfg,
                Scalar transmit_power) {
  const Scalar noise = Scalar(cfg.users) * cfg.ue_noise_power / transmit_power;
  Scalar rate = 0;
  for (const auto& u : users) rate += std::log2(Scalar(1) + u.signal / (u.coherent + u.other + noise));
  return cfg.bandwidth * rate;
}

template <std::floating_point Scalar = double>
struct EmpiricalRate {
  Scalar rate{};        ///< mean per-BS sum rate, bits/s
  Scalar ci95{};        ///< half-width of the 95% confidence interval, bits/s
  std::size_t samples = 0;
  std::size_t singular = 0;  ///< realizations skipped for rank-deficient ZFBF
};

struct McOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  int threads = 1;
};

/**
 * Monte Carlo per-BS rate of cell 0 at each transmit power in `powers`.
 *
 * One realization feeds every power, so curves over P are smooth. Per-sample
 * results are reduced in index order, making the estimate independent of the
 * thread count.
 */
template <std::floating_point Scalar>
std::vector<EmpiricalRate<Scalar>> empirical_rates(const SystemConfig<Scalar>& cfg,
                                                   const DerivedParams<Scalar>& dp,
                                                   std::span<const Scalar> powers, Precoder kind,
                                                   const McOptions& opts) {
  if (opts.samples < 2) throw DomainError("Monte Carlo needs at least two samples");
  for (Scalar p : powers)
    if (!(p > 0)) throw DomainError("transmit power must be positive");
  auto basis = std::make_shared<const CMatrix<Scalar>>(
      gen_basis<Scalar>(cfg.antennas, cfg.angles, opts.seed));
  const ChannelBatch<Scalar> batch = sample_channels(cfg, dp, basis, opts.samples, opts.seed);

  const std::size_t np = powers.size();
  std::vector<Scalar> per_sample(opts.samples * np, Scalar(0));
  std::vector<char> skipped(opts.samples, 0);
  parallel_for(opts.samples, opts.threads, [&](std::size_t i) {
    const ChannelRealization<Scalar> r = batch[i];
    const ChannelEstimates<Scalar> est = mmse_estimate(r, cfg, dp);
    Beamformer<Scalar> bf;
    try {
      bf = precode(est, kind);
    } catch (const SingularEstimate&) {
      skipped[i] = 1;
      return;
    }
    const auto users = user_powers(r, bf, cfg);
    for (std::size_t p = 0; p < np; ++p)
      per_sample[i * np + p] = sum_rate<Scalar>(users, cfg, powers[p]);
  });

  std::vector<EmpiricalRate<Scalar>> out(np);
  std::size_t used = 0;
  for (char s : skipped) used += s ? 0 : 1;
  for (std::size_t p = 0; p < np; ++p) {
    Scalar sum = 0, sum_sq = 0;
    for (std::size_t i = 0; i < opts.samples; ++i) {
      if (skipped[i]) continue;
      const Scalar x = per_sample[i * np + p];
      sum += x;
      sum_sq += x * x;
    }
    EmpiricalRate<Scalar>& e = out[p];
    e.samples = used;
    e.singular = opts.samples - used;
    if (used == 0) {
      e.rate = e.ci95 = std::numeric_limits<Scalar>::quiet_NaN();
      continue;
    }
    const Scalar n = Scalar(used);
    e.rate = sum / n;
    const Scalar var = used > 1 ? std::max(Scalar(0), (sum_sq - n * e.rate * e.rate) / (n - 1)) : Scalar(0);
    e.ci95 = Scalar(1.959963984540054) * std::sqrt(var / n);
  }
  return out;
}

template <std::floating_point Scalar>
EmpiricalRate<Scalar> empirical_rate(const SystemConfig<Scalar>& cfg, const DerivedParams<Scalar>& dp,
                                     Scalar transmit_power, Precoder kind, const McOptions& opts) {
  const Scalar powers[] = {transmit_power};
  return empirical_rates<Scalar>(cfg, dp, powers, kind, opts).front();
}

}  // namespace mimoee::mc
