#include <doctest.h>

#include <complex>

#include "../support.hpp"

using namespace mimoee;
using mimoee::test::normalized_config;
using mimoee::test::reference_config;

namespace {

SystemConfig<double> perfect_config(int antennas, int pilot_reuse) {
  SystemConfig<double> c = reference_config(antennas, pilot_reuse);
  c.perfect_training = true;
  return c;
}

SystemConfig<double> single_cell(int antennas, int users) {
  SystemConfig<double> c = reference_config(antennas, 1);
  c.cells = 1;
  c.users = users;
  c.angles = antennas;
  c.perfect_training = true;
  return c;
}

}  // namespace

TEST_CASE("MRT terms by hand") {
  const SystemConfig<double> c = perfect_config(128, 7);
  const RateTerms<double> t = mrt_terms(c, derive_params(c));
  CHECK(t.signal == doctest::Approx(129.2).epsilon(1e-14));
  CHECK(t.coherent_interference == doctest::Approx(7.56).epsilon(1e-14));
  CHECK(t.other_interference == doctest::Approx(37.76).epsilon(1e-14));
  CHECK(t.noise == doctest::Approx(8 * c.ue_noise_power * 1.6 / c.channel_gain).epsilon(1e-14));

  const SystemConfig<double> no_pc = perfect_config(128, 1);
  CHECK(mrt_terms(no_pc, derive_params(no_pc)).coherent_interference == 0.0);

  const SystemConfig<double> sc = single_cell(100, 10);
  const RateTerms<double> s = mrt_terms(sc, derive_params(sc));
  CHECK(s.signal == 100.0);
  CHECK(s.coherent_interference == 0.0);
  CHECK(s.other_interference == 9.0);
}

TEST_CASE("ZFBF terms by hand") {
  const SystemConfig<double> c = perfect_config(128, 7);
  const RateTerms<double> t = zf_terms(c, derive_params(c));
  CHECK(t.signal == doctest::Approx(113.2).epsilon(1e-14));
  CHECK(t.coherent_interference == doctest::Approx(5.76).epsilon(1e-13));
  CHECK(t.other_interference == doctest::Approx(23.76).epsilon(1e-13));

  const SystemConfig<double> sc = single_cell(100, 10);
  const RateTerms<double> s = zf_terms(sc, derive_params(sc));
  CHECK(s.coherent_interference == 0.0);
  CHECK(s.other_interference == 0.0);
}

TEST_CASE("ZFBF closed form outside its validity region") {
  SystemConfig<double> c = reference_config(16, 7);
  c.angles = 8;
  CHECK_THROWS_AS(zf_terms(c, derive_params(c)), NonPositiveTerm);
  c = reference_config(32, 1);
  CHECK_NOTHROW(zf_terms(c, derive_params(c)));
  CHECK_NOTHROW(mrt_terms(c, derive_params(c)));
}

TEST_CASE("MRT terms dominate ZFBF terms on random configurations") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    const SystemConfig<double> c = mimoee::test::random_config(rng);
    const DerivedParams<double> dp = derive_params(c);
    const RateTerms<double> m = mrt_terms(c, dp), z = zf_terms(c, dp);
    CHECK(m.signal > z.signal);
    CHECK(m.coherent_interference >= z.coherent_interference);
    if (c.pilot_reuse > 1) CHECK(m.coherent_interference > z.coherent_interference);
    CHECK(m.other_interference > z.other_interference);
    CHECK((m.coherent_interference == 0) == (c.pilot_reuse == 1));
  }
}

TEST_CASE("rate is increasing and concave in P") {
  for (int lp : {1, 7}) {
    const SystemConfig<double> c = reference_config(128, lp);
    const DerivedParams<double> dp = derive_params(c);
    for (Precoder p : {Precoder::MRT, Precoder::ZFBF}) {
      const RateTerms<double> t = rate_terms(p, c, dp);
      double prev_rate = 0, prev_slope = std::numeric_limits<double>::infinity();
      for (int i = 1; i <= 200; ++i) {
        const double power = 0.05 * i;
        const double r = asymptotic_rate(t, c, power);
        const double slope = (r - prev_rate) / 0.05;
        CHECK(r > prev_rate);
        if (i > 1) CHECK(slope < prev_slope);
        prev_rate = r;
        prev_slope = slope;
      }
    }
  }
}

TEST_CASE("rate limits in P") {
  const SystemConfig<double> c = reference_config(128, 7);
  const DerivedParams<double> dp = derive_params(c);
  const RateTerms<double> t = mrt_terms(c, dp);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(asymptotic_rate(t, c, 0.0) == 0.0);
  CHECK(asymptotic_rate(t, c, 1e-30) < 1e-10);
  CHECK(asymptotic_rate(t, c, inf) ==
        doctest::Approx(c.bandwidth * 8 * std::log2(1 + t.signal / t.interference())));
  CHECK(asymptotic_rate(t, c, 1e12) == doctest::Approx(max_rate(t, c)).epsilon(1e-9));
  CHECK_THROWS_AS(asymptotic_rate(t, c, -1.0), DomainError);

  const SystemConfig<double> sc = single_cell(100, 10);
  const RateTerms<double> s = mrt_terms(sc, derive_params(sc));
  CHECK(max_rate(s, sc) == doctest::Approx(sc.bandwidth * 10 * std::log2(1 + 100.0 / 9)));
}

TEST_CASE("MRT-ZFBF rate comparison") {
  SUBCASE("without contamination ZFBF keeps a positive gap") {
    const SystemConfig<double> c = reference_config(256, 1);
    const DerivedParams<double> dp = derive_params(c);
    for (double p : {0.01, 1.0, 100.0}) {
      const auto lim = rate_limit_terms(mrt_terms(c, dp), zf_terms(c, dp), c, dp, p);
      CHECK(lim.gap_no_pc > 0);
      CHECK_FALSE(lim.identical_with_pc);
    }
  }
  SUBCASE("with contamination the rates coincide at very large M") {
    const SystemConfig<double> c = reference_config(1 << 20, 7);
    const DerivedParams<double> dp = derive_params(c);
    const RateTerms<double> m = mrt_terms(c, dp), z = zf_terms(c, dp);
    const auto lim = rate_limit_terms(m, z, c, dp, 1.0);
    CHECK(lim.identical_with_pc);
    CHECK(lim.leading_slope == doctest::Approx(0.06));
    const double rm = asymptotic_rate(m, c, 1.0), rz = asymptotic_rate(z, c, 1.0);
    CHECK(std::abs(rz - rm) / rz < 0.005);
  }
  SUBCASE("single cell with perfect CSI") {
    const SystemConfig<double> c = single_cell(128, 8);
    const DerivedParams<double> dp = derive_params(c);
    CHECK(std::isinf(max_rate(zf_terms(c, dp), c)));
    CHECK(std::isfinite(max_rate(mrt_terms(c, dp), c)));
    CHECK(asymptotic_rate(zf_terms(c, dp), c, 1e6) > asymptotic_rate(zf_terms(c, dp), c, 1e3));
  }
}

// ---------------------------------------------------------------------------
// Regularized zero-forcing fixed point.

namespace {

using CMat = Eigen::MatrixXcd;

/// Brute-force matrix evaluation of delta, delta', delta'' for an explicit
/// covariance with a random orthonormal basis.
struct MatrixTraces {
  double delta, delta_prime, delta_dprime;
};

MatrixTraces matrix_traces(const SystemConfig<double>& c, const DerivedParams<double>& dp, double phi) {
  const int m = c.antennas;
  const CMat basis = mc::gen_basis<double>(m, c.angles, 99);
  const CMat cov = dp.estimation_accuracy * c.channel_gain * dp.correlation * basis * basis.adjoint();
  const CMat eye = CMat::Identity(m, m);
  const double load = double(c.users) / m;
  const auto resolvent = [&](double d) { return CMat((load * cov / (1 + d) + phi * eye).inverse()); };
  double d = 1;
  for (int i = 0; i < 2000; ++i) d = 0.5 * d + 0.5 * (cov * resolvent(d)).trace().real() / m;
  const CMat t = resolvent(d);
  const double w = load / ((1 + d) * (1 + d));
  double d1 = 0, d2 = 0;
  for (int i = 0; i < 500; ++i) {
    d1 = (cov * t * (eye + w * d1 * cov) * t).trace().real() / m;
    d2 = (cov * t * (cov + w * d2 * cov) * t).trace().real() / m;
  }
  return {d, d1, d2};
}

}  // namespace

TEST_CASE("scalar fixed point agrees with brute-force matrix traces") {
  SystemConfig<double> c = normalized_config(32, 7);
  c.angles = 16;
  c.users = 4;
  const DerivedParams<double> dp = derive_params(c);
  for (double phi : {1.0, 0.1, 0.01}) {
    const RzfState<double> s = rzf_fixed_point(c, dp, phi);
    const MatrixTraces ref = matrix_traces(c, dp, phi);
    CHECK(s.delta == doctest::Approx(ref.delta).epsilon(1e-9));
    CHECK(s.delta_prime == doctest::Approx(ref.delta_prime).epsilon(1e-9));
    CHECK(s.delta_dprime == doctest::Approx(ref.delta_dprime).epsilon(1e-9));
    CHECK(s.residual < 1e-12);
    CHECK(s.delta > 0);
  }
}

TEST_CASE("delta' is minus the derivative of delta in phi") {
  const SystemConfig<double> c = normalized_config(128, 7);
  const DerivedParams<double> dp = derive_params(c);
  for (double phi : {1e-2, 1e-1, 1.0}) {
    const double h = phi * 1e-5;
    const double fd = -(rzf_fixed_point(c, dp, phi + h).delta - rzf_fixed_point(c, dp, phi - h).delta) / (2 * h);
    CHECK(rzf_fixed_point(c, dp, phi).delta_prime == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("small regularization reproduces ZFBF") {
  for (int lp : {1, 7}) {
    const SystemConfig<double> c = normalized_config(128, lp);
    const DerivedParams<double> dp = derive_params(c);
    const RzfState<double> s = rzf_fixed_point(c, dp, 1e-8);
    const double v_alpha = dp.estimation_accuracy * c.channel_gain;
    const double delta0 = v_alpha * (128.0 - 2.0 * 8) / 128.0;
    CHECK(s.lambda_bar / (128.0 * 128.0) == doctest::Approx(delta0).epsilon(1e-4));
    CHECK(s.phi * s.phi * s.delta_dprime ==
          doctest::Approx(v_alpha * dp.correlation * delta0).epsilon(1e-4));
    const RateTerms<double> z = zf_terms(c, dp);
    for (double p : {0.1, 1.0, 10.0})
      CHECK(rzf_sinr(s, c, dp, p) == doctest::Approx(sinr(z, p)).epsilon(1e-4));
  }
}

TEST_CASE("large regularization reproduces MRT") {
  const SystemConfig<double> c = normalized_config(128, 7);
  const DerivedParams<double> dp = derive_params(c);
  const RzfState<double> s = rzf_fixed_point(c, dp, 1e7);
  const RateTerms<double> m = mrt_terms(c, dp);
  for (double p : {0.1, 1.0, 10.0})
    CHECK(rzf_sinr(s, c, dp, p) == doctest::Approx(sinr(m, p)).epsilon(1e-4));
}

TEST_CASE("fixed point reports non-convergence") {
  const SystemConfig<double> c = normalized_config(128, 7);
  const DerivedParams<double> dp = derive_params(c);
  RzfOptions opts;
  opts.max_iterations = 2;
  CHECK_THROWS_AS(rzf_fixed_point(c, dp, 1e-3, opts), NonConvergence);
  CHECK_THROWS_AS(rzf_fixed_point(c, dp, 0.0), DomainError);
}
