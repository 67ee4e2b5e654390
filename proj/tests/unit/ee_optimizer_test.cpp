#include <doctest.h>

#include <numbers>

#include "../support.hpp"

using namespace mimoee;
using mimoee::test::reference_config;
using mimoee::test::reference_power;

namespace {

struct Setup {
  SystemConfig<double> cfg;
  DerivedParams<double> dp;
  RateTerms<double> terms;
  EquivalentPower<double> eq;
};

Setup setup(int antennas, int pilot_reuse, Precoder p, PresetName power = PresetName::GreenTouch2012) {
  Setup s;
  s.cfg = reference_config(antennas, pilot_reuse);
  s.dp = derive_params(s.cfg);
  s.terms = rate_terms(p, s.cfg, s.dp);
  s.eq = reference_power(power, s.cfg, p);
  return s;
}

/// Independent maximizer: dense log grid followed by ternary refinement.
double brute_force_argmax(const Setup& s) {
  const auto ee = [&](double p) { return ee_of_power(s.terms, s.eq, s.cfg, s.dp, p); };
  double best_p = 1e-6, best = -1;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double p = std::pow(10.0, -6 + 12.0 * i / (n - 1));
    if (ee(p) > best) best = ee(p), best_p = p;
  }
  double a = std::log(best_p) - 12 * std::log(10.0) / (n - 1);
  double b = std::log(best_p) + 12 * std::log(10.0) / (n - 1);
  for (int i = 0; i < 200; ++i) {
    const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
    if (ee(std::exp(m1)) < ee(std::exp(m2)))
      a = m1;
    else
      b = m2;
  }
  return std::exp((a + b) / 2);
}

}  // namespace

TEST_CASE("EE at the ends of the power range") {
  const Setup s = setup(128, 7, Precoder::MRT);
  CHECK(ee_of_power(s.terms, s.eq, s.cfg, s.dp, 0.0) == 0.0);
  CHECK(ee_of_power(s.terms, s.eq, s.cfg, s.dp, 1e12) < 1e-6 * ee_of_power(s.terms, s.eq, s.cfg, s.dp, 1.0));
  for (double p : {0.01, 1.0, 50.0})
    CHECK(network_ee(s.terms, s.eq, s.cfg, s.dp, p) ==
          doctest::Approx(ee_of_power(s.terms, s.eq, s.cfg, s.dp, p)).epsilon(1e-14));
}

TEST_CASE("exact optimizer") {
  for (int lp : {1, 7})
    for (int m : {64, 128, 256, 1024})
      for (Precoder p : {Precoder::MRT, Precoder::ZFBF}) {
        CAPTURE(lp);
        CAPTURE(m);
        const Setup s = setup(m, lp, p);
        const OperatingPoint<double> op = optimize_power_exact(s.terms, s.eq, s.cfg, s.dp);
        CHECK(op.method == OptimizationMethod::Exact);
        CHECK(std::abs(kkt_residual(op.power, s.terms, s.eq, s.cfg, s.dp)) < 1e-8);
        const double tau = s.dp.training_fraction;
        CHECK(op.ee == doctest::Approx((1 - tau) * op.rate /
                                       ((1 - tau) * s.eq.amplifier_factor * op.power + m * s.eq.per_antenna_power))
                           .epsilon(1e-14));

        const double oracle = brute_force_argmax(s);
        const double ee_oracle = ee_of_power(s.terms, s.eq, s.cfg, s.dp, oracle);
        CHECK(op.ee >= ee_oracle * (1 - 1e-3));
        CHECK(op.power == doctest::Approx(oracle).epsilon(1e-4));

        for (int i = 0; i < 10000; ++i) {
          const double grid_p = std::pow(10.0, -6 + 12.0 * i / 9999);
          if (ee_of_power(s.terms, s.eq, s.cfg, s.dp, grid_p) > op.ee * (1 + 1e-12)) {
            FAIL("audit grid point beats the optimizer at P=" << grid_p);
            break;
          }
        }
      }
}

TEST_CASE("KKT residual") {
  const Setup s = setup(128, 7, Precoder::ZFBF);
  const double tau = s.dp.training_fraction;
  const double limit = 128 * s.eq.per_antenna_power * s.terms.signal /
                       ((1 - tau) * s.eq.amplifier_factor * s.terms.noise);
  CHECK(kkt_residual(1e-12, s.terms, s.eq, s.cfg, s.dp) == doctest::Approx(limit).epsilon(1e-6));
  const double star = optimize_power_exact(s.terms, s.eq, s.cfg, s.dp).power;
  double prev = kkt_residual(star, s.terms, s.eq, s.cfg, s.dp);
  for (int i = 1; i <= 100; ++i) {
    const double r = kkt_residual(star * std::pow(10.0, 0.05 * i), s.terms, s.eq, s.cfg, s.dp);
    CHECK(r < prev);
    CHECK(r < 0);
    prev = r;
  }
  for (int i = 1; i <= 50; ++i) CHECK(kkt_residual(star * std::pow(10.0, -0.1 * i), s.terms, s.eq, s.cfg, s.dp) > 0);
}

TEST_CASE("optimal power is monotone in its drivers") {
  const auto star = [](auto mutate) {
    Setup s = setup(128, 7, Precoder::MRT);
    mutate(s);
    s.dp = derive_params(s.cfg);
    s.terms = mrt_terms(s.cfg, s.dp);
    return optimize_power_exact(s.terms, s.eq, s.cfg, s.dp).power;
  };
  const double base = star([](Setup&) {});
  CHECK(star([](Setup& s) { s.eq.per_antenna_power *= 2; }) > base);

  double prev = 0;
  for (int m : {64, 128, 256, 512, 1024, 4096}) {
    const double p = star([&](Setup& s) { s.cfg.antennas = m; s.cfg.angles = m / 2; });
    CHECK(p >= prev);
    prev = p;
  }
  // Shorter coherence blocks raise the training fraction without touching the rate terms.
  prev = 0;
  for (int block : {3000, 1500, 500, 100, 40}) {
    const double p = star([&](Setup& s) { s.cfg.coherence_block = block; });
    CHECK(p >= prev);
    prev = p;
  }
  // A more efficient amplifier lowers eta and so raises M P_0 / ((1 - tau) eta).
  prev = 0;
  for (double pa : {0.3, 0.5, 0.6, 0.8}) {
    PowerModel<double> pm;
    pm.amplifier_efficiency = pa;
    pm.dc_loss = 0.06;
    pm.mains_loss = 0.07;
    pm.cooling_loss = 0.09;
    const double p = star([&](Setup& s) { s.eq.amplifier_factor = amplifier_factor(pm); });
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("bracket failure is reported") {
  Setup s = setup(128, 7, Precoder::MRT);
  s.eq.per_antenna_power = 1e20;
  CHECK_THROWS_AS(optimize_power_exact(s.terms, s.eq, s.cfg, s.dp), BracketFailure);
  s.eq.per_antenna_power = 0;
  CHECK_THROWS_AS(optimize_power_exact(s.terms, s.eq, s.cfg, s.dp), DomainError);
}

TEST_CASE("zero circuit power") {
  Setup s = setup(128, 7, Precoder::MRT);
  s.eq.per_antenna_power = 0;
  const double limit = zero_circuit_ee(s.terms, s.eq, s.cfg, s.dp);
  CHECK(ee_of_power(s.terms, s.eq, s.cfg, s.dp, 1e-9) == doctest::Approx(limit).epsilon(1e-3));
  CHECK(ee_of_power(s.terms, s.eq, s.cfg, s.dp, 1e-3) < limit);

  RateTerms<double> doubled = s.terms;
  doubled.signal *= 2;
  CHECK(zero_circuit_ee(doubled, s.eq, s.cfg, s.dp) == doctest::Approx(2 * limit).epsilon(1e-14));

  SystemConfig<double> c = reference_config(128, 1);
  c.perfect_training = true;
  DerivedParams<double> dp = derive_params(c);
  CHECK(dp.noise_term == doctest::Approx(8 * c.ue_noise_power / c.channel_gain).epsilon(1e-14));
  const double before = zero_circuit_ee(mrt_terms(c, dp), s.eq, c, dp);
  c.ue_noise_power /= 2;
  dp = derive_params(c);
  CHECK(zero_circuit_ee(mrt_terms(c, dp), s.eq, c, dp) == doctest::Approx(2 * before).epsilon(1e-14));
}

TEST_CASE("closed-form optimal power") {
  SUBCASE("near-optimal EE for massive arrays") {
    for (PresetName name : {PresetName::GreenTouch2012, PresetName::GreenTouch2020})
      for (Precoder p : {Precoder::MRT, Precoder::ZFBF})
        for (int m : {64, 128, 256}) {
          const Setup s = setup(m, 7, p, name);
          const double exact = optimize_power_exact(s.terms, s.eq, s.cfg, s.dp).ee;
          CHECK(optimize_power_closed_form(s.terms, s.eq, s.cfg, s.dp).ee >= 0.98 * exact);
        }
  }
  SUBCASE("grows like sqrt(M / ln M) without contamination") {
    double prev_err = 1;
    for (int e = 10; e <= 13; ++e) {
      const double m = std::pow(2.0, e);
      const Setup a = setup(int(m), 1, Precoder::MRT), b = setup(int(2 * m), 1, Precoder::MRT);
      const double ratio = approx_optimal_power(b.terms, b.eq, b.cfg, b.dp) /
                           approx_optimal_power(a.terms, a.eq, a.cfg, a.dp);
      const double law = std::sqrt((2 * m / std::log(2 * m)) / (m / std::log(m)));
      const double err = std::abs(ratio / law - 1);
      CHECK(err < 0.03);
      CHECK(err < prev_err);
      prev_err = err;
    }
  }
  SUBCASE("saturates with contamination") {
    const Setup a = setup(1 << 14, 7, Precoder::ZFBF), b = setup(1 << 16, 7, Precoder::ZFBF);
    const double ratio = approx_optimal_power(b.terms, b.eq, b.cfg, b.dp) /
                         approx_optimal_power(a.terms, a.eq, a.cfg, a.dp);
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("no finite optimum without interference") {
    SystemConfig<double> c = reference_config(128, 1);
    c.cells = 1;
    c.perfect_training = true;
    const DerivedParams<double> dp = derive_params(c);
    const Setup s = setup(128, 1, Precoder::ZFBF);
    CHECK(std::isinf(approx_optimal_power(zf_terms(c, dp), s.eq, c, dp)));
  }
}

TEST_CASE("closed-form maximal EE") {
  SUBCASE("self-consistent with the closed-form power") {
    for (Precoder p : {Precoder::MRT, Precoder::ZFBF}) {
      const Setup s = setup(256, 7, p);
      const double at_power = ee_of_power(s.terms, s.eq, s.cfg, s.dp, approx_optimal_power(s.terms, s.eq, s.cfg, s.dp));
      CHECK(approx_max_ee(s.terms, s.eq, s.cfg, s.dp) == doctest::Approx(at_power).epsilon(0.01));
    }
  }
  SUBCASE("halves per doubling of M with contamination") {
    const Setup a = setup(1 << 14, 7, Precoder::MRT), b = setup(1 << 15, 7, Precoder::MRT);
    const double ratio = approx_max_ee(b.terms, b.eq, b.cfg, b.dp) / approx_max_ee(a.terms, a.eq, a.cfg, a.dp);
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.05));
  }
  SUBCASE("tends to log2(M)/M without contamination") {
    // The ratio to the leading-order law approaches one only logarithmically.
    double prev = 0;
    for (int e = 10; e <= 24; e += 2) {
      const Setup s = setup(1 << e, 1, Precoder::MRT);
      const double m = std::pow(2.0, e);
      const double law = (1 - s.dp.training_fraction) * s.cfg.bandwidth * 8 * std::log2(m) /
                         (s.eq.per_antenna_power * m);
      const double ratio = approx_max_ee(s.terms, s.eq, s.cfg, s.dp) / law;
      CHECK(ratio < 1);
      CHECK(ratio > prev);
      prev = ratio;
    }
    CHECK(prev > 0.75);
  }
}

TEST_CASE("rate gap") {
  SUBCASE("vanishes as M grows") {
    double prev = std::numeric_limits<double>::infinity();
    for (int e = 8; e <= 20; e += 2) {
      const Setup s = setup(1 << e, 7, Precoder::MRT);
      const double gap = rate_gap(s.terms, s.eq, s.cfg, s.dp);
      CHECK(gap < prev);
      prev = gap;
    }
    const Setup s = setup(1 << 20, 7, Precoder::MRT);
    CHECK(prev / max_rate(s.terms, s.cfg) < 1e-3);
  }
  SUBCASE("decreases with circuit power") {
    Setup s = setup(256, 7, Precoder::ZFBF);
    double prev = std::numeric_limits<double>::infinity();
    for (double p0 : {0.1, 1.0, 10.0}) {
      s.eq.per_antenna_power = p0;
      const double gap = rate_gap(s.terms, s.eq, s.cfg, s.dp);
      CHECK(gap < prev);
      prev = gap;
    }
  }
  SUBCASE("infinite for interference-free ZFBF") {
    SystemConfig<double> c = reference_config(128, 1);
    c.cells = 1;
    c.perfect_training = true;
    const DerivedParams<double> dp = derive_params(c);
    const Setup s = setup(128, 1, Precoder::ZFBF);
    CHECK_THROWS_AS(rate_gap(zf_terms(c, dp), s.eq, c, dp), InfiniteGap);
  }
}

TEST_CASE("antenna scaling laws") {
  const Setup s = setup(1 << 14, 7, Precoder::ZFBF);
  SUBCASE("contaminated power law is M-independent and matches the closed form") {
    const double law = power_scaling_law(Contamination::Present, s.terms, s.eq, s.cfg, s.dp, 1 << 14);
    CHECK(power_scaling_law(Contamination::Present, s.terms, s.eq, s.cfg, s.dp, 64) == law);
    CHECK(approx_optimal_power(s.terms, s.eq, s.cfg, s.dp) == doctest::Approx(law).epsilon(0.05));
  }
  SUBCASE("uncontaminated power law ratio") {
    const Setup n = setup(1 << 10, 1, Precoder::MRT);
    const double m = 1 << 10;
    const double ratio = power_scaling_law(Contamination::Absent, n.terms, n.eq, n.cfg, n.dp, 4 << 10) /
                         power_scaling_law(Contamination::Absent, n.terms, n.eq, n.cfg, n.dp, 1 << 10);
    CHECK(ratio == doctest::Approx(std::sqrt((4 * m / std::log(4 * m)) / (m / std::log(m)))).epsilon(1e-14));
  }
  SUBCASE("uncontaminated power law approaches the closed form slowly") {
    double prev = std::numeric_limits<double>::infinity();
    for (int e = 10; e <= 22; e += 4) {
      const Setup n = setup(1 << e, 1, Precoder::MRT);
      const double err = std::abs(power_scaling_law(Contamination::Absent, n.terms, n.eq, n.cfg, n.dp, 1 << e) /
                                      approx_optimal_power(n.terms, n.eq, n.cfg, n.dp) -
                                  1);
      CHECK(err < prev);
      prev = err;
    }
  }
  SUBCASE("EE laws decrease in M") {
    for (Contamination regime : {Contamination::Absent, Contamination::Present}) {
      double prev = std::numeric_limits<double>::infinity();
      for (int m = 3; m < 5000; m += 7) {
        const double ee = ee_scaling_law(regime, s.terms, s.eq, s.cfg, s.dp, m);
        CHECK(ee < prev);
        prev = ee;
      }
    }
    const double one = ee_scaling_law(Contamination::Present, s.terms, s.eq, s.cfg, s.dp, 1000);
    CHECK(ee_scaling_law(Contamination::Present, s.terms, s.eq, s.cfg, s.dp, 2000) ==
          doctest::Approx(one / 2).epsilon(1e-15));
  }
  SUBCASE("contaminated EE law matches the closed form") {
    CHECK(ee_scaling_law(Contamination::Present, s.terms, s.eq, s.cfg, s.dp, 1 << 14) ==
          doctest::Approx(approx_max_ee(s.terms, s.eq, s.cfg, s.dp)).epsilon(0.10));
  }
  SUBCASE("contaminated laws require L_P > 1") {
    const Setup n = setup(1 << 10, 1, Precoder::MRT);
    CHECK_THROWS_AS(power_scaling_law(Contamination::Present, n.terms, n.eq, n.cfg, n.dp, 1024), DomainError);
    CHECK_THROWS_AS(ee_scaling_law(Contamination::Present, n.terms, n.eq, n.cfg, n.dp, 1024), DomainError);
  }
}

TEST_CASE("joint user and power search") {
  const SystemConfig<double> base = reference_config(256, 7);
  const PowerCoefficients<double> gt = preset(PresetName::GreenTouch2012).coefficients;
  std::vector<int> users;
  for (int k = 1; k <= 60; ++k) users.push_back(k);
  const auto mrt = joint_user_power_search<double>(base, gt, users, Precoder::MRT);
  const auto zf = joint_user_power_search<double>(base, gt, users, Precoder::ZFBF);
  CHECK(mrt.users >= zf.users);
  CHECK(zf.users > 8);
  for (const auto* r : {&mrt, &zf}) {
    for (const auto& entry : r->table)
      if (entry.point) CHECK(r->point.ee >= entry.point->ee);
  }

  const int single[] = {8};
  const auto one = joint_user_power_search<double>(base, gt, single, Precoder::ZFBF);
  const Setup s = setup(256, 7, Precoder::ZFBF);
  const auto direct = optimize_power_exact(s.terms, s.eq, s.cfg, s.dp);
  CHECK(one.users == 8);
  CHECK(one.point.power == direct.power);
  CHECK(one.point.ee == direct.ee);

  const int infeasible[] = {2000};
  CHECK_THROWS_AS(joint_user_power_search<double>(base, gt, infeasible, Precoder::MRT), ConfigError);
}
