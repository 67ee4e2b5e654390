#include "mimoee/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "mimoee/mimoee.hpp"

namespace mimoee::cli {

using nlohmann::json;

namespace {

struct PointResult {
  std::vector<Cell> row;
  std::string skipped;  ///< reason when the point produced no row
};

struct OptimalPoint {
  OperatingPoint<double> exact;
  OperatingPoint<double> approx;
  double max_rate = 0;
  double gap = 0;
};

OptimalPoint optimal_point(const RateTerms<double>& t, const EquivalentPower<double>& eq,
                           const SystemConfig<double>& cfg, const DerivedParams<double>& dp) {
  OptimalPoint out;
  out.exact = optimize_power_exact(t, eq, cfg, dp);
  out.approx = optimize_power_closed_form(t, eq, cfg, dp);
  out.max_rate = max_rate(t, cfg);
  try {
    out.gap = rate_gap(t, eq, cfg, dp);
  } catch (const InfiniteGap&) {
    out.gap = std::numeric_limits<double>::infinity();
  }
  return out;
}

mc::McOptions mc_options(const MonteCarloSpec& spec, int threads) {
  return {spec.samples, spec.seed, threads};
}

PointResult sweep_point(const Scenario& sc, Precoder precoder, double axis_value) {
  PointResult result;
  SystemConfig<double> cfg = sc.system;
  const SweepAxis axis = sc.sweep ? sc.sweep->axis : SweepAxis::Antennas;
  if (axis == SweepAxis::Antennas) cfg = sc.with_antennas(int(axis_value));
  if (axis == SweepAxis::Users) cfg.users = int(axis_value);
  const DerivedParams<double> dp = derive_params(cfg);
  const EquivalentPower<double> eq = equivalent_power(sc.coefficients, cfg.users, precoder);
  RateTerms<double> t;
  OptimalPoint op;
  try {
    t = rate_terms(precoder, cfg, dp);
    op = optimal_point(t, eq, cfg, dp);
  } catch (const NonPositiveTerm& e) {
    result.skipped = e.what();
    return result;
  } catch (const BracketFailure& e) {
    result.skipped = e.what();
    return result;
  }

  auto& row = result.row;
  row.emplace_back(std::string(to_string(precoder)));
  if (axis == SweepAxis::Power)
    row.emplace_back(axis_value);
  else
    row.emplace_back(static_cast<long long>(axis_value));
  row.insert(row.end(), {Cell(op.exact.power), Cell(op.approx.power), Cell(op.exact.ee),
                         Cell(op.approx.ee), Cell(op.exact.rate), Cell(op.max_rate), Cell(op.gap)});
  const double mc_power = axis == SweepAxis::Power ? axis_value : op.exact.power;
  if (axis == SweepAxis::Power) {
    row.emplace_back(asymptotic_rate(t, cfg, axis_value));
    row.emplace_back(ee_of_power(t, eq, cfg, dp, axis_value));
  }
  if (sc.monte_carlo) {
    const auto mc = mc::empirical_rate(cfg, dp, mc_power, precoder, mc_options(*sc.monte_carlo, 1));
    row.emplace_back(mc.rate);
    row.emplace_back(mc.ci95);
  }
  return result;
}

}  // namespace

CommandResult run_sweep(const Scenario& sc) {
  const SweepAxis axis = sc.sweep ? sc.sweep->axis : SweepAxis::Antennas;
  const std::vector<double> values =
      sc.sweep ? sc.sweep->values : std::vector<double>{double(sc.system.antennas)};

  CommandResult out;
  out.table.columns = {"precoder",      axis_name(axis), "P_star_exact", "P_star_approx",
                       "EE_star_exact", "EE_star_approx", "R_star",      "R_max",
                       "rate_gap"};
  if (axis == SweepAxis::Power) out.table.columns.insert(out.table.columns.end(), {"rate", "EE"});
  if (sc.monte_carlo) out.table.columns.insert(out.table.columns.end(), {"mc_rate", "mc_ci"});

  const std::size_t np = sc.precoders.size();
  std::vector<PointResult> results(np * values.size());
  parallel_for(results.size(), sc.threads, [&](std::size_t i) {
    results[i] = sweep_point(sc, sc.precoders[i / values.size()], values[i % values.size()]);
  });

  json skipped = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].skipped.empty()) {
      skipped.push_back({{"precoder", to_string(sc.precoders[i / values.size()])},
                         {axis_name(axis), axis == SweepAxis::Power ? json(values[i % values.size()])
                                                            : json(static_cast<long long>(values[i % values.size()]))},
                         {"reason", results[i].skipped}});
      continue;
    }
    out.table.rows.push_back(std::move(results[i].row));
  }

  out.summary = {{"command", "sweep"},
                 {"axis", axis_name(axis)},
                 {"power", sc.power_label},
                 {"rows", out.table.rows.size()},
                 {"skipped", skipped}};
  if (axis == SweepAxis::Users) {
    std::vector<int> users(values.begin(), values.end());
    json best = json::object();
    for (Precoder p : sc.precoders) {
      const auto joint = joint_user_power_search<double>(sc.system, sc.coefficients, users, p);
      best[to_string(p)] = {{"K_star", joint.users},
                            {"P_star", joint.point.power},
                            {"EE_star", joint.point.ee},
                            {"R_star", joint.point.rate}};
    }
    out.summary["K_star"] = best;
  }
  return out;
}

namespace {

struct CurveRow {
  std::string series;
  double power;
  double rate;
  double ee;
  std::string marker;
};

std::vector<double> default_power_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 300; ++i) grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 300.0));
  return grid;
}

}  // namespace

CommandResult run_ee_curve(const Scenario& sc) {
  if (sc.sweep && sc.sweep->axis != SweepAxis::Power)
    throw ScenarioError("/sweep", "ee-curve needs a P grid or no sweep");
  const std::vector<double> grid = sc.sweep ? sc.sweep->values : default_power_grid();
  const SystemConfig<double>& cfg = sc.system;
  const DerivedParams<double> dp = derive_params(cfg);

  std::vector<CurveRow> rows;
  json optimum = json::object();
  for (Precoder p : sc.precoders) {
    const RateTerms<double> t = rate_terms(p, cfg, dp);
    const EquivalentPower<double> eq = equivalent_power(sc.coefficients, cfg.users, p);
    const std::string series = to_string(p);
    std::vector<CurveRow> curve;
    for (double power : grid)
      curve.push_back({series, power, asymptotic_rate(t, cfg, power), ee_of_power(t, eq, cfg, dp, power), ""});
    const auto exact = optimize_power_exact(t, eq, cfg, dp);
    const auto approx = optimize_power_closed_form(t, eq, cfg, dp);
    curve.push_back({series, exact.power, exact.rate, exact.ee, "ee_max"});
    curve.push_back({series, approx.power, approx.rate, approx.ee, "ee_max_approx"});
    if (sc.max_power)
      curve.push_back({series, *sc.max_power, asymptotic_rate(t, cfg, *sc.max_power),
                       ee_of_power(t, eq, cfg, dp, *sc.max_power), "p_max"});
    std::stable_sort(curve.begin(), curve.end(),
                     [](const CurveRow& a, const CurveRow& b) { return a.power < b.power; });
    rows.insert(rows.end(), curve.begin(), curve.end());
    optimum[series] = {{"P_star", exact.power},
                       {"EE_star", exact.ee},
                       {"R_star", exact.rate},
                       {"R_max", max_rate(t, cfg)}};
  }

  // Conventional BSs: i.i.d. channels, ZFBF at the rated maximum power, rate by Monte Carlo.
  json comparison = json::object();
  const MonteCarloSpec mc_spec = sc.monte_carlo.value_or(MonteCarloSpec{});
  for (PresetName name : sc.comparison_presets) {
    const PowerPreset pp = preset(name);
    SystemConfig<double> lte = cfg;
    lte.antennas = pp.antennas.value_or(cfg.antennas);
    lte.angles = lte.antennas;
    lte.users = pp.users.value_or(cfg.users);
    if (pp.path_loss) lte.channel_gain = pp.path_loss->gain_at_edge();
    const double power = pp.max_power.value_or(sc.max_power.value_or(1.0));
    const DerivedParams<double> ldp = derive_params(lte);
    const EquivalentPower<double> eq = with_feeder_loss(
        equivalent_power(pp.coefficients, lte.users, Precoder::ZFBF), pp.feeder_loss_db);
    const auto mc = mc::empirical_rate(lte, ldp, power, Precoder::ZFBF, mc_options(mc_spec, sc.threads));
    const double ee = (1 - ldp.training_fraction) * mc.rate /
                      bs_power(eq, lte, ldp.training_fraction, power);
    rows.push_back({to_string(name), power, mc.rate, ee, "preset"});
    json entry = {{"P", power}, {"rate", mc.rate}, {"rate_ci95", mc.ci95}, {"EE", ee}};
    for (auto it = optimum.begin(); it != optimum.end(); ++it)
      entry["EE_gain_" + it.key()] = it.value()["EE_star"].get<double>() / ee;
    comparison[to_string(name)] = entry;
  }

  CommandResult out;
  out.table.columns = {"series", "P", "rate", "EE", "marker"};
  for (const auto& r : rows) out.table.rows.push_back({r.series, r.power, r.rate, r.ee, r.marker});
  out.summary = {{"command", "ee-curve"},
                 {"power", sc.power_label},
                 {"rows", out.table.rows.size()},
                 {"optimum", optimum}};
  if (!comparison.empty()) out.summary["presets"] = comparison;
  return out;
}

CommandResult run_validate(const Scenario& sc) {
  if (!sc.monte_carlo) throw ScenarioError("/monte_carlo", "validate needs Monte Carlo settings");
  if (sc.sweep && sc.sweep->axis != SweepAxis::Antennas)
    throw ScenarioError("/sweep", "validate sweeps M only");
  const std::vector<double> antennas =
      sc.sweep ? sc.sweep->values : std::vector<double>{double(sc.system.antennas)};
  std::vector<int> reuse = sc.validation.pilot_reuse;
  if (reuse.empty()) {
    reuse.push_back(1);
    if (sc.system.cells > 1) reuse.push_back(sc.system.cells);
  }
  const double threshold = sc.validation.threshold;
  const double power = sc.validation.transmit_power;

  CommandResult out;
  out.table.columns = {"M",        "precoder",  "L_P",     "asymptotic_rate", "mc_rate",
                       "mc_ci95",  "rel_error", "wide_ci", "status",          "singular"};
  int passed = 0, failed = 0, inconclusive = 0;
  for (double m : antennas)
    for (Precoder p : sc.precoders)
      for (int lp : reuse) {
        SystemConfig<double> cfg = sc.with_antennas(int(m));
        cfg.pilot_reuse = lp;
        const DerivedParams<double> dp = derive_params(cfg);
        const double asym = asymptotic_rate(rate_terms(p, cfg, dp), cfg, power);
        const auto mc = mc::empirical_rate(cfg, dp, power, p, mc_options(*sc.monte_carlo, sc.threads));
        const double rel = std::abs(mc.rate - asym) / asym;
        const double rel_ci = mc.ci95 / asym;
        // A row only fails when the whole confidence interval lies outside the band.
        std::string status = "pass";
        if (!(rel <= threshold)) status = rel - rel_ci <= threshold ? "inconclusive" : "fail";
        const bool wide = rel_ci > threshold / 4;
        (status == "pass" ? passed : status == "fail" ? failed : inconclusive)++;
        out.table.rows.push_back({static_cast<long long>(m), std::string(to_string(p)),
                                  static_cast<long long>(lp), asym, mc.rate, mc.ci95, rel,
                                  std::string(wide ? "yes" : "no"), status,
                                  static_cast<long long>(mc.singular)});
      }
  out.summary = {{"command", "validate"},
                 {"threshold", threshold},
                 {"samples", sc.monte_carlo->samples},
                 {"seed", sc.monte_carlo->seed},
                 {"passed", passed},
                 {"failed", failed},
                 {"inconclusive", inconclusive}};
  out.status = failed > 0 ? 1 : 0;
  return out;
}

CommandResult list_presets() {
  CommandResult out;
  out.table.columns = {"name", "eta", "P_c", "P_sp", "M", "K", "P_max", "feeder_loss_dB", "alpha_edge"};
  const auto opt_int = [](const std::optional<int>& v) -> Cell {
    return v ? Cell(static_cast<long long>(*v)) : Cell(std::string());
  };
  const auto opt_real = [](const std::optional<double>& v) -> Cell {
    return v ? Cell(*v) : Cell(std::string());
  };
  for (PresetName name : all_presets) {
    const PowerPreset p = preset(name);
    out.table.rows.push_back(
        {std::string(to_string(name)), p.coefficients.amplifier_factor, p.coefficients.circuit_power,
         p.coefficients.beamforming_power, opt_int(p.antennas), opt_int(p.users),
         opt_real(p.max_power), p.feeder_loss_db,
         p.path_loss ? Cell(p.path_loss->gain_at_edge()) : Cell(std::string())});
  }
  out.summary = {{"command", "presets"}, {"rows", out.table.rows.size()}};
  return out;
}

}  // namespace mimoee::cli
