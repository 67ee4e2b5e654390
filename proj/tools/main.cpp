#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mimoee/cli/commands.hpp"

namespace {

using namespace mimoee;
using namespace mimoee::cli;

struct Overrides {
  std::string scenario;
  std::string out;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

Scenario load(const Overrides& o) {
  Scenario sc = load_scenario(o.scenario);
  if (!o.out.empty()) sc.output.path = o.out;
  if (o.format == "csv") sc.output.format = OutputFormat::Csv;
  if (o.format == "json") sc.output.format = OutputFormat::Json;
  if (o.seed) {
    if (!sc.monte_carlo) sc.monte_carlo = MonteCarloSpec{};
    sc.monte_carlo->seed = *o.seed;
  }
  if (o.threads) sc.threads = *o.threads;
  return sc;
}

void emit(const CommandResult& result, const OutputSpec& output) {
  const auto write = [&](std::ostream& os) {
    if (output.format == OutputFormat::Json)
      os << to_json(result.table).dump(2) << '\n';
    else
      write_csv(os, result.table);
  };
  nlohmann::json summary = result.summary;
  if (output.path.empty()) {
    write(std::cout);
  } else {
    std::ofstream file(output.path, std::ios::binary);
    if (!file) throw ScenarioError("/output/path", "cannot write " + output.path);
    write(file);
    summary["output"] = output.path;
  }
  // With the table on stdout the summary goes to stderr to keep stdout parseable.
  (output.path.empty() ? std::cerr : std::cout) << summary.dump(2) << '\n';
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--scenario", o.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output file (default: standard output)");
  cmd->add_option("--format", o.format, "table format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", o.seed, "Monte Carlo seed");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-efficient transmit power for multi-cell massive MIMO downlinks"};
  app.require_subcommand(1);
  Overrides o;
  auto* sweep = app.add_subcommand("sweep", "optimal power and EE along an M, K or P axis");
  auto* curve = app.add_subcommand("ee-curve", "EE against rate over a transmit-power grid");
  auto* check = app.add_subcommand("validate", "closed-form rates against Monte Carlo");
  auto* presets = app.add_subcommand("presets", "list the built-in power presets");
  for (auto* cmd : {sweep, curve, check}) add_common(cmd, o);
  presets->add_option("--out", o.out, "output file (default: standard output)");
  presets->add_option("--format", o.format, "table format")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::Input);
  }

  try {
    if (presets->parsed()) {
      OutputSpec spec;
      spec.path = o.out;
      spec.format = o.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
      emit(list_presets(), spec);
      return 0;
    }
    const Scenario sc = load(o);
    const CommandResult result = sweep->parsed()   ? run_sweep(sc)
                                 : curve->parsed() ? run_ee_curve(sc)
                                                   : run_validate(sc);
    emit(result, sc.output);
    return result.status;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
