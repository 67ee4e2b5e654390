#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mimoee/error.hpp"
#include "mimoee/power_model.hpp"
#include "mimoee/system_model.hpp"

namespace mimoee::cli {

/// Malformed scenario text; `field` is a JSON pointer, `line` is 1-based or 0 if unknown.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string field, const std::string& detail, int line = 0)
      : Error(ErrorCategory::Input, format(field, detail, line)), field_(std::move(field)), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& detail, int line) {
    std::string out = "ScenarioError";
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (!field.empty()) out += " at " + field;
    return out + ": " + detail;
  }

  std::string field_;
  int line_;
};

enum class SweepAxis { Antennas, Users, Power };

const char* axis_name(SweepAxis axis);

struct Sweep {
  SweepAxis axis = SweepAxis::Antennas;
  std::vector<double> values;  ///< ascending; integral for M and K
};

struct MonteCarloSpec {
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
};

struct ValidationSpec {
  std::vector<int> pilot_reuse;  ///< L_P settings to compare; empty means {1, L}
  double threshold = 0.05;       ///< relative-error pass threshold
  double transmit_power = 1.0;   ///< W
};

enum class OutputFormat { Csv, Json };

struct OutputSpec {
  std::string path;  ///< empty writes the table to standard output
  OutputFormat format = OutputFormat::Csv;
};

/// A fully resolved run description: SI units, presets expanded.
struct Scenario {
  SystemConfig<double> system;
  double correlation = 1.0;  ///< rho, kept fixed when M is swept
  PowerCoefficients<double> coefficients;
  std::string power_label;
  std::vector<Precoder> precoders{Precoder::MRT, Precoder::ZFBF};
  std::optional<Sweep> sweep;
  std::optional<MonteCarloSpec> monte_carlo;
  ValidationSpec validation;
  std::vector<PresetName> comparison_presets;
  std::optional<double> max_power;  ///< W, marked on EE-rate curves
  OutputSpec output;
  int threads = 1;

  /// System configuration with M (and N = M / rho) replaced.
  SystemConfig<double> with_antennas(int antennas) const;
};

/// Parses scenario JSON text. Relative-unit strings such as "-174 dBm/Hz" are
/// converted to SI using the scenario bandwidth.
Scenario parse_scenario(std::string_view text);

Scenario load_scenario(const std::filesystem::path& path);

/// Quantity kinds accepted by parse_quantity.
enum class Quantity { Power, Gain, Frequency, Dimensionless };

/// Converts "<number> <unit>" text to SI. `bandwidth` resolves per-Hz densities.
double parse_quantity(std::string_view text, Quantity kind, double bandwidth,
                      const std::string& field);

}  // namespace mimoee::cli
