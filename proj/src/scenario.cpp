#include "mimoee/cli/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mimoee::cli {

using nlohmann::json;

const char* axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Antennas: return "M";
    case SweepAxis::Users: return "K";
    case SweepAxis::Power: return "P";
  }
  return "";
}

SystemConfig<double> Scenario::with_antennas(int antennas) const {
  SystemConfig<double> cfg = system;
  cfg.antennas = antennas;
  const double angles = antennas / correlation;
  if (std::abs(angles - std::round(angles)) > 1e-9 * angles || angles < 1)
    throw ConfigError(ConfigErrc::BasisTooLarge, "M=" + std::to_string(antennas) +
                                                     " is not a multiple of rho=" +
                                                     std::to_string(correlation));
  cfg.angles = static_cast<int>(std::lround(angles));
  return cfg;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Walks a JSON object, remembering which keys were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) fail(key, "missing required field");
    return node_.at(key);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return path_ + "/" + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& detail) const {
    throw ScenarioError(key.empty() ? (path_.empty() ? "/" : path_) : field(key), detail);
  }

  int integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  std::optional<int> optional_integer(const std::string& key) {
    return has(key) ? std::optional<int>(integer(key)) : std::nullopt;
  }

  double quantity(const std::string& key, Quantity kind, double bandwidth = 0) {
    return to_quantity(at(key), kind, bandwidth, field(key));
  }

  static double to_quantity(const json& v, Quantity kind, double bandwidth, const std::string& field) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_quantity(v.get<std::string>(), kind, bandwidth, field);
    throw ScenarioError(field, "expected a number or a \"<value> <unit>\" string");
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(key, "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  void reject_unknown() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.contains(it.key())) throw ScenarioError(field(it.key()), "unknown field");
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

double parse_alpha(const json& v, const std::string& field) {
  if (v.is_object()) {
    Reader r(v, field);
    const double intercept = r.quantity("intercept_exponent", Quantity::Dimensionless);
    const double exponent = r.quantity("path_exponent", Quantity::Dimensionless);
    const double distance = r.quantity("distance", Quantity::Dimensionless);
    r.reject_unknown();
    if (!(distance > 0)) r.fail("distance", "must be positive");
    return PathLoss{intercept, exponent, distance}.gain_at_edge();
  }
  return Reader::to_quantity(v, Quantity::Gain, 0, field);
}

void parse_power(Scenario& sc, const json& v, const std::string& field) {
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    try {
      const PowerPreset p = preset(name);
      sc.coefficients = p.coefficients;
      sc.power_label = name;
    } catch (const ConfigError& e) {
      throw ScenarioError(field, std::string("unknown power preset \"") + name + "\"");
    }
    return;
  }
  Reader r(v, field);
  if (const json* model = r.find("model")) {
    Reader m(*model, r.field("model"));
    PowerModel<double> pm;
    pm.amplifier_efficiency = m.quantity("eta_PA", Quantity::Dimensionless);
    pm.dc_loss = m.quantity("sigma_DC", Quantity::Dimensionless);
    pm.mains_loss = m.quantity("sigma_MS", Quantity::Dimensionless);
    pm.cooling_loss = m.quantity("sigma_cool", Quantity::Dimensionless);
    pm.rf_power = m.quantity("P_RF", Quantity::Power);
    pm.baseband_dl_power = m.quantity("P_BB1d", Quantity::Power);
    pm.baseband_ul_power = m.has("P_BB1u") ? m.quantity("P_BB1u", Quantity::Power) : pm.baseband_dl_power;
    pm.flops_per_antenna_user = m.has("R_flops0") ? m.quantity("R_flops0", Quantity::Dimensionless) : 0;
    pm.computing_efficiency = m.has("eta_C") ? m.quantity("eta_C", Quantity::Dimensionless) : 0;
    m.reject_unknown();
    r.reject_unknown();
    validate(pm);
    const double supply = supply_factor(pm);
    sc.coefficients = {amplifier_factor(pm), (pm.rf_power + pm.baseband_dl_power) / supply,
                       flop_power(pm) / supply};
    sc.power_label = "model";
    return;
  }
  sc.coefficients.amplifier_factor = r.quantity("eta", Quantity::Dimensionless);
  sc.coefficients.circuit_power = r.quantity("P_c", Quantity::Power);
  sc.coefficients.beamforming_power = r.quantity("P_sp", Quantity::Power);
  r.reject_unknown();
  if (!(sc.coefficients.amplifier_factor >= 1))
    r.fail("eta", "amplifier factor must be at least 1");
  if (sc.coefficients.circuit_power < 0 || sc.coefficients.beamforming_power < 0)
    r.fail("P_c", "circuit powers must be non-negative");
  sc.power_label = "inline";
}

std::vector<double> parse_grid(const json& v, const std::string& field, Quantity kind) {
  std::vector<double> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(Reader::to_quantity(v[i], kind, 0, field + "/" + std::to_string(i)));
  } else {
    Reader r(v, field);
    const double from = r.quantity("from", kind);
    const double to = r.quantity("to", kind);
    if (!(to >= from)) r.fail("to", "must not be below \"from\"");
    if (r.has("step")) {
      const double step = r.quantity("step", Quantity::Dimensionless);
      if (!(step > 0)) r.fail("step", "must be positive");
      for (long i = 0;; ++i) {
        const double x = from + double(i) * step;
        if (x > to * (1 + 1e-12)) break;
        out.push_back(x);
      }
    } else if (r.has("factor")) {
      const double factor = r.quantity("factor", Quantity::Dimensionless);
      if (!(factor > 1)) r.fail("factor", "must exceed 1");
      if (!(from > 0)) r.fail("from", "must be positive for a geometric grid");
      for (double x = from; x <= to * (1 + 1e-12); x *= factor) out.push_back(x);
    } else {
      const int points = r.integer("points");
      if (points < 2) r.fail("points", "need at least two points");
      const std::string scale = r.has("scale") ? r.string("scale") : "log";
      if (scale != "log" && scale != "linear") r.fail("scale", "expected \"log\" or \"linear\"");
      if (scale == "log" && !(from > 0)) r.fail("from", "must be positive for a log grid");
      for (int i = 0; i < points; ++i) {
        const double u = double(i) / double(points - 1);
        out.push_back(scale == "log" ? from * std::pow(to / from, u) : from + (to - from) * u);
      }
    }
    r.reject_unknown();
  }
  if (out.empty()) throw ScenarioError(field, "grid is empty");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Sweep parse_sweep(const json& v, const std::string& field) {
  Reader r(v, field);
  int axes = 0;
  Sweep sweep;
  for (const auto& [key, axis] :
       {std::pair{"M", SweepAxis::Antennas}, {"K", SweepAxis::Users}, {"P", SweepAxis::Power}}) {
    if (!r.has(key)) continue;
    ++axes;
    sweep.axis = axis;
    sweep.values = parse_grid(r.at(key), r.field(key),
                              axis == SweepAxis::Power ? Quantity::Power : Quantity::Dimensionless);
    if (axis != SweepAxis::Power)
      for (double x : sweep.values)
        if (x != std::floor(x) || x < 1) r.fail(key, "values must be positive integers");
    if (axis == SweepAxis::Power)
      for (double x : sweep.values)
        if (!(x > 0)) r.fail(key, "powers must be positive");
  }
  r.reject_unknown();
  if (axes != 1) r.fail("", "exactly one sweep axis (M, K or P) is required");
  return sweep;
}

int line_of_offset(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

Scenario build(const json& root) {
  Reader r(root, "");
  Scenario sc;
  const std::optional<Sweep> sweep =
      r.has("sweep") ? std::optional<Sweep>(parse_sweep(r.at("sweep"), "/sweep")) : std::nullopt;
  const bool sweeps_m = sweep && sweep->axis == SweepAxis::Antennas;
  const bool sweeps_k = sweep && sweep->axis == SweepAxis::Users;
  sc.sweep = sweep;

  SystemConfig<double>& c = sc.system;
  c.bandwidth = r.quantity("B", Quantity::Frequency);
  if (!(c.bandwidth > 0)) r.fail("B", "bandwidth must be positive");
  c.antennas = sweeps_m ? int(sweep->values.front()) : r.integer("M");
  if (sweeps_m && r.has("M")) r.fail("M", "M is set by the sweep axis");
  c.users = sweeps_k ? int(sweep->values.front()) : r.integer("K");
  if (sweeps_k && r.has("K")) r.fail("K", "K is set by the sweep axis");
  c.cells = r.integer("L");
  c.pilot_reuse = r.integer("L_P");
  c.coherence_block = r.integer("T");
  c.pilot_length = r.integer("T_tr");
  c.pilot_power = r.quantity("P_tr", Quantity::Power);
  c.bs_noise_power = r.quantity("sigma2_tr", Quantity::Power, c.bandwidth);
  c.ue_noise_power = r.quantity("sigma2", Quantity::Power, c.bandwidth);
  c.channel_gain = parse_alpha(r.at("alpha"), r.field("alpha"));
  c.cross_gain = r.quantity("chi", Quantity::Dimensionless);
  c.perfect_training = r.boolean("perfect_training", false);

  if (r.has("N") == r.has("rho")) r.fail("N", "give exactly one of N and rho");
  if (r.has("N")) {
    if (sweeps_m) r.fail("N", "use rho when sweeping M");
    c.angles = r.integer("N");
    if (c.angles <= 0) r.fail("N", "must be positive");
    sc.correlation = double(c.antennas) / double(c.angles);
  } else {
    sc.correlation = r.quantity("rho", Quantity::Dimensionless);
    if (!(sc.correlation >= 1)) r.fail("rho", "must be at least 1");
    c.angles = sc.with_antennas(c.antennas).angles;
  }

  parse_power(sc, r.at("power"), r.field("power"));

  if (const json* p = r.find("precoders")) {
    if (!p->is_array() || p->empty()) r.fail("precoders", "expected a non-empty array");
    sc.precoders.clear();
    for (const json& name : *p) {
      const std::string s = name.is_string() ? name.get<std::string>() : "";
      if (s == "MRT")
        sc.precoders.push_back(Precoder::MRT);
      else if (s == "ZFBF" || s == "ZF")
        sc.precoders.push_back(Precoder::ZFBF);
      else
        r.fail("precoders", "expected \"MRT\" or \"ZFBF\"");
    }
  }

  if (const json* mc = r.find("monte_carlo")) {
    Reader m(*mc, "/monte_carlo");
    MonteCarloSpec spec;
    if (auto n = m.optional_integer("samples")) {
      if (*n < 2) m.fail("samples", "need at least two samples");
      spec.samples = std::size_t(*n);
    }
    if (const json* seed = m.find("seed")) {
      if (!seed->is_number_unsigned()) m.fail("seed", "expected a non-negative integer");
      spec.seed = seed->get<std::uint64_t>();
    }
    m.reject_unknown();
    sc.monte_carlo = spec;
  }

  if (const json* v = r.find("validation")) {
    Reader m(*v, "/validation");
    if (const json* lp = m.find("L_P")) {
      if (!lp->is_array()) m.fail("L_P", "expected an array of integers");
      for (const json& x : *lp) {
        if (!x.is_number_integer()) m.fail("L_P", "expected integers");
        sc.validation.pilot_reuse.push_back(x.get<int>());
      }
    }
    if (m.has("threshold")) sc.validation.threshold = m.quantity("threshold", Quantity::Dimensionless);
    if (m.has("P")) sc.validation.transmit_power = m.quantity("P", Quantity::Power);
    m.reject_unknown();
    if (!(sc.validation.threshold > 0)) m.fail("threshold", "must be positive");
    if (!(sc.validation.transmit_power > 0)) m.fail("P", "must be positive");
  }

  if (const json* cmp = r.find("compare_presets")) {
    if (!cmp->is_array()) r.fail("compare_presets", "expected an array of preset names");
    for (const json& name : *cmp) {
      try {
        sc.comparison_presets.push_back(parse_preset_name(name.is_string() ? name.get<std::string>() : ""));
      } catch (const ConfigError&) {
        r.fail("compare_presets", "unknown preset " + name.dump());
      }
    }
  }

  if (r.has("P_max")) {
    sc.max_power = r.quantity("P_max", Quantity::Power);
    if (!(*sc.max_power > 0)) r.fail("P_max", "must be positive");
  }

  if (const json* out = r.find("output")) {
    Reader o(*out, "/output");
    if (o.has("path")) sc.output.path = o.string("path");
    if (o.has("format")) {
      const std::string f = o.string("format");
      if (f == "csv")
        sc.output.format = OutputFormat::Csv;
      else if (f == "json")
        sc.output.format = OutputFormat::Json;
      else
        o.fail("format", "expected \"csv\" or \"json\"");
    }
    o.reject_unknown();
  }

  if (auto t = r.optional_integer("threads")) {
    if (*t < 1) r.fail("threads", "must be positive");
    sc.threads = *t;
  }
  r.reject_unknown();
  validate(sc.system);
  return sc;
}

}  // namespace

double parse_quantity(std::string_view text, Quantity kind, double bandwidth,
                      const std::string& field) {
  const std::string_view s = trim(text);
  double value = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc())
    throw ScenarioError(field, "cannot read a number from \"" + std::string(text) + "\"");
  const std::string_view unit = trim(std::string_view(end, s.data() + s.size() - end));
  const auto bad_unit = [&] {
    return ScenarioError(field, "unit \"" + std::string(unit) + "\" not valid here");
  };
  if (unit.empty()) return value;
  switch (kind) {
    case Quantity::Power:
      if (unit == "W") return value;
      if (unit == "mW") return value * 1e-3;
      if (unit == "uW") return value * 1e-6;
      if (unit == "dBW") return db_to_linear(value);
      if (unit == "dBm") return db_to_linear(value) * 1e-3;
      if (unit == "dBm/Hz" || unit == "dBW/Hz" || unit == "W/Hz") {
        if (!(bandwidth > 0)) throw ScenarioError(field, "per-Hz unit needs a positive bandwidth B");
        const double density = unit == "W/Hz"     ? value
                               : unit == "dBW/Hz" ? db_to_linear(value)
                                                  : db_to_linear(value) * 1e-3;
        return density * bandwidth;
      }
      throw bad_unit();
    case Quantity::Gain:
      if (unit == "dB") return db_to_linear(value);
      throw bad_unit();
    case Quantity::Frequency:
      if (unit == "Hz") return value;
      if (unit == "kHz") return value * 1e3;
      if (unit == "MHz") return value * 1e6;
      if (unit == "GHz") return value * 1e9;
      throw bad_unit();
    case Quantity::Dimensionless:
      if (unit == "%") return value / 100;
      if (unit == "dB") return db_to_linear(value);
      throw bad_unit();
  }
  throw bad_unit();
}

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ScenarioError("", e.what(), line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  return build(root);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("", "cannot open scenario file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

}  // namespace mimoee::cli
