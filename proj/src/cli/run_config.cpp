#include "cli/run_config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "repchain/montecarlo.hpp"

namespace repchain::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "command", "pgen",  "pgen-grid", "pswap", "w0",    "f0",          "tcoh",       "segments",
    "distill", "comm-time", "ttrunc", "coverage", "samples", "eps", "z", "seed", "display-cap",
    "workers", "werner", "werner-method", "top-only", "output", "format"};

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError("--" + key + ": " + what);
}

std::string text_of(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

double to_double(const std::string& key, const json& v) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) bad(key, "expected a number");
  const std::string s = v.get<std::string>();
  if (s == "inf" || s == "infinity" || s == "Inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    bad(key, "'" + s + "' is not a number");
  }
  if (used != s.size()) bad(key, "'" + s + "' is not a number");
  return x;
}

std::int64_t to_int(const std::string& key, const json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  const double x = to_double(key, v);
  if (!(std::abs(x) < 9e18) || x != std::floor(x)) bad(key, "'" + text_of(v) + "' is not an integer");
  return static_cast<std::int64_t>(x);
}

std::uint64_t to_uint(const std::string& key, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t used = 0;
    try {
      if (!s.empty() && s[0] != '-') {
        const unsigned long long x = std::stoull(s, &used);
        if (used == s.size()) return x;
      }
    } catch (const std::exception&) {
    }
    bad(key, "'" + s + "' is not a nonnegative integer");
  }
  const std::int64_t x = to_int(key, v);
  if (x < 0) bad(key, "must be nonnegative");
  return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& key, const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  const std::string s = text_of(v);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  bad(key, "expected true or false");
}

// Accepts an array, a single value, or a comma-separated string.
std::vector<json> to_list(const json& v) {
  if (v.is_array()) return {v.begin(), v.end()};
  if (!v.is_string()) return {v};
  std::vector<json> items;
  std::stringstream in(v.get<std::string>());
  std::string item;
  while (std::getline(in, item, ',')) items.emplace_back(item);
  return items;
}

bool wants_truncation(Command c) { return c != Command::montecarlo; }
bool wants_samples(Command c) { return c == Command::montecarlo || c == Command::compare; }

}  // namespace

std::vector<double> PgenGrid::values() const {
  std::vector<double> out;
  for (int i = 0; i < count; ++i)
    out.push_back(count == 1 ? start : start + (stop - start) * i / static_cast<double>(count - 1));
  return out;
}

std::string command_name(Command command) {
  switch (command) {
    case Command::deterministic: return "deterministic";
    case Command::montecarlo: return "montecarlo";
    case Command::mean_bounds: return "mean-bounds";
    case Command::compare: return "compare";
  }
  return "";
}

std::vector<double> RunConfig::p_gen_values() const {
  if (pgen_grid) return pgen_grid->values();
  return {*p_gen};
}

ProtocolParams RunConfig::params(TimeStep segment_count, double p_gen_value) const {
  ProtocolParams p;
  p.p_gen = p_gen_value;
  p.p_swap = p_swap;
  p.w0 = w0;
  p.t_coh = t_coh;
  p.n = nesting_level_from_segments(segment_count);
  p.d = d;
  p.include_comm_time = comm_time;
  p.validate();
  return p;
}

std::int64_t RunConfig::sample_count() const {
  return samples ? *samples : required_samples(*eps, z);
}

json RunConfig::to_json() const {
  json j;
  j["command"] = command_name(command);
  if (p_gen) j["pgen"] = *p_gen;
  if (pgen_grid) j["pgen-grid"] = {pgen_grid->start, pgen_grid->stop, pgen_grid->count};
  j["pswap"] = p_swap;
  j["w0"] = w0;
  if (std::isinf(t_coh))
    j["tcoh"] = "inf";
  else
    j["tcoh"] = t_coh;
  j["segments"] = segments;
  j["distill"] = d;
  j["comm-time"] = comm_time;
  if (t_trunc) j["ttrunc"] = *t_trunc;
  if (coverage) j["coverage"] = *coverage;
  if (samples) j["samples"] = *samples;
  if (eps) j["eps"] = *eps;
  j["z"] = z;
  j["seed"] = seed;
  j["display-cap"] = display_cap;
  j["workers"] = workers;
  j["werner"] = werner;
  j["werner-method"] = werner_method == WernerMethod::direct ? "direct" : "convolved";
  j["top-only"] = top_only;
  j["output"] = output;
  j["format"] = format == Format::csv ? "csv" : "json";
  return j;
}

RunConfig config_from_json(Command command, const json& fields) {
  if (!fields.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : fields.items())
    if (!kKnownKeys.count(key)) throw ConfigError("unknown configuration field '" + key + "'");

  RunConfig c;
  c.command = command;
  auto has = [&](const char* key) { return fields.contains(key) && !fields.at(key).is_null(); };

  if (has("command") && text_of(fields["command"]) != command_name(command))
    throw ConfigError("configuration is for '" + text_of(fields["command"]) + "', not '" +
                      command_name(command) + "'");

  if (has("pgen") && has("pgen-grid")) throw ConfigError("give either --pgen or --pgen-grid, not both");
  if (has("pgen")) c.p_gen = to_double("pgen", fields["pgen"]);
  if (has("pgen-grid")) {
    if (command != Command::mean_bounds) bad("pgen-grid", "only mean-bounds sweeps over p_gen");
    const auto parts = to_list(fields["pgen-grid"]);
    if (parts.size() != 3) bad("pgen-grid", "expected start,stop,count");
    c.pgen_grid = PgenGrid{to_double("pgen-grid", parts[0]), to_double("pgen-grid", parts[1]),
                           static_cast<int>(to_int("pgen-grid", parts[2]))};
    if (c.pgen_grid->count < 1) bad("pgen-grid", "count must be at least 1");
  }
  if (!c.p_gen && !c.pgen_grid) throw ConfigError("missing --pgen");
  for (double p : c.p_gen_values())
    if (!(p > 0.0 && p <= 1.0)) bad(c.pgen_grid ? "pgen-grid" : "pgen", "p_gen must be in (0, 1]");

  if (!has("pswap")) throw ConfigError("missing --pswap");
  c.p_swap = to_double("pswap", fields["pswap"]);

  if (has("w0") && has("f0")) throw ConfigError("give either --w0 or --f0, not both");
  if (has("w0")) c.w0 = to_double("w0", fields["w0"]);
  if (has("f0")) {
    try {
      c.w0 = werner_from_fidelity(to_double("f0", fields["f0"])).value();
    } catch (const std::domain_error& e) {
      bad("f0", e.what());
    }
  }
  if (has("tcoh")) c.t_coh = to_double("tcoh", fields["tcoh"]);

  if (!has("segments")) throw ConfigError("missing --segments");
  for (const json& s : to_list(fields["segments"])) c.segments.push_back(to_int("segments", s));
  if (c.segments.empty()) bad("segments", "no segment count given");
  if (command != Command::mean_bounds && c.segments.size() != 1)
    bad("segments", "only mean-bounds accepts a list of segment counts");

  if (has("distill")) c.d = static_cast<int>(to_int("distill", fields["distill"]));
  if (has("comm-time")) c.comm_time = to_bool("comm-time", fields["comm-time"]);
  if (c.d != 0 && command != Command::montecarlo)
    bad("distill", "only the montecarlo command supports distillation");
  if (c.comm_time && command == Command::mean_bounds)
    bad("comm-time", "mean bounds are defined without communication time");

  // With both, ttrunc fixes the window and coverage is checked against it.
  if (has("ttrunc")) c.t_trunc = to_int("ttrunc", fields["ttrunc"]);
  if (has("coverage")) c.coverage = to_double("coverage", fields["coverage"]);
  if (wants_truncation(command) && !c.t_trunc && !c.coverage) c.coverage = 0.99;
  if (c.t_trunc && (*c.t_trunc < (command == Command::mean_bounds ? 0 : 1)))
    bad("ttrunc", command == Command::mean_bounds ? "must be nonnegative" : "must be at least 1");
  if (c.coverage && !(*c.coverage > 0.0 && *c.coverage < 1.0)) bad("coverage", "must lie in (0, 1)");

  if (has("samples") && has("eps")) throw ConfigError("give either --samples or --eps, not both");
  if (has("samples")) c.samples = to_int("samples", fields["samples"]);
  if (has("eps")) c.eps = to_double("eps", fields["eps"]);
  if (wants_samples(command) && !c.samples && !c.eps) c.eps = 0.01;
  if (c.samples && *c.samples < 1) bad("samples", "must be at least 1");
  if (c.eps && !(*c.eps > 0.0 && *c.eps < 1.0)) bad("eps", "must lie in (0, 1)");
  if (has("z")) c.z = to_double("z", fields["z"]);
  if (!(c.z > 0.0 && c.z < 1.0)) bad("z", "must lie in (0, 1)");

  if (has("seed")) c.seed = to_uint("seed", fields["seed"]);
  if (has("display-cap")) c.display_cap = to_int("display-cap", fields["display-cap"]);
  if (c.display_cap < 1) bad("display-cap", "must be at least 1");
  if (has("workers")) {
    const std::int64_t w = to_int("workers", fields["workers"]);
    if (w < 0 || w > 4096) bad("workers", "must be in [0, 4096]");
    c.workers = static_cast<unsigned>(w);
  }

  if (has("werner")) c.werner = to_bool("werner", fields["werner"]);
  if (has("werner-method")) {
    const std::string m = text_of(fields["werner-method"]);
    if (m == "direct")
      c.werner_method = WernerMethod::direct;
    else if (m == "convolved")
      c.werner_method = WernerMethod::convolved;
    else
      bad("werner-method", "expected direct or convolved");
  }
  if (has("top-only")) c.top_only = to_bool("top-only", fields["top-only"]);
  if (has("output")) c.output = text_of(fields["output"]);
  if (has("format")) {
    const std::string f = text_of(fields["format"]);
    if (f == "csv")
      c.format = Format::csv;
    else if (f == "json")
      c.format = Format::json;
    else
      bad("format", "expected csv or json");
  }

  // Range checks on the physical parameters, with the flag names in the message.
  for (TimeStep s : c.segments) {
    try {
      c.params(s, c.p_gen_values().front());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return c;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace repchain::cli
