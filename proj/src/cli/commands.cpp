#include "cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include <CLI11.hpp>

#include "repchain/deterministic.hpp"
#include "repchain/montecarlo.hpp"

namespace repchain::cli {

namespace {

using nlohmann::json;

// Shortest text that reads back to the same double.
std::string num(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string optional_num(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

void write_csv_header(std::ostream& os, const RunConfig& config, const std::vector<std::pair<std::string, std::string>>& facts) {
  os << "# repchain " << command_name(config.command) << '\n';
  os << "# config: " << config.to_json().dump() << '\n';
  for (const auto& [k, v] : facts) os << "# " << k << ": " << v << '\n';
}

// Runs `body` against the --output file or the given stream.
template <typename Body>
void emit(const RunConfig& config, std::ostream& fallback, Body body) {
  if (config.output.empty() || config.output == "-") {
    body(fallback);
    return;
  }
  std::ofstream file(config.output);
  if (!file) throw ConfigError("cannot write output file '" + config.output + "'");
  body(file);
}

TimeStep truncation_for(const RunConfig& config, const ProtocolParams& params) {
  return config.t_trunc ? *config.t_trunc : choose_truncation(params, *config.coverage);
}

DeterministicOptions engine_options(const RunConfig& config) {
  DeterministicOptions o;
  o.werner = config.werner_method;
  return o;
}

int cmd_deterministic(const RunConfig& config, std::ostream& out, std::ostream& err) {
  ProtocolParams params = config.params(config.segments.front(), *config.p_gen);
  params.t_trunc = truncation_for(config, params);
  const DeterministicOptions options = engine_options(config);
  const LevelDistributions dists = compute_waiting_time(params, options);
  std::optional<WernerProfile> profile;
  if (config.werner) profile = compute_werner_profile(params, dists, options);
  const double mass = captured_mass(dists.top_pmf());
  const int first_level = config.top_only ? params.n : 0;

  auto werner_at = [&](int level, TimeStep t) -> std::optional<double> {
    if (!profile) return std::nullopt;
    return profile->at(level, t);
  };

  emit(config, out, [&](std::ostream& os) {
    if (config.format == Format::csv) {
      write_csv_header(os, config, {{"t_trunc", std::to_string(params.t_trunc)}, {"captured_mass", num(mass)}});
      os << "level,t,pmf,cdf,werner,fidelity\n";
      for (int level = first_level; level <= params.n; ++level) {
        const auto& pmf = dists.pmf[static_cast<std::size_t>(level)];
        const auto& cdf = dists.cdf[static_cast<std::size_t>(level)];
        for (TimeStep t = 1; t <= params.t_trunc; ++t) {
          const auto w = werner_at(level, t);
          os << level << ',' << t << ',' << num(pmf[t]) << ',' << num(cdf[t]) << ',' << optional_num(w) << ','
             << (w ? num(fidelity_from_werner(WernerParam(*w))) : std::string()) << '\n';
        }
      }
      return;
    }
    json doc;
    doc["config"] = config.to_json();
    doc["t_trunc"] = params.t_trunc;
    doc["captured_mass"] = mass;
    doc["levels"] = json::array();
    for (int level = first_level; level <= params.n; ++level) {
      const auto& pmf = dists.pmf[static_cast<std::size_t>(level)];
      const auto& cdf = dists.cdf[static_cast<std::size_t>(level)];
      json entry{{"level", level}};
      entry["pmf"] = std::vector<double>(pmf.probs().begin() + 1, pmf.probs().end());
      entry["cdf"] = std::vector<double>(cdf.cum().begin() + 1, cdf.cum().end());
      if (profile) {
        json w = json::array();
        for (TimeStep t = 1; t <= params.t_trunc; ++t) w.push_back(optional_json(werner_at(level, t)));
        entry["werner"] = std::move(w);
      }
      doc["levels"].push_back(std::move(entry));
    }
    doc["t_start"] = 1;
    os << doc.dump(1) << '\n';
  });

  if (config.coverage && mass < *config.coverage) {
    err << "coverage shortfall: captured mass " << num(mass) << " < requested " << num(*config.coverage)
        << " at t_trunc " << params.t_trunc << '\n';
    return kExitCoverageShortfall;
  }
  return kExitOk;
}

int cmd_montecarlo(const RunConfig& config, std::ostream& out, std::ostream&) {
  const ProtocolParams params = config.params(config.segments.front(), *config.p_gen);
  CampaignOptions options;
  options.z = config.z;
  options.display_cap = config.display_cap;
  options.workers = config.workers;
  const std::int64_t m = config.sample_count();
  const CampaignResult r = run_campaign(params, m, config.seed, options);

  double werner_total = 0.0;
  for (const auto& s : r.samples) werner_total += s.w.value();
  const double mean_werner = werner_total / static_cast<double>(m);
  const double mean_fidelity = (1.0 + 3.0 * mean_werner) / 4.0;

  emit(config, out, [&](std::ostream& os) {
    if (config.format == Format::csv) {
      write_csv_header(os, config,
                       {{"samples", std::to_string(m)},
                        {"seed", std::to_string(config.seed)},
                        {"dkw_eps", num(r.dkw_eps)},
                        {"mean_time", num(r.sample_mean_time)},
                        {"standard_error", num(r.standard_error)},
                        {"mean_werner", num(mean_werner)},
                        {"mean_fidelity", num(mean_fidelity)},
                        {"overflow", std::to_string(r.overflow)}});
      os << "t,ecdf,ecdf_lo,ecdf_hi,werner_mean,count\n";
      for (TimeStep t = 1; t <= r.ecdf.t_trunc(); ++t) {
        const double e = r.ecdf[t];
        const auto it = r.werner_by_time.find(t);
        const bool seen = it != r.werner_by_time.end();
        os << t << ',' << num(e) << ',' << num(std::max(0.0, e - r.dkw_eps)) << ','
           << num(std::min(1.0, e + r.dkw_eps)) << ',' << (seen ? num(it->second.mean) : std::string()) << ','
           << (seen ? it->second.count : 0) << '\n';
      }
      return;
    }
    json doc;
    doc["config"] = config.to_json();
    doc["samples"] = m;
    doc["seed"] = config.seed;
    doc["dkw_eps"] = r.dkw_eps;
    doc["mean_time"] = r.sample_mean_time;
    doc["standard_error"] = r.standard_error;
    doc["mean_werner"] = mean_werner;
    doc["mean_fidelity"] = mean_fidelity;
    doc["overflow"] = r.overflow;
    doc["t_start"] = 1;
    doc["ecdf"] = std::vector<double>(r.ecdf.cum().begin() + 1, r.ecdf.cum().end());
    json by_time = json::array();
    for (const auto& [t, stat] : r.werner_by_time) by_time.push_back({{"t", t}, {"werner_mean", stat.mean}, {"count", stat.count}});
    doc["werner_by_time"] = std::move(by_time);
    os << doc.dump(1) << '\n';
  });
  return kExitOk;
}

int cmd_mean_bounds(const RunConfig& config, std::ostream& out, std::ostream&) {
  struct Row {
    TimeStep segments;
    double p_gen;
    TimeStep t_trunc;
    MeanBounds bounds;
    double three_over_two;
  };
  std::vector<Row> rows;
  for (TimeStep segments : config.segments) {
    for (double p_gen : config.p_gen_values()) {
      ProtocolParams params = config.params(segments, p_gen);
      params.t_trunc = truncation_for(config, params);
      rows.push_back({segments, p_gen, params.t_trunc, mean_bounds(params), three_over_two_estimate(params)});
    }
  }

  emit(config, out, [&](std::ostream& os) {
    if (config.format == Format::csv) {
      write_csv_header(os, config, {});
      os << "segments,pgen,pswap,ttrunc,lower,upper,three_over_two,lower_ratio,upper_ratio\n";
      for (const Row& r : rows)
        os << r.segments << ',' << num(r.p_gen) << ',' << num(config.p_swap) << ',' << r.t_trunc << ','
           << num(r.bounds.lower) << ',' << num(r.bounds.upper) << ',' << num(r.three_over_two) << ','
           << num(r.bounds.lower / r.three_over_two) << ',' << num(r.bounds.upper / r.three_over_two) << '\n';
      return;
    }
    json doc;
    doc["config"] = config.to_json();
    doc["rows"] = json::array();
    for (const Row& r : rows)
      doc["rows"].push_back({{"segments", r.segments},
                             {"pgen", r.p_gen},
                             {"pswap", config.p_swap},
                             {"ttrunc", r.t_trunc},
                             {"lower", r.bounds.lower},
                             {"upper", r.bounds.upper},
                             {"three_over_two", r.three_over_two},
                             {"lower_ratio", r.bounds.lower / r.three_over_two},
                             {"upper_ratio", r.bounds.upper / r.three_over_two}});
    os << doc.dump(1) << '\n';
  });
  return kExitOk;
}

int cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err) {
  ProtocolParams params = config.params(config.segments.front(), *config.p_gen);
  params.t_trunc = truncation_for(config, params);
  const LevelDistributions dists = compute_waiting_time(params, engine_options(config));
  const double mass = captured_mass(dists.top_pmf());

  CampaignOptions options;
  options.z = config.z;
  options.display_cap = config.display_cap;
  options.workers = config.workers;
  const std::int64_t m = config.sample_count();
  const CampaignResult r = run_campaign(params, m, config.seed, options);

  std::vector<TimeStep> times;
  times.reserve(r.samples.size());
  for (const auto& s : r.samples) times.push_back(s.t);
  std::sort(times.begin(), times.end());
  double distance = 0.0;
  for (TimeStep t = 1; t <= params.t_trunc; ++t) {
    const auto at_or_below = std::upper_bound(times.begin(), times.end(), t) - times.begin();
    const double ecdf = static_cast<double>(at_or_below) / static_cast<double>(m);
    distance = std::max(distance, std::abs(ecdf - dists.top_cdf()[t]));
  }
  const double threshold = r.dkw_eps;
  const bool pass = distance <= threshold;

  emit(config, out, [&](std::ostream& os) {
    if (config.format == Format::csv) {
      write_csv_header(os, config, {});
      os << "segments,pgen,pswap,ttrunc,captured_mass,samples,z,distance,threshold,pass\n";
      os << config.segments.front() << ',' << num(params.p_gen) << ',' << num(params.p_swap) << ','
         << params.t_trunc << ',' << num(mass) << ',' << m << ',' << num(config.z) << ',' << num(distance) << ','
         << num(threshold) << ',' << (pass ? "true" : "false") << '\n';
      return;
    }
    json doc{{"config", config.to_json()}, {"ttrunc", params.t_trunc}, {"captured_mass", mass},
             {"samples", m},               {"z", config.z},           {"distance", distance},
             {"threshold", threshold},     {"pass", pass}};
    os << doc.dump(1) << '\n';
  });
  if (!pass) {
    err << "compare failed: sup distance " << num(distance) << " exceeds DKW threshold " << num(threshold) << '\n';
    return kExitCompareFailed;
  }
  return kExitOk;
}

struct FlagSet {
  std::map<std::string, std::string> values;
  std::map<std::string, std::vector<std::string>> lists;
  std::map<std::string, bool> flags;
  std::string config_path;
};

void add_common_flags(CLI::App* sub, FlagSet& f, Command command) {
  auto opt = [&](const std::string& name, const std::string& help) {
    sub->add_option("--" + name, f.values[name], help);
  };
  sub->add_option("--config", f.config_path, "JSON file with the same field names as the flags");
  opt("pgen", "elementary link generation success probability, in (0, 1]");
  opt("pswap", "entanglement swap success probability, in (0, 1]");
  sub->add_option("--segments", f.lists["segments"], "number of segments N = 2^n")->delimiter(',');
  opt("seed", "random seed");
  opt("output", "output file (default: stdout)");
  opt("format", "csv or json");
  if (command != Command::mean_bounds) {
    opt("w0", "Werner parameter of fresh elementary links");
    opt("f0", "fidelity of fresh elementary links (alternative to --w0)");
    opt("tcoh", "memory coherence time in L0/c steps, or inf");
    sub->add_flag("--comm-time", f.flags["comm-time"], "include heralding time after swaps");
  }
  if (command != Command::montecarlo) {
    opt("ttrunc", "truncation time");
    opt("coverage", "target captured mass; picks the truncation time, or is checked against --ttrunc (default 0.99)");
    opt("werner-method", "direct or convolved");
  }
  if (command == Command::montecarlo || command == Command::compare) {
    opt("samples", "number of samples");
    opt("eps", "DKW band half-width used to size the campaign (default 0.01)");
    opt("z", "DKW failure probability (default 0.01)");
    opt("workers", "worker threads (default: all cores)");
    opt("display-cap", "largest time kept in the ECDF");
  }
  if (command == Command::montecarlo) opt("distill", "distillation rounds per level");
  if (command == Command::deterministic) {
    sub->add_flag("--werner", f.flags["werner"], "also compute the Werner/fidelity profile");
    sub->add_flag("--top-only", f.flags["top-only"], "only emit the top nesting level");
  }
  if (command == Command::mean_bounds) opt("pgen-grid", "start,stop,count sweep over p_gen");
}

}  // namespace

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err) {
  switch (config.command) {
    case Command::deterministic: return cmd_deterministic(config, out, err);
    case Command::montecarlo: return cmd_montecarlo(config, out, err);
    case Command::mean_bounds: return cmd_mean_bounds(config, out, err);
    case Command::compare: return cmd_compare(config, out, err);
  }
  return kExitInvalid;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Waiting time and fidelity of entanglement in nested quantum repeater chains"};
  app.require_subcommand(1);
  const std::vector<std::pair<Command, std::string>> commands = {
      {Command::deterministic, "exact per-level waiting-time distributions and Werner profiles"},
      {Command::montecarlo, "Monte Carlo campaign with DKW confidence bands"},
      {Command::mean_bounds, "bounds on the mean waiting time and the 3-over-2 estimate"},
      {Command::compare, "check the Monte Carlo ECDF against the exact CDF"},
  };
  std::map<Command, FlagSet> flag_sets;
  std::map<Command, CLI::App*> subs;
  for (const auto& [command, help] : commands) {
    subs[command] = app.add_subcommand(command_name(command), help);
    add_common_flags(subs[command], flag_sets[command], command);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    for (const auto& [command, sub] : subs) {
      if (!sub->parsed()) continue;
      const FlagSet& f = flag_sets[command];
      json fields = f.config_path.empty() ? json::object() : load_config_file(f.config_path);
      if (!fields.is_object()) throw ConfigError("config file must hold a JSON object");
      json overrides = json::object();
      for (const auto& [key, value] : f.values)
        if (sub->count("--" + key)) overrides[key] = value;
      for (const auto& [key, value] : f.lists)
        if (sub->count("--" + key)) overrides[key] = value;
      for (const auto& [key, value] : f.flags)
        if (sub->count("--" + key)) overrides[key] = value;
      // A flag replaces its mutually exclusive partner from the file.
      const std::vector<std::pair<std::string, std::string>> partners = {
          {"pgen", "pgen-grid"}, {"w0", "f0"}, {"samples", "eps"}};
      for (const auto& [a, b] : partners) {
        if (overrides.contains(a)) fields.erase(b);
        if (overrides.contains(b)) fields.erase(a);
      }
      fields.update(overrides);
      const RunConfig config = config_from_json(command, fields);
      return run_command(config, out, err);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace repchain::cli
