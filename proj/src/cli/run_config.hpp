#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "repchain/deterministic.hpp"
#include "repchain/params.hpp"

namespace repchain::cli {

enum class Command { deterministic, montecarlo, mean_bounds, compare };
enum class Format { csv, json };

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PgenGrid {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;

  /// count evenly spaced values, both ends included.
  std::vector<double> values() const;
};

/// Fully resolved run description. Field names in JSON match the flag names.
struct RunConfig {
  Command command = Command::deterministic;

  std::optional<double> p_gen;
  std::optional<PgenGrid> pgen_grid;
  double p_swap = 1.0;
  double w0 = 1.0;
  double t_coh = kNoDecoherence;
  std::vector<TimeStep> segments;
  int d = 0;
  bool comm_time = false;

  std::optional<TimeStep> t_trunc;
  std::optional<double> coverage;

  std::optional<std::int64_t> samples;
  std::optional<double> eps;
  double z = 0.01;
  std::uint64_t seed = 1;
  TimeStep display_cap = TimeStep{1} << 24;
  unsigned workers = 0;

  bool werner = false;
  WernerMethod werner_method = WernerMethod::direct;
  bool top_only = false;

  std::string output;
  Format format = Format::csv;

  std::vector<double> p_gen_values() const;
  /// Parameters for one segment count and p_gen; t_trunc left at 1.
  ProtocolParams params(TimeStep segment_count, double p_gen_value) const;
  /// Sample count from either the explicit count or (eps, z).
  std::int64_t sample_count() const;

  /// Every field with defaults filled in; feeding it back via --config
  /// reproduces the run.
  nlohmann::json to_json() const;
};

std::string command_name(Command command);

/// Builds and validates a config. Numbers may be given as JSON numbers or
/// strings (as they arrive from the command line).
RunConfig config_from_json(Command command, const nlohmann::json& fields);

/// Reads a --config file.
nlohmann::json load_config_file(const std::string& path);

}  // namespace repchain::cli
