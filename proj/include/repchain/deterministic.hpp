#pragma once

// Exact (up to the truncation time) waiting-time distributions and
// time-conditioned average Werner parameters for the SWAP-ONLY protocol,
// plus the dominating "sequential" chain used to bracket the mean.

#include <optional>
#include <vector>

#include "repchain/params.hpp"
#include "repchain/pmf.hpp"

namespace repchain {

enum class WernerMethod {
  /// Loops over every realization group (k, tA, tB, t_fail) literally.
  direct,
  /// Sums the k-series in closed form: one pair sweep and one convolution
  /// with the level's own waiting-time distribution per level.
  convolved,
};

struct DeterministicOptions {
  /// Route for the per-level geometric compound sums. Unset picks the
  /// iterative route for small windows and the series route otherwise.
  std::optional<CompoundMethod> compound;
  /// Passed to the iterative compound route (see CompoundOptions).
  double tail_tolerance = 1e-20;
  WernerMethod werner = WernerMethod::direct;
  /// Times whose delivery probability is at or below this are reported as
  /// undefined in Werner profiles.
  double profile_min_probability = 1e-12;
};

/// Waiting-time distributions of every nesting level 0..n.
struct LevelDistributions {
  std::vector<TruncatedPmf> pmf;
  std::vector<TruncatedCdf> cdf;

  int levels() const { return static_cast<int>(pmf.size()); }
  int top_level() const { return levels() - 1; }
  TimeStep t_trunc() const { return pmf.front().t_trunc(); }
  const TruncatedPmf& top_pmf() const { return pmf.back(); }
  const TruncatedCdf& top_cdf() const { return cdf.back(); }
};

/// werner[l][t] = E[W_l | T_l = t], or nullopt where Pr(T_l = t) is
/// (numerically) zero.
struct WernerProfile {
  std::vector<std::vector<std::optional<double>>> werner;

  std::optional<double> at(int level, TimeStep t) const {
    return werner[static_cast<std::size_t>(level)][static_cast<std::size_t>(t)];
  }
};

/// Bracket on E[T_n] in time steps.
struct MeanBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Per-level distributions of T_0..T_n. Requires d == 0 and t_trunc >= 1.
LevelDistributions compute_waiting_time(const ProtocolParams& params, const DeterministicOptions& options = {});

/// Average Werner parameter per delivery time for every level. `dists` must
/// come from compute_waiting_time with the same parameters.
WernerProfile compute_werner_profile(const ProtocolParams& params, const LevelDistributions& dists,
                                     const DeterministicOptions& options = {});

/// Same pipeline as compute_waiting_time with the maximum of the two input
/// links replaced by their sum (links produced one after the other).
LevelDistributions compute_upper_bound_distribution(const ProtocolParams& params,
                                                    const DeterministicOptions& options = {});

/// Exact mean of the sequential chain, (2 / p_swap)^n / p_gen.
double upper_chain_mean(const ProtocolParams& params);

/// lower = truncated mean of T_n; upper adds the truncated tail mass of the
/// sequential chain, which dominates T_n.
MeanBounds mean_bounds(const ProtocolParams& params, const DeterministicOptions& options = {});

/// Truncation time that captures at least `coverage` of T_n's mass, from
/// Markov's inequality applied to the sequential-chain mean.
TimeStep choose_truncation(const ProtocolParams& params, double coverage);

/// The common (3 / (2 p_swap))^n / p_gen approximation of E[T_n].
double three_over_two_estimate(const ProtocolParams& params);

}  // namespace repchain
