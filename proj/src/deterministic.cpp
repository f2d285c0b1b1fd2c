#include "repchain/deterministic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fft_convolution.hpp"

namespace repchain {

namespace {

// Windows at least this long use the power-series compound route by default.
constexpr TimeStep kSeriesThreshold = 2048;

// Werner averages may leave [0, 1] by this much through FFT round-off in the
// numerator before being clamped.
constexpr double kProfileSlack = 1e-9;

void require_swap_only(const ProtocolParams& params) {
  params.validate();
  if (params.d != 0)
    throw std::invalid_argument("the deterministic engine covers SWAP-ONLY only (d must be 0)");
  if (params.t_trunc < 1) throw std::invalid_argument("t_trunc must be at least 1");
}

CompoundOptions compound_options(const DeterministicOptions& options, TimeStep t_trunc) {
  CompoundOptions c;
  c.method = options.compound.value_or(t_trunc >= kSeriesThreshold ? CompoundMethod::series
                                                                   : CompoundMethod::iterative);
  c.tail_tolerance = options.tail_tolerance;
  return c;
}

TimeStep heralding_delay(const ProtocolParams& params, int level) {
  return params.include_comm_time ? (TimeStep{1} << level) : 0;
}

double decay_factor(double dt, double t_coh) { return std::isinf(t_coh) ? 1.0 : std::exp(-dt / t_coh); }

TruncatedPmf shifted(const TruncatedPmf& pmf, TimeStep by) {
  if (by == 0) return pmf;
  std::vector<double> out(pmf.size(), 0.0);
  const auto in = pmf.probs();
  for (std::size_t t = 0; t + static_cast<std::size_t>(by) < out.size(); ++t)
    out[t + static_cast<std::size_t>(by)] = in[t];
  return TruncatedPmf(std::move(out));
}

// Distribution of the time at which a swap attempt at `level` ends.
TruncatedPmf swap_attempt_time(const ProtocolParams& params, const LevelDistributions& dists, int level) {
  return shifted(max_of_two_iid(dists.pmf[static_cast<std::size_t>(level)]), heralding_delay(params, level));
}

template <typename AttemptTime>
LevelDistributions run_levels(const ProtocolParams& params, const DeterministicOptions& options,
                              AttemptTime attempt_time) {
  LevelDistributions dists;
  dists.pmf.push_back(geometric_pmf(params.p_gen, params.t_trunc));
  dists.cdf.push_back(cdf_from_pmf(dists.pmf.back()));
  const CompoundOptions compound = compound_options(options, params.t_trunc);
  for (int level = 0; level < params.n; ++level) {
    const TruncatedPmf attempt = attempt_time(dists, level);
    dists.pmf.push_back(geometric_compound(attempt, params.p_swap, compound));
    dists.cdf.push_back(cdf_from_pmf(dists.pmf.back()));
  }
  return dists;
}

// Numerator of the Werner average, one realization group at a time.
std::vector<double> werner_numerator_direct(const ProtocolParams& params, const LevelDistributions& dists,
                                            std::span<const double> werner, int level,
                                            const DeterministicOptions& options) {
  const std::size_t len = static_cast<std::size_t>(params.t_trunc) + 1;
  const auto probs = dists.pmf[static_cast<std::size_t>(level)].probs();
  const auto shift = static_cast<std::size_t>(heralding_delay(params, level));
  const double heralding_decay = decay_factor(static_cast<double>(shift), params.t_coh);
  std::vector<double> waiting_decay(len);
  for (std::size_t dt = 0; dt < len; ++dt) waiting_decay[dt] = decay_factor(static_cast<double>(dt), params.t_coh);

  std::vector<double> numerator(len, 0.0);
  // Adds every group with k swaps, where `failed` holds Pr(time spent in
  // the k - 1 failed attempts = t_fail).
  auto add_groups = [&](double prob_k, std::span<const double> failed) {
    const auto first = std::find_if(failed.begin(), failed.end(), [](double x) { return x != 0.0; });
    if (first == failed.end()) return;
    const auto lowest_fail = static_cast<std::size_t>(first - failed.begin());
    for (std::size_t ta = 1; ta < len; ++ta) {
      if (probs[ta] == 0.0) continue;
      for (std::size_t tb = 1; tb < len; ++tb) {
        if (probs[tb] == 0.0) continue;
        const std::size_t swap_end = std::max(ta, tb) + shift;
        if (swap_end + lowest_fail >= len) continue;
        const double w = werner[ta] * werner[tb] * waiting_decay[ta > tb ? ta - tb : tb - ta] * heralding_decay;
        const double p = prob_k * probs[ta] * probs[tb];
        for (std::size_t t_fail = lowest_fail; swap_end + t_fail < len; ++t_fail)
          numerator[swap_end + t_fail] += w * p * failed[t_fail];
      }
    }
  };

  // k = 1: no failed attempts, t_fail = 0 with certainty.
  std::vector<double> no_failures(len, 0.0);
  no_failures[0] = 1.0;
  add_groups(params.p_swap, no_failures);

  const double q = 1.0 - params.p_swap;
  if (q > 0.0) {
    CompoundOptions compound;
    compound.method = CompoundMethod::iterative;
    compound.tail_tolerance = options.tail_tolerance;
    // The conditional for j attempts is the failed-time distribution of the
    // group with k = j + 1 swaps.
    compound.on_conditional = [&](TimeStep j, std::span<const double> conditional) {
      add_groups(params.p_swap * std::pow(q, static_cast<double>(j)), conditional);
    };
    geometric_compound(swap_attempt_time(params, dists, level), params.p_swap, compound);
  }
  return numerator;
}

// Same numerator with the sum over k done in closed form: the k-weighted
// failed-time distributions add up to p delta_0 + (1 - p) Pr(T_{l+1} = .).
std::vector<double> werner_numerator_convolved(const ProtocolParams& params, const LevelDistributions& dists,
                                               std::span<const double> werner, int level) {
  const std::size_t len = static_cast<std::size_t>(params.t_trunc) + 1;
  const auto probs = dists.pmf[static_cast<std::size_t>(level)].probs();
  const auto shift = static_cast<std::size_t>(heralding_delay(params, level));
  const double heralding_decay = decay_factor(static_cast<double>(shift), params.t_coh);
  const double step_decay = decay_factor(1.0, params.t_coh);

  // pair_mass[s]: g_W-weighted probability that the later of the two links
  // arrives at s, with the earlier one decayed while waiting.
  std::vector<double> pair_mass(len, 0.0);
  double earlier = 0.0;  // sum_{u < s} a[u] decay(s - u)
  for (std::size_t s = 1; s + shift < len; ++s) {
    earlier = step_decay * (earlier + werner[s - 1] * probs[s - 1]);
    const double a = werner[s] * probs[s];
    pair_mass[s + shift] = heralding_decay * (a * a + 2.0 * a * earlier);
  }

  std::vector<double> numerator(len);
  detail::fft_convolve(dists.pmf[static_cast<std::size_t>(level) + 1].probs(), pair_mass, numerator);
  const double q = 1.0 - params.p_swap;
  for (std::size_t t = 0; t < len; ++t) numerator[t] = params.p_swap * pair_mass[t] + q * numerator[t];
  return numerator;
}

}  // namespace

LevelDistributions compute_waiting_time(const ProtocolParams& params, const DeterministicOptions& options) {
  require_swap_only(params);
  return run_levels(params, options, [&](const LevelDistributions& dists, int level) {
    return swap_attempt_time(params, dists, level);
  });
}

LevelDistributions compute_upper_bound_distribution(const ProtocolParams& params,
                                                    const DeterministicOptions& options) {
  require_swap_only(params);
  if (params.include_comm_time)
    throw std::invalid_argument("the sequential upper-bound chain is defined without communication time");
  return run_levels(params, options, [](const LevelDistributions& dists, int level) {
    const TruncatedPmf& pmf = dists.pmf[static_cast<std::size_t>(level)];
    return convolve(pmf, pmf);
  });
}

WernerProfile compute_werner_profile(const ProtocolParams& params, const LevelDistributions& dists,
                                     const DeterministicOptions& options) {
  require_swap_only(params);
  if (dists.levels() != params.n + 1 || dists.t_trunc() != params.t_trunc)
    throw std::invalid_argument("level distributions do not match the protocol parameters");

  const std::size_t len = static_cast<std::size_t>(params.t_trunc) + 1;
  WernerProfile profile;
  profile.werner.emplace_back(len, params.w0);

  std::vector<double> werner(len, params.w0);
  for (int level = 0; level < params.n; ++level) {
    const std::vector<double> numerator =
        options.werner == WernerMethod::direct
            ? werner_numerator_direct(params, dists, werner, level, options)
            : werner_numerator_convolved(params, dists, werner, level);

    const auto denominator = dists.pmf[static_cast<std::size_t>(level) + 1].probs();
    std::vector<std::optional<double>> next(len);
    for (std::size_t t = 0; t < len; ++t) {
      // Entries too unlikely to report still feed the next level.
      werner[t] = denominator[t] > 0.0 ? std::clamp(numerator[t] / denominator[t], 0.0, 1.0) : 0.0;
      if (!(denominator[t] > options.profile_min_probability)) continue;
      double w = numerator[t] / denominator[t];
      if (w < -kProfileSlack || w > 1.0 + kProfileSlack) {
        std::ostringstream msg;
        msg << "average Werner parameter " << w << " at level " << level + 1 << ", t = " << t
            << " left [0, 1]; raise profile_min_probability";
        throw NumericalError(msg.str());
      }
      w = std::clamp(w, 0.0, 1.0);
      next[t] = w;
      werner[t] = w;
    }
    profile.werner.push_back(std::move(next));
  }
  return profile;
}

double upper_chain_mean(const ProtocolParams& params) {
  return std::pow(2.0 / params.p_swap, params.n) / params.p_gen;
}

MeanBounds mean_bounds(const ProtocolParams& params, const DeterministicOptions& options) {
  require_swap_only(params.t_trunc == 0 ? [&] {
    ProtocolParams probe = params;
    probe.t_trunc = 1;
    return probe;
  }() : params);
  if (params.include_comm_time)
    throw std::invalid_argument("mean bounds are defined without communication time");
  const double analytic = upper_chain_mean(params);
  if (params.t_trunc == 0) return {0.0, analytic};

  const double lower = empirical_mean(compute_waiting_time(params, options).top_cdf());
  const double upper_truncated = empirical_mean(compute_upper_bound_distribution(params, options).top_cdf());
  // The sequential chain's truncated mean can only undershoot its exact mean.
  return {lower, lower + std::max(0.0, analytic - upper_truncated)};
}

TimeStep choose_truncation(const ProtocolParams& params, double coverage) {
  params.validate();
  if (!(coverage > 0.0 && coverage < 1.0)) throw std::invalid_argument("coverage must lie in (0, 1)");
  const double bound = upper_chain_mean(params) / (1.0 - coverage);
  if (!(bound < 1e15)) throw std::invalid_argument("required truncation time is too large to represent");
  // Shave relative round-off so exact integers are not bumped up by ceil.
  return static_cast<TimeStep>(std::ceil(bound * (1.0 - 1e-12)));
}

double three_over_two_estimate(const ProtocolParams& params) {
  params.validate();
  return std::pow(3.0 / (2.0 * params.p_swap), params.n) / params.p_gen;
}

}  // namespace repchain
