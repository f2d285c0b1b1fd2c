#pragma once

// Sampler of (T_n, W_n) for SWAP-ONLY and d-DIST-SWAP, and seeded campaigns
// aggregating many samples into an ECDF with DKW bands.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "repchain/params.hpp"
#include "repchain/pmf.hpp"
#include "repchain/werner.hpp"

namespace repchain {

/// Uniform reals in [0, 1) from a 64-bit seed. substream(i) gives an
/// independent stream per index, so campaigns do not depend on scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream substream(std::uint64_t index) const;
  /// 53 random bits scaled into [0, 1); never returns 1.
  double uniform();
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Per-level call counts, for measuring work.
struct AttemptCounters {
  /// swap_calls[l]: invocations of sample_swap at level l.
  std::vector<std::uint64_t> swap_calls;
  /// dist_calls[l]: invocations of sample_dist(l, d) with the full d.
  std::vector<std::uint64_t> dist_calls;

  explicit AttemptCounters(int n = 0);
  void merge(const AttemptCounters& other);
};

/// Geometric(p_gen) sample by inverse transform from u in [0, 1).
TimeStep sample_T0(double p_gen, double u);
TimeStep sample_T0(double p_gen, RngStream& rng);

/// One link of nesting level `level`. Time draws come before the success
/// draw of every attempt, and Werner values never consume randomness.
LinkSample sample_swap(int level, const ProtocolParams& params, RngStream& rng,
                       AttemptCounters* counters = nullptr);

/// A `d_remaining`-distilled 2^(level-1)-hop link feeding the swap at `level`.
LinkSample sample_dist(int level, int d_remaining, const ProtocolParams& params, RngStream& rng,
                       AttemptCounters* counters = nullptr);

/// Samples needed so the ECDF lies within eps of the CDF with probability 1 - z.
std::int64_t required_samples(double eps, double z);
/// Band half-width achieved by m samples at confidence 1 - z.
double dkw_epsilon(std::int64_t m, double z);

struct WernerStat {
  double mean = 0.0;
  std::int64_t count = 0;
};

struct CampaignOptions {
  double z = 0.01;
  /// Samples later than this go to the overflow count instead of the ECDF.
  TimeStep display_cap = TimeStep{1} << 24;
  /// 0 means one per hardware thread.
  unsigned workers = 0;
};

struct CampaignResult {
  std::uint64_t seed = 0;
  std::int64_t m = 0;
  double z = 0.0;
  std::vector<LinkSample> samples;
  /// Fraction of all m samples at or below t, for t up to the largest
  /// sample within the display cap.
  TruncatedCdf ecdf;
  double dkw_eps = 0.0;
  std::map<TimeStep, WernerStat> werner_by_time;
  double sample_mean_time = 0.0;
  double standard_error = 0.0;
  std::int64_t overflow = 0;
  AttemptCounters attempts;
};

CampaignResult run_campaign(const ProtocolParams& params, std::int64_t m, std::uint64_t seed,
                            const CampaignOptions& options = {});

}  // namespace repchain
