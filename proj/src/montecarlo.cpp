#include "repchain/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace repchain {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require_level(int level, const ProtocolParams& params) {
  if (level < 0 || level > params.n) throw std::invalid_argument("level outside [0, n]");
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RngStream RngStream::substream(std::uint64_t index) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

AttemptCounters::AttemptCounters(int n)
    : swap_calls(static_cast<std::size_t>(n) + 1, 0), dist_calls(static_cast<std::size_t>(n) + 1, 0) {}

void AttemptCounters::merge(const AttemptCounters& other) {
  if (other.swap_calls.size() > swap_calls.size()) {
    swap_calls.resize(other.swap_calls.size(), 0);
    dist_calls.resize(other.dist_calls.size(), 0);
  }
  for (std::size_t i = 0; i < other.swap_calls.size(); ++i) swap_calls[i] += other.swap_calls[i];
  for (std::size_t i = 0; i < other.dist_calls.size(); ++i) dist_calls[i] += other.dist_calls[i];
}

TimeStep sample_T0(double p_gen, double u) {
  if (!(p_gen > 0.0 && p_gen <= 1.0)) throw std::invalid_argument("p_gen must be in (0, 1]");
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("u must be in [0, 1)");
  if (p_gen == 1.0) return 1;
  const double t = std::ceil(std::log1p(-u) / std::log1p(-p_gen));
  constexpr double kLargest = 0x1.0p62;
  if (!(t < kLargest)) return static_cast<TimeStep>(kLargest);
  return std::max<TimeStep>(1, static_cast<TimeStep>(t));
}

TimeStep sample_T0(double p_gen, RngStream& rng) { return sample_T0(p_gen, rng.uniform()); }

LinkSample sample_swap(int level, const ProtocolParams& params, RngStream& rng, AttemptCounters* counters) {
  require_level(level, params);
  if (counters) ++counters->swap_calls[static_cast<std::size_t>(level)];
  if (level == 0) return {sample_T0(params.p_gen, rng), params.initial_werner()};

  TimeStep elapsed = 0;
  for (;;) {
    const LinkSample a = sample_dist(level, params.d, params, rng, counters);
    const LinkSample b = sample_dist(level, params.d, params, rng, counters);
    const LinkSample swapped =
        params.include_comm_time ? g_with_comm_time(a, b, params.t_coh, level - 1) : g(a, b, params.t_coh);
    elapsed += swapped.t;
    if (rng.uniform() < params.p_swap) return {elapsed, swapped.w};
  }
}

LinkSample sample_dist(int level, int d_remaining, const ProtocolParams& params, RngStream& rng,
                       AttemptCounters* counters) {
  require_level(level, params);
  if (level < 1) throw std::invalid_argument("sample_dist needs level >= 1");
  if (d_remaining < 0 || d_remaining > params.d) throw std::invalid_argument("d_remaining outside [0, d]");
  if (counters && d_remaining == params.d) ++counters->dist_calls[static_cast<std::size_t>(level)];
  if (d_remaining == 0) return sample_swap(level - 1, params, rng, counters);

  TimeStep elapsed = 0;
  for (;;) {
    const LinkSample a = sample_dist(level, d_remaining - 1, params, rng, counters);
    const LinkSample b = sample_dist(level, d_remaining - 1, params, rng, counters);
    const AlignedPair aligned = align_for_distillation(a, b, params.t_coh);
    const TimeStep t = g_T(a.t, b.t);
    elapsed += t;
    if (rng.uniform() < p_dist(aligned.a, aligned.b)) return {elapsed, w_dist(aligned.a, aligned.b)};
  }
}

std::int64_t required_samples(double eps, double z) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must be in (0, 1)");
  if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("z must be in (0, 1)");
  return static_cast<std::int64_t>(std::ceil(-std::log(z / 2.0) / (2.0 * eps * eps)));
}

double dkw_epsilon(std::int64_t m, double z) {
  if (m < 1) throw std::invalid_argument("m must be at least 1");
  if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("z must be in (0, 1)");
  return std::sqrt(-std::log(z / 2.0) / (2.0 * static_cast<double>(m)));
}

CampaignResult run_campaign(const ProtocolParams& params, std::int64_t m, std::uint64_t seed,
                            const CampaignOptions& options) {
  params.validate();
  if (m < 1) throw std::invalid_argument("sample count must be at least 1");
  if (options.display_cap < 1) throw std::invalid_argument("display cap must be at least 1");

  CampaignResult result;
  result.seed = seed;
  result.m = m;
  result.z = options.z;
  result.dkw_eps = dkw_epsilon(m, options.z);
  result.samples.assign(static_cast<std::size_t>(m), LinkSample{0, WernerParam(0.0)});
  result.attempts = AttemptCounters(params.n);

  unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, m));
  const RngStream root(seed);
  std::vector<AttemptCounters> counters(workers, AttemptCounters(params.n));
  auto run_worker = [&](unsigned w) {
    for (std::int64_t i = w; i < m; i += workers) {
      RngStream rng = root.substream(static_cast<std::uint64_t>(i));
      result.samples[static_cast<std::size_t>(i)] = sample_swap(params.n, params, rng, &counters[w]);
    }
  };
  if (workers == 1) {
    run_worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
  }
  for (const auto& c : counters) result.attempts.merge(c);

  // Aggregation runs in index order so the result is independent of workers.
  TimeStep largest = 0;
  double sum = 0.0;
  std::map<TimeStep, double> werner_sums;
  for (const LinkSample& s : result.samples) {
    sum += static_cast<double>(s.t);
    if (s.t > options.display_cap) {
      ++result.overflow;
    } else {
      largest = std::max(largest, s.t);
    }
    werner_sums[s.t] += s.w.value();
    ++result.werner_by_time[s.t].count;
  }
  for (auto& [t, stat] : result.werner_by_time) stat.mean = werner_sums[t] / static_cast<double>(stat.count);

  const double mean = sum / static_cast<double>(m);
  double squares = 0.0;
  for (const LinkSample& s : result.samples) {
    const double dev = static_cast<double>(s.t) - mean;
    squares += dev * dev;
  }
  result.sample_mean_time = mean;
  result.standard_error =
      m > 1 ? std::sqrt(squares / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;

  std::vector<double> counts(static_cast<std::size_t>(largest) + 1, 0.0);
  for (const LinkSample& s : result.samples)
    if (s.t <= options.display_cap) counts[static_cast<std::size_t>(s.t)] += 1.0;
  double running = 0.0;
  for (double& c : counts) {
    running += c;
    c = running / static_cast<double>(m);
  }
  result.ecdf = TruncatedCdf(std::move(counts));
  return result;
}

}  // namespace repchain
