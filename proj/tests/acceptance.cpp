// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "repchain/deterministic.hpp"
#include "repchain/montecarlo.hpp"

using namespace repchain;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

ProtocolParams chain(double p_gen, double p_swap, int n, TimeStep t_trunc = 1) {
  ProtocolParams p;
  p.p_gen = p_gen;
  p.p_swap = p_swap;
  p.n = n;
  p.t_trunc = t_trunc;
  return p;
}

double mean_fidelity(const CampaignResult& r, double* se) {
  double sum = 0.0, squares = 0.0;
  for (const auto& s : r.samples) {
    const double f = fidelity_from_werner(s.w);
    sum += f;
    squares += f * f;
  }
  const double m = static_cast<double>(r.samples.size());
  const double mean = sum / m;
  *se = std::sqrt(std::max(0.0, squares / m - mean * mean) / m);
  return mean;
}

// 1. Exact-rational oracle at n = 1, t_trunc = 64.
void exact_oracle(Verdict& v) {
  double worst = 0.0;
  for (const char* p_gen : {"1/10", "1/2", "9/10"}) {
    for (const char* p_swap : {"1/2", "9/10"}) {
      const mpq_class pg(p_gen), ps(p_swap);
      const auto exact = oracle::one_level(pg, ps, 64);
      const auto dists = compute_waiting_time(chain(pg.get_d(), ps.get_d(), 1, 64));
      for (std::size_t t = 0; t < exact.size(); ++t)
        worst = std::max(worst, std::abs(dists.top_pmf()[static_cast<TimeStep>(t)] - exact[t].get_d()));
    }
  }
  v.detail << "max |pmf - exact| = " << worst;
  v.require(worst <= 1e-12, "1e-12 per entry");
}

// 2. Deterministic links and the N = 16 ratio.
void degenerate_chain(Verdict& v) {
  int bad = 0;
  for (int n = 0; n <= 13; ++n) {
    const auto dists = compute_waiting_time(chain(1, 1, n, 4));
    if (dists.top_pmf()[1] != 1.0) ++bad;
    CampaignOptions o;
    o.workers = 1;
    const CampaignResult r = run_campaign(chain(1, 1, n), n <= 8 ? 200 : 10, 1, o);
    for (const auto& s : r.samples)
      if (s.t != 1) ++bad;
  }
  ProtocolParams p = chain(1, 1, 4);
  p.t_trunc = choose_truncation(p, 0.99);
  const double ratio = mean_bounds(p).lower / three_over_two_estimate(p);
  v.detail << "Pr(T_n = 1) != 1 in " << bad << " cases for n <= 13; N = 16 ratio " << ratio;
  v.require(bad == 0, "Pr(T_n = 1) = 1");
  v.require(std::abs(ratio - 0.2) <= 0.01, "ratio within 0.2 +- 0.01");
}

// 3. Sequential chain means against (2/p_swap)^n / p_gen.
void upper_analytics(Verdict& v) {
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n) {
    for (double p_swap : {0.5, 1.0}) {
      for (double p_gen : {0.1, 0.5}) {
        ProtocolParams p = chain(p_gen, p_swap, n);
        p.t_trunc = choose_truncation(p, 0.999);
        const double mean = empirical_mean(compute_upper_bound_distribution(p).top_cdf());
        worst = std::max(worst, std::abs(mean / upper_chain_mean(p) - 1.0));
      }
    }
  }
  v.detail << "max relative error " << worst;
  v.require(worst <= 0.01, "within 1%");
}

// 4. Pointwise dominance, and order preservation under max, sums and compound sums.
void dominance(Verdict& v) {
  std::int64_t violations = 0, points = 0;
  auto count = [&](std::span<const double> smaller, std::span<const double> larger) {
    for (std::size_t t = 0; t < smaller.size(); ++t) {
      ++points;
      if (smaller[t] < larger[t] - 1e-12) ++violations;
    }
  };
  for (int n = 1; n <= 4; ++n) {
    for (double p_swap : {0.5, 1.0}) {
      for (double p_gen : {0.1, 0.5}) {
        ProtocolParams p = chain(p_gen, p_swap, n);
        p.t_trunc = choose_truncation(p, 0.999);
        count(compute_waiting_time(p).top_cdf().cum(), compute_upper_bound_distribution(p).top_cdf().cum());
      }
    }
  }
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t len = 121;
  for (int trial = 0; trial < 300; ++trial) {
    const TruncatedPmf x(oracle::random_pmf(rng, len, 1 + static_cast<std::size_t>(u(rng) * 20)));
    count(cdf_from_pmf(max_of_two_iid(cdf_from_pmf(x))).cum(), cdf_from_pmf(convolve(x, x)).cum());
    std::vector<double> b = oracle::random_pmf(rng, len, 1 + static_cast<std::size_t>(u(rng) * 5));
    b[0] = u(rng);
    double total = 0.0;
    for (double e : b) total += e;
    for (double& e : b) e /= total;
    const TruncatedPmf y = convolve(x, TruncatedPmf(b));
    TruncatedPmf xk = x, yk = y;
    for (int k = 2; k <= 4; ++k) {
      xk = convolve(xk, x);
      yk = convolve(yk, y);
      count(cdf_from_pmf(xk).cum(), cdf_from_pmf(yk).cum());
    }
    const double q = 0.1 + 0.9 * u(rng);
    count(cdf_from_pmf(geometric_compound(x, q)).cum(), cdf_from_pmf(geometric_compound(y, q)).cum());
  }
  v.detail << violations << " violations in " << points << " points";
  v.require(violations == 0, "zero violations");
}

// 5. Captured mass at the Markov truncation.
void coverage(Verdict& v) {
  double lowest = 1.0;
  for (int n = 0; n <= 3; ++n) {
    for (double p_swap : {0.5, 0.9}) {
      for (double p_gen : {0.1, 0.5}) {
        ProtocolParams p = chain(p_gen, p_swap, n);
        p.t_trunc = choose_truncation(p, 0.99);
        lowest = std::min(lowest, captured_mass(compute_waiting_time(p).top_pmf()));
      }
    }
  }
  v.detail << "lowest captured mass " << lowest;
  v.require(lowest >= 0.99, "mass >= 0.99");
}

// 6. ECDF vs CDF at eps = 0.02, z = 0.001.
void cross_validation(Verdict& v) {
  const double eps = 0.02, z = 0.001;
  const std::int64_t m = required_samples(eps, z);
  v.detail << "m = " << m << ";";
  for (int n = 1; n <= 3; ++n) {
    ProtocolParams p = chain(0.1, 0.5, n);
    p.t_trunc = choose_truncation(p, 0.999);
    const auto dists = compute_waiting_time(p);
    const CampaignResult r = run_campaign(p, m, 20240 + static_cast<std::uint64_t>(n), {.z = z});
    std::vector<TimeStep> times;
    for (const auto& s : r.samples) times.push_back(s.t);
    std::sort(times.begin(), times.end());
    double distance = 0.0;
    for (TimeStep t = 1; t <= p.t_trunc; ++t) {
      const double ecdf = static_cast<double>(std::upper_bound(times.begin(), times.end(), t) - times.begin()) /
                          static_cast<double>(m);
      distance = std::max(distance, std::abs(ecdf - dists.top_cdf()[t]));
    }
    // Past the window both functions lie between their value at t_trunc and 1.
    distance += 1.0 - captured_mass(dists.top_pmf());
    v.detail << " N = " << (1 << n) << ": " << distance;
    v.require(distance <= eps, "N = " + std::to_string(1 << n));
  }
}

// 7. Werner profile and fidelity properties.
void fidelity(Verdict& v) {
  // (a)
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n) {
    for (double p_gen : {0.2, 0.7}) {
      ProtocolParams p = chain(p_gen, 1.0, n, 256);
      p.w0 = 0.93;
      const auto dists = compute_waiting_time(p);
      double expected = p.w0;
      for (int i = 0; i < n; ++i) expected *= expected;
      for (WernerMethod method : {WernerMethod::direct, WernerMethod::convolved}) {
        DeterministicOptions o;
        o.werner = method;
        if (method == WernerMethod::direct && n > 2) continue;
        const auto profile = compute_werner_profile(p, dists, o);
        for (TimeStep t = 1; t <= p.t_trunc; ++t)
          if (auto w = profile.at(n, t)) worst = std::max(worst, std::abs(*w / expected - 1.0));
      }
    }
  }
  v.detail << "(a) max relative deviation " << worst << ";";
  v.require(worst <= 1e-12, "(a) w0^(2^n) to round-off");

  // (b)
  const std::int64_t m = 250000;
  const double f0 = 0.95;
  bool gain = false, loss = false;
  for (double t_coh : {1000.0, 50.0}) {
    double f[2], se[2];
    for (int d : {0, 1}) {
      ProtocolParams p = chain(0.1, 0.5, 2);
      p.w0 = werner_from_fidelity(f0).value();
      p.t_coh = t_coh;
      p.d = d;
      f[d] = mean_fidelity(run_campaign(p, m, 7), &se[d]);
    }
    const double margin = 5.0 * std::hypot(se[0], se[1]);
    v.detail << " (b) T_coh " << t_coh << ": F(d=0) " << f[0] << ", F(d=1) " << f[1] << ";";
    if (t_coh > 100) gain = f[1] > f[0] + margin;
    else loss = f[1] < f[0] - margin;
  }
  v.require(gain, "(b) d = 1 above d = 0 at long T_coh");
  v.require(loss, "(b) d = 1 below d = 0 at short T_coh");

  // (c)
  ProtocolParams base = chain(0.1, 0.5, 2);
  base.w0 = werner_from_fidelity(f0).value();
  const CampaignResult reference = run_campaign(base, 20000, 99);
  int mismatches = 0;
  for (double t_coh : {1000.0, 50.0, 1.0}) {
    ProtocolParams p = base;
    p.t_coh = t_coh;
    const CampaignResult r = run_campaign(p, 20000, 99);
    for (std::size_t i = 0; i < r.samples.size(); ++i) mismatches += r.samples[i].t != reference.samples[i].t;
  }
  v.detail << " (c) " << mismatches << " differing times";
  v.require(mismatches == 0, "(c) times independent of T_coh");
}

// 8. Relative mean increase from communication time, N = 16.
void communication_time(Verdict& v) {
  const std::int64_t m = 250000;
  double increase[2];
  int i = 0;
  for (double p_gen : {0.1, 0.9}) {
    ProtocolParams p = chain(p_gen, 0.5, 4);
    const double off = run_campaign(p, m, 11).sample_mean_time;
    p.include_comm_time = true;
    const double on = run_campaign(p, m, 11).sample_mean_time;
    increase[i++] = on / off - 1.0;
    v.detail << "p_gen " << p_gen << ": +" << 100 * increase[i - 1] << "%; ";
  }
  v.require(increase[0] < increase[1], "smaller increase at p_gen 0.1");
}

// 9. N = 8192 at t_trunc 20000.
void scaling(Verdict& v) {
  const auto dists = compute_waiting_time(chain(0.1, 0.9, 13, 20000));
  v.detail << "captured mass " << captured_mass(dists.top_pmf());
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<void(Verdict&)> run;
  };
  const Criterion criteria[] = {
      {1, "exact oracle", 1, exact_oracle},
      {2, "degenerate chain", 1, degenerate_chain},
      {3, "upper bound mean", 30, upper_analytics},
      {4, "stochastic dominance", 30, dominance},
      {5, "coverage", 120, coverage},
      {6, "engine cross-validation", 300, cross_validation},
      {7, "fidelity behavior", 600, fidelity},
      {8, "communication time", 600, communication_time},
      {9, "scaling N = 8192", 50, scaling},
  };
  bool all = true;
  for (const auto& c : criteria) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.limit_seconds) v.require(false, "runtime limit " + std::to_string(c.limit_seconds) + " s");
    all &= v.pass;
    std::printf("criterion %d %s: %s (%.2f s) %s\n", c.id, c.name, v.pass ? "PASS" : "FAIL", seconds,
                v.detail.str().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
