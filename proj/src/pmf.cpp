#include "repchain/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "fft_convolution.hpp"

namespace repchain {

namespace {

constexpr double kMassSlack = 1e-9;

std::size_t first_nonzero(std::span<const double> v) {
  const auto it = std::find_if(v.begin(), v.end(), [](double x) { return x != 0.0; });
  return static_cast<std::size_t>(it - v.begin());
}

// Inverse of the power series f (f[0] == 1) modulo z^n, by Newton iteration
// g <- g + g (1 - f g). For f = 1 - c m with m >= 0 the correction terms are
// sums of nonnegative products, so no cancellation builds up.
std::vector<double> series_inverse(std::span<const double> f, std::size_t n) {
  std::vector<double> g{1.0 / f[0]};
  std::vector<double> residual;
  std::vector<double> correction;
  std::size_t known = 1;
  while (known < n) {
    const std::size_t target = std::min(2 * known, n);
    residual.assign(target, 0.0);
    detail::fft_convolve(f.first(std::min(f.size(), target)), g, residual);
    // 1 - f g vanishes below `known` by construction.
    for (std::size_t i = 0; i < known; ++i) residual[i] = 0.0;
    for (std::size_t i = known; i < target; ++i) residual[i] = -residual[i];
    correction.assign(target, 0.0);
    detail::fft_convolve(g, residual, correction);
    g.resize(target);
    for (std::size_t i = known; i < target; ++i) g[i] = correction[i];
    known = target;
  }
  return g;
}

TruncatedPmf compound_series(const TruncatedPmf& summand, double p) {
  const std::size_t len = summand.size();
  std::vector<double> denom(len);
  const auto m = summand.probs();
  for (std::size_t i = 0; i < len; ++i) denom[i] = -(1.0 - p) * m[i];
  denom[0] = 1.0;
  const std::vector<double> inv = series_inverse(denom, len);
  std::vector<double> out(len);
  detail::fft_convolve(m, inv, out);
  for (double& x : out) x *= p;
  detail::clamp_roundoff(out);
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(std::min(first_nonzero(m), len)), 0.0);
  return TruncatedPmf(std::move(out));
}

TruncatedPmf compound_iterative(const TruncatedPmf& summand, double p, const CompoundOptions& options) {
  const std::size_t len = summand.size();
  const TimeStep t_trunc = summand.t_trunc();
  const TimeStep max_terms = options.max_terms > 0 ? options.max_terms : t_trunc;
  const auto m = summand.probs();
  const std::size_t lowest = first_nonzero(m);

  std::vector<double> result(len, 0.0);
  std::vector<double> conditional(m.begin(), m.end());
  std::vector<double> next(len);

  double weight = p;
  for (std::size_t t = 0; t < len; ++t) result[t] = weight * conditional[t];
  if (options.on_conditional) options.on_conditional(1, conditional);

  const double q = 1.0 - p;
  if (q == 0.0 || lowest >= len) return TruncatedPmf(std::move(result));

  detail::KernelConvolver kernel(m, len);
  double tail = 1.0;  // (1 - p)^(k - 1)
  for (TimeStep k = 2; k <= max_terms; ++k) {
    tail *= q;
    if (options.tail_tolerance > 0.0 && tail <= options.tail_tolerance) break;
    // k summands of at least `lowest` each.
    const auto support_start = static_cast<std::size_t>(k) * lowest;
    if (support_start >= len) break;
    kernel.apply(conditional, next);
    detail::clamp_roundoff(next);
    std::fill(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(support_start), 0.0);
    conditional.swap(next);
    weight *= q;
    for (std::size_t t = support_start; t < len; ++t) result[t] += weight * conditional[t];
    if (options.on_conditional) options.on_conditional(k, conditional);
  }
  return TruncatedPmf(std::move(result));
}

void require_probability(double p, const char* what) {
  if (!(p > 0.0 && p <= 1.0)) {
    std::ostringstream msg;
    msg << what << " must lie in (0, 1], got " << p;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

TruncatedPmf::TruncatedPmf(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("TruncatedPmf needs at least one entry");
  detail::clamp_roundoff(probs_);
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (!(total <= 1.0 + kMassSlack)) {
    throw NumericalError("TruncatedPmf total mass " + std::to_string(total) + " exceeds 1");
  }
}

TruncatedPmf TruncatedPmf::zeros(TimeStep t_trunc) {
  if (t_trunc < 0) throw std::invalid_argument("t_trunc must be nonnegative");
  return TruncatedPmf(std::vector<double>(static_cast<std::size_t>(t_trunc) + 1, 0.0));
}

TruncatedPmf TruncatedPmf::point_mass(TimeStep at, TimeStep t_trunc) {
  if (at < 0 || at > t_trunc) throw std::invalid_argument("point mass outside the truncation window");
  std::vector<double> probs(static_cast<std::size_t>(t_trunc) + 1, 0.0);
  probs[static_cast<std::size_t>(at)] = 1.0;
  return TruncatedPmf(std::move(probs));
}

TruncatedCdf::TruncatedCdf(std::vector<double> cum) : cum_(std::move(cum)) {
  if (cum_.empty()) throw std::invalid_argument("TruncatedCdf needs at least one entry");
  double prev = 0.0;
  for (double& c : cum_) {
    if (c < 0.0 && c > -1e-12) c = 0.0;
    if (c > 1.0 && c <= 1.0 + kMassSlack) c = 1.0;
    if (!(c >= 0.0 && c <= 1.0)) throw NumericalError("cumulative probability outside [0, 1]");
    if (c < prev) {
      if (prev - c > 1e-12) throw NumericalError("cumulative probabilities must be nondecreasing");
      c = prev;
    }
    prev = c;
  }
}

TruncatedCdf geometric_cdf(double p, TimeStep t_trunc) {
  require_probability(p, "success probability");
  if (t_trunc < 1) throw std::invalid_argument("t_trunc must be at least 1");
  std::vector<double> cum(static_cast<std::size_t>(t_trunc) + 1);
  cum[0] = 0.0;
  if (p == 1.0) {
    std::fill(cum.begin() + 1, cum.end(), 1.0);
  } else {
    const double log_fail = std::log1p(-p);
    for (std::size_t t = 1; t < cum.size(); ++t) cum[t] = -std::expm1(static_cast<double>(t) * log_fail);
  }
  return TruncatedCdf(std::move(cum));
}

TruncatedPmf geometric_pmf(double p, TimeStep t_trunc) {
  require_probability(p, "success probability");
  if (t_trunc < 1) throw std::invalid_argument("t_trunc must be at least 1");
  std::vector<double> probs(static_cast<std::size_t>(t_trunc) + 1, 0.0);
  probs[1] = p;
  if (p < 1.0) {
    const double log_fail = std::log1p(-p);
    for (std::size_t t = 2; t < probs.size(); ++t) probs[t] = p * std::exp(static_cast<double>(t - 1) * log_fail);
  }
  return TruncatedPmf(std::move(probs));
}

TruncatedPmf pmf_from_cdf(const TruncatedCdf& cdf) {
  const auto c = cdf.cum();
  std::vector<double> probs(c.size());
  probs[0] = c[0];
  for (std::size_t t = 1; t < c.size(); ++t) probs[t] = c[t] - c[t - 1];
  return TruncatedPmf(std::move(probs));
}

TruncatedCdf cdf_from_pmf(const TruncatedPmf& pmf) {
  const auto p = pmf.probs();
  std::vector<double> cum(p.size());
  std::partial_sum(p.begin(), p.end(), cum.begin());
  return TruncatedCdf(std::move(cum));
}

TruncatedPmf max_of_two_iid(const TruncatedCdf& cdf) {
  const auto c = cdf.cum();
  std::vector<double> probs(c.size());
  probs[0] = c[0] * c[0];
  // c^2 - d^2 written as a product to avoid cancellation in the tail.
  for (std::size_t t = 1; t < c.size(); ++t) probs[t] = (c[t] - c[t - 1]) * (c[t] + c[t - 1]);
  return TruncatedPmf(std::move(probs));
}

TruncatedPmf max_of_two_iid(const TruncatedPmf& pmf) {
  const auto p = pmf.probs();
  std::vector<double> probs(p.size());
  double below = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    probs[t] = p[t] * (2.0 * below + p[t]);
    below += p[t];
  }
  return TruncatedPmf(std::move(probs));
}

TruncatedPmf convolve(const TruncatedPmf& a, const TruncatedPmf& b) {
  if (a.t_trunc() != b.t_trunc()) throw std::invalid_argument("convolve: mismatched truncation times");
  std::vector<double> out(a.size());
  detail::fft_convolve(a.probs(), b.probs(), out);
  detail::clamp_roundoff(out);
  // The sum is zero below the sum of the lowest supports.
  const std::size_t lowest = first_nonzero(a.probs()) + first_nonzero(b.probs());
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(std::min(lowest, out.size())), 0.0);
  return TruncatedPmf(std::move(out));
}

TruncatedPmf geometric_compound(const TruncatedPmf& summand, double p, const CompoundOptions& options) {
  require_probability(p, "compound success probability");
  if (summand[0] != 0.0) throw std::invalid_argument("geometric_compound: summand must have no mass at t = 0");
  if (options.tail_tolerance < 0.0) throw std::invalid_argument("tail_tolerance must be nonnegative");
  switch (options.method) {
    case CompoundMethod::iterative:
      return compound_iterative(summand, p, options);
    case CompoundMethod::series:
      if (options.on_conditional)
        throw std::invalid_argument("conditional distributions are only available from the iterative route");
      return compound_series(summand, p);
  }
  throw std::invalid_argument("unknown compound method");
}

double empirical_mean(const TruncatedCdf& cdf) {
  const auto c = cdf.cum();
  double mean = 0.0;
  for (std::size_t t = 1; t < c.size(); ++t) mean += 1.0 - c[t - 1];
  return mean;
}

double captured_mass(const TruncatedPmf& pmf) {
  const auto p = pmf.probs();
  return std::accumulate(p.begin(), p.end(), 0.0);
}

}  // namespace repchain
