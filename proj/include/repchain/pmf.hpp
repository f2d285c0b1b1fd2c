#pragma once

// Truncated distributions of nonnegative-integer random variables and the
// composition primitives used by the waiting-time recursions: maximum of two
// i.i.d. copies, convolution, and the geometric compound sum.
//
// Arrays are indexed from t = 0 up to and including t_trunc. Mass beyond
// t_trunc is dropped, never renormalized.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace repchain {

/// Discrete time in units of the single-segment communication time L0/c.
using TimeStep = std::int64_t;

/// Raised when a floating-point result leaves its valid range by more than
/// round-off can explain.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Probability mass Pr(X = t) for t in {0, ..., t_trunc}.
class TruncatedPmf {
 public:
  TruncatedPmf() = default;

  /// Takes ownership of `probs` (size t_trunc + 1). Entries in (-1e-12, 0)
  /// are clamped to zero; anything more negative, or a total above 1 + 1e-9,
  /// throws.
  explicit TruncatedPmf(std::vector<double> probs);

  static TruncatedPmf zeros(TimeStep t_trunc);
  static TruncatedPmf point_mass(TimeStep at, TimeStep t_trunc);

  TimeStep t_trunc() const { return static_cast<TimeStep>(probs_.size()) - 1; }
  std::size_t size() const { return probs_.size(); }
  double operator[](TimeStep t) const { return probs_[static_cast<std::size_t>(t)]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// Cumulative probability Pr(X <= t) for t in {0, ..., t_trunc}.
class TruncatedCdf {
 public:
  TruncatedCdf() = default;

  /// Validates monotonicity and the [0, 1] range (round-off up to 1e-9 above
  /// one is clamped).
  explicit TruncatedCdf(std::vector<double> cum);

  TimeStep t_trunc() const { return static_cast<TimeStep>(cum_.size()) - 1; }
  std::size_t size() const { return cum_.size(); }
  double operator[](TimeStep t) const { return cum_[static_cast<std::size_t>(t)]; }
  std::span<const double> cum() const { return cum_; }

 private:
  std::vector<double> cum_;
};

/// cum[t] = 1 - (1 - p)^t. Requires 0 < p <= 1 and t_trunc >= 1.
TruncatedCdf geometric_cdf(double p, TimeStep t_trunc);
/// p (1 - p)^(t - 1) evaluated directly, so tail entries keep full relative
/// precision (differencing the CDF loses it once the CDF is near one).
TruncatedPmf geometric_pmf(double p, TimeStep t_trunc);

TruncatedPmf pmf_from_cdf(const TruncatedCdf& cdf);
TruncatedCdf cdf_from_pmf(const TruncatedPmf& pmf);

/// Distribution of max(X, X') for i.i.d. X, X' with the given CDF.
TruncatedPmf max_of_two_iid(const TruncatedCdf& cdf);
/// Same from the PMF: Pr(X = t) (2 Pr(X < t) + Pr(X = t)), accurate in the tail.
TruncatedPmf max_of_two_iid(const TruncatedPmf& pmf);

/// Distribution of X + Y truncated to the common t_trunc (FFT based).
TruncatedPmf convolve(const TruncatedPmf& a, const TruncatedPmf& b);

enum class CompoundMethod {
  /// Builds the k-fold convolutions one at a time; the only route that can
  /// report the per-k conditional distributions.
  iterative,
  /// Evaluates p m / (1 - (1 - p) m) as a truncated power series.
  series,
};

/// Receives Pr(sum of k summands = t) for t in {0, ..., t_trunc}, in order of
/// increasing k starting at k = 1. The span is only valid during the call.
using ConditionalVisitor = std::function<void(TimeStep k, std::span<const double> conditional)>;

struct CompoundOptions {
  CompoundMethod method = CompoundMethod::iterative;
  /// Iterative route: stop once (1 - p)^(k - 1) <= tail_tolerance, which
  /// bounds every omitted entry by the tolerance. Zero keeps the full sum.
  double tail_tolerance = 0.0;
  /// Iterative route: highest k to include; zero means t_trunc.
  TimeStep max_terms = 0;
  ConditionalVisitor on_conditional;
};

/// Pr(sum_{j=1}^{K} X_j = t) with K ~ geometric(p) and X_j i.i.d. `summand`.
/// Requires summand[0] == 0, which makes the result exact on the whole
/// truncated domain even though only k <= t_trunc terms are summed.
TruncatedPmf geometric_compound(const TruncatedPmf& summand, double p,
                                const CompoundOptions& options = {});

/// sum_{t=1}^{t_trunc} Pr(X >= t), the mean restricted to the window.
double empirical_mean(const TruncatedCdf& cdf);

/// Total probability inside the truncation window.
double captured_mass(const TruncatedPmf& pmf);

}  // namespace repchain
