#include <doctest.h>

#include <random>

#include "fft_convolution.hpp"
#include "oracles.hpp"
#include "repchain/pmf.hpp"

using namespace repchain;

namespace {

TruncatedPmf pmf(std::vector<double> v) { return TruncatedPmf(std::move(v)); }

// Absolute comparison; doctest's Approx is relative.
void check_close(std::span<const double> got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  CHECK(worst <= tol);
}

}  // namespace

TEST_CASE("geometric cdf") {
  check_close(geometric_cdf(1.0, 3).cum(), {0, 1, 1, 1}, 0);
  check_close(geometric_cdf(0.5, 3).cum(), {0, 0.5, 0.75, 0.875}, 1e-15);
  check_close(geometric_cdf(0.1, 2).cum(), {0, 0.1, 0.19}, 1e-15);
  CHECK_THROWS_AS(geometric_cdf(0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(geometric_cdf(1.5, 3), std::invalid_argument);
  CHECK_THROWS_AS(geometric_cdf(0.5, 0), std::invalid_argument);
}

TEST_CASE("pmf and cdf conversions") {
  check_close(pmf_from_cdf(TruncatedCdf({0, 1, 1})).probs(), {0, 1, 0}, 0);
  check_close(pmf_from_cdf(TruncatedCdf({0, 0.5, 0.75})).probs(), {0, 0.5, 0.25}, 0);
  check_close(pmf_from_cdf(TruncatedCdf({0, 0, 0})).probs(), {0, 0, 0}, 0);
  check_close(cdf_from_pmf(pmf({0, 1, 0})).cum(), {0, 1, 1}, 0);
  check_close(cdf_from_pmf(pmf({0, 0.5, 0.25})).cum(), {0, 0.5, 0.75}, 0);
  check_close(cdf_from_pmf(pmf({0, 0, 0})).cum(), {0, 0, 0}, 0);

  CHECK_THROWS(TruncatedCdf({0, 0.5, 0.4}));
  CHECK_THROWS(TruncatedCdf({0, 1.5}));
  CHECK_THROWS(pmf({0, 0.7, 0.7}));
  CHECK_THROWS(pmf({0, -0.1, 0.5}));
}

TEST_CASE("round trip pmf -> cdf -> pmf") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracle::random_pmf(rng, 200, 1 + trial * 3, 0.5 + trial / 100.0);
    check_close(pmf_from_cdf(cdf_from_pmf(pmf(p))).probs(), p, 1e-12);
  }
}

TEST_CASE("max of two iid copies") {
  check_close(max_of_two_iid(TruncatedCdf({0, 1, 1})).probs(), {0, 1, 0}, 0);
  check_close(max_of_two_iid(geometric_cdf(0.5, 2)).probs(), {0, 0.25, 0.3125}, 1e-15);
  check_close(max_of_two_iid(TruncatedCdf({0, 0.1, 0.19})).probs(), {0, 0.01, 0.0261}, 1e-15);
}

TEST_CASE("convolution examples") {
  check_close(convolve(pmf({0, 1, 0, 0}), pmf({0, 1, 0, 0})).probs(), {0, 0, 1, 0}, 1e-15);
  check_close(convolve(pmf({0, 0.5, 0.25, 0}), pmf({0, 0.5, 0.25, 0})).probs(), {0, 0, 0.25, 0.25}, 1e-15);
  const std::vector<double> q = {0, 0.2, 0.3, 0.1, 0.4};
  check_close(convolve(pmf({1, 0, 0, 0, 0}), pmf(q)).probs(), q, 1e-15);
  CHECK_THROWS_AS(convolve(pmf({0, 1}), pmf({0, 1, 0})), std::invalid_argument);
}

TEST_CASE("FFT convolution matches schoolbook up to t_trunc 4096") {
  std::mt19937_64 rng(5);
  for (std::size_t t_trunc : {1u, 2u, 7u, 64u, 255u, 1000u, 4096u}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto a = oracle::random_pmf(rng, t_trunc + 1, std::max<std::size_t>(1, t_trunc / (trial + 1)));
      const auto b = oracle::random_pmf(rng, t_trunc + 1, std::max<std::size_t>(1, t_trunc / (3 - trial)), 0.8);
      INFO("t_trunc = " << t_trunc);
      check_close(convolve(pmf(a), pmf(b)).probs(), oracle::schoolbook(a, b), 1e-10);
    }
  }
}

TEST_CASE("convolution commutes and associates") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t len = 40 + trial * 10;
    const auto a = pmf(oracle::random_pmf(rng, len, 5 + trial));
    const auto b = pmf(oracle::random_pmf(rng, len, 10 + trial, 0.9));
    const auto c = pmf(oracle::random_pmf(rng, len, 3 + trial, 0.7));
    const auto ab = convolve(a, b);
    const auto ba = convolve(b, a);
    check_close(ab.probs(), {ba.probs().begin(), ba.probs().end()}, 1e-10);
    const auto left = convolve(ab, c);
    const auto right = convolve(a, convolve(b, c));
    check_close(left.probs(), {right.probs().begin(), right.probs().end()}, 1e-10);
  }
}

TEST_CASE("convolution only loses mass through truncation") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = pmf(oracle::random_pmf(rng, 50, 5 + trial, 0.95));
    const auto b = pmf(oracle::random_pmf(rng, 50, 10 + trial, 0.8));
    CHECK(captured_mass(convolve(a, b)) <= captured_mass(a) * captured_mass(b) + 1e-9);
  }
}

TEST_CASE("kernel convolver agrees with one-shot FFT convolution") {
  std::mt19937_64 rng(3);
  const auto k = oracle::random_pmf(rng, 300, 40);
  const auto x = oracle::random_pmf(rng, 300, 200);
  detail::KernelConvolver conv(k, 300);
  std::vector<double> out(300);
  conv.apply(x, out);
  check_close(out, oracle::schoolbook(k, x), 1e-12);
}

TEST_CASE("geometric compound examples") {
  std::vector<double> point(11, 0.0);
  point[1] = 1.0;
  const auto result = geometric_compound(pmf(point), 0.5);
  for (TimeStep t = 1; t <= 10; ++t) CHECK(result[t] == doctest::Approx(std::pow(0.5, t)).epsilon(1e-13));

  const auto m = max_of_two_iid(geometric_cdf(0.5, 2));
  const auto two = geometric_compound(m, 0.5);
  CHECK(two[1] == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(two[2] == doctest::Approx(0.171875).epsilon(1e-14));

  CHECK_THROWS_AS(geometric_compound(pmf({0.5, 0.5}), 0.5), std::invalid_argument);
  CHECK_THROWS_AS(geometric_compound(pmf({0, 1}), 0.0), std::invalid_argument);
}

TEST_CASE("geometric compound matches exact k-summation") {
  for (const char* p_text : {"1/10", "1/2", "9/10"}) {
    const mpq_class p(p_text);
    const double p_d = p.get_d();
    const auto exact_m = oracle::max_of_two(oracle::geometric_pmf(mpq_class(3, 10), 40));
    std::vector<double> m(exact_m.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = exact_m[i].get_d();
    const auto exact = oracle::compound_by_k(exact_m, p);
    for (CompoundMethod method : {CompoundMethod::iterative, CompoundMethod::series}) {
      CompoundOptions o;
      o.method = method;
      const auto got = geometric_compound(pmf(m), p_d, o);
      double worst = 0.0;
      for (std::size_t t = 0; t < m.size(); ++t) worst = std::max(worst, std::abs(got[static_cast<TimeStep>(t)] - exact[t].get_d()));
      INFO("p = " << p_text);
      CHECK(worst <= 1e-13);
    }
  }
}

TEST_CASE("extending the k-sum past t_trunc changes nothing") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = pmf(oracle::random_pmf(rng, 80, 2 + trial * 5));
    CompoundOptions finite;
    CompoundOptions extended;
    extended.max_terms = 160;
    const auto a = geometric_compound(m, 0.3 + trial * 0.05, finite);
    const auto b = geometric_compound(m, 0.3 + trial * 0.05, extended);
    for (TimeStep t = 0; t <= 79; ++t) CHECK(a[t] == b[t]);
  }
}

TEST_CASE("series and iterative compound routes agree") {
  std::mt19937_64 rng(17);
  for (std::size_t len : {50u, 500u, 5000u}) {
    for (double p : {0.1, 0.5, 0.9, 1.0}) {
      const auto m = pmf(oracle::random_pmf(rng, len, len / 10 + 1));
      CompoundOptions it;
      CompoundOptions series;
      series.method = CompoundMethod::series;
      const auto a = geometric_compound(m, p, it);
      const auto b = geometric_compound(m, p, series);
      check_close(a.probs(), {b.probs().begin(), b.probs().end()}, 1e-12);
    }
  }
}

TEST_CASE("conditional distributions are streamed per k") {
  const auto m = max_of_two_iid(geometric_cdf(0.5, 30));
  CompoundOptions o;
  std::vector<double> rebuilt(31, 0.0);
  TimeStep last = 0;
  o.on_conditional = [&](TimeStep k, std::span<const double> c) {
    CHECK(k == last + 1);
    last = k;
    // k attempts take at least k steps.
    for (TimeStep t = 0; t < k && t <= 30; ++t) CHECK(c[static_cast<std::size_t>(t)] == 0.0);
    for (std::size_t t = 0; t < c.size(); ++t) rebuilt[t] += 0.4 * std::pow(0.6, static_cast<double>(k - 1)) * c[t];
  };
  const auto result = geometric_compound(m, 0.4, o);
  check_close(result.probs(), rebuilt, 1e-15);
  CompoundOptions bad = o;
  bad.method = CompoundMethod::series;
  CHECK_THROWS_AS(geometric_compound(m, 0.4, bad), std::invalid_argument);
}

TEST_CASE("empirical mean and captured mass") {
  CHECK(empirical_mean(TruncatedCdf({0, 1, 1})) == 1.0);
  CHECK(empirical_mean(geometric_cdf(0.5, 50)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(empirical_mean(geometric_cdf(0.5, 1)) == 1.0);
  CHECK(captured_mass(pmf({0, 1, 0})) == 1.0);
  CHECK(captured_mass(pmf({0, 0.5, 0.25})) == 0.75);
  CHECK(captured_mass(pmf({0, 0, 0})) == 0.0);
}
