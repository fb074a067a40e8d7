#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "qsolver/dist.hpp"
#include "qsolver/numerics.hpp"
#include "test_util.hpp"

using namespace qsolver;
using qsolver::test::Accumulator;
using qsolver::test::simpson;

namespace {

std::vector<DistSpec> all_families() {
  return {DistSpec::deterministic(2.0), DistSpec::exponential(1.5),
          DistSpec::erlang(3, 2.0),
          DistSpec::hyper_exponential({0.3, 0.7}, {0.5, 3.0}),
          DistSpec::uniform(0.5, 2.5)};
}

// test-side re-implementation of the closed-form transforms in long double,
// so the derivative oracle clears the double-precision difference floor
long double lst_ld(const DistSpec& d, long double s) {
  switch (d.family()) {
    case DistSpec::Family::deterministic:
      return std::exp(-s * static_cast<long double>(d.deterministic_value()));
    case DistSpec::Family::exponential: {
      long double mu = d.exponential_rate();
      return mu / (mu + s);
    }
    case DistSpec::Family::erlang: {
      long double mu = d.erlang_rate();
      long double acc = 1.0L;
      for (int i = 0; i < d.erlang_shape(); ++i) acc *= mu / (mu + s);
      return acc;
    }
    case DistSpec::Family::hyper_exponential: {
      long double acc = 0.0L;
      for (std::size_t i = 0; i < d.hyper_weights().size(); ++i) {
        long double mu = d.hyper_rates()[i];
        acc += static_cast<long double>(d.hyper_weights()[i]) * mu / (mu + s);
      }
      return acc;
    }
    case DistSpec::Family::uniform_interval: {
      long double mid = s * 0.5L * (d.uniform_lo() + d.uniform_hi());
      long double half = s * 0.5L * (d.uniform_hi() - d.uniform_lo());
      long double shc;
      if (std::abs(half) < 1e-5L) {
        long double x2 = half * half;
        shc = 1.0L + x2 / 6.0L + x2 * x2 / 120.0L;
      } else {
        shc = std::sinh(half) / half;
      }
      return std::exp(-mid) * shc;
    }
  }
  return 0.0L;
}

// forward n-th derivative of lst at 0: three Richardson stages per step size,
// step chosen adaptively by the stage-difference error gauge
double lst_forward_derivative_ld(const DistSpec& d, int n) {
  auto eval = [&](long double h0, long double& est) -> long double {
    auto stencil = [&](long double h) -> long double {
      auto f = [&](int j) { return lst_ld(d, j * h); };
      switch (n) {
        case 1: return (-1.5L * f(0) + 2.0L * f(1) - 0.5L * f(2)) / h;
        case 2: return (2.0L * f(0) - 5.0L * f(1) + 4.0L * f(2) - f(3)) / (h * h);
        case 3:
          return (-2.5L * f(0) + 9.0L * f(1) - 12.0L * f(2) + 7.0L * f(3) -
                  1.5L * f(4)) /
                 (h * h * h);
        default:
          return (3.0L * f(0) - 14.0L * f(1) + 26.0L * f(2) - 24.0L * f(3) +
                  11.0L * f(4) - 2.0L * f(5)) /
                 (h * h * h * h);
      }
    };
    long double dd[4], r1[3], r2[2];
    for (int i = 0; i < 4; ++i) dd[i] = stencil(h0 / (1 << i));
    for (int i = 0; i < 3; ++i) r1[i] = (4.0L * dd[i + 1] - dd[i]) / 3.0L;
    for (int i = 0; i < 2; ++i) r2[i] = (8.0L * r1[i + 1] - r1[i]) / 7.0L;
    long double r3 = (16.0L * r2[1] - r2[0]) / 15.0L;
    est = std::abs(r3 - r2[1]) + std::abs(r2[1] - r2[0]);
    return r3;
  };
  long double best = 0.0L, best_est = 1e30L;
  for (long double h0 : {1e-3L, 2e-3L, 4e-3L, 8e-3L, 1.6e-2L, 3.2e-2L}) {
    long double est;
    long double v = eval(h0, est);
    if (est < best_est) {
      best_est = est;
      best = v;
    }
  }
  return static_cast<double>(best);
}

}  // namespace

TEST_CASE("lst closed forms at reference points") {
  CHECK(DistSpec::deterministic(2.0).lst(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(DistSpec::exponential(1.0).lst(1.0) == doctest::Approx(0.5).epsilon(1e-15));

  // Erlang(2, rate 3) at s = 1.5: quadrature of e^{-sx} against the density
  // mu^2 x e^{-mu x} gives (3/4.5)^2 = 4/9
  double oracle = simpson(
      [](double x) { return std::exp(-1.5 * x) * 9.0 * x * std::exp(-3.0 * x); },
      0.0, 40.0, 20000);
  CHECK(oracle == doctest::Approx(4.0 / 9.0).epsilon(1e-8));
  CHECK(DistSpec::erlang(2, 3.0).lst(1.5) == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("lst rejects negative real part") {
  CHECK_THROWS_AS(DistSpec::exponential(1.0).lst(-0.1), std::domain_error);
  CHECK_THROWS_AS(
      DistSpec::uniform(0.0, 1.0).lst(std::complex<double>(-1e-3, 0.5)),
      std::domain_error);
}

TEST_CASE("lst monotonicity and modulus bound") {
  for (const auto& d : all_families()) {
    CAPTURE(d.describe());
    double prev = 1.0;
    for (double s : {0.1, 0.4, 1.0, 2.5, 7.0}) {
      double v = d.lst(s);
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      CHECK(v < prev);
      prev = v;
      // |lst(s)| <= lst(Re s) off the real axis
      for (double im : {-2.0, 0.7, 3.0}) {
        std::complex<double> c = d.lst(std::complex<double>(s, im));
        CHECK(std::abs(c) <= d.lst(s) + 1e-15);
      }
    }
  }
}

TEST_CASE("raw moments: closed forms and lst derivatives") {
  CHECK(DistSpec::exponential(1.0).raw_moment(2) == doctest::Approx(2.0));
  CHECK(DistSpec::deterministic(3.0).raw_moment(2) == doctest::Approx(9.0));
  // hand-computed mixture mean: 0.5/1 + 0.5/2
  CHECK(DistSpec::hyper_exponential({0.5, 0.5}, {1.0, 2.0}).raw_moment(1) ==
        doctest::Approx(0.75).epsilon(1e-14));
  CHECK_THROWS_AS(DistSpec::exponential(1.0).raw_moment(7), std::invalid_argument);

  // (-1)^n d^n/ds^n lst|_{s=0+} = E[X^n]. Double-precision forward
  // differences bottom out near 1e-5 relative at order 4, so the oracle runs
  // the closed-form transforms in long double; orders 5-6 are covered by the
  // quadrature moment check below.
  for (const auto& d : all_families()) {
    CAPTURE(d.describe());
    for (int n = 1; n <= 4; ++n) {
      double fd = lst_forward_derivative_ld(d, n);
      double sign = (n % 2) ? -1.0 : 1.0;
      CHECK(sign * fd == doctest::Approx(d.raw_moment(n)).epsilon(1e-6));
    }
  }

  // continuous families: E[X^n] = int x^n f(x) dx for n = 5, 6
  struct Density {
    DistSpec dist;
    std::function<double(double)> pdf;
    double hi;
  };
  std::vector<Density> withpdf;
  withpdf.push_back({DistSpec::exponential(1.5),
                     [](double x) { return 1.5 * std::exp(-1.5 * x); }, 45.0});
  withpdf.push_back({DistSpec::erlang(3, 2.0),
                     [](double x) { return 4.0 * x * x * std::exp(-2.0 * x); },
                     45.0});
  withpdf.push_back(
      {DistSpec::hyper_exponential({0.3, 0.7}, {0.5, 3.0}),
       [](double x) {
         return 0.3 * 0.5 * std::exp(-0.5 * x) + 0.7 * 3.0 * std::exp(-3.0 * x);
       },
       140.0});
  withpdf.push_back({DistSpec::uniform(0.5, 2.5),
                     [](double x) { return (x >= 0.5 && x <= 2.5) ? 0.5 : 0.0; },
                     2.5});
  for (const auto& [dist, pdf, hi] : withpdf) {
    CAPTURE(dist.describe());
    for (int n = 5; n <= 6; ++n) {
      auto integrand = [&, n](double x) { return std::pow(x, n) * pdf(x); };
      double oracle = simpson(integrand, 0.0, hi, 60000);
      CHECK(oracle == doctest::Approx(dist.raw_moment(n)).epsilon(1e-6));
    }
  }
}

TEST_CASE("pgf_count values and bound") {
  auto exp1 = DistSpec::exponential(1.0);
  CHECK(exp1.pgf_count(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(exp1.pgf_count(1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));

  // E[z^{N_2(1)}] with N ~ Poisson(2), z = 0.5, against an independent
  // Monte-Carlo mean over 1e7 draws
  std::mt19937_64 rng(20240811);
  std::poisson_distribution<int> pois(2.0);
  Accumulator acc;
  for (int i = 0; i < 10'000'000; ++i) {
    int n = pois(rng);
    double zn = 1.0;
    for (int j = 0; j < n; ++j) zn *= 0.5;
    acc.add(zn);
  }
  auto mv = acc.finish();
  double analytic = DistSpec::deterministic(1.0).pgf_count(2.0, 0.5);
  CHECK(analytic == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(std::abs(mv.mean - analytic) < 1e-3);

  for (const auto& d : all_families()) {
    for (double r : {0.3, 0.8}) {
      std::complex<double> z = std::polar(r, 2.1);
      CHECK(std::abs(d.pgf_count(1.3, z)) <= d.pgf_count(1.3, r) + 1e-15);
    }
  }
}

TEST_CASE("count_pmf sums back to the count PGF") {
  for (const auto& d : all_families()) {
    CAPTURE(d.describe());
    double theta = 1.7;
    for (double z : {0.0, 0.35, 0.9, 1.0}) {
      double acc = 0.0, zm = 1.0, mass = 0.0;
      for (int m = 0; mass < 1.0 - 1e-13; ++m) {
        double q = d.count_pmf(theta, m);
        mass += q;
        acc += q * zm;
        zm *= z;
        REQUIRE(m < 4000);
      }
      CHECK(acc == doctest::Approx(d.pgf_count(theta, z)).epsilon(1e-10));
    }
  }
}

TEST_CASE("sampler matches moments") {
  std::mt19937_64 rng(7);
  CHECK(DistSpec::deterministic(2.0).sample(rng) == 2.0);

  for (const auto& d : all_families()) {
    CAPTURE(d.describe());
    Accumulator acc;
    std::mt19937_64 r2(12345);
    for (int i = 0; i < 1'000'000; ++i) acc.add(d.sample(r2));
    auto mv = acc.finish();
    double se_mean = std::sqrt(mv.var / mv.n);
    CHECK(std::abs(mv.mean - d.mean()) < 3.0 * se_mean + 1e-12);
    // variance within 3 standard errors (normal-ish approximation)
    double m4 = 0.0;
    std::mt19937_64 r3(999);
    for (int i = 0; i < 200'000; ++i) {
      double x = d.sample(r3) - d.mean();
      m4 += x * x * x * x;
    }
    m4 /= 200'000;
    double se_var = std::sqrt(std::max(0.0, m4 - mv.var * mv.var) / mv.n);
    CHECK(std::abs(mv.var - d.variance()) < 4.0 * se_var + 1e-9);
  }

  // reproducibility for a fixed seed
  std::mt19937_64 a(42), b(42);
  auto h = DistSpec::hyper_exponential({0.2, 0.8}, {1.0, 4.0});
  for (int i = 0; i < 100; ++i) CHECK(h.sample(a) == h.sample(b));
}

TEST_CASE("spec'd sampler reference values") {
  // Exponential(1): mean over 1e6 draws within 0.01
  {
    std::mt19937_64 rng(2024);
    auto d = DistSpec::exponential(1.0);
    double s = 0.0;
    for (int i = 0; i < 1'000'000; ++i) s += d.sample(rng);
    CHECK(std::abs(s / 1e6 - 1.0) < 0.01);
  }
  // Erlang(2,2): variance = shape/rate^2 = 0.5 within 0.01
  {
    std::mt19937_64 rng(2025);
    auto d = DistSpec::erlang(2, 2.0);
    Accumulator acc;
    for (int i = 0; i < 1'000'000; ++i) acc.add(d.sample(rng));
    CHECK(std::abs(acc.finish().var - 0.5) < 0.01);
  }
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(DistSpec::deterministic(0.0), std::invalid_argument);
  CHECK_THROWS_AS(DistSpec::exponential(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(DistSpec::erlang(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(DistSpec::uniform(2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(DistSpec::hyper_exponential({0.5, 0.6}, {1.0, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DistSpec::hyper_exponential({0.5, 0.5}, {1.0}),
                  std::invalid_argument);
  CHECK_NOTHROW(DistSpec::uniform(0.0, 1.0));
}
