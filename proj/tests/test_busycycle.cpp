#include <cmath>
#include <random>

#include "doctest.h"
#include "qsolver/branching.hpp"
#include "qsolver/busy_cycle.hpp"
#include "test_util.hpp"

using namespace qsolver;
using qsolver::test::Accumulator;

TEST_CASE("three-argument psi: reference points and reduction") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  CHECK(psi_h3(m, 1, 1.0, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(psi_h3(m, 1, 1.0, 0.0, 0.0) ==
        doctest::Approx(m.a_h(0.0)).epsilon(1e-15));
  CHECK(psi_v3(m, 1, 1.0, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));

  // at z = 1, omega = 0 the construction collapses to the two-argument maps
  for (int k = 1; k <= 8; ++k) {
    CHECK(psi_v3(m, k, 1.0, 0.0, 0.0) ==
          doctest::Approx(psi_v(m, k, 0.0)).epsilon(1e-12));
    for (double eta : {0.0, 0.3, 0.7, 1.0})
      CHECK(psi_h3(m, k, 1.0, 0.0, eta) ==
            doctest::Approx(psi_h(m, k, eta)).epsilon(1e-12));
  }
}

TEST_CASE("psi_h3 against a branching Monte-Carlo oracle") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::exponential(2.0));
  const double z = 0.9, omega = 0.1;
  const int trees = 2'000'000;

  // E[z^{N0+N1+N2} e^{-omega B2} 1{N3 = 0}] over explicit generation trees
  {
    std::mt19937_64 rng(313);
    Accumulator acc;
    for (int t = 0; t < trees; ++t) {
      double h0 = m.service.sample(rng);
      std::poisson_distribution<long long> p1(m.lambda * h0);
      long long n1 = p1(rng);
      double w1 = 0.0;
      for (long long i = 0; i < n1; ++i) w1 += m.service.sample(rng);
      std::poisson_distribution<long long> p2(m.lambda * w1);
      long long n2 = p2(rng);
      double w2 = 0.0;
      for (long long i = 0; i < n2; ++i) w2 += m.service.sample(rng);
      std::poisson_distribution<long long> p3(m.lambda * w2);
      long long n3 = p3(rng);
      double b2 = h0 + w1 + w2;
      double stat = (n3 == 0)
                        ? std::pow(z, static_cast<double>(1 + n1 + n2)) *
                              std::exp(-omega * b2)
                        : 0.0;
      acc.add(stat);
    }
    auto mv = acc.finish();
    CHECK(std::abs(psi_h3(m, 3, z, omega, 0.0) - mv.mean) < mv.half_width3());
  }

  // E[z^{N1} e^{-omega B1^V} 1{N2 = 0}] where the first generation arrives
  // during a vacation
  {
    std::mt19937_64 rng(717);
    Accumulator acc;
    for (int t = 0; t < trees; ++t) {
      double v0 = m.vacation.sample(rng);
      std::poisson_distribution<long long> p1(m.lambda * v0);
      long long n1 = p1(rng);
      double w1 = 0.0;
      for (long long i = 0; i < n1; ++i) w1 += m.service.sample(rng);
      std::poisson_distribution<long long> p2(m.lambda * w1);
      long long n2 = p2(rng);
      double stat = (n2 == 0) ? std::pow(z, static_cast<double>(n1)) *
                                    std::exp(-omega * (v0 + w1))
                              : 0.0;
      acc.add(stat);
    }
    auto mv = acc.finish();
    CHECK(std::abs(psi_v3(m, 2, z, omega, 0.0) - mv.mean) < mv.half_width3());
  }
}

TEST_CASE("theta recursion: first term and distribution of M*") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  BusyCycleSolver bc(m);
  CHECK(bc.theta_n(1, 1.0, 0.0) ==
        doctest::Approx(m.service.lst(0.5) * m.vacation.lst(0.5)).epsilon(1e-15));

  auto theta = bc.theta_table(400, 1.0, 0.0);
  double sum = 0.0;
  for (double x : theta) {
    CHECK(x >= 0.0);
    sum += x;
    CHECK(sum <= 1.0 + 1e-12);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("renewal equation residual") {
  ModelParams m(0.6, DistSpec::erlang(2, 4.0), DistSpec::uniform(0.0, 1.0));
  for (auto [z, omega] : {std::pair{1.0, 0.0}, {0.9, 0.1}}) {
    auto theta = BusyCycleSolver(m).theta_table(20, z, omega);
    // rebuild both sides of psi^H_n prod psi^V = theta_n + sum theta_k prod
    std::vector<double> a(20), p(20);
    double x = z * m.service.lst(omega + m.lambda);
    double prod = m.vacation.lst(omega + m.lambda);
    a[0] = x;
    p[0] = prod;
    for (int k = 1; k < 20; ++k) {
      double arg = omega + m.lambda - m.lambda * a[k - 1];
      a[k] = z * m.service.lst(arg);
      p[k] = p[k - 1] * m.vacation.lst(arg);
    }
    for (int n = 2; n <= 20; ++n) {
      double lhs = a[n - 1] * p[n - 1];
      double rhs = theta[n - 1];
      for (int k = 1; k <= n - 1; ++k) rhs += theta[k - 1] * p[n - k - 1];
      CHECK(std::abs(lhs - rhs) < 1e-12);
    }
  }
}

TEST_CASE("theta_star: normalization, series consistency, monotonicity") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  BusyCycleSolver bc(m);
  CHECK(bc.theta_star(1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));

  for (auto [z, omega] : {std::pair{0.9, 0.1}, {0.7, 0.5}, {0.99, 0.02}}) {
    auto theta = bc.theta_table(400, z, omega);
    double sum = 0.0;
    for (double x : theta) sum += x;
    CHECK(std::abs(bc.theta_star(z, omega) - sum) < 10.0 * 1e-14 + 1e-12);
  }

  double prev = 2.0;
  for (double omega : {0.0, 0.1, 0.4, 1.0}) {
    double v = bc.theta_star(1.0, omega);
    CHECK(v < prev);
    prev = v;
  }
  prev = -1.0;
  for (double z : {0.2, 0.6, 0.9, 1.0}) {
    double v = bc.theta_star(z, 0.1);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("cycle means: light-traffic limit and renewal identity") {
  ModelParams light(1e-4, DistSpec::exponential(1.0), DistSpec::erlang(2, 2.0));
  auto cm = BusyCycleSolver(light).cycle_means();
  CHECK(cm.n_mean == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(cm.m_mean == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(cm.t_mean ==
        doctest::Approx(light.service.mean() + light.vacation.mean()).epsilon(1e-3));

  for (const auto& [name, m] : qsolver::test::representative()) {
    CAPTURE(name);
    auto c = BusyCycleSolver(m).cycle_means();
    CHECK(c.renewal_residual < 1e-6);
    CHECK_FALSE(c.identity_warning);
    // customers per cycle match arrivals over the full renewal cycle
    CHECK(c.n_mean ==
          doctest::Approx(m.lambda * (c.t_mean + 1.0 / m.lambda)).epsilon(1e-4));
  }
}
