#include <cmath>
#include <random>

#include "doctest.h"
#include "qsolver/branching.hpp"
#include "qsolver/sim.hpp"
#include "test_util.hpp"

using namespace qsolver;
using qsolver::test::Accumulator;

namespace {

// Fraction of Galton-Watson trees (offspring = Poisson arrivals during a
// service) whose generation n is empty; independent check of psi^H_n(0).
double extinct_by_gen_mc(const ModelParams& m, int n, int trees,
                         std::uint64_t seed, bool delayed_by_vacation) {
  std::mt19937_64 rng(seed);
  long long extinct = 0;
  for (int t = 0; t < trees; ++t) {
    double workload =
        delayed_by_vacation ? m.vacation.sample(rng) : m.service.sample(rng);
    long long gen = 1;  // ancestor
    for (int g = 0; g < n && gen > 0; ++g) {
      std::poisson_distribution<long long> pois(m.lambda * workload);
      gen = pois(rng);
      workload = 0.0;
      for (long long i = 0; i < gen; ++i) workload += m.service.sample(rng);
    }
    if (gen == 0) ++extinct;
  }
  return static_cast<double>(extinct) / trees;
}

}  // namespace

TEST_CASE("psi recursions: fixed points and closed values") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  for (int n : {1, 3, 17}) {
    CHECK(psi_h(m, n, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(psi_v(m, n, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(psi_h(m, 1, 0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  ModelParams md(1.0, DistSpec::exponential(2.0), DistSpec::deterministic(1.0));
  CHECK(psi_v(md, 1, 0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("psi_h converges monotonically to extinction") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  double prev = 0.0;
  int n = 0;
  double x = m.a_h(0.0);
  while (1.0 - x >= 1e-12) {
    ++n;
    REQUIRE(n < 1000);
    CHECK(x > prev);
    CHECK(x < 1.0);
    prev = x;
    x = m.a_h(x);
  }
  // subcritical branching dies out: the monotone limit is 1
  CHECK(x == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("psi values against a brute-force branching simulation") {
  ModelParams m(0.7, DistSpec::erlang(2, 2.0), DistSpec::exponential(1.0));
  const int trees = 400'000;
  for (int n : {1, 2, 4}) {
    double mc = extinct_by_gen_mc(m, n, trees, 555 + n, false);
    double se = std::sqrt(mc * (1.0 - mc) / trees);
    CHECK(std::abs(psi_h(m, n, 0.0) - mc) < 3.5 * se + 1e-9);
  }
  // psi^V: the first generation stems from a vacation interval
  for (int n : {1, 3}) {
    double mc = extinct_by_gen_mc(m, n, trees, 777 + n, true);
    double se = std::sqrt(mc * (1.0 - mc) / trees);
    CHECK(std::abs(psi_v(m, n, 0.0) - mc) < 3.5 * se + 1e-9);
  }
}

TEST_CASE("two-step composition identity") {
  for (const auto& [name, m] : qsolver::test::battery()) {
    CAPTURE(name);
    for (double z : {0.0, 0.3, 0.8}) {
      for (int n = 2; n <= 6; ++n) {
        double lhs = m.a_h(psi_h(m, n - 1, z));
        double rhs = psi_h(m, n - 1, m.a_h(z));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("monotone coupling of the zero-argument tables") {
  for (const auto& [name, m] : qsolver::test::battery()) {
    CAPTURE(name);
    EllESolver s(m);
    const auto& h = s.psi_h0_table();
    const auto& v = s.psi_v0_table();
    const auto& big = s.big_psi_v0_table();
    for (std::size_t i = 1; i < h.size(); ++i) {
      CHECK(h[i] > h[i - 1]);
      CHECK(h[i] < 1.0 + 1e-15);
      CHECK(v[i] >= v[i - 1]);
      CHECK(big[i] <= big[i - 1]);
      CHECK(big[i] > 0.0);
    }
  }
}

TEST_CASE("tail bound: mean generations per busy period") {
  for (const auto& [name, m] : qsolver::test::battery()) {
    CAPTURE(name);
    EllESolver s(m);
    double rho = m.rho();
    CHECK(s.diagnostics().partial_h_sum <= 1.0 / (1.0 - rho) - 1.0 + 1e-12);
  }
}

TEST_CASE("ell_E basics") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  EllESolver s(m);
  CHECK(s.ell_e(1.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(s.ell_e(0.0) == doctest::Approx(s.ell_e0()).epsilon(1e-13));
  CHECK(s.ell_b(1.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(s.ell_b(0.0) ==
        doctest::Approx(s.ell_e0() / m.vacation.lst(m.lambda)).epsilon(1e-12));

  // nearly-empty system when arrivals are rare
  ModelParams tiny(0.001, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  CHECK(ell_e_zero(tiny) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("ell_E satisfies the one-step fixed point on a z grid") {
  for (const auto& [name, m] : qsolver::test::battery()) {
    CAPTURE(name);
    EllESolver s(m);
    for (double z = 0.0; z < 0.95; z += 0.1) {
      double lhs = s.ell_e(z);
      double rhs =
          (s.ell_e(m.a_h(z)) - s.ell_e0() + s.ell_e0() * m.a_h(z)) * m.a_v(z);
      CHECK(std::abs(lhs - rhs) < 10.0 * s.policy().eps);
    }
  }
}

TEST_CASE("ell_E_zero diagnostics and non-convergence") {
  ModelParams m(0.9, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  EllESolver s(m);
  CHECK(s.diagnostics().n_star > 10);
  CHECK(s.diagnostics().one_minus_psi_h < 1e-14);
  CHECK(s.diagnostics().tail_estimate < 1e-12);
  CHECK_THROWS_AS(EllESolver(m, TruncationPolicy(1e-14, 16)), NonConvergence);
}

TEST_CASE("q_n: closed first step and normalization") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::erlang(2, 2.0));
  InitialState zero = InitialState::point_mass(0);
  for (double z : {0.0, 0.4, 0.9}) {
    auto q1 = q_n_transient(m, {}, zero, 1, z);
    CHECK(q1.real() == doctest::Approx(m.a_h(z) * m.a_v(z)).epsilon(1e-14));
    CHECK(std::abs(q1.imag()) < 1e-14);
  }
  InitialState spread({0.25, 0.0, 0.5, 0.25});
  for (int n : {1, 2, 7})
    CHECK(q_n_transient(m, {}, spread, n, 1.0).real() ==
          doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("q_n agrees with the one-step chain recursion") {
  ModelParams m(0.6, DistSpec::erlang(2, 4.0), DistSpec::exponential(2.0));
  InitialState init({0.2, 0.3, 0.5});
  // q_{n+1}*(z) = (q_n*(a_H(z)) - q_n*(0) + q_n*(0) a_H(z)) a_V(z)
  for (int n = 1; n <= 6; ++n) {
    for (double z : {0.0, 0.5, 0.8}) {
      double lhs = q_n_transient(m, {}, init, n + 1, z).real();
      double qn_ah = q_n_transient(m, {}, init, n, m.a_h(z)).real();
      double qn_0 = q_n_transient(m, {}, init, n, 0.0).real();
      double rhs = (qn_ah - qn_0 + qn_0 * m.a_h(z)) * m.a_v(z);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("q_n converges to ell_E for moderate load") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  EllESolver s(m);
  for (const auto& init :
       {InitialState::point_mass(0), InitialState::point_mass(5)}) {
    for (double z : {0.0, 0.25, 0.5, 0.75}) {
      double q = q_n_transient(m, {}, init, 64, z).real();
      CHECK(std::abs(q - s.ell_e(z)) < 1e-6);
    }
  }
}

TEST_CASE("q_3 against the transient simulation oracle") {
  ModelParams m(0.5, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
  InitialState q0 = InitialState::point_mass(2);
  TransientStats ts = run_transient(m, q0, 3, 400'000, 991, {0.5});
  double analytic = q_n_transient(m, {}, q0, 3, 0.5).real();
  CHECK(std::abs(ts.pgf_at_y[0].value - analytic) < 3.0 * ts.pgf_at_y[0].half_width);

  double mass = 0.0;
  for (double p : ts.pmf) mass += p;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}
