#include "qsolver/branching.hpp"

#include <cmath>
#include <sstream>

namespace qsolver {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

[[noreturn]] void non_convergence(const char* where, int max_n, double gap) {
  std::ostringstream os;
  os << where << ": stopping rule not reached within max_n = " << max_n
     << " (1 - psi = " << gap << ")";
  throw NonConvergence(os.str());
}

// Decay ratio of (1 - psi^H_n) estimated from the last two iterates; the
// asymptotic value is rho. Clamped away from 1 so tail sums stay finite.
double tail_ratio(double prev_gap, double gap, double rho) {
  double r = (prev_gap > 0.0) ? gap / prev_gap : rho;
  if (!(r > 0.0) || r > 0.999999) r = std::min(rho, 0.999999);
  return r;
}

}  // namespace

double psi_h(const ModelParams& m, int n, double z) {
  require(n >= 1, "psi_h: n must be >= 1");
  double x = m.a_h(z);
  for (int k = 2; k <= n; ++k) x = m.a_h(x);
  return x;
}

std::complex<double> psi_h(const ModelParams& m, int n, std::complex<double> z) {
  require(n >= 1, "psi_h: n must be >= 1");
  std::complex<double> x = m.a_h(z);
  for (int k = 2; k <= n; ++k) x = m.a_h(x);
  return x;
}

double psi_v(const ModelParams& m, int n, double z) {
  require(n >= 1, "psi_v: n must be >= 1");
  if (n == 1) return m.a_v(z);
  return m.a_v(psi_h(m, n - 1, z));
}

std::complex<double> psi_v(const ModelParams& m, int n, std::complex<double> z) {
  require(n >= 1, "psi_v: n must be >= 1");
  if (n == 1) return m.a_v(z);
  return m.a_v(psi_h(m, n - 1, z));
}

EllESolver::EllESolver(ModelParams m, TruncationPolicy t)
    : model_(std::move(m)), policy_(t) {
  const double eps = policy_.eps;
  const double rho = model_.rho();

  double h = model_.a_h(0.0);  // psi^H_1(0)
  double v = model_.a_v(0.0);  // psi^V_1(0)
  double big_psi = 1.0;
  double sum = 0.0;            // sum_n (1 - psi^H_n(0)) Psi^V_n
  double h_gap_sum = 0.0;      // sum_n (1 - psi^H_n(0))
  double prev_gap = 0.0;

  int n = 0;
  while (true) {
    ++n;
    if (n > policy_.max_n) non_convergence("ell_E*(0)", policy_.max_n, 1.0 - h);
    psi_h0_.push_back(h);
    psi_v0_.push_back(v);
    big_psi *= v;
    big_psi_v0_.push_back(big_psi);
    sum += (1.0 - h) * big_psi;
    h_gap_sum += 1.0 - h;
    if (1.0 - h < eps && 1.0 - v < eps) break;
    prev_gap = 1.0 - h;
    double h_next = model_.a_h(h);
    if (h_next == h && model_.a_v(h) == v) {
      std::ostringstream os;
      os << "ell_E*(0): iteration stalled at the double-precision fixed point "
            "(1 - psi = " << 1.0 - h << " > eps = " << eps
         << "); raise eps for this utilization";
      throw NonConvergence(os.str());
    }
    v = model_.a_v(h);
    h = h_next;
  }

  diag_.n_star = n;
  diag_.one_minus_psi_h = 1.0 - psi_h0_.back();
  diag_.one_minus_psi_v = 1.0 - psi_v0_.back();
  diag_.tail_estimate = diag_.one_minus_psi_h * rho / (1.0 - rho);
  diag_.partial_h_sum = h_gap_sum;

  // geometric completion of both truncated tails
  double gap = 1.0 - psi_h0_.back();
  double big_psi_inf = big_psi;
  if (n >= 2 && gap > 0.0) {
    double r = tail_ratio(prev_gap, gap, rho);
    sum += gap * big_psi * r / (1.0 - r);
    double v_next_gap = 1.0 - model_.a_v(psi_h0_.back());
    big_psi_inf = big_psi * std::exp(-v_next_gap / (1.0 - r));
  }
  ell_e0_ = big_psi_inf / (1.0 + sum);
}

std::complex<double> EllESolver::ell_e(std::complex<double> z) const {
  const double eps = policy_.eps;
  const double rho = model_.rho();
  const double y = std::abs(z);

  // Complex recursion truncated at the stopping index of the real-axis
  // iteration at |z| (monotone domination |1 - psi_n(z)| tracks 1 - psi_n(|z|)).
  std::complex<double> h = model_.a_h(z);
  std::complex<double> v = model_.a_v(z);
  double yh = model_.a_h(y);
  double yv = model_.a_v(y);
  std::complex<double> prod{1.0, 0.0};
  std::complex<double> sum{0.0, 0.0};
  double prev_gap = 0.0;

  int n = 0;
  std::complex<double> h_last = h;
  while (true) {
    ++n;
    if (n > policy_.max_n) non_convergence("ell_E*(z)", policy_.max_n, 1.0 - yh);
    prod *= v;
    sum += (1.0 - h) * prod;
    h_last = h;
    if (1.0 - yh < eps && 1.0 - yv < eps) break;
    prev_gap = 1.0 - yh;
    double yh_next = model_.a_h(yh);
    if (yh_next == yh && model_.a_v(yh) == yv)
      throw NonConvergence(
          "ell_E*(z): real-axis iteration stalled above eps; raise eps");
    yv = model_.a_v(yh);
    yh = yh_next;
    std::complex<double> h_next = model_.a_h(h);
    v = model_.a_v(h);
    h = h_next;
  }

  double gap = 1.0 - yh;
  if (n >= 2 && gap > 0.0) {
    double r = tail_ratio(prev_gap, gap, rho);
    sum += (1.0 - h_last) * prod * (r / (1.0 - r));
    std::complex<double> v_next_gap = 1.0 - model_.a_v(h_last);
    prod *= std::exp(-v_next_gap / (1.0 - r));
  }
  return prod - ell_e0_ * sum;
}

std::complex<double> EllESolver::ell_b(std::complex<double> z) const {
  return ell_e(z) / model_.a_v(z);
}

double EllESolver::d_e(double s) const {
  require(s >= 0.0, "d_E*(s): requires s >= 0");
  const double eps = policy_.eps;
  const double rho = model_.rho();
  const double lambda = model_.lambda;

  // zeta route: same series as ell_E* but seeded with h*(s), v*(s); converges
  // for every s >= 0 even where (lambda-s)/lambda leaves the unit interval.
  double zh = model_.service.lst(s);  // zeta^H_1
  double zv = model_.vacation.lst(s); // zeta^V_1
  double prod = 1.0;
  double sum = 0.0;
  double prev_gap = 0.0;

  int n = 0;
  double zh_last = zh;
  while (true) {
    ++n;
    if (n > policy_.max_n) non_convergence("d_E*(s)", policy_.max_n, 1.0 - zh);
    prod *= zv;
    sum += (1.0 - zh) * prod;
    zh_last = zh;
    if (std::abs(1.0 - zh) < eps && std::abs(1.0 - zv) < eps) break;
    prev_gap = std::abs(1.0 - zh);
    double zh_next = model_.a_h(zh);
    if (zh_next == zh && model_.vacation.lst(lambda - lambda * zh) == zv)
      throw NonConvergence(
          "d_E*(s): iteration stalled above eps; raise eps");
    zv = model_.vacation.lst(lambda - lambda * zh);
    zh = zh_next;
  }

  double gap = std::abs(1.0 - zh);
  if (n >= 2 && gap > 0.0) {
    double r = tail_ratio(prev_gap, gap, rho);
    sum += (1.0 - zh_last) * prod * (r / (1.0 - r));
    double v_next_gap = 1.0 - model_.vacation.lst(lambda - lambda * zh_last);
    prod *= std::exp(-v_next_gap / (1.0 - r));
  }
  return prod - ell_e0_ * sum;
}

double ell_e_zero(const ModelParams& m, const TruncationPolicy& t) {
  return EllESolver(m, t).ell_e0();
}

std::complex<double> ell_e(const ModelParams& m, const TruncationPolicy& t,
                           std::complex<double> z) {
  return EllESolver(m, t).ell_e(z);
}

std::complex<double> ell_b(const ModelParams& m, const TruncationPolicy& t,
                           std::complex<double> z) {
  return EllESolver(m, t).ell_b(z);
}

std::complex<double> q_n_transient(const ModelParams& m, const TruncationPolicy& t,
                                   const InitialState& init, int n,
                                   std::complex<double> z) {
  require(n >= 1, "q_n_transient: n must be >= 1");
  if (n > t.max_n)
    throw NonConvergence("q_n_transient: n exceeds the recursion depth cap");

  // z = 0 tables up to generation n (index j stored at [j-1])
  std::vector<double> h0(n), v0(n), big0(n);
  {
    double h = m.a_h(0.0);
    double v = m.a_v(0.0);
    double prod = 1.0;
    for (int j = 0; j < n; ++j) {
      h0[j] = h;
      v0[j] = v;
      prod *= v;
      big0[j] = prod;
      double h_next = m.a_h(h);
      v = m.a_v(h);
      h = h_next;
    }
  }

  // q_k*(0) for k = 0..n-1, one step at a time from the closed form at z = 0
  std::vector<double> c(n);
  c[0] = init.pmf[0];
  for (int k = 1; k < n; ++k) {
    double acc = init.pgf(h0[k - 1]) * big0[k - 1];
    for (int j = 1; j <= k; ++j)
      acc -= c[k - j] * (1.0 - h0[j - 1]) * big0[j - 1];
    c[k] = acc;
  }

  // evaluate the closed form at z
  std::complex<double> h = m.a_h(z);
  std::complex<double> v = m.a_v(z);
  std::complex<double> prod{1.0, 0.0};
  std::complex<double> acc{0.0, 0.0};
  for (int j = 1; j <= n; ++j) {
    prod *= v;
    acc -= c[n - j] * (1.0 - h) * prod;
    if (j == n) {
      acc += init.pgf(h) * prod;
      break;
    }
    std::complex<double> h_next = m.a_h(h);
    v = m.a_v(h);
    h = h_next;
  }
  return acc;
}

}  // namespace qsolver
