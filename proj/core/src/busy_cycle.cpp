#include "qsolver/busy_cycle.hpp"

#include <cmath>
#include <stdexcept>

#include "qsolver/numerics.hpp"

namespace qsolver {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

double psi_h3(const ModelParams& m, int k, double z, double omega, double eta) {
  require(k >= 1, "psi_h3: k must be >= 1");
  require(z > 0.0 && z <= 1.0, "psi_h3: z must be in (0, 1]");
  require(omega >= 0.0, "psi_h3: omega must be >= 0");
  require(eta >= 0.0 && eta <= 1.0, "psi_h3: eta must be in [0, 1]");
  double x = z * m.service.lst(omega + m.lambda - m.lambda * eta);
  for (int i = 2; i <= k; ++i)
    x = z * m.service.lst(omega + m.lambda - m.lambda * x);
  return x;
}

double psi_v3(const ModelParams& m, int k, double z, double omega, double eta) {
  require(k >= 1, "psi_v3: k must be >= 1");
  if (k == 1) return m.vacation.lst(omega + m.lambda - m.lambda * eta);
  double x = psi_h3(m, k - 1, z, omega, eta);
  return m.vacation.lst(omega + m.lambda - m.lambda * x);
}

BusyCycleSolver::BusyCycleSolver(ModelParams m, TruncationPolicy t)
    : model_(std::move(m)), policy_(t),
      ell_e0_(EllESolver(model_, t).ell_e0()) {}

void BusyCycleSolver::extend_tables(std::vector<double>& a, std::vector<double>& p,
                                    int n, double z, double omega) const {
  // a[k-1] = psi^H_k(z,omega,0), p[k-1] = prod_{m<=k} psi^V_m(z,omega,0)
  while (static_cast<int>(a.size()) < n) {
    if (a.empty()) {
      double x = z * model_.service.lst(omega + model_.lambda);
      a.push_back(x);
      p.push_back(model_.vacation.lst(omega + model_.lambda));
    } else {
      double prev = a.back();
      double arg = omega + model_.lambda - model_.lambda * prev;
      a.push_back(z * model_.service.lst(arg));
      p.push_back(p.back() * model_.vacation.lst(arg));
    }
  }
}

std::vector<double> BusyCycleSolver::theta_table(int n_max, double z,
                                                 double omega) const {
  require(n_max >= 1, "theta_table: n_max must be >= 1");
  require(n_max <= policy_.max_n, "theta_table: n_max exceeds recursion cap");
  require(z > 0.0 && z <= 1.0, "theta_table: z must be in (0, 1]");
  require(omega >= 0.0, "theta_table: omega must be >= 0");

  std::vector<double> a, p;
  extend_tables(a, p, n_max, z, omega);

  // discrete renewal recursion:
  // theta_n = psi^H_n prod psi^V - sum_{k<n} theta_k prod_{m<=n-k} psi^V_m
  std::vector<double> theta(n_max);
  for (int n = 1; n <= n_max; ++n) {
    double acc = a[n - 1] * p[n - 1];
    for (int k = 1; k <= n - 1; ++k) acc -= theta[k - 1] * p[n - k - 1];
    theta[n - 1] = acc;
  }
  return theta;
}

double BusyCycleSolver::theta_n(int n, double z, double omega) const {
  return theta_table(n, z, omega).back();
}

double BusyCycleSolver::theta_star(double z, double omega) const {
  require(z > 0.0 && z <= 1.0, "theta_star: z must be in (0, 1]");
  require(omega >= 0.0, "theta_star: omega must be >= 0");
  if (z == 1.0 && omega == 0.0) return 1.0;

  // Iterate x_k = psi^H_k(z,omega,0) to its machine fixed point; past it the
  // remaining terms of both series are exactly geometric with ratio
  // q = psi^V at the fixed point, so the tails close in closed form.
  const double lambda = model_.lambda;
  double x = z * model_.service.lst(omega + lambda);
  double v = model_.vacation.lst(omega + lambda);
  double prod = v;
  double num = x * prod;
  double den = prod;
  double x_prev = -1.0, v_prev = -1.0;

  int n = 1;
  while (std::abs(x - x_prev) > 1e-16 || std::abs(v - v_prev) > 1e-16) {
    ++n;
    if (n > policy_.max_n)
      throw NonConvergence("theta_star: fixed point not reached within max_n");
    x_prev = x;
    v_prev = v;
    double arg = omega + lambda - lambda * x;
    x = z * model_.service.lst(arg);
    v = model_.vacation.lst(arg);
    prod *= v;
    num += x * prod;
    den += prod;
    if (prod == 0.0) break;  // geometric underflow, tails are zero
  }

  if (prod > 0.0 && v < 1.0) {
    double tail = prod * v / (1.0 - v);
    num += x * tail;
    den += tail;
  }
  return num / (1.0 + den);
}

BusyCycleSolver::CycleMeans BusyCycleSolver::cycle_means() const {
  CycleMeans out;
  const double lambda = model_.lambda;

  // omega step scaled to the cycle-time magnitude, z step fixed
  double t_scale = model_.service.mean() + model_.vacation.mean() + 1.0 / lambda;
  double h_omega = 1e-4 * (1.0 + 1.0 / t_scale);
  double h_z = 1e-4;

  auto g_omega = [this](double w) { return theta_star(1.0, w); };
  auto g_z = [this](double zz) { return theta_star(zz, 0.0); };
  out.t_mean = -derivative_at(g_omega, 0.0, 1, StencilMode::forward, h_omega).value;
  out.n_mean = derivative_at(g_z, 1.0, 1, StencilMode::backward, h_z).value;

  // E[M*] = sum n theta_n(1,0), truncated once theta_n < 1e-14 / n
  {
    std::vector<double> a, p;
    std::vector<double> theta;
    double m_mean = 0.0;
    int n = 0;
    while (true) {
      ++n;
      if (n > policy_.max_n)
        throw NonConvergence("cycle_means: M* series not converged");
      extend_tables(a, p, n, 1.0, 0.0);
      double acc = a[n - 1] * p[n - 1];
      for (int k = 1; k <= n - 1; ++k) acc -= theta[k - 1] * p[n - k - 1];
      theta.push_back(acc);
      m_mean += n * acc;
      if (n > 1 && std::abs(acc) < 1e-14 / n) break;
    }
    out.m_mean = m_mean;
  }

  // renewal-reward cross-identity against the stationary idle probability
  double rho = model_.rho();
  double lv = lambda * model_.vacation.mean();
  double p_idle = (1.0 - rho) * ell_e0_ / (lv + ell_e0_);
  double lhs = (1.0 / lambda) / (out.t_mean + 1.0 / lambda);
  out.renewal_residual = std::abs(lhs - p_idle);
  out.identity_warning = out.renewal_residual > 1e-4;
  return out;
}

}  // namespace qsolver
