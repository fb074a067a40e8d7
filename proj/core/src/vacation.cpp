#include "qsolver/vacation.hpp"

#include <cmath>
#include <stdexcept>

#include "qsolver/numerics.hpp"

namespace qsolver {

namespace {

double binom(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace

VacationSolver::VacationSolver(ModelParams m, TruncationPolicy t)
    : elle_(std::move(m), t) {}

double VacationSolver::w_idle() const {
  const ModelParams& m = model();
  double lv = m.lambda * m.vacation.mean();
  return ell_e0() / (lv + ell_e0());
}

double VacationSolver::w_vac() const { return 1.0 - w_idle(); }

std::complex<double> VacationSolver::ell_mg1(std::complex<double> z) const {
  // used on the inversion circle, where |1 - z| stays >= 1 - r
  const ModelParams& m = model();
  if (z == std::complex<double>(1.0, 0.0)) return {1.0, 0.0};
  std::complex<double> ah = m.a_h(z);
  return (1.0 - m.rho()) * (z - 1.0) * ah / (z - ah);
}

double VacationSolver::ell_mg1(double z) const {
  const ModelParams& m = model();
  if (z == 1.0) return 1.0;
  // z - a_H*(z) = (1 - a_H*(z)) - (1 - z), both factors at full precision
  double gap = m.service.one_minus_lst(m.lambda * (1.0 - z));
  return (1.0 - m.rho()) * (z - 1.0) * (1.0 - gap) / (gap - (1.0 - z));
}

std::complex<double> VacationSolver::ell_star(std::complex<double> z) const {
  const ModelParams& m = model();
  if (z == std::complex<double>(1.0, 0.0)) return {1.0, 0.0};
  std::complex<double> eqv =
      (1.0 - m.a_v(z)) / (m.lambda * m.vacation.mean() * (1.0 - z));
  std::complex<double> bracket =
      w_idle() + w_vac() * (elle_.ell_e(z) / m.a_v(z)) * eqv;
  return ell_mg1(z) * bracket;
}

double VacationSolver::ell_star(double z) const {
  const ModelParams& m = model();
  if (z == 1.0) return 1.0;
  double av_gap = m.vacation.one_minus_lst(m.lambda * (1.0 - z));
  double eqv = av_gap / (m.lambda * m.vacation.mean() * (1.0 - z));
  double bracket = w_idle() + w_vac() * (elle_.ell_e(z) / (1.0 - av_gap)) * eqv;
  return ell_mg1(z) * bracket;
}

double VacationSolver::mean_queue_length() const {
  const ModelParams& m = model();
  double rho = m.rho();
  double l = m.lambda;
  double h2 = m.service.raw_moment(2);
  double v1 = m.vacation.mean();
  double v2 = m.vacation.raw_moment(2);
  return l * l * h2 / (2.0 * (1.0 - rho)) + rho + rho / (1.0 - rho) * l * v1 +
         w_vac() * l * l * v2 / (2.0 * l * v1);
}

double VacationSolver::l_e_mean() const {
  const ModelParams& m = model();
  double rho = m.rho();
  return (m.lambda * m.vacation.mean() + rho * ell_e0()) / (1.0 - rho);
}

double VacationSolver::l_e_second_factorial() const {
  const ModelParams& m = model();
  double rho = m.rho();
  double l = m.lambda;
  double a2 = l * l * m.service.raw_moment(2);
  double b2 = l * l * m.vacation.raw_moment(2);
  double lv = l * m.vacation.mean();
  return ((a2 + 2.0 * rho * lv) * (l_e_mean() + ell_e0()) + b2) /
         (1.0 - rho * rho);
}

double VacationSolver::l_e_moment(int n) const {
  if (n < 1 || n > 4)
    throw std::invalid_argument("l_e_moment: supported orders are 1..4");
  if (n == 1) return l_e_mean();
  if (n == 2) return l_e_second_factorial();
  // composite-derivative closed forms stop at order 2; differentiate ell_E
  auto g = [this](double x) { return elle_.ell_e(x); };
  return derivative_at_adaptive(g, 1.0, n, StencilMode::backward).value;
}

std::vector<double> VacationSolver::factorial_moments_via_recursion(
    int n_max) const {
  if (n_max < 1 || n_max > 4)
    throw std::invalid_argument("factorial_moments: supported orders are 1..4");
  const ModelParams& m = model();
  double rho = m.rho();
  double l = m.lambda;
  double lv = l * m.vacation.mean();
  double denom = lv + ell_e0();

  // A_H^(n) = lambda^n E[H^n], A_V^(n) = lambda^n E[V^n], n = 0..n_max+1
  std::vector<double> ah(n_max + 2, 1.0), av(n_max + 2, 1.0);
  for (int n = 1; n <= n_max + 1; ++n) {
    ah[n] = std::pow(l, n) * m.service.raw_moment(n);
    av[n] = std::pow(l, n) * m.vacation.raw_moment(n);
  }

  // ordinary M/G/1 factorial moments
  std::vector<double> mg1(n_max + 1, 1.0);
  for (int n = 1; n <= n_max; ++n) {
    double acc = ah[n];
    for (int k = 0; k <= n - 1; ++k)
      acc += binom(n + 1, k) * ah[n + 1 - k] * mg1[k] / ((n + 1) * (1.0 - rho));
    mg1[n] = acc;
  }

  std::vector<double> le(n_max + 1, 1.0);
  for (int n = 1; n <= n_max; ++n) le[n] = l_e_moment(n);

  // moment recursion of the decomposition identity ell* a_V* = ell_MG1 [...]
  std::vector<double> out(n_max + 1, 1.0);
  for (int n = 1; n <= n_max; ++n) {
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      double inner = w_idle() * av[k];
      for (int i = 0; i <= k; ++i)
        inner += binom(k, i) * av[i + 1] / ((i + 1) * denom) * le[k - i];
      acc += binom(n, k) * mg1[n - k] * inner;
    }
    for (int k = 0; k <= n - 1; ++k) acc -= binom(n, k) * out[k] * av[n - k];
    out[n] = acc;
  }
  return std::vector<double>(out.begin() + 1, out.end());
}

std::vector<double> VacationSolver::factorial_moments(int n_max) const {
  if (n_max < 1 || n_max > 4)
    throw std::invalid_argument("factorial_moments: supported orders are 1..4");
  std::vector<double> rec = factorial_moments_via_recursion(std::min(n_max, 2));
  std::vector<double> out(rec);
  out.resize(n_max);
  for (int n = 3; n <= n_max; ++n) {
    auto g = [this](double x) { return ell_star(x); };
    out[n - 1] = derivative_at_adaptive(g, 1.0, n, StencilMode::backward).value;
  }
  return out;
}

double VacationSolver::delay_lst(double s) const {
  if (s < 0.0) throw std::domain_error("delay_lst: requires s >= 0");
  if (s == 0.0) return 1.0;
  const ModelParams& m = model();

  // Pollaczek-Khinchine factor (1-rho) s h*(s) / (s - lambda(1 - h*(s)))
  double h_gap = m.service.one_minus_lst(s);
  double pk =
      (1.0 - m.rho()) * s * (1.0 - h_gap) / (s - m.lambda * h_gap);

  double v_gap = m.vacation.one_minus_lst(s);
  double eqv = v_gap / (m.vacation.mean() * s);
  return pk * (w_idle() + w_vac() * (elle_.d_e(s) / (1.0 - v_gap)) * eqv);
}

std::vector<double> VacationSolver::delay_moments(int n_max) const {
  std::vector<double> lm = factorial_moments(n_max);
  double scale = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    scale *= model().lambda;
    lm[n - 1] /= scale;
  }
  return lm;
}

double VacationSolver::p_idle() const { return w_idle() * (1.0 - model().rho()); }

std::pair<double, double> VacationSolver::mv_comparison() const {
  const ModelParams& m = model();
  double rho = m.rho();
  double l = m.lambda;
  double h2 = m.service.raw_moment(2);
  double v1 = m.vacation.mean();
  double v2 = m.vacation.raw_moment(2);
  double mv = l * l * h2 / (2.0 * (1.0 - rho)) + rho +
              rho / (1.0 - rho) * l * v1 + l * l * v2 / (2.0 * l * v1);
  double gap = w_idle() * l * l * v2 / (2.0 * l * v1);
  double direct = mv - mean_queue_length();
  if (std::abs(gap - direct) > 1e-10)
    throw std::logic_error("mv_comparison: gap identity violated");
  return {mv, gap};
}

std::vector<double> VacationSolver::queue_pmf(int k_max, int* clipped_out) const {
  InversionGrid grid = InversionGrid::for_max_index(k_max);
  std::vector<double> pmf =
      invert_pgf([this](std::complex<double> z) { return ell_star(z); }, grid);
  int clipped = 0;
  for (double& p : pmf) {
    if (p < 0.0) {
      if (p < -1e-10)
        throw std::runtime_error(
            "queue_pmf: negative probability mass beyond clip threshold");
      p = 0.0;
      ++clipped;
    }
  }
  if (clipped_out) *clipped_out = clipped;
  return pmf;
}

std::vector<double> VacationSolver::queue_pmf(int k_max) const {
  return queue_pmf(k_max, nullptr);
}

StationaryQueueReport VacationSolver::report(int k_max, int n_moments) const {
  StationaryQueueReport r;
  r.ell_e0 = ell_e0();
  r.p_idle = p_idle();
  r.factorial_moments = factorial_moments(n_moments);
  r.delay_moments = delay_moments(n_moments);
  r.mean_queue = mean_queue_length();
  r.mean_delay = r.mean_queue / model().lambda;
  r.pmf = queue_pmf(k_max, &r.pmf_clipped);
  r.pmf_sum = 0.0;
  for (double p : r.pmf) r.pmf_sum += p;
  auto [mv, gap] = mv_comparison();
  r.mv_mean = mv;
  r.mv_mean_gap = gap;
  r.diagnostics = elle_.diagnostics();
  return r;
}

}  // namespace qsolver
