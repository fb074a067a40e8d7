#include "qsolver/batch.hpp"

#include <cmath>
#include <stdexcept>

#include "qsolver/numerics.hpp"

namespace qsolver {

BatchSolver::BatchSolver(ModelParams m, TruncationPolicy t)
    : elle_(std::move(m), t) {
  const ModelParams& mp = model();
  double rho = mp.rho();
  double e0 = elle_.ell_e0();
  double le_mean = (mp.lambda * mp.vacation.mean() + rho * e0) / (1.0 - rho);
  s_b_mean_ = (le_mean + e0) * mp.service.mean() + mp.vacation.mean();
  c_mean_ = s_b_mean_ + e0 / mp.lambda;
  rho_star_ = s_b_mean_ / c_mean_;
}

std::complex<double> BatchSolver::ell_s(std::complex<double> z) const {
  return elle_.ell_e(z) + (z - 1.0) * elle_.ell_e0();
}

double BatchSolver::age_residual_transform(double z, double s, double omega) const {
  if (s < 0.0 || omega < 0.0)
    throw std::domain_error("age_residual_transform: requires s, omega >= 0");
  if (z <= 0.0 || z > 1.0)
    throw std::domain_error("age_residual_transform: requires z in (0, 1]");
  const ModelParams& m = model();
  auto g = [&](double u) {  // ell_S*(z h*(u)) v*(u)
    return ell_s(z * m.service.lst(u)) * m.vacation.lst(u);
  };
  if (std::abs(s - omega) < 1e-6) {
    // f* -> -g'(omega) / E[S^B] on the diagonal
    const double d = 1e-6;
    double deriv;
    if (omega >= d) {
      deriv = (g(omega + d) - g(omega - d)) / (2.0 * d);
    } else {
      deriv = (-1.5 * g(omega) + 2.0 * g(omega + d) - 0.5 * g(omega + 2 * d)) / d;
    }
    return -deriv / s_b_mean_;
  }
  return (g(omega) - g(s)) / (s_b_mean_ * (s - omega));
}

std::complex<double> BatchSolver::queue_pgf(std::complex<double> z) const {
  if (z == std::complex<double>(1.0, 0.0)) return {1.0, 0.0};
  const ModelParams& m = model();
  std::complex<double> arg = m.lambda - m.lambda * z;
  std::complex<double> inner =
      ell_s(z * m.service.lst(arg)) * m.vacation.lst(arg);
  std::complex<double> frac =
      (ell_s(z) - inner) / (m.lambda * s_b_mean_ * (1.0 - z));
  return 1.0 - rho_star_ + rho_star_ * frac;
}

double BatchSolver::delay_lst(double omega) const {
  if (omega < 0.0) throw std::domain_error("delay_lst: requires omega >= 0");
  if (omega == 0.0) return 1.0;
  const ModelParams& m = model();
  double h = m.service.lst(omega);
  double v = m.vacation.lst(omega);
  double arg = omega + m.lambda - m.lambda * h;
  double inner = ell_s(m.service.lst(arg)) * m.vacation.lst(arg);
  double frac = (elle_.ell_e(h) - inner) / (s_b_mean_ * omega);
  return h * v * (1.0 - rho_star_ + rho_star_ * frac);
}

// The transforms carry a (1-z) (resp. omega) cancellation near the expansion
// point, so the first-derivative steps sit above the default to stay clear of
// the rounding floor.
double BatchSolver::mean_queue() const {
  auto g = [this](double z) { return queue_pgf(z); };
  return derivative_at(g, 1.0, 1, StencilMode::backward, 1e-3).value;
}

double BatchSolver::mean_delay() const {
  auto g = [this](double w) { return delay_lst(w); };
  return -derivative_at(g, 0.0, 1, StencilMode::forward, 1e-3).value;
}

std::vector<double> BatchSolver::batch_size_pmf(int k_max) const {
  InversionGrid grid = InversionGrid::for_max_index(k_max);
  std::vector<double> pmf =
      invert_pgf([this](std::complex<double> z) { return ell_s(z); }, grid);
  for (double& p : pmf) {
    if (p < 0.0) {
      if (p < -1e-10)
        throw std::runtime_error("batch_size_pmf: negative mass beyond clip");
      p = 0.0;
    }
  }
  return pmf;
}

std::vector<double> BatchSolver::queue_pmf_vector(int k_max) const {
  InversionGrid grid = InversionGrid::for_max_index(k_max);
  std::vector<double> pmf = invert_pgf(
      [this](std::complex<double> z) { return queue_pgf(z); }, grid);
  for (double& p : pmf) {
    if (p < 0.0) {
      if (p < -1e-10)
        throw std::runtime_error("batch queue_pmf: negative mass beyond clip");
      p = 0.0;
    }
  }
  return pmf;
}

BatchReport BatchSolver::report(int k_max) const {
  BatchReport r;
  r.ell_s0 = ell_s(0.0);
  r.batch_size_pmf = batch_size_pmf(k_max);
  r.s_b_mean = s_b_mean_;
  r.c_mean = c_mean_;
  r.rho_star = rho_star_;
  r.queue_pmf = queue_pmf_vector(k_max);
  r.mean_queue = mean_queue();
  r.mean_delay = mean_delay();
  auto g = [this](double w) { return delay_lst(w); };
  r.delay_second_moment = derivative_at(g, 0.0, 2, StencilMode::forward, 1e-3).value;
  r.diagnostics = elle_.diagnostics();
  return r;
}

}  // namespace qsolver
