#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "qsolver/branching.hpp"
#include "qsolver/model.hpp"

namespace qsolver {

struct StationaryQueueReport {
  double ell_e0 = 0.0;
  double p_idle = 0.0;
  std::vector<double> factorial_moments;  // L^(1)..L^(N)
  std::vector<double> delay_moments;      // D^(n) = L^(n)/lambda^n
  double mean_queue = 0.0;
  double mean_delay = 0.0;
  std::vector<double> pmf;                // P(L = k), k = 0..K
  double pmf_sum = 0.0;
  int pmf_clipped = 0;                    // entries in (-1e-10, 0) zeroed
  double mv_mean = 0.0;                   // E[L_MV], gated multiple vacations
  double mv_mean_gap = 0.0;               // E[L_MV] - E[L] > 0
  EllEDiagnostics diagnostics;
};

/// Stationary solver for the gated single-vacation queue: queue length PGF
/// (stochastic decomposition form), factorial moments, FIFO sojourn transform
/// and moments, pmf by lattice inversion and the multiple-vacation gap.
class VacationSolver {
 public:
  VacationSolver(ModelParams m, TruncationPolicy t = {});

  const ModelParams& model() const { return elle_.model(); }
  const EllESolver& ell() const { return elle_; }
  double ell_e0() const { return elle_.ell_e0(); }

  /// Ordinary M/G/1 queue length PGF (removable singularity at z = 1). The
  /// real overload is cancellation-free all the way to z = 1 and is the one
  /// the moment differentiation uses.
  std::complex<double> ell_mg1(std::complex<double> z) const;
  double ell_mg1(double z) const;

  /// Stationary queue length PGF of the vacation queue.
  std::complex<double> ell_star(std::complex<double> z) const;
  double ell_star(double z) const;

  /// Closed four-term mean queue length.
  double mean_queue_length() const;

  /// Factorial moments L^(1)..L^(N), N <= 4. Orders 1-2 use the moment
  /// recursion with the closed forms of E[L_E], E[L_E(L_E-1)]; orders 3-4
  /// differentiate ell_star numerically.
  std::vector<double> factorial_moments(int n_max) const;

  /// Same recursion path for every order, with L_E moments of order >= 3
  /// extracted numerically from ell_E. Cross-check route.
  std::vector<double> factorial_moments_via_recursion(int n_max) const;

  /// Vacation-end closed-form moments.
  double l_e_mean() const;
  double l_e_second_factorial() const;
  double l_e_moment(int n) const;  // n = 1..4

  /// FIFO sojourn LST; s = 0 returns 1.
  double delay_lst(double s) const;
  std::vector<double> delay_moments(int n_max) const;

  /// P(server idle) = (1-rho) ell_E*(0) / (lambda E[V] + ell_E*(0)).
  double p_idle() const;

  /// (E[L_MV], E[L_MV] - E[L]); the gap is strictly positive.
  std::pair<double, double> mv_comparison() const;

  std::vector<double> queue_pmf(int k_max) const;
  std::vector<double> queue_pmf(int k_max, int* clipped_out) const;

  StationaryQueueReport report(int k_max, int n_moments) const;

 private:
  // mixture weights of the vacation decomposition
  double w_idle() const;  // ell_E*(0) / (lambda E[V] + ell_E*(0))
  double w_vac() const;   // lambda E[V] / (lambda E[V] + ell_E*(0))

  EllESolver elle_;
};

}  // namespace qsolver
