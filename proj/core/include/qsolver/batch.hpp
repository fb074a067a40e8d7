#pragma once

#include <complex>
#include <vector>

#include "qsolver/branching.hpp"
#include "qsolver/model.hpp"

namespace qsolver {

struct BatchReport {
  double ell_s0 = 0.0;  // P(batch size = 0), identically 0
  std::vector<double> batch_size_pmf;
  double s_b_mean = 0.0;   // E[S^B]
  double c_mean = 0.0;     // E[C]
  double rho_star = 0.0;   // utilization
  std::vector<double> queue_pmf;
  double mean_queue = 0.0;
  double mean_delay = 0.0;
  double delay_second_moment = 0.0;
  EllEDiagnostics diagnostics;
};

/// Batch-service M/G/1 queue where a batch of k customers occupies the server
/// for H_1 + ... + H_k + V and departs as one unit. Derived entirely from the
/// vacation-end transform of the gated single-vacation queue.
class BatchSolver {
 public:
  BatchSolver(ModelParams m, TruncationPolicy t = {});

  const ModelParams& model() const { return elle_.model(); }
  const EllESolver& ell() const { return elle_; }

  /// Batch-size PGF: ell_S*(z) = ell_E*(z) + (z-1) ell_E*(0).
  std::complex<double> ell_s(std::complex<double> z) const;
  double ell_s(double z) const { return ell_s(std::complex<double>(z)).real(); }

  double s_b_mean() const { return s_b_mean_; }
  double c_mean() const { return c_mean_; }
  double rho_star() const { return rho_star_; }

  /// Joint transform f*(z, s, omega) of (batch size, age, residual life) of
  /// the batch in service; the s = omega diagonal is the analytic limit via a
  /// symmetric difference with step 1e-6.
  double age_residual_transform(double z, double s, double omega) const;

  /// Stationary queue length PGF (removable singularity at z = 1).
  std::complex<double> queue_pgf(std::complex<double> z) const;
  double queue_pgf(double z) const { return queue_pgf(std::complex<double>(z)).real(); }

  /// Sojourn LST of a random customer; omega = 0 returns 1.
  double delay_lst(double omega) const;

  double mean_queue() const;
  double mean_delay() const;

  std::vector<double> batch_size_pmf(int k_max) const;
  std::vector<double> queue_pmf_vector(int k_max) const;

  BatchReport report(int k_max) const;

 private:
  EllESolver elle_;
  double s_b_mean_ = 0.0, c_mean_ = 0.0, rho_star_ = 0.0;
};

}  // namespace qsolver
