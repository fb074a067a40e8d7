#pragma once

#include <complex>
#include <vector>

#include "qsolver/model.hpp"

namespace qsolver {

/// psi^H_n(z): n-fold composition of a_H* (generation-n PGF of the branching
/// process whose offspring are Poisson arrivals during a service).
double psi_h(const ModelParams& m, int n, double z);
std::complex<double> psi_h(const ModelParams& m, int n, std::complex<double> z);

/// psi^V_n(z) = a_V*(psi^H_{n-1}(z)), with psi^V_1 = a_V*.
double psi_v(const ModelParams& m, int n, double z);
std::complex<double> psi_v(const ModelParams& m, int n, std::complex<double> z);

struct EllEDiagnostics {
  int n_star = 0;                  // stopping index of the z = 0 iteration
  double one_minus_psi_h = 0.0;    // 1 - psi^H_{n*}(0)
  double one_minus_psi_v = 0.0;    // 1 - psi^V_{n*}(0)
  double tail_estimate = 0.0;      // (1 - psi^H_{n*}(0)) * rho/(1-rho)
  double partial_h_sum = 0.0;      // sum_{n<=n*} (1 - psi^H_n(0))
};

/// Vacation-end queue length transform machinery. Construction runs the
/// z = 0 iteration once (tables + ell_E*(0)); all evaluators reuse it.
class EllESolver {
 public:
  EllESolver(ModelParams m, TruncationPolicy t = {});

  const ModelParams& model() const { return model_; }
  const TruncationPolicy& policy() const { return policy_; }

  /// ell_E*(0): probability the system is empty at a vacation end.
  double ell_e0() const { return ell_e0_; }
  const EllEDiagnostics& diagnostics() const { return diag_; }

  /// ell_E*(z): PGF of the queue length at vacation ends.
  std::complex<double> ell_e(std::complex<double> z) const;
  double ell_e(double z) const { return ell_e(std::complex<double>(z)).real(); }

  /// ell_B*(z) = ell_E*(z) / a_V*(z): PGF at vacation beginnings.
  std::complex<double> ell_b(std::complex<double> z) const;
  double ell_b(double z) const { return ell_b(std::complex<double>(z)).real(); }

  /// d_E*(s): the vacation-end transform along the zeta recursions
  /// (zeta^H_1 = h*(s), zeta^H_n = psi^H_{n-1}(h*(s)),
  ///  zeta^V_1 = v*(s), zeta^V_n = v*(lambda - lambda zeta^H_{n-1}(s))).
  /// Valid for all s >= 0, including where (lambda-s)/lambda leaves [-1, 1].
  double d_e(double s) const;

  // z = 0 tables, entry [n-1] holds the generation-n value.
  const std::vector<double>& psi_h0_table() const { return psi_h0_; }
  const std::vector<double>& psi_v0_table() const { return psi_v0_; }
  const std::vector<double>& big_psi_v0_table() const { return big_psi_v0_; }

 private:
  ModelParams model_;
  TruncationPolicy policy_;
  std::vector<double> psi_h0_, psi_v0_, big_psi_v0_;
  double ell_e0_ = 0.0;
  EllEDiagnostics diag_;
};

/// One-shot conveniences (construct an EllESolver internally).
double ell_e_zero(const ModelParams& m, const TruncationPolicy& t = {});
std::complex<double> ell_e(const ModelParams& m, const TruncationPolicy& t,
                           std::complex<double> z);
std::complex<double> ell_b(const ModelParams& m, const TruncationPolicy& t,
                           std::complex<double> z);

/// q_n*(z): PGF of the queue length at the end of the n-th vacation, started
/// from Q_0 ~ init. The needed q_k*(0) sequence is built iteratively from the
/// z = 0 tables, then the closed form is evaluated at z.
std::complex<double> q_n_transient(const ModelParams& m, const TruncationPolicy& t,
                                   const InitialState& init, int n,
                                   std::complex<double> z);

}  // namespace qsolver
