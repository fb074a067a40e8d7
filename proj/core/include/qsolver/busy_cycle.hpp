#pragma once

#include <vector>

#include "qsolver/branching.hpp"
#include "qsolver/model.hpp"

namespace qsolver {

/// Three-argument ancestral-line transforms:
///   psi^H_1(z,w,e) = z h*(w + lambda - lambda e),
///   psi^H_k = z h*(w + lambda - lambda psi^H_{k-1}),
///   psi^V_1(z,w,e) = v*(w + lambda - lambda e),
///   psi^V_k = v*(w + lambda - lambda psi^H_{k-1}).
double psi_h3(const ModelParams& m, int k, double z, double omega, double eta);
double psi_v3(const ModelParams& m, int k, double z, double omega, double eta);

/// Joint transforms of the busy cycle: length T*, customers served N*,
/// vacations taken M*.
class BusyCycleSolver {
 public:
  BusyCycleSolver(ModelParams m, TruncationPolicy t = {});

  const ModelParams& model() const { return model_; }

  /// theta_n(z, omega) = E[z^{N*} e^{-omega T*} 1{M* = n}].
  double theta_n(int n, double z, double omega) const;

  /// theta_1..theta_{n_max} in one pass of the renewal recursion.
  std::vector<double> theta_table(int n_max, double z, double omega) const;

  /// theta*(z, omega) = E[z^{N*} e^{-omega T*}] by the ratio formula, with
  /// geometric completion of both series; the (1, 0) point is the analytic
  /// limit 1.
  double theta_star(double z, double omega) const;

  struct CycleMeans {
    double n_mean = 0.0;            // E[N*]
    double t_mean = 0.0;            // E[T*]
    double m_mean = 0.0;            // E[M*]
    double renewal_residual = 0.0;  // |(1/l)/(E[T*]+1/l) - p_idle|
    bool identity_warning = false;  // residual above 1e-4
  };

  /// First moments by one-sided differentiation of theta* at (1, 0) and the
  /// weighted series sum n theta_n(1,0); cross-checked against the
  /// renewal-reward idle fraction from the stationary solve.
  CycleMeans cycle_means() const;

 private:
  // psi^H_k(z,omega,0) and running products of psi^V_k(z,omega,0), extended
  // on demand; values saturate at the fixed point.
  void extend_tables(std::vector<double>& a, std::vector<double>& p, int n,
                     double z, double omega) const;

  ModelParams model_;
  TruncationPolicy policy_;
  double ell_e0_;
};

}  // namespace qsolver
