#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "qsolver/dist.hpp"

namespace qsolver {

/// Thrown when a truncated series/product fails to reach its tolerance
/// within the iteration cap.
class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

/// Arrival rate plus service (H) and vacation (V) distributions.
/// Stability (rho = lambda E[H] < 1) is enforced at construction.
struct ModelParams {
  double lambda;
  DistSpec service;
  DistSpec vacation;

  ModelParams(double lambda_, DistSpec service_, DistSpec vacation_);

  double rho() const { return lambda * service.mean(); }

  /// a_H*(z) = h*(lambda - lambda z)
  std::complex<double> a_h(std::complex<double> z) const {
    return service.lst(lambda - lambda * z);
  }
  double a_h(double z) const { return service.lst(lambda - lambda * z); }

  /// a_V*(z) = v*(lambda - lambda z)
  std::complex<double> a_v(std::complex<double> z) const {
    return vacation.lst(lambda - lambda * z);
  }
  double a_v(double z) const { return vacation.lst(lambda - lambda * z); }
};

/// Tolerance and iteration cap for every truncated infinite sum/product.
struct TruncationPolicy {
  double eps = 1e-14;
  int max_n = 1'000'000;

  TruncationPolicy() = default;
  TruncationPolicy(double eps_, int max_n_);
};

/// Finite pmf of the queue length at the reference vacation end (Q_0).
struct InitialState {
  std::vector<double> pmf;  // pmf[k] = P(Q_0 = k)

  explicit InitialState(std::vector<double> pmf_);
  static InitialState point_mass(int k);

  /// q_0*(x) = sum_k pmf[k] x^k
  std::complex<double> pgf(std::complex<double> x) const;
  double pgf(double x) const;
};

}  // namespace qsolver
