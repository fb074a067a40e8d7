#pragma once

#include <optional>
#include <vector>

#include "qsolver/dist.hpp"

namespace qsolver {

/// Dense row-major matrix, demonstration scale (|M| <= 4 in practice).
class Mat {
 public:
  Mat() = default;
  explicit Mat(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}
  Mat(int n, std::vector<double> rows);
  static Mat identity(int n);

  int dim() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

  Mat operator*(const Mat& o) const;
  Mat operator+(const Mat& o) const;
  Mat operator-(const Mat& o) const;
  Mat& operator+=(const Mat& o);
  Mat scaled(double c) const;
  Mat inverse() const;  // Gauss-Jordan with partial pivoting

  std::vector<double> row_sums() const;
  double max_abs() const;
  const std::vector<double>& data() const { return a_; }

 private:
  int n_ = 0;
  std::vector<double> a_;
};

std::vector<double> operator*(const std::vector<double>& row, const Mat& m);

/// Markovian arrival process (C, D): C carries transitions without arrivals,
/// D transitions with arrivals; C + D is an irreducible generator.
struct MapRep {
  Mat C, D;

  MapRep(Mat c, Mat d);  // validates the representation
  int dim() const { return C.dim(); }

  /// Uniformization rate and split kernels: C + zD = theta (K0 + z K1 - I).
  double uniformization_rate() const;
};

/// A*(z) = int exp[(C + zD)x] dH(x) for z in [0, 1]. Exponential and Erlang
/// use the exact resolvent form, hyperexponential the mixture of resolvents;
/// deterministic and uniform go through uniformization with the closed-form
/// count weights P(N_theta(H) = m).
Mat matrix_pgf(const MapRep& rep, const DistSpec& d, double z);

struct CommutativityResult {
  bool commutative;
  double residual;  // max-abs of CD - DC
};
CommutativityResult is_commutative(const MapRep& rep);

/// For a commutative representation, verify De = lambda e and return lambda.
/// A deviation beyond 1e-10 contradicts the Poisson-reduction property and
/// raises std::logic_error.
double poisson_reduction_check(const MapRep& rep);

/// Coefficient matrices A(0..K) with sum_k A(k) e >= (1 - tail) e,
/// by uniformization with arrival counting.
std::vector<Mat> count_coefficients(const MapRep& rep, const DistSpec& d,
                                    double tail = 1e-13);

struct InterchangeResult {
  double max_residual;                 // over the z grid, entrywise
  std::vector<double> per_z_residual;  // aligned with the input grid
};

/// Evaluates both sides of the one-step composition identity (substituting
/// A*(z) for z in the vacation-end recursion) for n = 1 with an initial state
/// concentrated on queue length 0 and phase row vector q0. The identity holds
/// when A*(z) commutes with every V(k); the residual quantifies the failure
/// otherwise.
InterchangeResult interchange_residual(const MapRep& rep, const DistSpec& h,
                                       const DistSpec& v,
                                       const std::vector<double>& q0,
                                       const std::vector<double>& z_grid);

}  // namespace qsolver
