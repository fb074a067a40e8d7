#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace qsolver {

/// Node layout for lattice PGF inversion on the circle |z| = r.
/// nodes is a power of two with nodes >= 2*max_index + 2, and r is picked so
/// r^nodes = 1e-12; the aliasing error of coefficient k is then bounded by
/// r^nodes / (1 - r^nodes) * r^{-k}.
struct InversionGrid {
  int max_index;  // K: highest coefficient recovered
  int nodes;      // M: circle nodes
  double radius;  // r

  /// Smallest grid meeting the aliasing budget for coefficients 0..K.
  /// Doubles the node count as needed, up to 2^16.
  static InversionGrid for_max_index(int max_index, double aliasing_budget = 1e-9);

  double aliasing_bound(int k) const;
};

using PgfEvaluator = std::function<std::complex<double>(std::complex<double>)>;

/// Coefficients p_0..p_K of an analytic PGF bounded by 1 on |z| <= r,
/// via the discrete Cauchy formula
///   p_k = r^{-k}/M * sum_j g(r e^{2pi i j/M}) e^{-2pi i j k/M}.
/// Throws if any recovered coefficient has imaginary residue >= 1e-9.
std::vector<double> invert_pgf(const PgfEvaluator& g, const InversionGrid& grid);

enum class StencilMode { central, forward, backward };

struct DerivativeResult {
  double value;
  double error_estimate;
};

/// n-th derivative (n = 1..4) by second-order finite differences on the step
/// ladder h, h/2, h/4, h/8 with a three-stage Richardson tableau.
/// forward/backward modes keep all evaluation points on one side of x0
/// (boundary use: z -> 1-, omega -> 0+). error_estimate combines the two top
/// tableau differences with an explicit rounding floor and is conservative.
DerivativeResult derivative_at(const std::function<double(double)>& g,
                               double x0, int order, StencilMode mode,
                               double h0 = 0.0);

/// derivative_at over a ladder of base steps, keeping the result with the
/// smallest error estimate. Handles integrands whose derivative magnitudes
/// vary over many orders across models.
DerivativeResult derivative_at_adaptive(const std::function<double(double)>& g,
                                        double x0, int order, StencilMode mode);

}  // namespace qsolver
