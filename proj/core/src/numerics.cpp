#include "qsolver/numerics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qsolver {

namespace {
constexpr double kRadiusMass = 1e-12;  // r^M target
constexpr int kMaxNodes = 1 << 16;
}  // namespace

InversionGrid InversionGrid::for_max_index(int max_index, double aliasing_budget) {
  if (max_index < 0) throw std::invalid_argument("InversionGrid: max_index < 0");
  int m = 64;
  while (m < 2 * max_index + 2) m <<= 1;
  for (; m <= kMaxNodes; m <<= 1) {
    InversionGrid g{max_index, m, std::exp(std::log(kRadiusMass) / m)};
    if (g.aliasing_bound(max_index) <= aliasing_budget) return g;
  }
  std::ostringstream os;
  os << "InversionGrid: aliasing budget " << aliasing_budget
     << " unattainable for K = " << max_index << " with <= 2^16 nodes";
  throw std::invalid_argument(os.str());
}

double InversionGrid::aliasing_bound(int k) const {
  double rm = std::pow(radius, nodes);
  return rm / (1.0 - rm) * std::pow(radius, -k);
}

std::vector<double> invert_pgf(const PgfEvaluator& g, const InversionGrid& grid) {
  const int m = grid.nodes;
  const double r = grid.radius;

  // g has real coefficients, so g(conj z) = conj g(z): evaluate the upper
  // semicircle only.
  std::vector<std::complex<double>> vals(m);
  for (int j = 0; j <= m / 2; ++j) {
    double ang = 2.0 * std::numbers::pi * j / m;
    vals[j] = g(std::polar(r, ang));
  }
  for (int j = m / 2 + 1; j < m; ++j) vals[j] = std::conj(vals[m - j]);

  std::vector<double> pmf(grid.max_index + 1);
  double rinv_k = 1.0;
  for (int k = 0; k <= grid.max_index; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (int j = 0; j < m; ++j) {
      double ang = -2.0 * std::numbers::pi * j * k / m;
      acc += vals[j] * std::polar(1.0, ang);
    }
    acc *= rinv_k / m;
    if (std::abs(acc.imag()) >= 1e-9) {
      std::ostringstream os;
      os << "invert_pgf: imaginary residue " << acc.imag() << " at k = " << k;
      throw std::runtime_error(os.str());
    }
    pmf[k] = acc.real();
    rinv_k /= r;
  }
  return pmf;
}

namespace {

struct StencilValue {
  double value;
  double abs_sum;  // sum |c_i f(x_i)| / h^n, bounds the rounding noise
};

// Second-order stencils. Offsets are multiples of h; central uses both sides,
// one-sided variants only x0 + j*h (forward) or x0 - j*h (backward).
StencilValue stencil(const std::function<double(double)>& g, double x0, int order,
                     StencilMode mode, double h) {
  double side = (mode == StencilMode::backward) ? -1.0 : 1.0;
  double flip = (mode == StencilMode::backward && (order % 2 == 1)) ? -1.0 : 1.0;
  auto combine = [&](std::initializer_list<std::pair<double, double>> terms,
                     double denom) {
    double acc = 0.0, mag = 0.0;
    for (auto [c, j] : terms) {
      double v = c * g(x0 + side * j * h);
      acc += v;
      mag += std::abs(v);
    }
    return StencilValue{flip * acc / denom, mag / std::abs(denom)};
  };
  if (mode == StencilMode::central) {
    switch (order) {
      case 1: return combine({{1, 1}, {-1, -1}}, 2 * h);
      case 2: return combine({{1, 1}, {-2, 0}, {1, -1}}, h * h);
      case 3: return combine({{1, 2}, {-2, 1}, {2, -1}, {-1, -2}}, 2 * h * h * h);
      case 4:
        return combine({{1, 2}, {-4, 1}, {6, 0}, {-4, -1}, {1, -2}}, h * h * h * h);
    }
  } else {
    switch (order) {
      case 1: return combine({{-1.5, 0}, {2, 1}, {-0.5, 2}}, h);
      case 2: return combine({{2, 0}, {-5, 1}, {4, 2}, {-1, 3}}, h * h);
      case 3:
        return combine({{-2.5, 0}, {9, 1}, {-12, 2}, {7, 3}, {-1.5, 4}},
                       h * h * h);
      case 4:
        return combine({{3, 0}, {-14, 1}, {26, 2}, {-24, 3}, {11, 4}, {-2, 5}},
                       h * h * h * h);
    }
  }
  throw std::invalid_argument("derivative_at: order must be 1..4");
}

double default_step(int order) {
  switch (order) {
    case 1: return 1e-4;
    case 2: return 3e-4;
    case 3: return 1e-2;
    default: return 2e-2;
  }
}

}  // namespace

DerivativeResult derivative_at(const std::function<double(double)>& g, double x0,
                               int order, StencilMode mode, double h0) {
  if (order < 1 || order > 4)
    throw std::invalid_argument("derivative_at: order must be 1..4");
  if (h0 <= 0.0) h0 = default_step(order);

  // Base scheme is O(h^2); one-sided stencils also carry an h^3 term, central
  // ones step h^2 -> h^4 -> h^6. Three Richardson stages over four step
  // levels. The error estimate spans two stages (differences within a single
  // stage are proportional and can vanish together for unlucky derivative
  // ratios) plus an explicit rounding floor from the stencil magnitudes.
  double d[4], noise = 0.0;
  for (int i = 0; i < 4; ++i) {
    StencilValue s = stencil(g, x0, order, mode, h0 / (1 << i));
    d[i] = s.value;
    noise = std::max(noise, s.abs_sum);
  }

  double r1[3];
  for (int i = 0; i < 3; ++i) r1[i] = (4.0 * d[i + 1] - d[i]) / 3.0;
  double p2 = (mode == StencilMode::central) ? 16.0 : 8.0;
  double r2[2];
  for (int i = 0; i < 2; ++i) r2[i] = (p2 * r1[i + 1] - r1[i]) / (p2 - 1.0);
  double p3 = (mode == StencilMode::central) ? 64.0 : 16.0;
  double r3 = (p3 * r2[1] - r2[0]) / (p3 - 1.0);

  double est = 2.0 * std::abs(r3 - r2[1]) + 2.0 * std::abs(r2[1] - r2[0]) +
               8.0 * 2.22e-16 * noise + 1e-14 * (1.0 + std::abs(r3));
  return {r3, est};
}

DerivativeResult derivative_at_adaptive(const std::function<double(double)>& g,
                                        double x0, int order, StencilMode mode) {
  double base = default_step(order);
  DerivativeResult best{0.0, std::numeric_limits<double>::infinity()};
  bool any = false;
  for (double scale : {0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0}) {
    try {
      DerivativeResult r = derivative_at(g, x0, order, mode, base * scale);
      if (std::isfinite(r.value) && r.error_estimate < best.error_estimate) {
        best = r;
        any = true;
      }
    } catch (const std::exception&) {
      // step ladder left the integrand's domain; skip this scale
    }
  }
  if (!any)
    throw std::runtime_error("derivative_at_adaptive: no usable step size");
  return best;
}

}  // namespace qsolver
