#include "qsolver/map_gate.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qsolver {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Mat::Mat(int n, std::vector<double> rows) : n_(n), a_(std::move(rows)) {
  require(static_cast<std::size_t>(n) * n == a_.size(),
          "Mat: row-major data size must be n*n");
}

Mat Mat::identity(int n) {
  Mat m(n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::operator*(const Mat& o) const {
  require(n_ == o.n_, "Mat: dimension mismatch");
  Mat r(n_);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_; ++k) {
      double aik = (*this)(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < n_; ++j) r(i, j) += aik * o(k, j);
    }
  return r;
}

Mat Mat::operator+(const Mat& o) const {
  require(n_ == o.n_, "Mat: dimension mismatch");
  Mat r = *this;
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
  return r;
}

Mat Mat::operator-(const Mat& o) const {
  require(n_ == o.n_, "Mat: dimension mismatch");
  Mat r = *this;
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
  return r;
}

Mat& Mat::operator+=(const Mat& o) {
  require(n_ == o.n_, "Mat: dimension mismatch");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

Mat Mat::scaled(double c) const {
  Mat r = *this;
  for (double& x : r.a_) x *= c;
  return r;
}

Mat Mat::inverse() const {
  int n = n_;
  Mat a = *this;
  Mat inv = identity(n);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) < 1e-300)
      throw std::runtime_error("Mat::inverse: singular matrix");
    if (pivot != col)
      for (int j = 0; j < n; ++j) {
        std::swap(a(pivot, j), a(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
    double d = a(col, col);
    for (int j = 0; j < n; ++j) {
      a(col, j) /= d;
      inv(col, j) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a(r, col);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

std::vector<double> Mat::row_sums() const {
  std::vector<double> s(n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) s[i] += (*this)(i, j);
  return s;
}

double Mat::max_abs() const {
  double m = 0.0;
  for (double x : a_) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> operator*(const std::vector<double>& row, const Mat& m) {
  require(static_cast<int>(row.size()) == m.dim(), "row*Mat: dimension mismatch");
  std::vector<double> out(row.size(), 0.0);
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) out[j] += row[i] * m(i, j);
  return out;
}

MapRep::MapRep(Mat c, Mat d) : C(std::move(c)), D(std::move(d)) {
  require(C.dim() == D.dim() && C.dim() >= 1, "MapRep: C, D must be square, same dim");
  int n = C.dim();
  bool d_nonzero = false;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      require(D(i, j) >= -1e-12, "MapRep: D must be nonnegative");
      if (D(i, j) > 0.0) d_nonzero = true;
      if (i != j) require(C(i, j) >= -1e-12, "MapRep: off-diagonal C must be >= 0");
      row += C(i, j) + D(i, j);
    }
    require(std::abs(row) <= 1e-10, "MapRep: (C+D) must have zero row sums");
  }
  require(d_nonzero, "MapRep: D must be nonzero");

  // (-C)^{-1} D must be stochastic; its row sums equal 1 automatically when
  // the representation is consistent, so check numerically and reach every
  // state through the positive pattern.
  Mat p = C.scaled(-1.0).inverse() * D;
  for (double s : p.row_sums())
    require(std::abs(s - 1.0) <= 1e-8, "MapRep: (-C)^{-1} D must be stochastic");
  std::vector<bool> seen(n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j)
      if (!seen[j] && p(i, j) > 1e-12) {
        seen[j] = true;
        stack.push_back(j);
      }
  }
  for (bool s : seen) require(s, "MapRep: (-C)^{-1} D must be irreducible");
}

double MapRep::uniformization_rate() const {
  double theta = 0.0;
  for (int i = 0; i < C.dim(); ++i) theta = std::max(theta, -C(i, i));
  return 1.1 * theta;
}

namespace {

// sum_m P(N_theta(d) = m) K^m, truncated at cumulative mass 1 - tail
Mat uniformized_series(const MapRep& rep, const DistSpec& d, const Mat& k,
                       double tail) {
  int n = rep.dim();
  double theta = rep.uniformization_rate();
  Mat acc(n);
  Mat power = Mat::identity(n);
  double mass = 0.0;
  int m = 0;
  while (mass < 1.0 - tail) {
    double q = d.count_pmf(theta, m);
    acc += power.scaled(q);
    mass += q;
    power = power * k;
    ++m;
    if (m > 100000)
      throw std::runtime_error("matrix_pgf: uniformization series too long");
  }
  return acc;
}

}  // namespace

Mat matrix_pgf(const MapRep& rep, const DistSpec& d, double z) {
  require(z >= 0.0 && z <= 1.0, "matrix_pgf: z must be in [0, 1]");
  int n = rep.dim();
  Mat q = rep.C + rep.D.scaled(z);  // C + zD

  switch (d.family()) {
    case DistSpec::Family::exponential: {
      double mu = d.exponential_rate();
      return (Mat::identity(n).scaled(mu) - q).inverse().scaled(mu);
    }
    case DistSpec::Family::erlang: {
      double mu = d.erlang_rate();
      Mat res = (Mat::identity(n).scaled(mu) - q).inverse().scaled(mu);
      Mat acc = res;
      for (int i = 1; i < d.erlang_shape(); ++i) acc = acc * res;
      return acc;
    }
    case DistSpec::Family::hyper_exponential: {
      Mat acc(n);
      const auto& w = d.hyper_weights();
      const auto& mu = d.hyper_rates();
      for (std::size_t i = 0; i < w.size(); ++i)
        acc += (Mat::identity(n).scaled(mu[i]) - q).inverse().scaled(mu[i] * w[i]);
      return acc;
    }
    default: {
      // deterministic / uniform: uniformization with closed-form count weights
      double theta = rep.uniformization_rate();
      Mat k = Mat::identity(n) + q.scaled(1.0 / theta);
      return uniformized_series(rep, d, k, 1e-13);
    }
  }
}

CommutativityResult is_commutative(const MapRep& rep) {
  Mat comm = rep.C * rep.D - rep.D * rep.C;
  double res = comm.max_abs();
  return {res <= 1e-12, res};
}

double poisson_reduction_check(const MapRep& rep) {
  auto [ok, res] = is_commutative(rep);
  if (!ok) {
    std::ostringstream os;
    os << "poisson_reduction_check: representation is not commutative (|CD-DC| = "
       << res << ")";
    throw std::invalid_argument(os.str());
  }
  std::vector<double> de = rep.D.row_sums();
  double lambda = 0.0;
  for (double x : de) lambda += x;
  lambda /= de.size();
  for (double x : de) {
    if (std::abs(x - lambda) >= 1e-10) {
      std::ostringstream os;
      os << "poisson_reduction_check: De is not a constant vector (deviation "
         << std::abs(x - lambda) << "); contradicts the commutative reduction";
      throw std::logic_error(os.str());
    }
  }
  return lambda;
}

std::vector<Mat> count_coefficients(const MapRep& rep, const DistSpec& d,
                                    double tail) {
  int n = rep.dim();
  double theta = rep.uniformization_rate();
  Mat k0 = Mat::identity(n) + rep.C.scaled(1.0 / theta);
  Mat k1 = rep.D.scaled(1.0 / theta);

  // (K0 + z K1)^m = sum_j z^j S(m, j); rolling row of the split-power table
  std::vector<Mat> prev{Mat::identity(n)};
  std::vector<Mat> coeff{Mat::identity(n).scaled(d.count_pmf(theta, 0))};
  double mass = d.count_pmf(theta, 0);
  int m = 0;
  while (mass < 1.0 - tail) {
    ++m;
    if (m > 100000)
      throw std::runtime_error("count_coefficients: series too long");
    std::vector<Mat> cur(m + 1, Mat(n));
    for (int j = 0; j <= m; ++j) {
      if (j < m) cur[j] += prev[j] * k0;
      if (j > 0) cur[j] += prev[j - 1] * k1;
    }
    double q = d.count_pmf(theta, m);
    mass += q;
    coeff.resize(m + 1, Mat(n));
    for (int j = 0; j <= m; ++j) coeff[j] += cur[j].scaled(q);
    prev = std::move(cur);
  }
  return coeff;
}

InterchangeResult interchange_residual(const MapRep& rep, const DistSpec& h,
                                       const DistSpec& v,
                                       const std::vector<double>& q0,
                                       const std::vector<double>& z_grid) {
  require(static_cast<int>(q0.size()) == rep.dim(),
          "interchange_residual: q0 dimension mismatch");
  require(!z_grid.empty(), "interchange_residual: empty z grid");

  std::vector<Mat> a = count_coefficients(rep, h);
  std::vector<Mat> b = count_coefficients(rep, v);
  int n = rep.dim();

  // q_1(k) = q0 * (A conv V)(k)
  std::size_t kmax = a.size() + b.size() - 1;
  std::vector<std::vector<double>> q1(kmax, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<double> qa = q0 * a[i];
    for (std::size_t j = 0; j < b.size(); ++j) {
      std::vector<double> row = qa * b[j];
      for (int c = 0; c < n; ++c) q1[i + j][c] += row[c];
    }
  }

  InterchangeResult out{0.0, {}};
  for (double z : z_grid) {
    Mat x = matrix_pgf(rep, h, z);  // A*(z)

    // LHS: sum_k q_1(k) X^k
    std::vector<double> lhs(n, 0.0);
    Mat xk = Mat::identity(n);
    for (std::size_t k = 0; k < kmax; ++k) {
      std::vector<double> row = q1[k] * xk;
      for (int c = 0; c < n; ++c) lhs[c] += row[c];
      if (k + 1 < kmax) xk = xk * x;
    }

    // RHS: q0 * A*(X) * V*(X) with matrix-argument power series
    Mat ax(n), vx(n);
    xk = Mat::identity(n);
    for (std::size_t k = 0; k < std::max(a.size(), b.size()); ++k) {
      if (k < a.size()) ax += a[k] * xk;
      if (k < b.size()) vx += b[k] * xk;
      xk = xk * x;
    }
    std::vector<double> rhs = (q0 * ax) * vx;

    double res = 0.0;
    for (int c = 0; c < n; ++c) res = std::max(res, std::abs(lhs[c] - rhs[c]));
    out.per_z_residual.push_back(res);
    out.max_residual = std::max(out.max_residual, res);
  }
  return out;
}

}  // namespace qsolver
