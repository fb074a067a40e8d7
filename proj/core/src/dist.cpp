#include "qsolver/dist.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qsolver {

namespace {

constexpr double kWeightSumTol = 1e-12;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// (z)^k for small integer k by repeated multiplication.
std::complex<double> ipow(std::complex<double> z, int k) {
  std::complex<double> r{1.0, 0.0};
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

double ipow(double z, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

// sinh(x)/x, stable near 0 (removable singularity).
template <typename T>
T sinhc(T x) {
  if (std::abs(x) < 1e-4) {
    T x2 = x * x;
    return T(1.0) + x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sinh(x) / x;
}

// sinh(x)/x - 1 at full relative precision
double sinhc_m1(double x) {
  if (std::abs(x) < 1e-2) {
    double x2 = x * x;
    return x2 / 6.0 + x2 * x2 / 120.0 + x2 * x2 * x2 / 5040.0;
  }
  return std::sinh(x) / x - 1.0;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// P(Poisson(y) = m) without intermediate overflow.
double poisson_pmf(int m, double y) {
  if (y == 0.0) return m == 0 ? 1.0 : 0.0;
  return std::exp(-y + m * std::log(y) - std::lgamma(m + 1.0));
}

// P(Poisson(y) <= m).
double poisson_cdf(int m, double y) {
  if (y == 0.0) return 1.0;
  double term = std::exp(-y);
  double sum = term;
  for (int j = 1; j <= m; ++j) {
    term *= y / j;
    sum += term;
  }
  return sum;
}

}  // namespace

DistSpec DistSpec::deterministic(double value) {
  require(value > 0.0, "deterministic: value must be > 0");
  DistSpec d;
  d.family_ = Family::deterministic;
  d.value_ = value;
  return d;
}

DistSpec DistSpec::exponential(double rate) {
  require(rate > 0.0, "exponential: rate must be > 0");
  DistSpec d;
  d.family_ = Family::exponential;
  d.rate_ = rate;
  return d;
}

DistSpec DistSpec::erlang(int shape, double rate) {
  require(shape >= 1, "erlang: shape must be a positive integer");
  require(rate > 0.0, "erlang: rate must be > 0");
  DistSpec d;
  d.family_ = Family::erlang;
  d.shape_ = shape;
  d.rate_ = rate;
  return d;
}

DistSpec DistSpec::hyper_exponential(std::vector<double> weights,
                                     std::vector<double> rates) {
  require(!weights.empty(), "hyper_exponential: empty weight vector");
  require(weights.size() == rates.size(),
          "hyper_exponential: weights and rates must have equal length");
  double sum = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "hyper_exponential: weights must be nonnegative");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= kWeightSumTol,
          "hyper_exponential: weights must sum to 1");
  for (double r : rates) require(r > 0.0, "hyper_exponential: rates must be > 0");
  DistSpec d;
  d.family_ = Family::hyper_exponential;
  d.weights_ = std::move(weights);
  d.rates_ = std::move(rates);
  return d;
}

DistSpec DistSpec::uniform(double a, double b) {
  require(a >= 0.0, "uniform: lower bound must be >= 0");
  require(a < b, "uniform: requires a < b");
  DistSpec d;
  d.family_ = Family::uniform_interval;
  d.lo_ = a;
  d.hi_ = b;
  return d;
}

std::complex<double> DistSpec::lst(std::complex<double> s) const {
  if (s.real() < 0.0) throw std::domain_error("lst: requires Re(s) >= 0");
  switch (family_) {
    case Family::deterministic:
      return std::exp(-s * value_);
    case Family::exponential:
      return rate_ / (rate_ + s);
    case Family::erlang:
      return ipow(rate_ / (rate_ + s), shape_);
    case Family::hyper_exponential: {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t i = 0; i < weights_.size(); ++i)
        acc += weights_[i] * rates_[i] / (rates_[i] + s);
      return acc;
    }
    case Family::uniform_interval: {
      std::complex<double> mid = s * (0.5 * (lo_ + hi_));
      std::complex<double> half = s * (0.5 * (hi_ - lo_));
      return std::exp(-mid) * sinhc(half);
    }
  }
  return {};  // unreachable
}

double DistSpec::lst(double s) const {
  if (s < 0.0) throw std::domain_error("lst: requires Re(s) >= 0");
  switch (family_) {
    case Family::deterministic:
      return std::exp(-s * value_);
    case Family::exponential:
      return rate_ / (rate_ + s);
    case Family::erlang:
      return ipow(rate_ / (rate_ + s), shape_);
    case Family::hyper_exponential: {
      double acc = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i)
        acc += weights_[i] * rates_[i] / (rates_[i] + s);
      return acc;
    }
    case Family::uniform_interval:
      return std::exp(-s * 0.5 * (lo_ + hi_)) * sinhc(s * 0.5 * (hi_ - lo_));
  }
  return 0.0;  // unreachable
}

double DistSpec::one_minus_lst(double s) const {
  if (s < 0.0) throw std::domain_error("one_minus_lst: requires s >= 0");
  switch (family_) {
    case Family::deterministic:
      return -std::expm1(-s * value_);
    case Family::exponential:
      return s / (rate_ + s);
    case Family::erlang:
      return -std::expm1(-shape_ * std::log1p(s / rate_));
    case Family::hyper_exponential: {
      double acc = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i)
        acc += weights_[i] * s / (rates_[i] + s);
      return acc;
    }
    case Family::uniform_interval: {
      // 1 - e^{-sm} sinhc(sd) = -expm1(-sm) - e^{-sm} (sinhc(sd) - 1)
      double mid = s * 0.5 * (lo_ + hi_);
      double half = s * 0.5 * (hi_ - lo_);
      return -std::expm1(-mid) - std::exp(-mid) * sinhc_m1(half);
    }
  }
  return 0.0;  // unreachable
}

std::complex<double> DistSpec::pgf_count(double lambda,
                                         std::complex<double> z) const {
  require(lambda > 0.0, "pgf_count: lambda must be > 0");
  return lst(lambda - lambda * z);
}

double DistSpec::pgf_count(double lambda, double z) const {
  require(lambda > 0.0, "pgf_count: lambda must be > 0");
  return lst(lambda - lambda * z);
}

double DistSpec::raw_moment(int n) const {
  if (n < 1 || n > 6)
    throw std::invalid_argument("raw_moment: supported orders are 1..6");
  switch (family_) {
    case Family::deterministic:
      return ipow(value_, n);
    case Family::exponential:
      return factorial(n) / ipow(rate_, n);
    case Family::erlang: {
      double m = 1.0;
      for (int i = 0; i < n; ++i) m *= (shape_ + i) / rate_;
      return m;
    }
    case Family::hyper_exponential: {
      double acc = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i)
        acc += weights_[i] * factorial(n) / ipow(rates_[i], n);
      return acc;
    }
    case Family::uniform_interval:
      // (b^{n+1} - a^{n+1}) / ((n+1)(b-a))
      return (ipow(hi_, n + 1) - ipow(lo_, n + 1)) / ((n + 1) * (hi_ - lo_));
  }
  return 0.0;  // unreachable
}

double DistSpec::variance() const {
  double m1 = raw_moment(1);
  return raw_moment(2) - m1 * m1;
}

double DistSpec::count_pmf(double theta, int m) const {
  require(theta > 0.0, "count_pmf: theta must be > 0");
  require(m >= 0, "count_pmf: m must be >= 0");
  switch (family_) {
    case Family::deterministic:
      return poisson_pmf(m, theta * value_);
    case Family::exponential: {
      double p = rate_ / (rate_ + theta);
      return p * ipow(theta / (rate_ + theta), m);
    }
    case Family::erlang: {
      // negative binomial: C(m+k-1, m) p^k q^m
      double p = rate_ / (rate_ + theta);
      double q = theta / (rate_ + theta);
      double f = ipow(p, shape_);
      for (int j = 1; j <= m; ++j) f *= q * (j + shape_ - 1.0) / j;
      return f;
    }
    case Family::hyper_exponential: {
      double acc = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        double p = rates_[i] / (rates_[i] + theta);
        acc += weights_[i] * p * ipow(theta / (rates_[i] + theta), m);
      }
      return acc;
    }
    case Family::uniform_interval:
      // integral of the Poisson pmf over [a,b] telescopes to a CDF difference
      return (poisson_cdf(m, theta * lo_) - poisson_cdf(m, theta * hi_)) /
             (theta * (hi_ - lo_));
  }
  return 0.0;  // unreachable
}

double DistSpec::sample(std::mt19937_64& rng) const {
  switch (family_) {
    case Family::deterministic:
      return value_;
    case Family::exponential:
      return -std::log1p(-uniform01(rng)) / rate_;
    case Family::erlang: {
      double acc = 0.0;
      for (int i = 0; i < shape_; ++i)
        acc += -std::log1p(-uniform01(rng));
      return acc / rate_;
    }
    case Family::hyper_exponential: {
      double u = uniform01(rng);
      std::size_t i = 0;
      double acc = weights_[0];
      while (i + 1 < weights_.size() && u >= acc) acc += weights_[++i];
      return -std::log1p(-uniform01(rng)) / rates_[i];
    }
    case Family::uniform_interval:
      return lo_ + (hi_ - lo_) * uniform01(rng);
  }
  return 0.0;  // unreachable
}

std::string DistSpec::describe() const {
  std::ostringstream os;
  switch (family_) {
    case Family::deterministic:
      os << "Deterministic(" << value_ << ")";
      break;
    case Family::exponential:
      os << "Exponential(rate=" << rate_ << ")";
      break;
    case Family::erlang:
      os << "Erlang(" << shape_ << ", rate=" << rate_ << ")";
      break;
    case Family::hyper_exponential:
      os << "HyperExponential(k=" << weights_.size() << ")";
      break;
    case Family::uniform_interval:
      os << "Uniform(" << lo_ << ", " << hi_ << ")";
      break;
  }
  return os.str();
}

namespace {
void check_family(DistSpec::Family got, DistSpec::Family want, const char* what) {
  if (got != want) throw std::logic_error(what);
}
}  // namespace

double DistSpec::deterministic_value() const {
  check_family(family_, Family::deterministic, "not a deterministic family");
  return value_;
}
double DistSpec::exponential_rate() const {
  check_family(family_, Family::exponential, "not an exponential family");
  return rate_;
}
int DistSpec::erlang_shape() const {
  check_family(family_, Family::erlang, "not an erlang family");
  return shape_;
}
double DistSpec::erlang_rate() const {
  check_family(family_, Family::erlang, "not an erlang family");
  return rate_;
}
const std::vector<double>& DistSpec::hyper_weights() const {
  check_family(family_, Family::hyper_exponential, "not a hyperexponential family");
  return weights_;
}
const std::vector<double>& DistSpec::hyper_rates() const {
  check_family(family_, Family::hyper_exponential, "not a hyperexponential family");
  return rates_;
}
double DistSpec::uniform_lo() const {
  check_family(family_, Family::uniform_interval, "not a uniform family");
  return lo_;
}
double DistSpec::uniform_hi() const {
  check_family(family_, Family::uniform_interval, "not a uniform family");
  return hi_;
}

int poisson_sample(double mean, std::mt19937_64& rng) {
  if (mean <= 0.0) return 0;
  // count exponential gaps until they exceed the mean; exact for any mean
  double t = 0.0;
  int k = -1;
  while (t < mean) {
    t += -std::log1p(-uniform01(rng));
    ++k;
  }
  return k;
}

}  // namespace qsolver
