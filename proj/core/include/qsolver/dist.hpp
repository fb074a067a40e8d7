#pragma once

#include <complex>
#include <random>
#include <string>
#include <vector>

namespace qsolver {

/// Parametric nonnegative distribution used for service (H) and vacation (V)
/// lengths. All families have closed-form Laplace-Stieltjes transforms on
/// Re(s) >= 0, closed-form raw moments up to order 6, and an inverse-CDF
/// sampler. Instances are immutable after construction.
class DistSpec {
 public:
  enum class Family {
    deterministic,
    exponential,
    erlang,
    hyper_exponential,
    uniform_interval,
  };

  static DistSpec deterministic(double value);
  static DistSpec exponential(double rate);
  static DistSpec erlang(int shape, double rate);
  static DistSpec hyper_exponential(std::vector<double> weights,
                                    std::vector<double> rates);
  static DistSpec uniform(double a, double b);

  Family family() const { return family_; }

  /// E[exp(-s X)] for Re(s) >= 0. Throws std::domain_error on Re(s) < 0.
  std::complex<double> lst(std::complex<double> s) const;
  double lst(double s) const;

  /// 1 - lst(s) without subtractive cancellation (expm1/log1p forms); full
  /// relative precision down to s = 0. Real axis only.
  double one_minus_lst(double s) const;

  /// PGF of the number of Poisson(lambda) arrivals during X:
  /// E[z^{N_lambda(X)}] = lst(lambda - lambda*z).
  std::complex<double> pgf_count(double lambda, std::complex<double> z) const;
  double pgf_count(double lambda, double z) const;

  /// Exact E[X^n], n = 1..6.
  double raw_moment(int n) const;
  double mean() const { return raw_moment(1); }
  double variance() const;

  /// P(N_theta(X) = m): the count distribution of a Poisson(theta) process
  /// observed over an X-distributed interval. Used by the MAP uniformization.
  double count_pmf(double theta, int m) const;

  /// One variate. Deterministic given the rng state (manual inverse-CDF,
  /// no std::*_distribution involved).
  double sample(std::mt19937_64& rng) const;

  std::string describe() const;

  // family parameters (throw std::logic_error when queried on the wrong family)
  double deterministic_value() const;
  double exponential_rate() const;
  int erlang_shape() const;
  double erlang_rate() const;
  const std::vector<double>& hyper_weights() const;
  const std::vector<double>& hyper_rates() const;
  double uniform_lo() const;
  double uniform_hi() const;

 private:
  DistSpec() = default;

  Family family_ = Family::deterministic;
  double value_ = 0.0;                   // deterministic
  double rate_ = 0.0;                    // exponential, erlang
  int shape_ = 0;                        // erlang
  double lo_ = 0.0, hi_ = 0.0;           // uniform_interval
  std::vector<double> weights_, rates_;  // hyper_exponential
};

/// Uniform double in [0, 1) from the top 53 bits of the generator.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Poisson(mean) variate; inversion for small means, PTRS-free rejection-less
/// fallback via repeated exponential gaps for larger ones.
int poisson_sample(double mean, std::mt19937_64& rng);

}  // namespace qsolver
