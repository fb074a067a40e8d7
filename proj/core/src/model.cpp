#include "qsolver/model.hpp"

#include <cmath>
#include <sstream>

namespace qsolver {

ModelParams::ModelParams(double lambda_, DistSpec service_, DistSpec vacation_)
    : lambda(lambda_), service(std::move(service_)), vacation(std::move(vacation_)) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("ModelParams: lambda must be > 0");
  double r = lambda * service.mean();
  if (!(r < 1.0)) {
    std::ostringstream os;
    os << "ModelParams: unstable, rho = lambda*E[H] = " << r << " >= 1";
    throw std::invalid_argument(os.str());
  }
  // E[V] finite is automatic for the supported families; reject nonsense anyway
  if (!std::isfinite(vacation.mean()))
    throw std::invalid_argument("ModelParams: E[V] must be finite");
}

TruncationPolicy::TruncationPolicy(double eps_, int max_n_)
    : eps(eps_), max_n(max_n_) {
  if (!(eps > 0.0) || eps > 1e-8)
    throw std::invalid_argument("TruncationPolicy: eps must be in (0, 1e-8]");
  if (max_n < 16)
    throw std::invalid_argument("TruncationPolicy: max_n must be >= 16");
}

InitialState::InitialState(std::vector<double> pmf_) : pmf(std::move(pmf_)) {
  if (pmf.empty()) throw std::invalid_argument("InitialState: empty pmf");
  double sum = 0.0;
  for (double p : pmf) {
    if (p < 0.0) throw std::invalid_argument("InitialState: negative pmf entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("InitialState: pmf must sum to 1");
}

InitialState InitialState::point_mass(int k) {
  std::vector<double> p(static_cast<std::size_t>(k) + 1, 0.0);
  p.back() = 1.0;
  return InitialState(std::move(p));
}

std::complex<double> InitialState::pgf(std::complex<double> x) const {
  std::complex<double> acc{0.0, 0.0};
  std::complex<double> xk{1.0, 0.0};
  for (double p : pmf) {
    acc += p * xk;
    xk *= x;
  }
  return acc;
}

double InitialState::pgf(double x) const {
  double acc = 0.0;
  double xk = 1.0;
  for (double p : pmf) {
    acc += p * xk;
    xk *= x;
  }
  return acc;
}

}  // namespace qsolver
