#pragma once

#include <cstdint>
#include <vector>

#include "qsolver/model.hpp"

namespace qsolver {

enum class SimKind {
  single_vacation_gated,
  multiple_vacation_gated,
  batch_service,
};

struct AgeResidualPoint {
  double z = 1.0, s = 0.0, omega = 0.0;
};

struct SimConfig {
  SimKind kind = SimKind::single_vacation_gated;
  ModelParams params;
  long long warmup = 100'000;     // arrivals discarded before collection
  long long horizon = 1'000'000;  // arrivals per replication
  int replications = 20;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  std::vector<double> sojourn_lst_s;   // sample E[e^{-s D}] at these s
  std::vector<double> queue_pgf_y;     // sample E[y^{L_E}] and time-avg E[y^L]
  std::vector<AgeResidualPoint> age_residual_points;  // batch mode only

  SimConfig(SimKind k, ModelParams p) : kind(k), params(std::move(p)) {}
  void validate() const;
};

struct Estimate {
  double value = 0.0;
  double half_width = 0.0;  // 95% Student-t over replication means
};

struct SimStats {
  int replications = 0;
  long long total_arrivals = 0;
  long long total_departures = 0;
  long long final_backlog = 0;
  bool divergence_flag = false;

  Estimate time_avg_queue;
  Estimate p_empty;        // time fraction with L = 0
  Estimate idle_fraction;  // server idle (empty system, no vacation/batch)
  Estimate busy_fraction;  // serving fraction (batch mode: rho*)
  Estimate sojourn_mean;
  Estimate sojourn_second;
  std::vector<Estimate> sojourn_lst;  // per configured s

  std::vector<Estimate> queue_pmf;         // time-average occupancy
  std::vector<Estimate> arrival_seen_pmf;  // PASTA histogram
  std::vector<Estimate> vacation_end_pmf;  // L_E
  std::vector<Estimate> vacation_start_pmf;  // L_B
  std::vector<Estimate> vacation_end_pgf;  // E[y^{L_E}] per configured y
  std::vector<Estimate> time_avg_pgf;      // E[y^L] per configured y

  Estimate idle_period_mean;
  Estimate cycle_t_mean, cycle_n_mean, cycle_m_mean;
  std::vector<Estimate> cycle_m_pmf;
  long long cycle_count = 0;

  std::vector<Estimate> batch_size_pmf;
  std::vector<Estimate> age_residual;  // per configured point
};

/// Event-driven simulation of the gated single-vacation queue, its
/// multiple-vacation variant, and the batch-service queue. Replications run
/// on independent counter-derived streams; results are bit-identical for a
/// fixed seed regardless of thread count.
SimStats run(const SimConfig& config);

struct TransientStats {
  std::vector<double> pmf;             // empirical pmf of Q_n
  std::vector<Estimate> pgf_at_y;      // E[y^{Q_n}] per requested y
  Estimate mean;
  long long runs = 0;
};

/// Starts each run at a vacation end with Q_0 drawn from init, advances n
/// gated service/vacation steps, records Q_n.
TransientStats run_transient(const ModelParams& params, const InitialState& init,
                             int n_vacations, long long runs, std::uint64_t seed,
                             const std::vector<double>& y_points = {});

/// 0.975 Student-t quantile used for the confidence half-widths.
double student_t_975(int df);

/// Counter-derived per-replication seed (splitmix64 over seed and index).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace qsolver
