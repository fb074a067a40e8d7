#include "qsolver/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <thread>

namespace qsolver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double exp_draw(double rate, std::mt19937_64& rng) {
  return -std::log1p(-uniform01(rng)) / rate;
}

double ipow(double y, long long k) {
  double r = 1.0;
  for (long long i = 0; i < k; ++i) r *= y;
  return r;
}

void hist_add(std::vector<double>& h, std::size_t k, double w = 1.0) {
  if (h.size() <= k) h.resize(k + 1, 0.0);
  h[k] += w;
}

// Everything one replication collects; aggregation happens afterwards.
struct RepData {
  double window_time = 0.0;
  std::vector<double> occupancy;  // time integral per level
  double idle_time = 0.0;
  double serving_time = 0.0;

  long long sojourn_count = 0;
  double sojourn_sum = 0.0, sojourn_sumsq = 0.0;
  std::vector<double> sojourn_lst_sum;

  std::vector<double> arrival_seen;
  long long arrival_seen_count = 0;
  std::vector<double> vac_end;
  long long vac_end_count = 0;
  std::vector<double> vac_start;
  long long vac_start_count = 0;
  std::vector<double> vac_end_pow_sum;

  long long cycle_count = 0;
  double cycle_t_sum = 0.0;
  double cycle_n_sum = 0.0, cycle_m_sum = 0.0;
  std::vector<double> cycle_m_hist;

  long long idle_periods = 0;
  double idle_period_sum = 0.0;

  std::vector<double> batch_size_hist;
  long long batch_count = 0;
  std::vector<double> age_res_sum;
  long long busy_arrivals = 0;

  long long arrivals = 0, departures = 0, backlog = 0;
};

void run_vacation_rep(const SimConfig& cfg, std::uint64_t stream_seed,
                      bool multiple, RepData& out) {
  std::mt19937_64 rng(stream_seed);
  const ModelParams& m = cfg.params;
  const double lambda = m.lambda;

  out.sojourn_lst_sum.assign(cfg.sojourn_lst_s.size(), 0.0);
  out.vac_end_pow_sum.assign(cfg.queue_pgf_y.size(), 0.0);

  enum class Phase { idle, serving, vacation };
  Phase phase;
  double t = 0.0;
  double phase_end = kInf;
  double next_arrival = exp_draw(lambda, rng);

  std::deque<double> waiting;  // arrival times, FIFO
  bool serving = false;
  double in_service_arrival = 0.0;
  long long gate_remaining = 0;

  if (multiple) {  // the multiple-vacation server never idles once started
    phase = Phase::vacation;
    phase_end = t + m.vacation.sample(rng);
  } else {
    phase = Phase::idle;
  }

  bool collecting = cfg.warmup == 0;
  double cycle_start = 0.0;
  bool cycle_valid = false;
  long long cycle_served = 0, cycle_vacs = 0;
  double idle_start = 0.0;
  bool idle_valid = collecting && phase == Phase::idle;

  auto level = [&]() -> long long {
    return static_cast<long long>(waiting.size()) + (serving ? 1 : 0);
  };

  auto start_service = [&](double arrival_time) {
    serving = true;
    in_service_arrival = arrival_time;
    phase = Phase::serving;
    phase_end = t + m.service.sample(rng);
  };

  while (out.arrivals < cfg.horizon) {
    double te = std::min(next_arrival, phase_end);
    if (collecting) {
      double dt = te - t;
      out.window_time += dt;
      hist_add(out.occupancy, static_cast<std::size_t>(level()), dt);
      if (phase == Phase::idle) out.idle_time += dt;
      if (phase == Phase::serving) out.serving_time += dt;
    }
    t = te;

    if (next_arrival <= phase_end) {  // arrival
      ++out.arrivals;
      if (out.arrivals == cfg.warmup + 1 && !collecting) collecting = true;
      if (collecting) {
        hist_add(out.arrival_seen, static_cast<std::size_t>(level()));
        ++out.arrival_seen_count;
      }
      if (phase == Phase::idle) {
        if (idle_valid && collecting) {
          ++out.idle_periods;
          out.idle_period_sum += t - idle_start;
        }
        cycle_start = t;
        cycle_valid = collecting;
        cycle_served = 0;
        cycle_vacs = 0;
        gate_remaining = 0;
        start_service(t);
      } else {
        waiting.push_back(t);
      }
      next_arrival = t + exp_draw(lambda, rng);
      continue;
    }

    // phase end
    if (phase == Phase::serving) {
      // departure
      ++out.departures;
      ++cycle_served;
      serving = false;
      if (collecting) {
        double d = t - in_service_arrival;
        ++out.sojourn_count;
        out.sojourn_sum += d;
        out.sojourn_sumsq += d * d;
        for (std::size_t i = 0; i < cfg.sojourn_lst_s.size(); ++i)
          out.sojourn_lst_sum[i] += std::exp(-cfg.sojourn_lst_s[i] * d);
      }
      if (gate_remaining > 0) {
        --gate_remaining;
        double a = waiting.front();
        waiting.pop_front();
        start_service(a);
      } else {
        if (collecting) {
          hist_add(out.vac_start, waiting.size());
          ++out.vac_start_count;
        }
        phase = Phase::vacation;
        phase_end = t + m.vacation.sample(rng);
      }
    } else {  // vacation end
      ++cycle_vacs;
      if (collecting) {
        hist_add(out.vac_end, waiting.size());
        ++out.vac_end_count;
        for (std::size_t i = 0; i < cfg.queue_pgf_y.size(); ++i)
          out.vac_end_pow_sum[i] +=
              ipow(cfg.queue_pgf_y[i], static_cast<long long>(waiting.size()));
      }
      if (!waiting.empty()) {
        gate_remaining = static_cast<long long>(waiting.size()) - 1;
        double a = waiting.front();
        waiting.pop_front();
        start_service(a);
      } else if (multiple) {
        phase_end = t + m.vacation.sample(rng);
      } else {
        if (cycle_valid && collecting) {
          ++out.cycle_count;
          out.cycle_t_sum += t - cycle_start;
          out.cycle_n_sum += static_cast<double>(cycle_served);
          out.cycle_m_sum += static_cast<double>(cycle_vacs);
          hist_add(out.cycle_m_hist, static_cast<std::size_t>(cycle_vacs));
        }
        phase = Phase::idle;
        phase_end = kInf;
        idle_start = t;
        idle_valid = collecting;
      }
    }
  }
  out.backlog = level();
}

void run_batch_rep(const SimConfig& cfg, std::uint64_t stream_seed, RepData& out) {
  std::mt19937_64 rng(stream_seed);
  const ModelParams& m = cfg.params;
  const double lambda = m.lambda;

  out.sojourn_lst_sum.assign(cfg.sojourn_lst_s.size(), 0.0);
  out.vac_end_pow_sum.assign(cfg.queue_pgf_y.size(), 0.0);
  out.age_res_sum.assign(cfg.age_residual_points.size(), 0.0);

  enum class Phase { idle, batch };
  Phase phase = Phase::idle;
  double t = 0.0;
  double phase_end = kInf;
  double next_arrival = exp_draw(lambda, rng);

  std::vector<double> members, waiting;  // arrival times
  double batch_start = 0.0;

  bool collecting = cfg.warmup == 0;
  double idle_start = 0.0;
  bool idle_valid = collecting;

  auto level = [&]() -> long long {
    return static_cast<long long>(members.size() + waiting.size());
  };

  auto start_batch = [&](std::vector<double>&& batch) {
    members = std::move(batch);
    double s = m.vacation.sample(rng);
    for (std::size_t i = 0; i < members.size(); ++i) s += m.service.sample(rng);
    batch_start = t;
    phase = Phase::batch;
    phase_end = t + s;
    if (collecting) {
      hist_add(out.batch_size_hist, members.size());
      ++out.batch_count;
      for (std::size_t i = 0; i < cfg.queue_pgf_y.size(); ++i)
        out.vac_end_pow_sum[i] +=
            ipow(cfg.queue_pgf_y[i], static_cast<long long>(members.size()));
    }
  };

  while (out.arrivals < cfg.horizon) {
    double te = std::min(next_arrival, phase_end);
    if (collecting) {
      double dt = te - t;
      out.window_time += dt;
      hist_add(out.occupancy, static_cast<std::size_t>(level()), dt);
      if (phase == Phase::idle) out.idle_time += dt;
      if (phase == Phase::batch) out.serving_time += dt;
    }
    t = te;

    if (next_arrival <= phase_end) {  // arrival
      ++out.arrivals;
      if (out.arrivals == cfg.warmup + 1 && !collecting) collecting = true;
      if (collecting) {
        hist_add(out.arrival_seen, static_cast<std::size_t>(level()));
        ++out.arrival_seen_count;
      }
      if (phase == Phase::idle) {
        if (idle_valid && collecting) {
          ++out.idle_periods;
          out.idle_period_sum += t - idle_start;
        }
        start_batch({t});
      } else {
        if (collecting) {
          ++out.busy_arrivals;
          double age = t - batch_start;
          double residual = phase_end - t;
          for (std::size_t i = 0; i < cfg.age_residual_points.size(); ++i) {
            const auto& pt = cfg.age_residual_points[i];
            out.age_res_sum[i] +=
                ipow(pt.z, static_cast<long long>(members.size())) *
                std::exp(-pt.s * age - pt.omega * residual);
          }
        }
        waiting.push_back(t);
      }
      next_arrival = t + exp_draw(lambda, rng);
      continue;
    }

    // batch completion: simultaneous departures
    out.departures += static_cast<long long>(members.size());
    if (collecting) {
      for (double a : members) {
        double d = t - a;
        ++out.sojourn_count;
        out.sojourn_sum += d;
        out.sojourn_sumsq += d * d;
        for (std::size_t i = 0; i < cfg.sojourn_lst_s.size(); ++i)
          out.sojourn_lst_sum[i] += std::exp(-cfg.sojourn_lst_s[i] * d);
      }
    }
    members.clear();
    if (!waiting.empty()) {
      std::vector<double> next;
      next.swap(waiting);
      start_batch(std::move(next));
    } else {
      phase = Phase::idle;
      phase_end = kInf;
      idle_start = t;
      idle_valid = collecting;
    }
  }
  out.backlog = level();
}

Estimate t_ci(const std::vector<double>& xs) {
  int n = static_cast<int>(xs.size());
  Estimate e;
  if (n == 0) return e;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  e.value = mean;
  if (n >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double var = ss / (n - 1);
    e.half_width = student_t_975(n - 1) * std::sqrt(var / n);
  }
  return e;
}

std::vector<Estimate> pmf_ci(const std::vector<std::vector<double>>& hists,
                             const std::vector<double>& norms) {
  std::size_t len = 0;
  for (const auto& h : hists) len = std::max(len, h.size());
  std::vector<Estimate> out(len);
  std::vector<double> xs(hists.size());
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t r = 0; r < hists.size(); ++r) {
      double c = (k < hists[r].size()) ? hists[r][k] : 0.0;
      xs[r] = (norms[r] > 0.0) ? c / norms[r] : 0.0;
    }
    out[k] = t_ci(xs);
  }
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (horizon < 100'000)
    throw std::invalid_argument("SimConfig: horizon must be >= 1e5 arrivals");
  if (replications < 10)
    throw std::invalid_argument("SimConfig: replications must be >= 10");
  if (warmup < 0 || warmup >= horizon)
    throw std::invalid_argument("SimConfig: requires 0 <= warmup < horizon");
  if (!age_residual_points.empty() && kind != SimKind::batch_service)
    throw std::invalid_argument(
        "SimConfig: age/residual sampling is batch-mode only");
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 step over (seed, index)
  std::uint64_t x = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

double student_t_975(int df) {
  static const double table[] = {
      0,     12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262,
      2.228, 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093,
      2.086, 2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045,
      2.042};
  if (df < 1) throw std::invalid_argument("student_t_975: df must be >= 1");
  if (df <= 30) return table[df];
  // interpolate in 1/df between the df = 30 entry and the normal quantile
  double w = 30.0 / df;
  return 1.960 + (2.042 - 1.960) * w;
}

SimStats run(const SimConfig& cfg) {
  cfg.validate();
  const int reps = cfg.replications;
  std::vector<RepData> data(reps);

  int hw = static_cast<int>(std::thread::hardware_concurrency());
  int n_threads = cfg.threads > 0 ? cfg.threads : std::max(1, hw);
  n_threads = std::min(n_threads, reps);

  auto worker = [&](int first, int step) {
    for (int r = first; r < reps; r += step) {
      std::uint64_t s = substream_seed(cfg.seed, static_cast<std::uint64_t>(r));
      switch (cfg.kind) {
        case SimKind::single_vacation_gated:
          run_vacation_rep(cfg, s, false, data[r]);
          break;
        case SimKind::multiple_vacation_gated:
          run_vacation_rep(cfg, s, true, data[r]);
          break;
        case SimKind::batch_service:
          run_batch_rep(cfg, s, data[r]);
          break;
      }
    }
  };
  if (n_threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker, i, n_threads);
    for (auto& th : pool) th.join();
  }

  SimStats st;
  st.replications = reps;
  for (const auto& d : data) {
    st.total_arrivals += d.arrivals;
    st.total_departures += d.departures;
    st.final_backlog += d.backlog;
    st.cycle_count += d.cycle_count;
  }
  // a stable run keeps the terminal backlog tiny compared to throughput
  st.divergence_flag =
      st.final_backlog > std::max<long long>(1000, st.total_arrivals / 100);

  auto per_rep = [&](auto&& f) {
    std::vector<double> xs(reps);
    for (int r = 0; r < reps; ++r) xs[r] = f(data[r]);
    return t_ci(xs);
  };

  st.time_avg_queue = per_rep([](const RepData& d) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d.occupancy.size(); ++k) acc += k * d.occupancy[k];
    return acc / d.window_time;
  });
  st.p_empty = per_rep([](const RepData& d) {
    return d.occupancy.empty() ? 0.0 : d.occupancy[0] / d.window_time;
  });
  st.idle_fraction = per_rep([](const RepData& d) { return d.idle_time / d.window_time; });
  st.busy_fraction =
      per_rep([](const RepData& d) { return d.serving_time / d.window_time; });
  st.sojourn_mean =
      per_rep([](const RepData& d) { return d.sojourn_sum / d.sojourn_count; });
  st.sojourn_second =
      per_rep([](const RepData& d) { return d.sojourn_sumsq / d.sojourn_count; });

  for (std::size_t i = 0; i < cfg.sojourn_lst_s.size(); ++i)
    st.sojourn_lst.push_back(per_rep(
        [i](const RepData& d) { return d.sojourn_lst_sum[i] / d.sojourn_count; }));

  {
    std::vector<std::vector<double>> hists;
    std::vector<double> norms;
    for (const auto& d : data) {
      hists.push_back(d.occupancy);
      norms.push_back(d.window_time);
    }
    st.queue_pmf = pmf_ci(hists, norms);
  }
  {
    std::vector<std::vector<double>> hists;
    std::vector<double> norms;
    for (const auto& d : data) {
      hists.push_back(d.arrival_seen);
      norms.push_back(static_cast<double>(d.arrival_seen_count));
    }
    st.arrival_seen_pmf = pmf_ci(hists, norms);
  }

  if (cfg.kind != SimKind::batch_service) {
    {
      std::vector<std::vector<double>> hists;
      std::vector<double> norms;
      for (const auto& d : data) {
        hists.push_back(d.vac_end);
        norms.push_back(static_cast<double>(d.vac_end_count));
      }
      st.vacation_end_pmf = pmf_ci(hists, norms);
    }
    {
      std::vector<std::vector<double>> hists;
      std::vector<double> norms;
      for (const auto& d : data) {
        hists.push_back(d.vac_start);
        norms.push_back(static_cast<double>(d.vac_start_count));
      }
      st.vacation_start_pmf = pmf_ci(hists, norms);
    }
    for (std::size_t i = 0; i < cfg.queue_pgf_y.size(); ++i)
      st.vacation_end_pgf.push_back(per_rep([i](const RepData& d) {
        return d.vac_end_pow_sum[i] / d.vac_end_count;
      }));
    st.idle_period_mean = per_rep(
        [](const RepData& d) { return d.idle_period_sum / d.idle_periods; });
  } else {
    {
      std::vector<std::vector<double>> hists;
      std::vector<double> norms;
      for (const auto& d : data) {
        hists.push_back(d.batch_size_hist);
        norms.push_back(static_cast<double>(d.batch_count));
      }
      st.batch_size_pmf = pmf_ci(hists, norms);
    }
    for (std::size_t i = 0; i < cfg.queue_pgf_y.size(); ++i)
      st.vacation_end_pgf.push_back(per_rep([i](const RepData& d) {
        return d.vac_end_pow_sum[i] / d.batch_count;
      }));
    for (std::size_t i = 0; i < cfg.age_residual_points.size(); ++i)
      st.age_residual.push_back(per_rep(
          [i](const RepData& d) { return d.age_res_sum[i] / d.busy_arrivals; }));
    st.idle_period_mean = per_rep(
        [](const RepData& d) { return d.idle_period_sum / d.idle_periods; });
  }

  if (cfg.kind == SimKind::single_vacation_gated) {
    st.cycle_t_mean =
        per_rep([](const RepData& d) { return d.cycle_t_sum / d.cycle_count; });
    st.cycle_n_mean =
        per_rep([](const RepData& d) { return d.cycle_n_sum / d.cycle_count; });
    st.cycle_m_mean =
        per_rep([](const RepData& d) { return d.cycle_m_sum / d.cycle_count; });
    std::vector<std::vector<double>> hists;
    std::vector<double> norms;
    for (const auto& d : data) {
      hists.push_back(d.cycle_m_hist);
      norms.push_back(static_cast<double>(d.cycle_count));
    }
    st.cycle_m_pmf = pmf_ci(hists, norms);
  }

  for (std::size_t i = 0; i < cfg.queue_pgf_y.size(); ++i) {
    double y = cfg.queue_pgf_y[i];
    st.time_avg_pgf.push_back(per_rep([y](const RepData& d) {
      double acc = 0.0, yk = 1.0;
      for (std::size_t k = 0; k < d.occupancy.size(); ++k) {
        acc += d.occupancy[k] * yk;
        yk *= y;
      }
      return acc / d.window_time;
    }));
  }

  return st;
}

TransientStats run_transient(const ModelParams& params, const InitialState& init,
                             int n_vacations, long long runs, std::uint64_t seed,
                             const std::vector<double>& y_points) {
  if (n_vacations < 1)
    throw std::invalid_argument("run_transient: n_vacations must be >= 1");
  if (runs < 1) throw std::invalid_argument("run_transient: runs must be >= 1");

  const int groups = static_cast<int>(std::min<long long>(20, runs));
  std::vector<double> pmf;
  std::vector<std::vector<double>> group_pow(y_points.size(),
                                             std::vector<double>(groups, 0.0));
  std::vector<double> group_mean(groups, 0.0);
  std::vector<long long> group_n(groups, 0);

  // draw Q_0 by inverse cdf over the initial pmf
  std::vector<double> cdf(init.pmf.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < init.pmf.size(); ++i) {
    acc += init.pmf[i];
    cdf[i] = acc;
  }

  for (long long r = 0; r < runs; ++r) {
    std::mt19937_64 rng(substream_seed(seed, static_cast<std::uint64_t>(r)));
    double u = uniform01(rng);
    long long q = 0;
    while (q + 1 < static_cast<long long>(cdf.size()) &&
           u >= cdf[static_cast<std::size_t>(q)])
      ++q;

    for (int step = 0; step < n_vacations; ++step) {
      long long served = (q == 0) ? 1 : q;
      double total_service = 0.0;
      for (long long i = 0; i < served; ++i)
        total_service += params.service.sample(rng);
      q = poisson_sample(params.lambda * total_service, rng) +
          poisson_sample(params.lambda * params.vacation.sample(rng), rng);
    }

    hist_add(pmf, static_cast<std::size_t>(q));
    int g = static_cast<int>(r % groups);
    ++group_n[g];
    group_mean[g] += static_cast<double>(q);
    for (std::size_t i = 0; i < y_points.size(); ++i)
      group_pow[i][g] += ipow(y_points[i], q);
  }

  TransientStats out;
  out.runs = runs;
  out.pmf = pmf;
  for (double& p : out.pmf) p /= static_cast<double>(runs);
  for (int g = 0; g < groups; ++g) {
    group_mean[g] /= group_n[g];
    for (std::size_t i = 0; i < y_points.size(); ++i) group_pow[i][g] /= group_n[g];
  }
  out.mean = t_ci(group_mean);
  for (std::size_t i = 0; i < y_points.size(); ++i)
    out.pgf_at_y.push_back(t_ci(group_pow[i]));
  return out;
}

}  // namespace qsolver
