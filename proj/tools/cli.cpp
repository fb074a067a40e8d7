#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qsolver/batch.hpp"
#include "qsolver/branching.hpp"
#include "qsolver/busy_cycle.hpp"
#include "qsolver/numerics.hpp"
#include "qsolver/vacation.hpp"

namespace qsolver::cli {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  if (!j.is_object()) fail(std::string(where) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

double get_num(const json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j[key].is_number())
    fail(std::string(where) + ": missing numeric field '" + key + "'");
  return j[key].get<double>();
}

std::vector<double> get_num_array(const json& j, const char* where) {
  if (!j.is_array()) fail(std::string(where) + ": expected an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) fail(std::string(where) + ": expected numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

json estimate_json(const Estimate& e) {
  return json{{"value", e.value}, {"half_width", e.half_width}};
}

json estimates_json(const std::vector<Estimate>& es) {
  json a = json::array();
  for (const auto& e : es) a.push_back(estimate_json(e));
  return a;
}

}  // namespace

DistSpec parse_dist(const json& j) {
  check_keys(j, {"family", "value", "rate", "shape", "weights", "rates", "a", "b"},
             "distribution");
  if (!j.contains("family") || !j["family"].is_string())
    fail("distribution: missing string field 'family'");
  std::string fam = j["family"].get<std::string>();
  if (fam == "deterministic")
    return DistSpec::deterministic(get_num(j, "value", "deterministic"));
  if (fam == "exponential")
    return DistSpec::exponential(get_num(j, "rate", "exponential"));
  if (fam == "erlang") {
    double shape = get_num(j, "shape", "erlang");
    if (shape != std::floor(shape)) fail("erlang: shape must be an integer");
    return DistSpec::erlang(static_cast<int>(shape), get_num(j, "rate", "erlang"));
  }
  if (fam == "hyperexponential") {
    if (!j.contains("weights") || !j.contains("rates"))
      fail("hyperexponential: needs 'weights' and 'rates'");
    return DistSpec::hyper_exponential(get_num_array(j["weights"], "weights"),
                                       get_num_array(j["rates"], "rates"));
  }
  if (fam == "uniform")
    return DistSpec::uniform(get_num(j, "a", "uniform"), get_num(j, "b", "uniform"));
  fail("distribution: unknown family '" + fam + "'");
}

json dist_to_json(const DistSpec& d) {
  switch (d.family()) {
    case DistSpec::Family::deterministic:
      return {{"family", "deterministic"}, {"value", d.deterministic_value()}};
    case DistSpec::Family::exponential:
      return {{"family", "exponential"}, {"rate", d.exponential_rate()}};
    case DistSpec::Family::erlang:
      return {{"family", "erlang"}, {"shape", d.erlang_shape()}, {"rate", d.erlang_rate()}};
    case DistSpec::Family::hyper_exponential:
      return {{"family", "hyperexponential"},
              {"weights", d.hyper_weights()},
              {"rates", d.hyper_rates()}};
    case DistSpec::Family::uniform_interval:
      return {{"family", "uniform"}, {"a", d.uniform_lo()}, {"b", d.uniform_hi()}};
  }
  return {};
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    fail(std::string("config parse error: ") + e.what());
  }
  return doc;
}

RunConfig parse_config(const json& doc) {
  check_keys(doc,
             {"schema_version", "model", "truncation", "solve", "sim",
              "busycycle", "batch", "map", "compare"},
             "config");
  if (doc.contains("schema_version") &&
      doc["schema_version"].get<int>() != kSchemaVersion)
    fail("config: unsupported schema_version");

  RunConfig cfg;

  if (doc.contains("model")) {
    const json& m = doc["model"];
    check_keys(m, {"lambda", "service", "vacation"}, "model");
    if (!m.contains("service") || !m.contains("vacation"))
      fail("model: needs 'service' and 'vacation' distributions");
    cfg.model.emplace(get_num(m, "lambda", "model"), parse_dist(m["service"]),
                      parse_dist(m["vacation"]));
  }

  if (doc.contains("truncation")) {
    const json& t = doc["truncation"];
    check_keys(t, {"eps", "max_n"}, "truncation");
    double eps = t.contains("eps") ? get_num(t, "eps", "truncation") : 1e-14;
    int max_n = t.contains("max_n")
                    ? static_cast<int>(get_num(t, "max_n", "truncation"))
                    : 1'000'000;
    cfg.truncation = TruncationPolicy(eps, max_n);
  }

  if (doc.contains("solve")) {
    const json& s = doc["solve"];
    check_keys(s, {"pmf_k", "moments"}, "solve");
    if (s.contains("pmf_k")) cfg.solve.pmf_k = static_cast<int>(get_num(s, "pmf_k", "solve"));
    if (s.contains("moments"))
      cfg.solve.moments = static_cast<int>(get_num(s, "moments", "solve"));
  }

  if (doc.contains("busycycle")) {
    const json& b = doc["busycycle"];
    check_keys(b, {"theta_terms"}, "busycycle");
    if (b.contains("theta_terms"))
      cfg.busycycle.theta_terms = static_cast<int>(get_num(b, "theta_terms", "busycycle"));
  }

  if (doc.contains("batch")) {
    const json& b = doc["batch"];
    check_keys(b, {"pmf_k"}, "batch");
    if (b.contains("pmf_k")) cfg.batch.pmf_k = static_cast<int>(get_num(b, "pmf_k", "batch"));
  }

  if (doc.contains("compare")) {
    const json& c = doc["compare"];
    check_keys(c, {"sigmas"}, "compare");
    if (c.contains("sigmas")) cfg.compare_sigmas = get_num(c, "sigmas", "compare");
  }

  if (doc.contains("sim")) {
    if (!cfg.model) fail("sim: requires a 'model' section");
    const json& s = doc["sim"];
    check_keys(s,
               {"kind", "warmup", "horizon", "replications", "seed", "threads",
                "sojourn_lst_s", "queue_pgf_y", "age_residual_points"},
               "sim");
    SimKind kind = SimKind::single_vacation_gated;
    if (s.contains("kind")) {
      std::string k = s["kind"].get<std::string>();
      if (k == "single_vacation_gated")
        kind = SimKind::single_vacation_gated;
      else if (k == "multiple_vacation_gated")
        kind = SimKind::multiple_vacation_gated;
      else if (k == "batch_service")
        kind = SimKind::batch_service;
      else
        fail("sim: unknown kind '" + k + "'");
    }
    SimConfig sc(kind, *cfg.model);
    if (s.contains("warmup")) sc.warmup = static_cast<long long>(get_num(s, "warmup", "sim"));
    if (s.contains("horizon"))
      sc.horizon = static_cast<long long>(get_num(s, "horizon", "sim"));
    if (s.contains("replications"))
      sc.replications = static_cast<int>(get_num(s, "replications", "sim"));
    if (s.contains("seed"))
      sc.seed = static_cast<std::uint64_t>(get_num(s, "seed", "sim"));
    if (s.contains("threads")) sc.threads = static_cast<int>(get_num(s, "threads", "sim"));
    if (s.contains("sojourn_lst_s"))
      sc.sojourn_lst_s = get_num_array(s["sojourn_lst_s"], "sim.sojourn_lst_s");
    if (s.contains("queue_pgf_y"))
      sc.queue_pgf_y = get_num_array(s["queue_pgf_y"], "sim.queue_pgf_y");
    if (s.contains("age_residual_points")) {
      for (const auto& p : s["age_residual_points"]) {
        check_keys(p, {"z", "s", "omega"}, "age_residual_point");
        sc.age_residual_points.push_back({get_num(p, "z", "age_residual_point"),
                                          get_num(p, "s", "age_residual_point"),
                                          get_num(p, "omega", "age_residual_point")});
      }
    }
    cfg.sim.emplace(std::move(sc));
  }

  if (doc.contains("map")) {
    const json& mp = doc["map"];
    check_keys(mp, {"C", "D", "service", "vacation", "q0", "z_grid"}, "map");
    if (!mp.contains("C") || !mp.contains("D"))
      fail("map: needs row-major matrices 'C' and 'D'");
    auto read_mat = [&](const json& rows, const char* name) {
      if (!rows.is_array() || rows.empty()) fail(std::string("map.") + name + ": expected rows");
      int n = static_cast<int>(rows.size());
      std::vector<double> data;
      for (const auto& row : rows) {
        std::vector<double> r = get_num_array(row, name);
        if (static_cast<int>(r.size()) != n)
          fail(std::string("map.") + name + ": must be square");
        data.insert(data.end(), r.begin(), r.end());
      }
      return Mat(n, std::move(data));
    };
    MapCheckConfig mc;
    mc.c = read_mat(mp["C"], "C");
    mc.d = read_mat(mp["D"], "D");
    if (mp.contains("service")) mc.service = parse_dist(mp["service"]);
    if (mp.contains("vacation")) mc.vacation = parse_dist(mp["vacation"]);
    if (mp.contains("q0")) mc.q0 = get_num_array(mp["q0"], "map.q0");
    if (mp.contains("z_grid")) mc.z_grid = get_num_array(mp["z_grid"], "map.z_grid");
    cfg.map.emplace(std::move(mc));
  }

  return cfg;
}

namespace {

// generic long-format flattener: one row per scalar, pmf rows keep the index
void csv_walk(const json& node, const std::string& name, std::ostringstream& os);

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void csv_scalar(const std::string& name, const std::string& k, const json& v,
                std::ostringstream& os) {
  os << csv_quote(name) << ',' << k << ',';
  if (v.is_boolean())
    os << (v.get<bool>() ? 1 : 0);
  else
    os << v.dump();
  os << "\r\n";
}

void csv_walk(const json& node, const std::string& name, std::ostringstream& os) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it)
      csv_walk(it.value(), name.empty() ? it.key() : name + "." + it.key(), os);
  } else if (node.is_array()) {
    bool all_numbers = true;
    for (const auto& x : node)
      if (!x.is_number()) all_numbers = false;
    if (all_numbers) {
      for (std::size_t i = 0; i < node.size(); ++i)
        csv_scalar(name, std::to_string(i), node[i], os);
    } else {
      for (std::size_t i = 0; i < node.size(); ++i)
        csv_walk(node[i], name + "." + std::to_string(i), os);
    }
  } else if (!node.is_string()) {
    csv_scalar(name, "", node, os);
  } else {
    os << csv_quote(name) << ",," << csv_quote(node.get<std::string>()) << "\r\n";
  }
}

}  // namespace

std::string report_to_csv(const json& report) {
  std::ostringstream os;
  os << "name,k,value\r\n";
  csv_walk(report, "", os);
  return os.str();
}

void validate_report(const json& report) {
  auto need = [&](const char* key) {
    if (!report.contains(key))
      fail(std::string("report schema: missing field '") + key + "'");
  };
  need("schema_version");
  need("kind");
  if (report["schema_version"].get<int>() != kSchemaVersion)
    fail("report schema: bad schema_version");
  std::string kind = report["kind"].get<std::string>();
  auto need_number = [&](const char* key) {
    if (!report.contains(key) || !report[key].is_number())
      fail(std::string("report schema: missing numeric '") + key + "' for " + kind);
  };
  auto need_array = [&](const char* key) {
    if (!report.contains(key) || !report[key].is_array())
      fail(std::string("report schema: missing array '") + key + "' for " + kind);
  };
  if (kind == "solve") {
    need_number("ell_e0");
    need_number("p_idle");
    need_number("mean_queue");
    need_number("mean_delay");
    need_number("mv_mean");
    need_number("mv_gap");
    need_array("factorial_moments");
    need_array("delay_moments");
    need_array("pmf");
    need("diagnostics");
  } else if (kind == "simulate") {
    need("stats");
    if (!report["stats"].contains("time_avg_queue"))
      fail("report schema: simulate stats missing time_avg_queue");
  } else if (kind == "compare") {
    need_array("rows");
    need("all_pass");
  } else if (kind == "busycycle") {
    need_number("n_mean");
    need_number("t_mean");
    need_number("m_mean");
    need_number("renewal_residual");
    need_array("theta");
  } else if (kind == "batch") {
    need_number("rho_star");
    need_number("s_b_mean");
    need_number("c_mean");
    need_number("mean_queue");
    need_number("mean_delay");
    need_array("batch_size_pmf");
    need_array("queue_pmf");
  } else if (kind == "mapcheck") {
    need_number("commutator_residual");
    need_number("max_interchange_residual");
    need_array("interchange_residual");
    need_array("z_grid");
  } else {
    fail("report schema: unknown kind '" + kind + "'");
  }
}

namespace {

json model_json(const ModelParams& m) {
  return {{"lambda", m.lambda},
          {"rho", m.rho()},
          {"service", dist_to_json(m.service)},
          {"vacation", dist_to_json(m.vacation)}};
}

int emit(const json& report, const GlobalOptions& opt, std::ostream& out,
         std::ostream& err) {
  validate_report(report);
  std::string payload = (opt.format == OutputFormat::csv_fmt)
                            ? report_to_csv(report)
                            : report.dump(2) + "\n";
  if (opt.out_path.empty()) {
    out << payload;
  } else {
    std::ofstream f(opt.out_path, std::ios::binary);
    if (!f) {
      err << "cannot write output file: " << opt.out_path << "\n";
      return kExitValidation;
    }
    f << payload;
  }
  return kExitOk;
}

const ModelParams& require_model(const RunConfig& cfg) {
  if (!cfg.model)
    fail("config: this command requires a 'model' section");
  return *cfg.model;
}

json diagnostics_json(const EllEDiagnostics& d) {
  return {{"n_star", d.n_star},
          {"one_minus_psi_h", d.one_minus_psi_h},
          {"one_minus_psi_v", d.one_minus_psi_v},
          {"tail_estimate", d.tail_estimate},
          {"partial_h_sum", d.partial_h_sum}};
}

json sim_stats_json(const SimStats& st) {
  json s;
  s["replications"] = st.replications;
  s["total_arrivals"] = st.total_arrivals;
  s["total_departures"] = st.total_departures;
  s["final_backlog"] = st.final_backlog;
  s["divergence_flag"] = st.divergence_flag;
  s["time_avg_queue"] = estimate_json(st.time_avg_queue);
  s["p_empty"] = estimate_json(st.p_empty);
  s["idle_fraction"] = estimate_json(st.idle_fraction);
  s["busy_fraction"] = estimate_json(st.busy_fraction);
  s["sojourn_mean"] = estimate_json(st.sojourn_mean);
  s["sojourn_second"] = estimate_json(st.sojourn_second);
  s["sojourn_lst"] = estimates_json(st.sojourn_lst);
  s["queue_pmf"] = estimates_json(st.queue_pmf);
  s["arrival_seen_pmf"] = estimates_json(st.arrival_seen_pmf);
  s["vacation_end_pmf"] = estimates_json(st.vacation_end_pmf);
  s["vacation_start_pmf"] = estimates_json(st.vacation_start_pmf);
  s["vacation_end_pgf"] = estimates_json(st.vacation_end_pgf);
  s["time_avg_pgf"] = estimates_json(st.time_avg_pgf);
  s["idle_period_mean"] = estimate_json(st.idle_period_mean);
  s["cycle_t_mean"] = estimate_json(st.cycle_t_mean);
  s["cycle_n_mean"] = estimate_json(st.cycle_n_mean);
  s["cycle_m_mean"] = estimate_json(st.cycle_m_mean);
  s["cycle_m_pmf"] = estimates_json(st.cycle_m_pmf);
  s["cycle_count"] = st.cycle_count;
  s["batch_size_pmf"] = estimates_json(st.batch_size_pmf);
  s["age_residual"] = estimates_json(st.age_residual);
  return s;
}

std::string sim_kind_name(SimKind k) {
  switch (k) {
    case SimKind::single_vacation_gated: return "single_vacation_gated";
    case SimKind::multiple_vacation_gated: return "multiple_vacation_gated";
    case SimKind::batch_service: return "batch_service";
  }
  return "?";
}

}  // namespace

int cmd_solve(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
              std::ostream& err) {
  const ModelParams& m = require_model(cfg);
  VacationSolver solver(m, cfg.truncation);
  StationaryQueueReport r = solver.report(cfg.solve.pmf_k, cfg.solve.moments);

  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["kind"] = "solve";
  rep["model"] = model_json(m);
  rep["ell_e0"] = r.ell_e0;
  rep["p_idle"] = r.p_idle;
  rep["mean_queue"] = r.mean_queue;
  rep["mean_delay"] = r.mean_delay;
  rep["factorial_moments"] = r.factorial_moments;
  rep["delay_moments"] = r.delay_moments;
  rep["pmf"] = r.pmf;
  rep["pmf_sum"] = r.pmf_sum;
  rep["pmf_clipped"] = r.pmf_clipped;
  rep["mv_mean"] = r.mv_mean;
  rep["mv_gap"] = r.mv_mean_gap;
  rep["diagnostics"] = diagnostics_json(r.diagnostics);
  if (!opt.quiet)
    err << "solve: n* = " << r.diagnostics.n_star
        << ", tail estimate = " << r.diagnostics.tail_estimate << "\n";
  return emit(rep, opt, out, err);
}

int cmd_simulate(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
                 std::ostream& err) {
  require_model(cfg);
  if (!cfg.sim) fail("config: simulate requires a 'sim' section");
  SimStats st = run(*cfg.sim);
  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["kind"] = "simulate";
  rep["model"] = model_json(cfg.sim->params);
  rep["sim"] = {{"kind", sim_kind_name(cfg.sim->kind)},
                {"warmup", cfg.sim->warmup},
                {"horizon", cfg.sim->horizon},
                {"replications", cfg.sim->replications},
                {"seed", cfg.sim->seed}};
  rep["stats"] = sim_stats_json(st);
  if (!opt.quiet && st.divergence_flag)
    err << "simulate: divergence flag raised (large terminal backlog)\n";
  return emit(rep, opt, out, err);
}

int cmd_compare(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
                std::ostream& err) {
  const ModelParams& m = require_model(cfg);
  SimConfig sim_cfg = cfg.sim ? *cfg.sim : SimConfig(SimKind::single_vacation_gated, m);
  if (!cfg.sim) sim_cfg.queue_pgf_y = {0.5};

  VacationSolver solver(m, cfg.truncation);
  SimStats st = run(sim_cfg);

  json rows = json::array();
  bool all_pass = true;
  auto add_row = [&](const std::string& name, double analytic, const Estimate& e) {
    // zero-variance cells (empty tail bins) get a tiny absolute floor
    double tol = cfg.compare_sigmas * e.half_width + 1e-9;
    bool pass = std::abs(analytic - e.value) <= tol;
    all_pass = all_pass && pass;
    rows.push_back({{"observable", name},
                    {"analytic", analytic},
                    {"sim", e.value},
                    {"half_width", e.half_width},
                    {"delta", e.value - analytic},
                    {"pass", pass}});
  };

  switch (sim_cfg.kind) {
    case SimKind::single_vacation_gated: {
      BusyCycleSolver bc(m, cfg.truncation);
      auto cm = bc.cycle_means();
      add_row("mean_queue", solver.mean_queue_length(), st.time_avg_queue);
      add_row("p_queue_empty", solver.ell_star(0.0), st.p_empty);
      add_row("idle_fraction", solver.p_idle(), st.idle_fraction);
      add_row("busy_fraction", m.rho(), st.busy_fraction);
      add_row("mean_sojourn", solver.mean_queue_length() / m.lambda, st.sojourn_mean);
      add_row("idle_period_mean", 1.0 / m.lambda, st.idle_period_mean);
      add_row("cycle_t_mean", cm.t_mean, st.cycle_t_mean);
      add_row("cycle_n_mean", cm.n_mean, st.cycle_n_mean);
      add_row("cycle_m_mean", cm.m_mean, st.cycle_m_mean);
      std::vector<double> le_pmf = invert_pgf(
          [&](std::complex<double> z) { return solver.ell().ell_e(z); },
          InversionGrid::for_max_index(10));
      for (int k = 0; k <= 10; ++k) {
        Estimate e = (k < static_cast<int>(st.vacation_end_pmf.size()))
                         ? st.vacation_end_pmf[k]
                         : Estimate{};
        add_row("vacation_end_pmf[" + std::to_string(k) + "]", le_pmf[k], e);
      }
      for (std::size_t i = 0; i < sim_cfg.queue_pgf_y.size(); ++i) {
        double y = sim_cfg.queue_pgf_y[i];
        add_row("vacation_end_pgf[y=" + std::to_string(y) + "]",
                solver.ell().ell_e(y), st.vacation_end_pgf[i]);
        add_row("time_avg_pgf[y=" + std::to_string(y) + "]", solver.ell_star(y),
                st.time_avg_pgf[i]);
      }
      for (std::size_t i = 0; i < sim_cfg.sojourn_lst_s.size(); ++i)
        add_row("sojourn_lst[s=" + std::to_string(sim_cfg.sojourn_lst_s[i]) + "]",
                solver.delay_lst(sim_cfg.sojourn_lst_s[i]), st.sojourn_lst[i]);
      break;
    }
    case SimKind::multiple_vacation_gated: {
      // deliberately validated against the single-vacation analytics: the mean
      // queue must miss by the multiple-vacation gap
      add_row("mean_queue", solver.mean_queue_length(), st.time_avg_queue);
      add_row("mean_sojourn", solver.mean_queue_length() / m.lambda, st.sojourn_mean);
      break;
    }
    case SimKind::batch_service: {
      BatchSolver bs(m, cfg.truncation);
      add_row("rho_star", bs.rho_star(), st.busy_fraction);
      add_row("mean_queue", bs.mean_queue(), st.time_avg_queue);
      add_row("p_queue_empty", bs.queue_pgf(0.0), st.p_empty);
      add_row("mean_sojourn", bs.mean_delay(), st.sojourn_mean);
      std::vector<double> bpmf = bs.batch_size_pmf(10);
      for (int k = 0; k <= 10; ++k) {
        Estimate e = (k < static_cast<int>(st.batch_size_pmf.size()))
                         ? st.batch_size_pmf[k]
                         : Estimate{};
        add_row("batch_size_pmf[" + std::to_string(k) + "]", bpmf[k], e);
      }
      for (std::size_t i = 0; i < sim_cfg.age_residual_points.size(); ++i) {
        const auto& p = sim_cfg.age_residual_points[i];
        add_row("age_residual[" + std::to_string(i) + "]",
                bs.age_residual_transform(p.z, p.s, p.omega), st.age_residual[i]);
      }
      for (std::size_t i = 0; i < sim_cfg.sojourn_lst_s.size(); ++i)
        add_row("sojourn_lst[s=" + std::to_string(sim_cfg.sojourn_lst_s[i]) + "]",
                bs.delay_lst(sim_cfg.sojourn_lst_s[i]), st.sojourn_lst[i]);
      break;
    }
  }

  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["kind"] = "compare";
  rep["model"] = model_json(m);
  rep["sim_kind"] = sim_kind_name(sim_cfg.kind);
  rep["sigmas"] = cfg.compare_sigmas;
  rep["rows"] = rows;
  rep["all_pass"] = all_pass;
  int rc = emit(rep, opt, out, err);
  if (rc != kExitOk) return rc;
  if (!opt.quiet) {
    for (const auto& r : rows)
      err << (r["pass"].get<bool>() ? "PASS " : "FAIL ")
          << r["observable"].get<std::string>() << ": analytic "
          << r["analytic"].get<double>() << " vs sim " << r["sim"].get<double>()
          << " +- " << r["half_width"].get<double>() << "\n";
  }
  return all_pass ? kExitOk : kExitCompareFailed;
}

int cmd_busycycle(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
                  std::ostream& err) {
  const ModelParams& m = require_model(cfg);
  BusyCycleSolver bc(m, cfg.truncation);
  auto cm = bc.cycle_means();
  std::vector<double> theta = bc.theta_table(cfg.busycycle.theta_terms, 1.0, 0.0);

  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["kind"] = "busycycle";
  rep["model"] = model_json(m);
  rep["n_mean"] = cm.n_mean;
  rep["t_mean"] = cm.t_mean;
  rep["m_mean"] = cm.m_mean;
  rep["renewal_residual"] = cm.renewal_residual;
  rep["identity_warning"] = cm.identity_warning;
  rep["theta"] = theta;  // theta_n(1,0) = P(M* = n), n = 1..
  if (cm.identity_warning && !opt.quiet)
    err << "busycycle: renewal identity residual " << cm.renewal_residual
        << " exceeds 1e-4\n";
  return emit(rep, opt, out, err);
}

int cmd_batch(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
              std::ostream& err) {
  const ModelParams& m = require_model(cfg);
  BatchSolver bs(m, cfg.truncation);
  BatchReport r = bs.report(cfg.batch.pmf_k);

  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["kind"] = "batch";
  rep["model"] = model_json(m);
  rep["ell_s0"] = r.ell_s0;
  rep["s_b_mean"] = r.s_b_mean;
  rep["c_mean"] = r.c_mean;
  rep["rho_star"] = r.rho_star;
  rep["mean_queue"] = r.mean_queue;
  rep["mean_delay"] = r.mean_delay;
  rep["delay_second_moment"] = r.delay_second_moment;
  rep["batch_size_pmf"] = r.batch_size_pmf;
  rep["queue_pmf"] = r.queue_pmf;
  rep["diagnostics"] = diagnostics_json(r.diagnostics);
  return emit(rep, opt, out, err);
}

int cmd_mapcheck(const RunConfig& cfg, const GlobalOptions& opt, std::ostream& out,
                 std::ostream& err) {
  if (!cfg.map) fail("config: mapcheck requires a 'map' section");
  const MapCheckConfig& mc = *cfg.map;
  MapRep rep_map(mc.c, mc.d);

  std::vector<double> q0 = mc.q0;
  if (q0.empty())
    q0.assign(rep_map.dim(), 1.0 / rep_map.dim());
  if (static_cast<int>(q0.size()) != rep_map.dim())
    fail("map.q0: dimension mismatch");
  std::vector<double> z_grid = mc.z_grid;
  if (z_grid.empty())
    for (int i = 0; i < 10; ++i) z_grid.push_back(0.1 * i);

  auto comm = is_commutative(rep_map);
  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["kind"] = "mapcheck";
  rep["dim"] = rep_map.dim();
  rep["commutative"] = comm.commutative;
  rep["commutator_residual"] = comm.residual;
  if (comm.commutative) {
    rep["poisson_rate"] = poisson_reduction_check(rep_map);
  } else {
    rep["poisson_rate"] = nullptr;
  }
  auto ir = interchange_residual(rep_map, mc.service, mc.vacation, q0, z_grid);
  rep["z_grid"] = z_grid;
  rep["interchange_residual"] = ir.per_z_residual;
  rep["max_interchange_residual"] = ir.max_residual;
  if (!opt.quiet && ir.max_residual > 1e-8)
    err << "mapcheck: interchange identity fails (max residual "
        << ir.max_residual << ")\n";
  return emit(rep, opt, out, err);
}

int run_command(const std::string& command, const GlobalOptions& opt,
                std::ostream& out, std::ostream& err) {
  try {
    json doc = load_config_file(opt.config_path);
    RunConfig cfg = parse_config(doc);

    if (opt.eps_override || opt.max_n_override)
      cfg.truncation = TruncationPolicy(
          opt.eps_override.value_or(cfg.truncation.eps),
          opt.max_n_override.value_or(cfg.truncation.max_n));

    // seed precedence: --seed > QSOLVER_SEED > config
    if (cfg.sim) {
      if (const char* env = std::getenv("QSOLVER_SEED"))
        cfg.sim->seed = std::strtoull(env, nullptr, 10);
      if (opt.seed_override) cfg.sim->seed = *opt.seed_override;
    }

    if (command == "solve") return cmd_solve(cfg, opt, out, err);
    if (command == "simulate") return cmd_simulate(cfg, opt, out, err);
    if (command == "compare") return cmd_compare(cfg, opt, out, err);
    if (command == "busycycle") return cmd_busycycle(cfg, opt, out, err);
    if (command == "batch") return cmd_batch(cfg, opt, out, err);
    if (command == "mapcheck") return cmd_mapcheck(cfg, opt, out, err);
    err << "unknown command: " << command << "\n";
    return kExitValidation;
  } catch (const NonConvergence& e) {
    err << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::invalid_argument& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace qsolver::cli
