#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "qsolver/vacation.hpp"

using namespace qsolver::cli;

namespace {

struct TempConfig {
  std::string path;
  explicit TempConfig(const json& doc) {
    static int counter = 0;
    path = "qsolver_test_cfg_" + std::to_string(counter++) + ".json";
    std::ofstream f(path);
    f << doc.dump(2);
  }
  ~TempConfig() { std::remove(path.c_str()); }
};

json base_model() {
  return {{"lambda", 0.5},
          {"service", {{"family", "exponential"}, {"rate", 1.0}}},
          {"vacation", {{"family", "erlang"}, {"shape", 2}, {"rate", 2.0}}}};
}

struct RunResult {
  int code;
  std::string out, err;
};

RunResult invoke(const std::string& cmd, const std::string& cfg_path,
                 OutputFormat fmt = OutputFormat::json_fmt) {
  GlobalOptions opt;
  opt.config_path = cfg_path;
  opt.format = fmt;
  opt.quiet = true;
  std::ostringstream out, err;
  int code = run_command(cmd, opt, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("distribution literals round-trip") {
  for (const auto& j : {json{{"family", "deterministic"}, {"value", 2.0}},
                        json{{"family", "exponential"}, {"rate", 1.5}},
                        json{{"family", "erlang"}, {"shape", 2}, {"rate", 3.0}},
                        json{{"family", "hyperexponential"},
                             {"weights", {0.5, 0.5}},
                             {"rates", {1.0, 2.0}}},
                        json{{"family", "uniform"}, {"a", 0.5}, {"b", 1.5}}}) {
    auto d = parse_dist(j);
    auto round = dist_to_json(d);
    CHECK(parse_dist(round).mean() == doctest::Approx(d.mean()));
  }
  CHECK_THROWS_AS(parse_dist(json{{"family", "weibull"}, {"shape", 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_dist(json{{"family", "erlang"}, {"shape", 1.5}, {"rate", 1.0}}),
                  std::invalid_argument);
}

TEST_CASE("unknown keys are rejected at every level") {
  json doc = {{"model", base_model()}, {"frobnicate", 1}};
  CHECK_THROWS_WITH_AS(parse_config(doc),
                       doctest::Contains("unknown key 'frobnicate'"),
                       std::invalid_argument);
  json doc2 = {{"model", base_model()}};
  doc2["model"]["extra"] = true;
  CHECK_THROWS_AS(parse_config(doc2), std::invalid_argument);
  json doc3 = {{"model", base_model()}};
  doc3["model"]["service"]["scale"] = 2.0;
  CHECK_THROWS_AS(parse_config(doc3), std::invalid_argument);
}

TEST_CASE("solve: report emission, schema round-trip, exit codes") {
  TempConfig cfg(json{{"model", base_model()}, {"solve", {{"pmf_k", 8}, {"moments", 2}}}});
  auto r = invoke("solve", cfg.path);
  CHECK(r.code == kExitOk);
  json rep = json::parse(r.out);
  CHECK_NOTHROW(validate_report(rep));
  CHECK(rep["kind"] == "solve");
  CHECK(rep["pmf"].size() == 9);
  CHECK(rep["mv_gap"].get<double>() > 0.0);

  auto csv = invoke("solve", cfg.path, OutputFormat::csv_fmt);
  CHECK(csv.code == kExitOk);
  CHECK(csv.out.substr(0, 12) == "name,k,value");
  CHECK(csv.out.find("pmf,0,") != std::string::npos);
  CHECK(csv.out.find("pmf,8,") != std::string::npos);
}

TEST_CASE("solve: stability gate names rho and exits 2") {
  json m = base_model();
  m["lambda"] = 2.0;
  TempConfig cfg(json{{"model", m}});
  auto r = invoke("solve", cfg.path);
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("rho") != std::string::npos);
}

TEST_CASE("solve: truncation cap maps to the non-convergence exit code") {
  json m = base_model();
  m["lambda"] = 0.9;
  TempConfig cfg(json{{"model", m}, {"truncation", {{"eps", 1e-14}, {"max_n", 17}}}});
  auto r = invoke("solve", cfg.path);
  CHECK(r.code == kExitNonConvergence);
}

TEST_CASE("simulate: deterministic under a fixed seed, env override wins") {
  TempConfig cfg(json{{"model", base_model()},
                  {"sim",
                   {{"kind", "single_vacation_gated"},
                    {"horizon", 120000},
                    {"warmup", 12000},
                    {"replications", 10},
                    {"seed", 4}}}});
  auto a = invoke("simulate", cfg.path);
  auto b = invoke("simulate", cfg.path);
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  json rep = json::parse(a.out);
  CHECK_NOTHROW(validate_report(rep));

  setenv("QSOLVER_SEED", "99", 1);
  auto c = invoke("simulate", cfg.path);
  unsetenv("QSOLVER_SEED");
  CHECK(c.out != a.out);
  CHECK(json::parse(c.out)["sim"]["seed"].get<std::uint64_t>() == 99);
}

TEST_CASE("compare: all observables pass on a matched model") {
  TempConfig cfg(json{{"model", base_model()},
                  {"sim",
                   {{"kind", "single_vacation_gated"},
                    {"horizon", 400000},
                    {"warmup", 40000},
                    {"replications", 12},
                    {"seed", 31},
                    {"queue_pgf_y", {0.5}},
                    {"sojourn_lst_s", {1.0}}}}});
  auto r = invoke("compare", cfg.path);
  CHECK(r.code == kExitOk);
  json rep = json::parse(r.out);
  CHECK(rep["all_pass"].get<bool>());
  CHECK(rep["rows"].size() > 10);
}

TEST_CASE("compare: mismatched multiple-vacation run fails by the mv gap") {
  TempConfig cfg(json{{"model", base_model()},
                  {"sim",
                   {{"kind", "multiple_vacation_gated"},
                    {"horizon", 600000},
                    {"warmup", 60000},
                    {"replications", 12},
                    {"seed", 8}}}});
  auto r = invoke("compare", cfg.path);
  CHECK(r.code == kExitCompareFailed);
  json rep = json::parse(r.out);
  CHECK_FALSE(rep["all_pass"].get<bool>());
  // the mean-queue row misses by ~ the multiple-vacation gap
  for (const auto& row : rep["rows"]) {
    if (row["observable"] == "mean_queue") {
      CHECK_FALSE(row["pass"].get<bool>());
      qsolver::ModelParams m(0.5, qsolver::DistSpec::exponential(1.0), qsolver::DistSpec::erlang(2, 2.0));
      auto gap = qsolver::VacationSolver(m).mv_comparison().second;
      CHECK(row["delta"].get<double>() == doctest::Approx(gap).epsilon(0.15));
    }
  }
}

TEST_CASE("busycycle and batch reports validate") {
  TempConfig cfg(json{{"model", base_model()},
                  {"busycycle", {{"theta_terms", 6}}},
                  {"batch", {{"pmf_k", 12}}}});
  auto bc = invoke("busycycle", cfg.path);
  CHECK(bc.code == kExitOk);
  json bc_rep = json::parse(bc.out);
  CHECK_NOTHROW(validate_report(bc_rep));
  CHECK(bc_rep["theta"].size() == 6);
  CHECK_FALSE(bc_rep["identity_warning"].get<bool>());

  auto ba = invoke("batch", cfg.path);
  CHECK(ba.code == kExitOk);
  json ba_rep = json::parse(ba.out);
  CHECK_NOTHROW(validate_report(ba_rep));
  CHECK(ba_rep["rho_star"].get<double>() > 0.0);
}

TEST_CASE("mapcheck: bundled MMPP example flags the interchange failure") {
  TempConfig cfg(json{{"map",
                   {{"C", {{-2.0, 1.0}, {1.0, -6.0}}},
                    {"D", {{1.0, 0.0}, {0.0, 5.0}}},
                    {"service", {{"family", "exponential"}, {"rate", 1.0}}},
                    {"vacation", {{"family", "exponential"}, {"rate", 1.0}}}}}});
  auto r = invoke("mapcheck", cfg.path);
  CHECK(r.code == kExitOk);
  json rep = json::parse(r.out);
  CHECK_NOTHROW(validate_report(rep));
  CHECK_FALSE(rep["commutative"].get<bool>());
  CHECK(rep["poisson_rate"].is_null());
  CHECK(rep["max_interchange_residual"].get<double>() > 1e-3);
}

TEST_CASE("missing config file and wrong command") {
  GlobalOptions opt;
  opt.config_path = "definitely_missing_config.json";
  std::ostringstream out, err;
  CHECK(run_command("solve", opt, out, err) == kExitValidation);

  TempConfig cfg(json{{"model", base_model()}});
  auto r = invoke("frobnicate", cfg.path);
  CHECK(r.code == kExitValidation);
}

TEST_CASE("CSV quoting follows RFC 4180") {
  json rep = {{"awkward,name", "va\"lue"}, {"plain", 1.25}};
  std::string csv = report_to_csv(rep);
  CHECK(csv.find("\"awkward,name\"") != std::string::npos);
  CHECK(csv.find("\"va\"\"lue\"") != std::string::npos);
  CHECK(csv.find("plain,,1.25") != std::string::npos);
}
