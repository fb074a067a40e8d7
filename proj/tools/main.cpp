#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qsolver: gated single-vacation M/GI/1 and batch-service M/G/1 "
               "queue solver with a built-in simulation oracle"};
  app.require_subcommand(1);

  qsolver::cli::GlobalOptions opt;
  std::string format = "json";
  std::uint64_t seed = 0;
  double eps = 0.0;
  int max_n = 0;

  const char* names[] = {"solve", "simulate", "compare", "busycycle", "batch",
                         "mapcheck"};
  const char* descs[] = {
      "stationary queue length, moments, pmf and sojourn moments",
      "run the discrete-event simulator",
      "analytic vs simulated side-by-side with pass/fail per observable",
      "busy-cycle transforms and means",
      "batch-service queue report",
      "MAP interchange residual demonstration"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descs[i]);
    sub->add_option("--config", opt.config_path, "config file (JSON)")
        ->required();
    sub->add_option("--format", format, "output format: json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", opt.out_path, "write the report to this path");
    auto* s = sub->add_option("--seed", seed, "override the simulation seed");
    auto* e = sub->add_option("--eps", eps, "override truncation tolerance");
    auto* n = sub->add_option("--max-n", max_n, "override truncation cap");
    sub->add_flag("--quiet", opt.quiet, "suppress stderr diagnostics");
    sub->callback([&, s, e, n]() {
      if (s->count()) opt.seed_override = seed;
      if (e->count()) opt.eps_override = eps;
      if (n->count()) opt.max_n_override = max_n;
    });
  }

  CLI11_PARSE(app, argc, argv);

  opt.format = (format == "csv") ? qsolver::cli::OutputFormat::csv_fmt
                                 : qsolver::cli::OutputFormat::json_fmt;
  std::string command = app.get_subcommands().front()->get_name();
  return qsolver::cli::run_command(command, opt, std::cout, std::cerr);
}
