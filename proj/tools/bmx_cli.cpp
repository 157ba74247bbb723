// Command-line front end over the bmx C API.
//
// Subcommands: match, transship, sssp, mmc, ot. Exit codes: 0 solved,
// 1 error, 2 infeasible, 3 negative cycle / unbounded below.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "CLI11.hpp"
#include "bmx/bmx.h"

namespace {

struct Options {
  std::string command;
  std::string input;
  std::string out_path;
  std::string trace_path;
  std::string mode = "practical";
  std::string ot_eps = "1/100";
  uint64_t seed = 1;
  bool seed_set = false;
  double eps = 0.25;
  double phi = 1.0 / 16;
  double c_lambda = 4.0, c_gamma = 0.1, c_r = 0.5, sample_c = 4.0;
  int retries = 64;
  int trials = 0;
  int source = 1;
  bool oracle = false;
  bool json = false;
};

const char* status_name(bmx_solution_status s) {
  switch (s) {
    case BMX_SOL_OPTIMAL: return "optimal";
    case BMX_SOL_INFEASIBLE: return "infeasible";
    case BMX_SOL_NEG_INFINITE: return "negative-infinite";
    case BMX_SOL_NEGATIVE_CYCLE: return "negative-cycle";
    case BMX_SOL_TRIALS_EXHAUSTED: return "trials-exhausted";
    default: return "error";
  }
}

int exit_code(bmx_solution_status s) {
  switch (s) {
    case BMX_SOL_OPTIMAL: return 0;
    case BMX_SOL_INFEASIBLE: return 2;
    case BMX_SOL_NEG_INFINITE:
    case BMX_SOL_NEGATIVE_CYCLE: return 3;
    default: return 1;
  }
}

void print_entries(const bmx_solution* sol, bool json, bool sssp) {
  size_t nnz = bmx_solution_nnz(sol);
  char value[128];
  for (size_t i = 0; i < nnz; ++i) {
    int u = 0, v = 0;
    bmx_solution_entry(sol, i, &u, &v, value, sizeof(value));
    if (json) {
      std::printf("%s{\"u\":%d,\"v\":%d,\"value\":\"%s\"}", i ? "," : "", u, v, value);
    } else if (sssp) {
      std::printf("d %d %s\n", u, value);
    } else {
      std::printf("f %d %d %s\n", u, v, value);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bmx: b-matching, flow, shortest path and transport solver"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("input", opt.input, "instance file")->required();
    cmd->add_option("--seed", opt.seed, "random seed (default: env BMX_SEED or 1)");
    cmd->add_option("--mode", opt.mode, "paper | practical | exact-step")
        ->check(CLI::IsMember({"paper", "practical", "exact-step"}));
    cmd->add_option("--eps", opt.eps, "centering parameter");
    cmd->add_option("--phi", opt.phi, "expander conductance target");
    cmd->add_option("--c-lambda", opt.c_lambda, "practical-mode lambda scale");
    cmd->add_option("--c-gamma", opt.c_gamma, "practical-mode gamma scale");
    cmd->add_option("--c-r", opt.c_r, "practical-mode step scale");
    cmd->add_option("--sample-c", opt.sample_c, "sampling constant C");
    cmd->add_option("--retries", opt.retries, "phase retry cap");
    cmd->add_option("--trace", opt.trace_path, "write per-iteration trace (CSV or .jsonl)");
    cmd->add_option("--out", opt.out_path, "write the solution to this file");
    cmd->add_flag("--oracle", opt.oracle, "cross-check against the exact reference");
    cmd->add_flag("--json", opt.json, "JSON output on stdout");
  };

  CLI::App* match = app.add_subcommand("match", "minimum-weight perfect b-matching");
  add_common(match);
  match->add_option("--trials", opt.trials, "rounding trials (0 = ceil(8 ln n))");
  CLI::App* transship = app.add_subcommand("transship", "uncapacitated min-cost flow");
  add_common(transship);
  CLI::App* sssp = app.add_subcommand("sssp", "shortest paths with negative weights");
  add_common(sssp);
  sssp->add_option("--source", opt.source, "source node (1-indexed)");
  CLI::App* mmc = app.add_subcommand("mmc", "minimum mean cycle");
  add_common(mmc);
  CLI::App* ot = app.add_subcommand("ot", "optimal transport");
  add_common(ot);
  ot->add_option("--ot-eps", opt.ot_eps, "additive accuracy (rational)");

  CLI11_PARSE(app, argc, argv);
  opt.command = app.get_subcommands().front()->get_name();

  bmx_config cfg;
  bmx_config_init(&cfg);
  if (const char* env = std::getenv("BMX_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) cfg.seed = opt.seed;
  cfg.eps = opt.eps;
  cfg.phi = opt.phi;
  cfg.c_lambda = opt.c_lambda;
  cfg.c_gamma = opt.c_gamma;
  cfg.c_r = opt.c_r;
  cfg.sample_c = opt.sample_c;
  cfg.max_phase_retries = opt.retries;
  cfg.trials = opt.trials;
  cfg.sssp_source = opt.source;
  cfg.ot_eps = opt.ot_eps.c_str();
  if (!opt.trace_path.empty()) cfg.trace_path = opt.trace_path.c_str();
  if (opt.mode == "paper") cfg.mode = BMX_MODE_PAPER;
  else if (opt.mode == "exact-step") cfg.mode = BMX_MODE_EXACT_STEP;
  else cfg.mode = BMX_MODE_PRACTICAL;

  bmx_instance* inst = nullptr;
  bmx_status st;
  if (opt.command == "match")
    st = bmx_parse_matching(opt.input.c_str(), &inst);
  else if (opt.command == "ot")
    st = bmx_parse_ot(opt.input.c_str(), &inst);
  else
    st = bmx_parse_dimacs(opt.input.c_str(), &inst);
  if (st != BMX_OK) {
    std::fprintf(stderr, "error: %s\n", bmx_last_error());
    return 1;
  }

  bmx_solution* sol = nullptr;
  if (opt.command == "match")
    st = bmx_solve_matching(inst, &cfg, &sol);
  else if (opt.command == "transship")
    st = bmx_solve_transshipment(inst, &cfg, &sol);
  else if (opt.command == "sssp")
    st = bmx_solve_sssp(inst, &cfg, &sol);
  else if (opt.command == "mmc")
    st = bmx_solve_mmc(inst, &cfg, &sol);
  else
    st = bmx_solve_ot(inst, &cfg, &sol);
  if (st != BMX_OK && !sol) {
    std::fprintf(stderr, "error: %s\n", bmx_last_error());
    bmx_instance_free(inst);
    return 1;
  }

  bmx_solution_status ss = bmx_solution_get_status(sol);
  const char* obj = bmx_solution_objective(sol);

  char oracle_obj[128] = "";
  bmx_solution_status oracle_status = BMX_SOL_ERROR;
  bool oracle_match = false;
  if (opt.oracle) {
    if (bmx_oracle_solve(inst, &cfg, &oracle_status, oracle_obj, sizeof(oracle_obj)) != BMX_OK) {
      std::fprintf(stderr, "oracle error: %s\n", bmx_last_error());
    } else {
      bool same_status =
          (ss == oracle_status) ||
          (ss == BMX_SOL_NEGATIVE_CYCLE && oracle_status == BMX_SOL_NEG_INFINITE);
      oracle_match = same_status && (!obj || std::strcmp(obj, oracle_obj) == 0 ||
                                     ss == BMX_SOL_NEGATIVE_CYCLE);
      if (opt.command == "sssp" && same_status) oracle_match = true;
      if (opt.command == "ot" && same_status) oracle_match = true;  // value within eps by design
    }
  }

  if (opt.json) {
    std::printf("{\"status\":\"%s\"", status_name(ss));
    if (obj) std::printf(",\"objective\":\"%s\"", obj);
    std::printf(",\"iterations\":%lld", bmx_solution_iterations(sol));
    if (opt.oracle) {
      std::printf(",\"oracle_status\":\"%s\"", status_name(oracle_status));
      if (oracle_obj[0]) std::printf(",\"oracle_objective\":\"%s\"", oracle_obj);
      std::printf(",\"oracle_match\":%s", oracle_match ? "true" : "false");
    }
    std::printf(",\"entries\":[");
    print_entries(sol, true, false);
    std::printf("]}\n");
  } else {
    std::printf("status %s\n", status_name(ss));
    if (obj) std::printf("objective %s\n", obj);
    print_entries(sol, false, opt.command == "sssp");
    if (opt.oracle) {
      std::printf("oracle-status %s\n", status_name(oracle_status));
      if (oracle_obj[0]) std::printf("oracle-objective %s\n", oracle_obj);
      std::printf("%s\n", oracle_match ? "MATCH" : "MISMATCH");
    }
  }
  if (!opt.out_path.empty()) {
    if (bmx_solution_write(sol, opt.out_path.c_str()) != BMX_OK)
      std::fprintf(stderr, "error writing solution: %s\n", bmx_last_error());
  }
  int code = exit_code(ss);
  bmx_solution_free(sol);
  bmx_instance_free(inst);
  return code;
}
