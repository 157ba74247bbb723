#include "bmx/bmx.h"

#include <cstring>
#include <string>
#include <variant>

#include "core/io.hpp"
#include "core/matching.hpp"
#include "core/oracles.hpp"
#include "core/reductions.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

enum class Kind { Dimacs, Matching, Ot };

}  // namespace

struct bmx_instance {
  Kind kind;
  bmx::io::DimacsInstance dimacs;
  bmx::MatchingInstance matching;
  bmx::io::OtInstance ot;
};

enum class Which { Matching, Flow, Sssp, Mmc, Ot };

struct bmx_solution {
  Kind kind;
  Which which = Which::Matching;
  bmx_solution_status status = BMX_SOL_ERROR;
  std::string objective;  // empty when not applicable
  long long iterations = 0;
  struct Entry {
    int u, v;
    std::string value;
  };
  std::vector<Entry> entries;
  // Typed payloads for writing canonical solution files.
  bmx::MatchingResult matching;
  bmx::TransshipmentResult flow;
  bmx::SsspResult sssp;
  bmx::MinMeanCycleResult mmc;
  bmx::OtResult ot;
  const bmx_instance* inst = nullptr;
};

extern "C" {

void bmx_config_init(bmx_config* cfg) {
  cfg->seed = 1;
  cfg->mode = BMX_MODE_PRACTICAL;
  cfg->eps = 0.25;
  cfg->phi = 1.0 / 16;
  cfg->c_lambda = 4.0;
  cfg->c_gamma = 0.1;
  cfg->c_r = 0.5;
  cfg->sample_c = 4.0;
  cfg->max_phase_retries = 64;
  cfg->trials = 0;
  cfg->sssp_source = 1;
  cfg->trace_path = nullptr;
  cfg->ot_eps = "1/100";
}

const char* bmx_version(void) { return "bmx 1.0.0"; }

const char* bmx_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"

namespace {

bmx::MatchingConfig to_config(const bmx_config* cfg, bmx::io::TraceWriter** trace_out) {
  bmx::MatchingConfig mc;
  if (!cfg) return mc;
  mc.seed = cfg->seed;
  mc.trials = cfg->trials;
  mc.ipm.eps = cfg->eps;
  mc.ipm.phi = cfg->phi;
  mc.ipm.c_lambda = cfg->c_lambda;
  mc.ipm.c_gamma = cfg->c_gamma;
  mc.ipm.c_r = cfg->c_r;
  mc.ipm.sample_C = cfg->sample_c;
  mc.ipm.max_phase_retries = cfg->max_phase_retries;
  switch (cfg->mode) {
    case BMX_MODE_PAPER: mc.ipm.mode = bmx::IpmMode::Paper; break;
    case BMX_MODE_EXACT_STEP: mc.ipm.mode = bmx::IpmMode::ExactStep; break;
    default: mc.ipm.mode = bmx::IpmMode::Practical; break;
  }
  if (cfg->trace_path && trace_out) {
    *trace_out = new bmx::io::TraceWriter(cfg->trace_path);
    mc.trace = (*trace_out)->sink();
  }
  return mc;
}

template <typename F>
bmx_status guarded(F&& f) {
  try {
    return f();
  } catch (const bmx::io::ParseError& e) {
    set_error(e.what());
    return BMX_ERR_PARSE;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return BMX_ERR_INVALID;
  } catch (const std::exception& e) {
    set_error(e.what());
    return BMX_ERR_SOLVE;
  }
}

bmx_status parse_common(const char* path, bmx_instance** out, Kind kind) {
  if (!path || !out) {
    set_error("null argument");
    return BMX_ERR_INVALID;
  }
  return guarded([&]() {
    auto inst = std::make_unique<bmx_instance>();
    inst->kind = kind;
    switch (kind) {
      case Kind::Dimacs: inst->dimacs = bmx::io::parse_dimacs(path); break;
      case Kind::Matching: inst->matching = bmx::io::parse_matching(path); break;
      case Kind::Ot: inst->ot = bmx::io::parse_ot(path); break;
    }
    *out = inst.release();
    return BMX_OK;
  });
}

}  // namespace

extern "C" {

bmx_status bmx_parse_dimacs(const char* path, bmx_instance** out) {
  return parse_common(path, out, Kind::Dimacs);
}
bmx_status bmx_parse_matching(const char* path, bmx_instance** out) {
  return parse_common(path, out, Kind::Matching);
}
bmx_status bmx_parse_ot(const char* path, bmx_instance** out) {
  return parse_common(path, out, Kind::Ot);
}

bmx_status bmx_instance_write(const bmx_instance* inst, const char* path) {
  if (!inst || !path) {
    set_error("null argument");
    return BMX_ERR_INVALID;
  }
  return guarded([&]() {
    switch (inst->kind) {
      case Kind::Dimacs: bmx::io::write_dimacs(path, inst->dimacs); break;
      case Kind::Matching: bmx::io::write_matching(path, inst->matching); break;
      case Kind::Ot: bmx::io::write_ot(path, inst->ot); break;
    }
    return BMX_OK;
  });
}

void bmx_instance_free(bmx_instance* inst) { delete inst; }

bmx_status bmx_solve_matching(const bmx_instance* inst, const bmx_config* cfg,
                              bmx_solution** out) {
  if (!inst || !out || inst->kind != Kind::Matching) {
    set_error("expected a b-matching instance");
    return BMX_ERR_INVALID;
  }
  return guarded([&]() {
    bmx::io::TraceWriter* tw = nullptr;
    bmx::MatchingConfig mc = to_config(cfg, &tw);
    std::unique_ptr<bmx::io::TraceWriter> tw_guard(tw);
    auto sol = std::make_unique<bmx_solution>();
    sol->kind = Kind::Matching;
    sol->which = Which::Matching;
    sol->inst = inst;
    sol->matching = bmx::solve_matching(inst->matching, mc);
    sol->iterations = sol->matching.iterations;
    switch (sol->matching.status) {
      case bmx::SolveStatus::Optimal: sol->status = BMX_SOL_OPTIMAL; break;
      case bmx::SolveStatus::Infeasible: sol->status = BMX_SOL_INFEASIBLE; break;
      case bmx::SolveStatus::TrialsExhausted: sol->status = BMX_SOL_TRIALS_EXHAUSTED; break;
      case bmx::SolveStatus::Error: sol->status = BMX_SOL_ERROR; break;
    }
    if (sol->status == BMX_SOL_OPTIMAL) {
      sol->objective = bmx::rat_to_string(sol->matching.objective);
      for (size_t e = 0; e < sol->matching.flow.size(); ++e)
        if (sol->matching.flow[e] != 0)
          sol->entries.push_back({inst->matching.edges[e].first + 1,
                                  inst->matching.edges[e].second + 1,
                                  std::to_string(sol->matching.flow[e])});
    } else if (sol->status == BMX_SOL_ERROR) {
      set_error(sol->matching.error);
      *out = sol.release();
      return BMX_ERR_SOLVE;
    }
    *out = sol.release();
    return BMX_OK;
  });
}

bmx_status bmx_solve_transshipment(const bmx_instance* inst, const bmx_config* cfg,
                                   bmx_solution** out) {
  if (!inst || !out || inst->kind != Kind::Dimacs) {
    set_error("expected a DIMACS flow instance");
    return BMX_ERR_INVALID;
  }
  return guarded([&]() {
    bmx::io::TraceWriter* tw = nullptr;
    bmx::MatchingConfig mc = to_config(cfg, &tw);
    std::unique_ptr<bmx::io::TraceWriter> tw_guard(tw);
    auto sol = std::make_unique<bmx_solution>();
    sol->kind = Kind::Dimacs;
    sol->which = Which::Flow;
    sol->inst = inst;
    sol->flow =
        bmx::transshipment_solve(inst->dimacs.g, inst->dimacs.demand, inst->dimacs.cost, mc);
    sol->iterations = sol->flow.iterations;
    switch (sol->flow.verdict) {
      case bmx::FlowVerdict::Optimal: sol->status = BMX_SOL_OPTIMAL; break;
      case bmx::FlowVerdict::Infeasible: sol->status = BMX_SOL_INFEASIBLE; break;
      case bmx::FlowVerdict::NegInfinite: sol->status = BMX_SOL_NEG_INFINITE; break;
      case bmx::FlowVerdict::Error: sol->status = BMX_SOL_ERROR; break;
    }
    if (sol->status == BMX_SOL_OPTIMAL) {
      sol->objective = bmx::rat_to_string(sol->flow.objective);
      for (size_t e = 0; e < sol->flow.flow.size(); ++e)
        if (sol->flow.flow[e] != 0)
          sol->entries.push_back({inst->dimacs.g.edges[e].first + 1,
                                  inst->dimacs.g.edges[e].second + 1,
                                  std::to_string(sol->flow.flow[e])});
    } else if (sol->status == BMX_SOL_ERROR) {
      set_error(sol->flow.error);
      *out = sol.release();
      return BMX_ERR_SOLVE;
    }
    *out = sol.release();
    return BMX_OK;
  });
}

bmx_status bmx_solve_sssp(const bmx_instance* inst, const bmx_config* cfg, bmx_solution** out) {
  if (!inst || !out || inst->kind != Kind::Dimacs) {
    set_error("expected a DIMACS flow instance");
    return BMX_ERR_INVALID;
  }
  int src = cfg ? cfg->sssp_source : 1;
  if (src < 1 || src > inst->dimacs.g.n) {
    set_error("sssp source out of range");
    return BMX_ERR_INVALID;
  }
  return guarded([&]() {
    bmx::io::TraceWriter* tw = nullptr;
    bmx::MatchingConfig mc = to_config(cfg, &tw);
    std::unique_ptr<bmx::io::TraceWriter> tw_guard(tw);
    auto sol = std::make_unique<bmx_solution>();
    sol->kind = Kind::Dimacs;
    sol->which = Which::Sssp;
    sol->inst = inst;
    sol->sssp = bmx::sssp_negative(inst->dimacs.g, src - 1, inst->dimacs.cost, mc);
    sol->iterations = sol->sssp.iterations;
    if (sol->sssp.status == bmx::SsspResult::Status::NegativeCycle) {
      sol->status = BMX_SOL_NEGATIVE_CYCLE;
    } else if (sol->sssp.status == bmx::SsspResult::Status::Ok) {
      sol->status = BMX_SOL_OPTIMAL;
      for (size_t v = 0; v < sol->sssp.dist.size(); ++v)
        if (sol->sssp.reachable[v])
          sol->entries.push_back(
              {static_cast<int>(v) + 1, -1, std::to_string(sol->sssp.dist[v])});
    } else {
      sol->status = BMX_SOL_ERROR;
      set_error(sol->sssp.error);
      *out = sol.release();
      return BMX_ERR_SOLVE;
    }
    *out = sol.release();
    return BMX_OK;
  });
}

bmx_status bmx_solve_mmc(const bmx_instance* inst, const bmx_config* cfg, bmx_solution** out) {
  if (!inst || !out || inst->kind != Kind::Dimacs) {
    set_error("expected a DIMACS flow instance");
    return BMX_ERR_INVALID;
  }
  return guarded([&]() {
    bmx::io::TraceWriter* tw = nullptr;
    bmx::MatchingConfig mc = to_config(cfg, &tw);
    std::unique_ptr<bmx::io::TraceWriter> tw_guard(tw);
    auto sol = std::make_unique<bmx_solution>();
    sol->kind = Kind::Dimacs;
    sol->which = Which::Mmc;
    sol->inst = inst;
    sol->mmc = bmx::min_mean_cycle(inst->dimacs.g, inst->dimacs.cost, mc);
    sol->iterations = sol->mmc.iterations;
    if (!sol->mmc.ok) {
      sol->status = BMX_SOL_ERROR;
      set_error(sol->mmc.error);
      *out = sol.release();
      return BMX_ERR_SOLVE;
    }
    sol->status = BMX_SOL_OPTIMAL;
    sol->objective = bmx::rat_to_string(sol->mmc.mean);
    for (int e : sol->mmc.cycle_edges)
      sol->entries.push_back({inst->dimacs.g.edges[e].first + 1,
                              inst->dimacs.g.edges[e].second + 1, "1"});
    *out = sol.release();
    return BMX_OK;
  });
}

bmx_status bmx_solve_ot(const bmx_instance* inst, const bmx_config* cfg, bmx_solution** out) {
  if (!inst || !out || inst->kind != Kind::Ot) {
    set_error("expected an optimal transport instance");
    return BMX_ERR_INVALID;
  }
  return guarded([&]() {
    bmx::io::TraceWriter* tw = nullptr;
    bmx::MatchingConfig mc = to_config(cfg, &tw);
    std::unique_ptr<bmx::io::TraceWriter> tw_guard(tw);
    bmx::Rat eps = bmx::rat_parse(cfg && cfg->ot_eps ? cfg->ot_eps : "1/100");
    auto sol = std::make_unique<bmx_solution>();
    sol->kind = Kind::Ot;
    sol->which = Which::Ot;
    sol->inst = inst;
    sol->ot = bmx::optimal_transport(inst->ot.cost, inst->ot.r, inst->ot.c, eps, mc);
    sol->iterations = sol->ot.iterations;
    if (!sol->ot.ok) {
      sol->status = BMX_SOL_ERROR;
      set_error(sol->ot.error);
      *out = sol.release();
      return BMX_ERR_SOLVE;
    }
    sol->status = BMX_SOL_OPTIMAL;
    sol->objective = bmx::rat_to_string(sol->ot.value);
    for (size_t i = 0; i < sol->ot.coupling.size(); ++i)
      for (size_t j = 0; j < sol->ot.coupling[i].size(); ++j)
        if (sol->ot.coupling[i][j] != 0)
          sol->entries.push_back({static_cast<int>(i) + 1, static_cast<int>(j) + 1,
                                  bmx::rat_to_string(sol->ot.coupling[i][j])});
    *out = sol.release();
    return BMX_OK;
  });
}

void bmx_solution_free(bmx_solution* sol) { delete sol; }

bmx_solution_status bmx_solution_get_status(const bmx_solution* sol) {
  return sol ? sol->status : BMX_SOL_ERROR;
}

const char* bmx_solution_objective(const bmx_solution* sol) {
  if (!sol || sol->objective.empty()) return nullptr;
  return sol->objective.c_str();
}

long long bmx_solution_iterations(const bmx_solution* sol) {
  return sol ? sol->iterations : 0;
}

size_t bmx_solution_nnz(const bmx_solution* sol) { return sol ? sol->entries.size() : 0; }

bmx_status bmx_solution_entry(const bmx_solution* sol, size_t idx, int* u, int* v, char* value,
                              size_t value_len) {
  if (!sol || idx >= sol->entries.size()) {
    set_error("entry index out of range");
    return BMX_ERR_INVALID;
  }
  const auto& e = sol->entries[idx];
  if (u) *u = e.u;
  if (v) *v = e.v;
  if (value && value_len > 0) {
    std::strncpy(value, e.value.c_str(), value_len - 1);
    value[value_len - 1] = '\0';
  }
  return BMX_OK;
}

bmx_status bmx_solution_write(const bmx_solution* sol, const char* path) {
  if (!sol || !path) {
    set_error("null argument");
    return BMX_ERR_INVALID;
  }
  return guarded([&]() {
    switch (sol->which) {
      case Which::Matching:
        bmx::io::write_matching_solution(path, sol->inst->matching, sol->matching);
        break;
      case Which::Flow: bmx::io::write_flow_solution(path, sol->inst->dimacs, sol->flow); break;
      case Which::Sssp: bmx::io::write_sssp_solution(path, sol->sssp); break;
      case Which::Mmc: bmx::io::write_mmc_solution(path, sol->mmc); break;
      case Which::Ot: bmx::io::write_ot_solution(path, sol->ot); break;
    }
    return BMX_OK;
  });
}

bmx_status bmx_oracle_solve(const bmx_instance* inst, const bmx_config* cfg,
                            bmx_solution_status* status, char* objective, size_t len) {
  if (!inst || !status) {
    set_error("null argument");
    return BMX_ERR_INVALID;
  }
  auto put = [&](const std::string& s) {
    if (objective && len > 0) {
      std::strncpy(objective, s.c_str(), len - 1);
      objective[len - 1] = '\0';
    }
  };
  return guarded([&]() {
    using namespace bmx;
    switch (inst->kind) {
      case Kind::Matching: {
        const MatchingInstance& mi = inst->matching;
        mi.validate_perfect();
        FlowInstance starred = starred_flow_graph(mi.nU, mi.nV, mi.edges, mi.b);
        BigInt b1 = 0;
        long long ci = 0;
        for (long long bv : mi.b) b1 += bv;
        for (long long ce : mi.c) ci = std::max(ci, std::llabs(ce));
        Rat star = Rat(b1 * ci + 1);
        int mb = static_cast<int>(mi.edges.size());
        for (int e = 0; e < mb; ++e) starred.cost[e] = Rat(mi.c[e]);
        for (int e = mb; e < starred.graph.m(); ++e) starred.cost[e] = star;
        auto fr = oracle::ssp_min_cost_flow(starred);
        if (!fr.feasible || fr.neg_cycle) {
          *status = BMX_SOL_ERROR;
          put("");
          return BMX_OK;
        }
        for (int e = mb; e < starred.graph.m(); ++e)
          if (fr.flow[e] != 0) {
            *status = BMX_SOL_INFEASIBLE;
            put("");
            return BMX_OK;
          }
        Rat obj(0);
        for (int e = 0; e < mb; ++e) obj += Rat(mi.c[e]) * fr.flow[e];
        *status = BMX_SOL_OPTIMAL;
        put(rat_to_string(obj));
        return BMX_OK;
      }
      case Kind::Dimacs: {
        FlowInstance fi;
        fi.graph = inst->dimacs.g;
        fi.demand.assign(inst->dimacs.demand.begin(), inst->dimacs.demand.end());
        fi.cost.assign(inst->dimacs.cost.begin(), inst->dimacs.cost.end());
        auto fr = oracle::ssp_min_cost_flow(fi);
        if (fr.neg_cycle) {
          *status = BMX_SOL_NEG_INFINITE;
          put("");
        } else if (!fr.feasible) {
          *status = BMX_SOL_INFEASIBLE;
          put("");
        } else {
          *status = BMX_SOL_OPTIMAL;
          put(rat_to_string(fr.objective));
        }
        return BMX_OK;
      }
      case Kind::Ot: {
        const auto& ot = inst->ot;
        int n = static_cast<int>(ot.r.size()), n2 = static_cast<int>(ot.c.size());
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n2; ++j) edges.push_back({i, n + j});
        FlowInstance fi;
        fi.graph = build_incidence(edges, n + n2);
        fi.demand.resize(n + n2);
        for (int i = 0; i < n; ++i) fi.demand[i] = -ot.r[i];
        for (int j = 0; j < n2; ++j) fi.demand[n + j] = ot.c[j];
        fi.cost.resize(edges.size());
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n2; ++j) fi.cost[i * n2 + j] = ot.cost[i][j];
        auto fr = oracle::ssp_min_cost_flow(fi);
        if (!fr.feasible) {
          *status = BMX_SOL_INFEASIBLE;
          put("");
        } else {
          *status = BMX_SOL_OPTIMAL;
          put(rat_to_string(fr.objective));
        }
        return BMX_OK;
      }
    }
    *status = BMX_SOL_ERROR;
    return BMX_ERR_INVALID;
  });
  (void)cfg;
}

}  // extern "C"
