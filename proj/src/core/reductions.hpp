#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/matching.hpp"
#include "core/rational.hpp"

namespace bmx {

enum class FlowVerdict { Optimal, Infeasible, NegInfinite, Error };

struct BMatchingAnswer {
  bool ok = false;
  std::string error;
  std::vector<long long> flow;  // per input edge
  Rat objective = Rat(0);
  long long iterations = 0;
};

// Maximum-weight (non-perfect) bipartite b-matching via the perfect solver:
// dummies u0/v0 absorb residual demand at zero cost, negative-cost edges are
// dropped, and the objective is maximized by negation.
BMatchingAnswer max_weight_b_matching(int nU, int nV,
                                      const std::vector<std::pair<int, int>>& edges,
                                      const std::vector<long long>& b,
                                      const std::vector<long long>& c,
                                      const MatchingConfig& cfg);

struct TransshipmentResult {
  FlowVerdict verdict = FlowVerdict::Error;
  std::string error;
  std::vector<long long> flow;   // per input edge, integral
  Rat objective = Rat(0);
  std::vector<int> witness_cycle;  // edges of a negative cycle when NegInfinite
  long long iterations = 0;
};

// Uncapacitated min-cost flow with integral demands/costs. Stage 1 decides
// feasibility and the NegInfinite verdict through the literal Claim-8.1
// caps; stage 2 re-solves exactly with path-level caps.
TransshipmentResult transshipment_solve(const IncidenceGraph& g,
                                        const std::vector<long long>& b,
                                        const std::vector<long long>& c,
                                        const MatchingConfig& cfg);

struct StFlowResult {
  FlowVerdict verdict = FlowVerdict::Error;
  std::string error;
  std::vector<long long> flow;
  Rat objective = Rat(0);
  long long iterations = 0;
};

StFlowResult vertex_cap_min_cost_st_flow(const IncidenceGraph& g, int s, int t, long long k,
                                         const std::vector<long long>& cap,
                                         const std::vector<long long>& c,
                                         const MatchingConfig& cfg);

struct SsspResult {
  enum class Status { Ok, NegativeCycle, Error };
  Status status = Status::Error;
  std::string error;
  std::vector<bool> reachable;
  std::vector<long long> dist;     // valid where reachable
  std::vector<int> parent_edge;    // -1 at source / unreachable
  std::vector<int> witness_cycle;  // when NegativeCycle
  long long iterations = 0;
};

SsspResult sssp_negative(const IncidenceGraph& g, int source, const std::vector<long long>& c,
                         const MatchingConfig& cfg);

struct MinMeanCycleResult {
  bool ok = false;
  std::string error;
  Rat mean = Rat(0);
  std::vector<int> cycle_edges;
  long long probes = 0;
  long long iterations = 0;
};

MinMeanCycleResult min_mean_cycle(const IncidenceGraph& g, const std::vector<long long>& c,
                                  const MatchingConfig& cfg);
// Maximum mean cycle, solved as -min_mean_cycle(-c).
MinMeanCycleResult deterministic_mdp(const IncidenceGraph& g, const std::vector<long long>& c,
                                     const MatchingConfig& cfg);

struct OtResult {
  bool ok = false;
  std::string error;
  Rat value = Rat(0);
  std::vector<std::vector<Rat>> coupling;  // exact marginals r / cmarg
  long long iterations = 0;
};

// eps-additive optimal transport: inputs are rounded to a power-of-two grid,
// the scaled instance is solved through the matching pipeline to a certified
// gap, and the coupling is repaired to the exact original marginals.
OtResult optimal_transport(const std::vector<std::vector<Rat>>& cost, const std::vector<Rat>& r,
                           const std::vector<Rat>& cmarg, const Rat& eps,
                           const MatchingConfig& cfg);

}  // namespace bmx
