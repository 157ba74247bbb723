#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/ipm.hpp"
#include "core/rational.hpp"
#include "core/rng.hpp"

namespace bmx {

// Minimum-weight perfect bipartite b-matching instance: integer costs,
// positive integral budgets, balanced sides.
struct MatchingInstance {
  int nU = 0, nV = 0;
  std::vector<std::pair<int, int>> edges;  // (u, v), 0-indexed per side
  std::vector<long long> b;                // size nU + nV
  std::vector<long long> c;                // per edge

  long long weight_bound() const;  // W = max(||b||_inf, ||c||_inf, 1)
  void validate_perfect() const;
};

enum class SolveStatus { Optimal, Infeasible, TrialsExhausted, Error };

struct MatchingResult {
  SolveStatus status = SolveStatus::Error;
  std::string error;
  std::vector<long long> flow;  // per input edge
  Rat objective = Rat(0);
  bool certified = false;
  Rat certificate_gap = Rat(0);
  Vec dual_y;             // least-squares dual of the final trial
  double dual_residual = 0;
  int trials_used = 0;
  long long iterations = 0;
  long long phase_retries = 0;
};

struct MatchingConfig {
  IpmParams ipm;
  uint64_t seed = 1;
  int trials = 0;  // 0: ceil(8 ln n)
  TraceSink trace;
};

// Lemma-style initial point on the starred graph: x_uv = 1/n,
// x_uz = b_u - deg(u)/n, x_zv = b_v - deg(v)/n, s = c' = 1/x, so xs = 1 and
// A^T x = d exactly (in rational arithmetic).
struct InitialPoint {
  FlowInstance inst;  // starred graph, cost = c'
  std::vector<Rat> x, s;
};
InitialPoint initial_point(int nU, int nV, const std::vector<std::pair<int, int>>& edges,
                           const std::vector<long long>& b);

// s <- s + c_new - c_old; requires mu >= 45 ||c_new||_inf ||d||_inf / eps and
// returns the updated slack (throws if it would leave positivity).
Vec switch_cost(const Vec& s, const Vec& c_old, const Vec& c_new, double mu, double d_inf,
                double eps);

// One feasibility projection followed by exact per-node repair through the
// star node; the result satisfies A^T f = d exactly.
std::vector<Rat> make_feasible(const FlowInstance& starred, int nU, int nV, const Vec& x,
                               const Vec& s, double mu, double eps_opt);

// Nearest-integer rounding; returns nullopt when the rounded vector is not a
// feasible flow.
std::optional<std::vector<Rat>> perturb_and_round(const FlowInstance& starred,
                                                  const std::vector<Rat>& f);

// Uniform draw from {1,...,2mW}/(4 m^2 W^2) per edge.
std::vector<Rat> isolation_perturbation(int m, long long W, Rng& rng);

MatchingResult solve_matching(const MatchingInstance& inst, const MatchingConfig& cfg);

// Fractional pipeline entry (no isolation, no rounding): descend until the
// exactly computed duality gap of the repaired feasible point is at most
// gap_target. f lives on the starred graph; cost/gap are exact rationals.
struct FractionalSolve {
  bool ok = false;
  std::string error;
  std::vector<Rat> f;
  Rat cost = Rat(0);  // c''^T f including star edges
  Rat gap = Rat(0);   // certified upper bound on cost - OPT
  Rat star_mass = Rat(0);
  int bipartite_edges = 0;
  std::vector<int> edge_origin;  // deduped bipartite edge -> input edge index
  long long iterations = 0;
};
FractionalSolve solve_flow_fractional(const MatchingInstance& inst, const Rat& gap_target,
                                      const MatchingConfig& cfg);

}  // namespace bmx
