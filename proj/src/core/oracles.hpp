#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "core/graph.hpp"
#include "core/rational.hpp"

// Independent classical references, exact rational arithmetic throughout.
// These are the ground truth the solver stack is tested against; nothing in
// the IPM path may call into them except where a spec operation explicitly
// consumes one (none do).
namespace bmx::oracle {

struct FlowResult {
  bool feasible = false;
  bool neg_cycle = false;
  std::vector<Rat> flow;
  Rat objective = Rat(0);
};

// Uncapacitated min-cost flow (transshipment) by successive shortest paths
// with potentials. Negative edge costs allowed; any negative directed cycle
// reports neg_cycle (the uncapacitated optimum is unbounded).
FlowResult ssp_min_cost_flow(const FlowInstance& inst);

struct BfResult {
  bool neg_cycle = false;
  std::vector<bool> reachable;
  std::vector<Rat> dist;
  std::vector<int> parent_edge;  // -1 at source / unreachable
  std::vector<int> cycle_edges;  // a negative cycle when neg_cycle
};

BfResult bellman_ford(const IncidenceGraph& g, int source, const std::vector<Rat>& cost);

// Dijkstra, nonnegative costs only (cross-check for bellman_ford).
std::vector<std::optional<Rat>> dijkstra(const IncidenceGraph& g, int source,
                                         const std::vector<Rat>& cost);

struct MmcResult {
  bool has_cycle = false;
  Rat mean = Rat(0);
  std::vector<int> cycle_edges;
};

// Karp's minimum mean cycle dynamic program, exact.
MmcResult karp_mmc(const IncidenceGraph& g, const std::vector<Rat>& cost);

struct AssignmentResult {
  Rat objective = Rat(0);
  std::vector<int> col_of_row;
};

// Exact minimum-cost perfect assignment on a square matrix.
AssignmentResult hungarian(const std::vector<std::vector<Rat>>& cost);

struct EnumResult {
  bool feasible = false;
  Rat best = Rat(0);
  std::vector<long long> flow;
  long long optima_count = 0;
};

// Brute-force enumeration of perfect b-matchings (integral edge
// multiplicities), tiny instances only.
EnumResult enumerate_perfect_b_matching(int nU, int nV,
                                        const std::vector<std::pair<int, int>>& edges,
                                        const std::vector<long long>& b,
                                        const std::vector<Rat>& cost);

// Max-weight (non-perfect) b-matching by brute force.
EnumResult enumerate_max_weight_b_matching(int nU, int nV,
                                           const std::vector<std::pair<int, int>>& edges,
                                           const std::vector<long long>& b,
                                           const std::vector<Rat>& cost);

// Dense linear algebra references --------------------------------------

Eigen::MatrixXd dense_incidence(const MatrixOp& op);
// A^T diag(w) A + diag(extra); w empty means all-ones.
Eigen::MatrixXd dense_quadratic(const MatrixOp& op, const Vec& w, const Vec& extra_diag = {});

// Moore-Penrose solve for symmetric PSD systems, eigenvalue cutoff rel_tol.
Vec dense_pinv_solve(const Eigen::MatrixXd& M, const Vec& rhs, double rel_tol = 1e-12);

// ||v||_{M^+} for symmetric PSD M.
double dense_pinv_norm(const Eigen::MatrixXd& M, const Vec& v, double rel_tol = 1e-12);

// Leverage scores of diag(sqrt(w)) * A (rows of op).
Vec dense_leverage(const MatrixOp& op, const Vec& w);

// Least-squares fit min_y ||target - A y||_2 over the columns of op.
Vec dense_least_squares(const MatrixOp& op, const Vec& target);

}  // namespace bmx::oracle
