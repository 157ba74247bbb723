#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/rational.hpp"
#include "core/vecops.hpp"

namespace bmx {

// Directed edge list with node count. Row e of the induced incidence
// operator has -1 at the tail and +1 at the head.
struct IncidenceGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // (tail, head)

  int m() const { return static_cast<int>(edges.size()); }

  // (Ah)_e = h[head] - h[tail]
  Vec apply(const Vec& h) const;
  // (A^T x)_v = sum_e A_{e,v} x_e
  Vec apply_t(const Vec& x) const;

  struct Arc {
    int edge;
    int other;
    int sign;  // +1 if this endpoint is the head, -1 if the tail
  };
  // Per-node adjacency, rebuilt on demand only (graphs are static).
  const std::vector<std::vector<Arc>>& adjacency() const;

 private:
  mutable std::vector<std::vector<Arc>> adj_;
  mutable bool adj_built_ = false;
};

IncidenceGraph build_incidence(std::vector<std::pair<int, int>> edges, int n);

// Incidence matrix optionally extended with an identity block at the bottom
// (rows m..m+n-1 equal e_v). All maintenance structures run on this operator.
struct MatrixOp {
  const IncidenceGraph* g = nullptr;
  bool with_identity = false;

  int rows() const { return g->m() + (with_identity ? g->n : 0); }
  int cols() const { return g->n; }
  int incidence_rows() const { return g->m(); }

  double row_apply(int r, const Vec& h) const {
    int m = g->m();
    if (r < m) {
      auto [t, h2] = g->edges[r];
      return h[h2] - h[t];
    }
    return h[r - m];
  }
  // out += coef * (r-th row of A, as a column-space vector)
  void add_row_to(int r, double coef, Vec& out) const {
    int m = g->m();
    if (r < m) {
      auto [t, h2] = g->edges[r];
      out[t] -= coef;
      out[h2] += coef;
    } else {
      out[r - m] += coef;
    }
  }
  Vec apply(const Vec& h) const;
  Vec apply_t(const Vec& x) const;
};

// Uncapacitated min-cost flow instance: min c^T x s.t. A^T x = demand, x >= 0.
struct FlowInstance {
  IncidenceGraph graph;
  std::vector<Rat> demand;  // per node, sums to zero
  std::vector<Rat> cost;    // per edge
  std::string origin = "direct";

  void validate() const;
  Vec demand_d() const;
  Vec cost_d() const;
};

// Identity-block augmentation: A' = [A; I], full column rank; the extra
// primal coordinates get cost ||b||_1 * ||c||_inf each so optimal integral
// solutions leave them at zero.
struct AugmentedInstance {
  FlowInstance base;
  Rat aug_cost;

  MatrixOp op() const { return MatrixOp{&base.graph, true}; }
  int rows() const { return base.graph.m() + base.graph.n; }
};

// Bipartite instance plus hub node z: nodes U | V | {z}, edges
// E | {(u,z)} | {(z,v)}, demands -b_u / +b_v / 0.
// Node layout: U = [0,nU), V = [nU,nU+nV), z = nU+nV.
// Edge layout: the |E| bipartite edges first, then the nU edges (u,z),
// then the nV edges (z,v).
FlowInstance starred_flow_graph(int nU, int nV,
                                const std::vector<std::pair<int, int>>& bipartite_edges,
                                const std::vector<long long>& b);

AugmentedInstance augment_identity(const FlowInstance& inst);

// Delta = A^T x - b.
Vec residual(const MatrixOp& op, const Vec& x, const Vec& b);
std::vector<Rat> residual_exact(const MatrixOp& op, const std::vector<Rat>& x,
                                const std::vector<Rat>& b);

// Connected components of the subgraph of edges with w[e] > 0 (all edges if
// w is empty). Returns component id per node.
std::vector<int> components(const IncidenceGraph& g, const Vec& w = {});

}  // namespace bmx
