#pragma once

#include <vector>

#include "core/graph.hpp"
#include "core/vecops.hpp"

namespace bmx {

// M = A^T diag(weights) A + diag(diag_extra); SPSD, singular exactly on the
// per-component constants of the positive-weight subgraph when no diagonal
// entry grounds the component.
struct WeightedSystem {
  const IncidenceGraph* graph = nullptr;
  Vec weights;     // per edge, >= 0
  Vec diag_extra;  // per node, >= 0; empty means zero

  Vec apply(const Vec& h) const;
};

struct SddConfig {
  double iter_cap_scale = 50.0;
  long long iter_cap_floor = 400;
};

// Preconditioned conjugate gradient with a maximum-weight spanning forest
// preconditioner. solve() guarantees ||x - x*||_M <= eps ||x*||_M via the
// computable bound r^T M_T^+ r >= r^T M^+ r (the forest is a subset of the
// edge support, so M_T <= M with equal kernels).
class SddSolver {
 public:
  explicit SddSolver(const WeightedSystem& sys, SddConfig cfg = {});

  // rhs must lie in the image of M: on singular components the entries must
  // sum to ~0 (tolerance 1e-9 * ||rhs||_1). Solutions are mean-centered per
  // singular component. Deterministic.
  Vec solve(const Vec& rhs, double eps) const;

  // Energy seminorm sqrt(v^T M^+ v) of a vector in the image of M, computed
  // by solving to accuracy eps.
  double pinv_norm(const Vec& v, double eps) const;

  const WeightedSystem& system() const { return sys_; }
  long long last_iterations() const { return last_iters_; }

 private:
  Vec precond(const Vec& r) const;  // M_T^+ r (forest + diagonal solve)
  void project_singular(Vec& v) const;

  WeightedSystem sys_;
  SddConfig cfg_;
  int n_ = 0;

  struct ElimStep {
    int v;       // eliminated node
    int parent;  // -1 for component roots
    double w;    // forest edge weight to parent (0 at roots)
    double pivot;
  };
  std::vector<ElimStep> elim_;
  std::vector<int> comp_;             // component id per node (w>0 subgraph)
  std::vector<char> comp_singular_;   // no diagonal anywhere in the component
  std::vector<int> comp_size_;
  long long iter_cap_ = 0;
  mutable long long last_iters_ = 0;
};

}  // namespace bmx
