#include "core/sdd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bmx {

Vec WeightedSystem::apply(const Vec& h) const {
  check_size(h, graph->n, "WeightedSystem::apply");
  Vec out(graph->n, 0.0);
  for (int e = 0; e < graph->m(); ++e) {
    double w = weights[e];
    if (w == 0.0) continue;
    auto [t, hd] = graph->edges[e];
    double flow = w * (h[hd] - h[t]);
    out[t] -= flow;
    out[hd] += flow;
  }
  if (!diag_extra.empty())
    for (int v = 0; v < graph->n; ++v) out[v] += diag_extra[v] * h[v];
  return out;
}

namespace {

struct Dsu {
  std::vector<int> p;
  explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[a] = b;
    return true;
  }
};

}  // namespace

SddSolver::SddSolver(const WeightedSystem& sys, SddConfig cfg) : sys_(sys), cfg_(cfg) {
  const IncidenceGraph& g = *sys_.graph;
  n_ = g.n;
  if (static_cast<int>(sys_.weights.size()) != g.m())
    throw std::invalid_argument("SddSolver: weight size mismatch");
  for (double w : sys_.weights)
    if (w < 0) throw std::invalid_argument("SddSolver: negative weight");
  if (!sys_.diag_extra.empty() && static_cast<int>(sys_.diag_extra.size()) != n_)
    throw std::invalid_argument("SddSolver: diag size mismatch");
  for (double d : sys_.diag_extra)
    if (d < 0) throw std::invalid_argument("SddSolver: negative diagonal");

  comp_ = components(g, sys_.weights);
  int nc = comp_.empty() ? 0 : 1 + *std::max_element(comp_.begin(), comp_.end());
  comp_singular_.assign(nc, 1);
  comp_size_.assign(nc, 0);
  for (int v = 0; v < n_; ++v) {
    ++comp_size_[comp_[v]];
    if (!sys_.diag_extra.empty() && sys_.diag_extra[v] > 0) comp_singular_[comp_[v]] = 0;
  }

  // Maximum-weight spanning forest of the positive-weight subgraph.
  std::vector<int> order(g.m());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sys_.weights[a] > sys_.weights[b]; });
  Dsu dsu(n_);
  std::vector<std::vector<std::pair<int, double>>> tree_adj(n_);
  double wmax = 0.0, wmin = 0.0;
  for (int e : order) {
    double w = sys_.weights[e];
    if (w <= 0) continue;
    wmax = std::max(wmax, w);
    wmin = (wmin == 0.0) ? w : std::min(wmin, w);
    auto [u, v] = g.edges[e];
    if (dsu.unite(u, v)) {
      tree_adj[u].push_back({v, w});
      tree_adj[v].push_back({u, w});
    }
  }

  // Leaf-elimination factorization of the forest-plus-diagonal matrix.
  std::vector<int> deg(n_);
  std::vector<double> pivot_acc(n_, 0.0);
  for (int v = 0; v < n_; ++v) {
    deg[v] = static_cast<int>(tree_adj[v].size());
    pivot_acc[v] = sys_.diag_extra.empty() ? 0.0 : sys_.diag_extra[v];
    for (auto [u, w] : tree_adj[v]) pivot_acc[v] += w;
  }
  std::vector<char> gone(n_, 0);
  std::vector<int> stack;
  for (int v = 0; v < n_; ++v)
    if (deg[v] <= 1) stack.push_back(v);
  elim_.reserve(n_);
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (gone[v]) continue;
    gone[v] = 1;
    int parent = -1;
    double w = 0.0;
    for (auto [u, wu] : tree_adj[v]) {
      if (!gone[u]) {
        parent = u;
        w = wu;
        break;
      }
    }
    double piv = pivot_acc[v];
    if (parent < 0) {
      // Component root: ground it exactly when the component is singular;
      // otherwise keep the (strictly positive) pivot.
      piv = comp_singular_[comp_[v]] ? 0.0 : std::max(piv, 1e-300);
    }
    elim_.push_back({v, parent, w, piv});
    if (parent >= 0) {
      if (piv > 0) pivot_acc[parent] -= w * w / piv;
      if (--deg[parent] <= 1) stack.push_back(parent);
    }
  }

  double cond_proxy = (wmin > 0 ? wmax / wmin : 1.0) * std::max(1, n_);
  iter_cap_ = static_cast<long long>(cfg_.iter_cap_scale * std::sqrt(cond_proxy));
  iter_cap_ = std::max(iter_cap_, cfg_.iter_cap_floor + 4LL * n_);
}

Vec SddSolver::precond(const Vec& r) const {
  Vec rhs = r;
  // Forward elimination.
  for (const ElimStep& s : elim_) {
    if (s.parent >= 0 && s.pivot > 0) rhs[s.parent] += (s.w / s.pivot) * rhs[s.v];
  }
  Vec z(n_, 0.0);
  for (auto it = elim_.rbegin(); it != elim_.rend(); ++it) {
    const ElimStep& s = *it;
    if (s.pivot > 0) {
      double acc = rhs[s.v];
      if (s.parent >= 0) acc += s.w * z[s.parent];
      z[s.v] = acc / s.pivot;
    } else {
      z[s.v] = 0.0;  // grounded root of a singular component
    }
  }
  project_singular(z);
  return z;
}

void SddSolver::project_singular(Vec& v) const {
  int nc = static_cast<int>(comp_singular_.size());
  std::vector<double> mean(nc, 0.0);
  for (int i = 0; i < n_; ++i) mean[comp_[i]] += v[i];
  for (int c = 0; c < nc; ++c) mean[c] /= std::max(1, comp_size_[c]);
  for (int i = 0; i < n_; ++i)
    if (comp_singular_[comp_[i]]) v[i] -= mean[comp_[i]];
}

Vec SddSolver::solve(const Vec& rhs_in, double eps) const {
  check_size(rhs_in, n_, "SddSolver::solve");
  if (eps <= 0) throw std::invalid_argument("SddSolver::solve: eps must be positive");

  // Image check: on singular components the rhs must sum to ~zero.
  {
    int nc = static_cast<int>(comp_singular_.size());
    std::vector<double> sums(nc, 0.0);
    for (int i = 0; i < n_; ++i) sums[comp_[i]] += rhs_in[i];
    double tol = 1e-9 * std::max(norm1(rhs_in), 1e-300);
    for (int c = 0; c < nc; ++c)
      if (comp_singular_[c] && std::fabs(sums[c]) > tol)
        throw std::invalid_argument("SddSolver::solve: rhs not in the image of the system");
  }

  Vec rhs = rhs_in;
  project_singular(rhs);
  double rhs_norm = norm2(rhs);
  if (rhs_norm == 0.0) {
    last_iters_ = 0;
    return Vec(n_, 0.0);
  }

  Vec x(n_, 0.0);
  Vec r = rhs;
  Vec z = precond(r);
  Vec p = z;
  double rho = dot(r, z);

  for (long long it = 0; it < iter_cap_; ++it) {
    // r^T M_T^+ r bounds the squared energy error from above.
    double err_up = std::sqrt(std::max(0.0, rho));
    double xm2 = dot(x, rhs) - dot(x, r);
    double xm = std::sqrt(std::max(0.0, xm2));
    if (err_up <= eps * (xm - err_up) || err_up <= 1e-15 * rhs_norm) {
      last_iters_ = it;
      project_singular(x);
      return x;
    }

    Vec q = sys_.apply(p);
    double pq = dot(p, q);
    if (pq <= 0) {
      // Numerically exhausted; accept if the certified bound is tiny.
      if (err_up <= std::sqrt(eps) * std::max(xm, rhs_norm) * 1e-7) {
        last_iters_ = it;
        project_singular(x);
        return x;
      }
      throw std::runtime_error("SddSolver::solve: breakdown before reaching tolerance");
    }
    double alpha = rho / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    if ((it + 1) % 64 == 0) {
      // Refresh the residual to cancel accumulated rounding drift.
      Vec mx = sys_.apply(x);
      for (int i = 0; i < n_; ++i) r[i] = rhs[i] - mx[i];
      project_singular(r);
    }
    z = precond(r);
    double rho_new = dot(r, z);
    double beta = rho_new / rho;
    rho = rho_new;
    for (int i = 0; i < n_; ++i) p[i] = z[i] + beta * p[i];
  }
  throw std::runtime_error("SddSolver::solve: iteration cap exceeded");
}

double SddSolver::pinv_norm(const Vec& v, double eps) const {
  Vec x = solve(v, eps);
  return std::sqrt(std::max(0.0, dot(x, v)));
}

}  // namespace bmx
