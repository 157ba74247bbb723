#include "core/oracles.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace bmx::oracle {

namespace {

// Bellman-Ford from a virtual source attached to every node with cost 0.
// Returns potentials making all reduced costs nonnegative, or a negative
// cycle indicator.
bool global_potentials(const IncidenceGraph& g, const std::vector<Rat>& cost,
                       std::vector<Rat>& pi) {
  int n = g.n;
  pi.assign(n, Rat(0));
  for (int round = 0; round < n; ++round) {
    bool changed = false;
    for (int e = 0; e < g.m(); ++e) {
      auto [u, v] = g.edges[e];
      Rat cand = pi[u] + cost[e];
      if (cand < pi[v]) {
        pi[v] = cand;
        changed = true;
      }
    }
    if (!changed) return true;
  }
  for (int e = 0; e < g.m(); ++e) {
    auto [u, v] = g.edges[e];
    if (pi[u] + cost[e] < pi[v]) return false;
  }
  return true;
}

}  // namespace

FlowResult ssp_min_cost_flow(const FlowInstance& inst) {
  inst.validate();
  const IncidenceGraph& g = inst.graph;
  int n = g.n, m = g.m();

  FlowResult res;
  std::vector<Rat> pi;
  if (!global_potentials(g, inst.cost, pi)) {
    res.neg_cycle = true;
    return res;
  }

  std::vector<Rat> f(m, Rat(0));
  std::vector<Rat> excess = inst.demand;  // b - A^T f, and A^T 0 = 0

  const auto& adj = g.adjacency();
  long long cap_iters = 10000 + 50LL * (n + m);
  for (long long iter = 0;; ++iter) {
    if (iter > cap_iters) throw std::runtime_error("ssp_min_cost_flow: augmentation cap exceeded");
    int t_found = -1;
    bool any_source = false;
    for (int v = 0; v < n; ++v)
      if (excess[v] < 0) any_source = true;
    if (!any_source) {
      bool any_sink = false;
      for (int v = 0; v < n; ++v)
        if (excess[v] > 0) any_sink = true;
      if (any_sink) {
        res.feasible = false;
        return res;
      }
      break;  // balanced
    }

    // Multi-source Dijkstra on the residual graph with reduced costs.
    std::vector<std::optional<Rat>> dist(n);
    std::vector<int> par_edge(n, -1), par_node(n, -1);
    std::vector<char> done(n, 0);
    using QE = std::pair<Rat, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
    for (int v = 0; v < n; ++v)
      if (excess[v] < 0) {
        dist[v] = Rat(0);
        pq.push({Rat(0), v});
      }
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (done[v]) continue;
      done[v] = 1;
      if (excess[v] > 0) {
        t_found = v;
        break;
      }
      for (const auto& a : adj[v]) {
        int u = a.other, e = a.edge;
        Rat rc;
        if (a.sign < 0) {
          rc = inst.cost[e] + pi[v] - pi[u];  // forward arc v->u
        } else {
          if (!(f[e] > 0)) continue;  // backward arc v->u needs flow
          rc = -inst.cost[e] + pi[v] - pi[u];
        }
        Rat nd = d + rc;
        if (!dist[u] || nd < *dist[u]) {
          dist[u] = nd;
          par_edge[u] = e;
          par_node[u] = v;
          pq.push({nd, u});
        }
      }
    }
    if (t_found < 0) {
      res.feasible = false;
      return res;
    }
    Rat dt = *dist[t_found];
    for (int v = 0; v < n; ++v)
      if (dist[v]) pi[v] += std::min(*dist[v], dt);

    // Bottleneck along the path.
    Rat amount = excess[t_found];
    for (int v = t_found; par_node[v] >= 0; v = par_node[v]) {
      int e = par_edge[v];
      auto [eu, ev] = g.edges[e];
      if (ev == v) {
        // forward use
      } else {
        amount = std::min(amount, f[e]);
      }
      (void)eu;
    }
    int s_end = t_found;
    while (par_node[s_end] >= 0) s_end = par_node[s_end];
    amount = std::min(amount, Rat(-excess[s_end]));

    for (int v = t_found; par_node[v] >= 0; v = par_node[v]) {
      int e = par_edge[v];
      if (g.edges[e].second == v)
        f[e] += amount;
      else
        f[e] -= amount;
    }
    excess[t_found] -= amount;
    excess[s_end] += amount;
  }

  res.feasible = true;
  res.flow = std::move(f);
  res.objective = Rat(0);
  for (int e = 0; e < m; ++e) res.objective += inst.cost[e] * res.flow[e];
  return res;
}

BfResult bellman_ford(const IncidenceGraph& g, int source, const std::vector<Rat>& cost) {
  if (source < 0 || source >= g.n) throw std::invalid_argument("bellman_ford: bad source");
  int n = g.n, m = g.m();
  BfResult res;
  res.reachable.assign(n, false);
  res.dist.assign(n, Rat(0));
  res.parent_edge.assign(n, -1);
  res.reachable[source] = true;

  int relaxed_node = -1;
  for (int round = 0; round < n; ++round) {
    relaxed_node = -1;
    for (int e = 0; e < m; ++e) {
      auto [u, v] = g.edges[e];
      if (!res.reachable[u]) continue;
      Rat cand = res.dist[u] + cost[e];
      if (!res.reachable[v] || cand < res.dist[v]) {
        res.reachable[v] = true;
        res.dist[v] = cand;
        res.parent_edge[v] = e;
        relaxed_node = v;
      }
    }
    if (relaxed_node < 0) break;
  }
  if (relaxed_node >= 0) {
    res.neg_cycle = true;
    // Walk parents n times to land on the cycle, then collect it.
    int v = relaxed_node;
    for (int i = 0; i < n; ++i) v = g.edges[res.parent_edge[v]].first;
    std::vector<int> cyc;
    int w = v;
    do {
      int e = res.parent_edge[w];
      cyc.push_back(e);
      w = g.edges[e].first;
    } while (w != v);
    std::reverse(cyc.begin(), cyc.end());
    res.cycle_edges = std::move(cyc);
  }
  return res;
}

std::vector<std::optional<Rat>> dijkstra(const IncidenceGraph& g, int source,
                                         const std::vector<Rat>& cost) {
  for (const Rat& c : cost)
    if (c < 0) throw std::invalid_argument("dijkstra: negative cost");
  std::vector<std::optional<Rat>> dist(g.n);
  std::vector<char> done(g.n, 0);
  using QE = std::pair<Rat, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
  dist[source] = Rat(0);
  pq.push({Rat(0), source});
  const auto& adj = g.adjacency();
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (done[v]) continue;
    done[v] = 1;
    for (const auto& a : adj[v]) {
      if (a.sign > 0) continue;  // only outgoing arcs
      Rat nd = d + cost[a.edge];
      if (!dist[a.other] || nd < *dist[a.other]) {
        dist[a.other] = nd;
        pq.push({nd, a.other});
      }
    }
  }
  return dist;
}

MmcResult karp_mmc(const IncidenceGraph& g, const std::vector<Rat>& cost) {
  int n = g.n, m = g.m();
  MmcResult res;
  if (n == 0) return res;
  // d[k][v] = min cost of a k-edge walk ending at v (from any start).
  std::vector<std::vector<std::optional<Rat>>> d(n + 1,
                                                 std::vector<std::optional<Rat>>(n));
  std::vector<std::vector<int>> par(n + 1, std::vector<int>(n, -1));
  for (int v = 0; v < n; ++v) d[0][v] = Rat(0);
  for (int k = 1; k <= n; ++k) {
    for (int e = 0; e < m; ++e) {
      auto [u, v] = g.edges[e];
      if (!d[k - 1][u]) continue;
      Rat cand = *d[k - 1][u] + cost[e];
      if (!d[k][v] || cand < *d[k][v]) {
        d[k][v] = cand;
        par[k][v] = e;
      }
    }
  }
  std::optional<Rat> best;
  int best_v = -1;
  for (int v = 0; v < n; ++v) {
    if (!d[n][v]) continue;
    std::optional<Rat> worst;
    for (int k = 0; k < n; ++k) {
      if (!d[k][v]) continue;
      Rat val = (*d[n][v] - *d[k][v]) / Rat(n - k);
      if (!worst || val > *worst) worst = val;
    }
    if (worst && (!best || *worst < *best)) {
      best = *worst;
      best_v = v;
    }
  }
  if (!best) return res;  // acyclic
  res.has_cycle = true;
  res.mean = *best;

  // Walk the n-edge parent chain from best_v; it must repeat a node, and the
  // repeated segment is a minimum mean cycle.
  std::vector<int> node_at(n + 1), edge_at(n);
  int v = best_v;
  for (int k = n; k >= 1; --k) {
    node_at[k] = v;
    int e = par[k][v];
    edge_at[k - 1] = e;
    v = g.edges[e].first;
  }
  node_at[0] = v;
  std::vector<int> seen(n, -1);
  int lo = -1, hi = -1;
  for (int k = 0; k <= n; ++k) {
    if (seen[node_at[k]] >= 0) {
      lo = seen[node_at[k]];
      hi = k;
      break;
    }
    seen[node_at[k]] = k;
  }
  // Prefer a repeated segment whose mean equals the optimum; the full walk
  // decomposes into cycles, one of which attains it.
  while (lo >= 0) {
    Rat csum(0);
    for (int k = lo; k < hi; ++k) csum += cost[edge_at[k]];
    if (csum == res.mean * Rat(hi - lo)) {
      for (int k = lo; k < hi; ++k) res.cycle_edges.push_back(edge_at[k]);
      return res;
    }
    // Contract this cycle out of the walk and rescan.
    std::vector<int> nn(node_at.begin(), node_at.begin() + lo + 1), ne(edge_at.begin(),
                                                                       edge_at.begin() + lo);
    for (int k = hi; k < static_cast<int>(node_at.size()); ++k) {
      if (k < static_cast<int>(node_at.size()) - 1) ne.push_back(edge_at[k]);
      if (k > hi) nn.push_back(node_at[k]);
    }
    node_at.swap(nn);
    edge_at.swap(ne);
    std::fill(seen.begin(), seen.end(), -1);
    lo = hi = -1;
    for (int k = 0; k < static_cast<int>(node_at.size()); ++k) {
      if (seen[node_at[k]] >= 0) {
        lo = seen[node_at[k]];
        hi = k;
        break;
      }
      seen[node_at[k]] = k;
    }
  }
  return res;
}

AssignmentResult hungarian(const std::vector<std::vector<Rat>>& cost) {
  int n = static_cast<int>(cost.size());
  for (const auto& row : cost)
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("hungarian: matrix not square");
  AssignmentResult res;
  if (n == 0) return res;

  // Shortest augmenting paths with potentials, 1-based internals.
  std::vector<Rat> u(n + 1, Rat(0)), v(n + 1, Rat(0));
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::optional<Rat>> minv(n + 1);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      std::optional<Rat> delta;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        Rat cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (!minv[j] || cur < *minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (!delta || *minv[j] < *delta) {
          delta = *minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += *delta;
          v[j] -= *delta;
        } else if (minv[j]) {
          *minv[j] -= *delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  res.col_of_row.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) res.col_of_row[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) res.objective += cost[i][res.col_of_row[i]];
  return res;
}

namespace {

void enum_rec(int idx, const std::vector<std::pair<int, int>>& edges,
              const std::vector<Rat>& cost, std::vector<long long>& ru,
              std::vector<long long>& rv, std::vector<long long>& x, Rat acc, bool perfect,
              EnumResult& out) {
  if (idx == static_cast<int>(edges.size())) {
    if (perfect) {
      for (long long r : ru)
        if (r != 0) return;
      for (long long r : rv)
        if (r != 0) return;
    }
    if (!out.feasible || acc < out.best) {
      out.feasible = true;
      out.best = acc;
      out.flow = x;
      out.optima_count = 1;
    } else if (acc == out.best) {
      ++out.optima_count;
    }
    return;
  }
  auto [u, v] = edges[idx];
  long long top = std::min(ru[u], rv[v]);
  for (long long k = 0; k <= top; ++k) {
    x[idx] = k;
    ru[u] -= k;
    rv[v] -= k;
    enum_rec(idx + 1, edges, cost, ru, rv, x, acc + cost[idx] * Rat(k), perfect, out);
    ru[u] += k;
    rv[v] += k;
  }
  x[idx] = 0;
}

}  // namespace

EnumResult enumerate_perfect_b_matching(int nU, int nV,
                                        const std::vector<std::pair<int, int>>& edges,
                                        const std::vector<long long>& b,
                                        const std::vector<Rat>& cost) {
  std::vector<long long> ru(b.begin(), b.begin() + nU), rv(b.begin() + nU, b.end());
  std::vector<long long> x(edges.size(), 0);
  EnumResult out;
  enum_rec(0, edges, cost, ru, rv, x, Rat(0), true, out);
  (void)nV;
  return out;
}

EnumResult enumerate_max_weight_b_matching(int nU, int nV,
                                           const std::vector<std::pair<int, int>>& edges,
                                           const std::vector<long long>& b,
                                           const std::vector<Rat>& cost) {
  std::vector<Rat> neg(cost.size());
  for (size_t i = 0; i < cost.size(); ++i) neg[i] = -cost[i];
  std::vector<long long> ru(b.begin(), b.begin() + nU), rv(b.begin() + nU, b.end());
  std::vector<long long> x(edges.size(), 0);
  EnumResult out;
  enum_rec(0, edges, neg, ru, rv, x, Rat(0), false, out);
  (void)nV;
  out.best = -out.best;
  return out;
}

Eigen::MatrixXd dense_incidence(const MatrixOp& op) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(op.rows(), op.cols());
  for (int e = 0; e < op.g->m(); ++e) {
    A(e, op.g->edges[e].first) = -1;
    A(e, op.g->edges[e].second) = 1;
  }
  if (op.with_identity)
    for (int v = 0; v < op.g->n; ++v) A(op.g->m() + v, v) = 1;
  return A;
}

Eigen::MatrixXd dense_quadratic(const MatrixOp& op, const Vec& w, const Vec& extra_diag) {
  Eigen::MatrixXd A = dense_incidence(op);
  Eigen::VectorXd wv = Eigen::VectorXd::Ones(op.rows());
  if (!w.empty()) {
    if (static_cast<int>(w.size()) != op.rows())
      throw std::invalid_argument("dense_quadratic: weight size mismatch");
    for (int i = 0; i < op.rows(); ++i) wv(i) = w[i];
  }
  Eigen::MatrixXd M = A.transpose() * wv.asDiagonal() * A;
  if (!extra_diag.empty())
    for (int i = 0; i < op.cols(); ++i) M(i, i) += extra_diag[i];
  return M;
}

Vec dense_pinv_solve(const Eigen::MatrixXd& M, const Vec& rhs, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const auto& ev = es.eigenvalues();
  double cutoff = rel_tol * std::max(1e-300, ev.cwiseAbs().maxCoeff());
  Eigen::VectorXd b(rhs.size());
  for (size_t i = 0; i < rhs.size(); ++i) b(i) = rhs[i];
  Eigen::VectorXd y = es.eigenvectors().transpose() * b;
  for (int i = 0; i < y.size(); ++i) y(i) = (ev(i) > cutoff) ? y(i) / ev(i) : 0.0;
  Eigen::VectorXd x = es.eigenvectors() * y;
  return Vec(x.data(), x.data() + x.size());
}

double dense_pinv_norm(const Eigen::MatrixXd& M, const Vec& v, double rel_tol) {
  Vec x = dense_pinv_solve(M, v, rel_tol);
  return std::sqrt(std::max(0.0, dot(x, v)));
}

Vec dense_leverage(const MatrixOp& op, const Vec& w) {
  Eigen::MatrixXd A = dense_incidence(op);
  Eigen::VectorXd sw(op.rows());
  for (int i = 0; i < op.rows(); ++i) sw(i) = std::sqrt(std::max(0.0, w[i]));
  Eigen::MatrixXd B = sw.asDiagonal() * A;
  Eigen::MatrixXd M = B.transpose() * B;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const auto& ev = es.eigenvalues();
  double cutoff = 1e-12 * std::max(1e-300, ev.cwiseAbs().maxCoeff());
  Eigen::VectorXd inv = ev;
  for (int i = 0; i < inv.size(); ++i) inv(i) = (ev(i) > cutoff) ? 1.0 / ev(i) : 0.0;
  Eigen::MatrixXd Minv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  Vec sigma(op.rows());
  for (int i = 0; i < op.rows(); ++i) {
    Eigen::VectorXd row = B.row(i);
    sigma[i] = row.dot(Minv * row);
  }
  return sigma;
}

Vec dense_least_squares(const MatrixOp& op, const Vec& target) {
  Eigen::MatrixXd A = dense_incidence(op);
  Eigen::VectorXd t(target.size());
  for (size_t i = 0; i < target.size(); ++i) t(i) = target[i];
  Eigen::VectorXd y = A.colPivHouseholderQr().solve(t);
  return Vec(y.data(), y.data() + y.size());
}

}  // namespace bmx::oracle
