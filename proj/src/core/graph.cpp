#include "core/graph.hpp"

#include <numeric>
#include <stdexcept>

namespace bmx {

Vec IncidenceGraph::apply(const Vec& h) const {
  check_size(h, n, "IncidenceGraph::apply");
  Vec out(edges.size());
  for (size_t e = 0; e < edges.size(); ++e) out[e] = h[edges[e].second] - h[edges[e].first];
  return out;
}

Vec IncidenceGraph::apply_t(const Vec& x) const {
  check_size(x, edges.size(), "IncidenceGraph::apply_t");
  Vec out(n, 0.0);
  for (size_t e = 0; e < edges.size(); ++e) {
    out[edges[e].first] -= x[e];
    out[edges[e].second] += x[e];
  }
  return out;
}

const std::vector<std::vector<IncidenceGraph::Arc>>& IncidenceGraph::adjacency() const {
  if (!adj_built_) {
    adj_.assign(n, {});
    for (int e = 0; e < m(); ++e) {
      auto [t, h] = edges[e];
      adj_[t].push_back({e, h, -1});
      adj_[h].push_back({e, t, +1});
    }
    adj_built_ = true;
  }
  return adj_;
}

IncidenceGraph build_incidence(std::vector<std::pair<int, int>> edges, int n) {
  if (n < 0) throw std::invalid_argument("build_incidence: negative node count");
  for (size_t e = 0; e < edges.size(); ++e) {
    auto [t, h] = edges[e];
    if (t < 0 || t >= n || h < 0 || h >= n)
      throw std::invalid_argument("build_incidence: edge " + std::to_string(e) +
                                  " references node out of range");
    if (t == h)
      throw std::invalid_argument("build_incidence: edge " + std::to_string(e) +
                                  " is a self-loop");
  }
  IncidenceGraph g;
  g.n = n;
  g.edges = std::move(edges);
  return g;
}

Vec MatrixOp::apply(const Vec& h) const {
  check_size(h, cols(), "MatrixOp::apply");
  Vec out = g->apply(h);
  if (with_identity) out.insert(out.end(), h.begin(), h.end());
  return out;
}

Vec MatrixOp::apply_t(const Vec& x) const {
  check_size(x, rows(), "MatrixOp::apply_t");
  Vec out(cols(), 0.0);
  int m = g->m();
  for (int e = 0; e < m; ++e) {
    out[g->edges[e].first] -= x[e];
    out[g->edges[e].second] += x[e];
  }
  if (with_identity)
    for (int v = 0; v < g->n; ++v) out[v] += x[m + v];
  return out;
}

void FlowInstance::validate() const {
  if (static_cast<int>(demand.size()) != graph.n)
    throw std::invalid_argument("FlowInstance: demand size mismatch");
  if (static_cast<int>(cost.size()) != graph.m())
    throw std::invalid_argument("FlowInstance: cost size mismatch");
  Rat s(0);
  for (const Rat& d : demand) s += d;
  if (s != 0) throw std::invalid_argument("FlowInstance: demands do not sum to zero");
}

Vec FlowInstance::demand_d() const {
  Vec out(demand.size());
  for (size_t i = 0; i < demand.size(); ++i) out[i] = to_double(demand[i]);
  return out;
}

Vec FlowInstance::cost_d() const {
  Vec out(cost.size());
  for (size_t i = 0; i < cost.size(); ++i) out[i] = to_double(cost[i]);
  return out;
}

FlowInstance starred_flow_graph(int nU, int nV,
                                const std::vector<std::pair<int, int>>& bipartite_edges,
                                const std::vector<long long>& b) {
  if (static_cast<int>(b.size()) != nU + nV)
    throw std::invalid_argument("starred_flow_graph: b size mismatch");
  long long su = 0, sv = 0;
  for (int u = 0; u < nU; ++u) su += b[u];
  for (int v = 0; v < nV; ++v) sv += b[nU + v];
  if (su != sv) throw std::invalid_argument("starred_flow_graph: unbalanced b");
  for (long long bv : b)
    if (bv < 0) throw std::invalid_argument("starred_flow_graph: negative b entry");

  int z = nU + nV;
  std::vector<std::pair<int, int>> edges;
  edges.reserve(bipartite_edges.size() + nU + nV);
  for (auto [u, v] : bipartite_edges) {
    if (u < 0 || u >= nU || v < 0 || v >= nV)
      throw std::invalid_argument("starred_flow_graph: bipartite edge endpoint out of range");
    edges.emplace_back(u, nU + v);
  }
  for (int u = 0; u < nU; ++u) edges.emplace_back(u, z);
  for (int v = 0; v < nV; ++v) edges.emplace_back(z, nU + v);

  FlowInstance inst;
  inst.graph = build_incidence(std::move(edges), z + 1);
  inst.demand.resize(z + 1);
  for (int u = 0; u < nU; ++u) inst.demand[u] = Rat(-b[u]);
  for (int v = 0; v < nV; ++v) inst.demand[nU + v] = Rat(b[nU + v]);
  inst.demand[z] = Rat(0);
  inst.cost.assign(inst.graph.m(), Rat(0));
  inst.origin = "starred";
  return inst;
}

AugmentedInstance augment_identity(const FlowInstance& inst) {
  AugmentedInstance out;
  out.base = inst;
  Rat b1(0), cinf(0);
  for (const Rat& d : inst.demand) b1 += rat_abs(d);
  for (const Rat& c : inst.cost) cinf = std::max(cinf, rat_abs(c));
  out.aug_cost = b1 * cinf;
  return out;
}

Vec residual(const MatrixOp& op, const Vec& x, const Vec& b) {
  check_size(b, op.cols(), "residual");
  Vec r = op.apply_t(x);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

std::vector<Rat> residual_exact(const MatrixOp& op, const std::vector<Rat>& x,
                                const std::vector<Rat>& b) {
  if (static_cast<int>(x.size()) != op.rows() || static_cast<int>(b.size()) != op.cols())
    throw std::invalid_argument("residual_exact: dimension mismatch");
  std::vector<Rat> r(op.cols(), Rat(0));
  int m = op.g->m();
  for (int e = 0; e < m; ++e) {
    r[op.g->edges[e].first] -= x[e];
    r[op.g->edges[e].second] += x[e];
  }
  if (op.with_identity)
    for (int v = 0; v < op.g->n; ++v) r[v] += x[m + v];
  for (int v = 0; v < op.g->n; ++v) r[v] -= b[v];
  return r;
}

std::vector<int> components(const IncidenceGraph& g, const Vec& w) {
  std::vector<int> comp(g.n, -1);
  const auto& adj = g.adjacency();
  int c = 0;
  std::vector<int> stack;
  for (int s = 0; s < g.n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (const auto& a : adj[v]) {
        if (!w.empty() && w[a.edge] <= 0) continue;
        if (comp[a.other] < 0) {
          comp[a.other] = c;
          stack.push_back(a.other);
        }
      }
    }
    ++c;
  }
  return comp;
}

}  // namespace bmx
