#include "core/heavy_hitter.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace bmx {

HeavyHitter::HeavyHitter(MatrixOp op, Vec g, double phi) : op_(op), phi_(phi), g_(std::move(g)) {
  if (static_cast<int>(g_.size()) != op_.rows())
    throw std::invalid_argument("HeavyHitter: scale size mismatch");
  Vec inc(g_.begin(), g_.begin() + op_.g->m());
  decomp_ = std::make_unique<ExpanderDecomposition>(op_.g, std::move(inc), phi_);
}

void HeavyHitter::scale(int row, double s) {
  if (row < 0 || row >= op_.rows()) throw std::invalid_argument("HeavyHitter::scale: row");
  if (s < 0 || !std::isfinite(s)) throw std::invalid_argument("HeavyHitter::scale: bad value");
  g_[row] = s;
  if (row < op_.g->m()) decomp_->scale(row, s);
}

double HeavyHitter::weight_ratio() const {
  double lo = 0, hi = 0;
  for (double v : g_) {
    if (v <= 0) continue;
    if (lo == 0 || v < lo) lo = v;
    hi = std::max(hi, v);
  }
  return lo > 0 ? hi / lo : 1.0;
}

std::vector<int> HeavyHitter::heavy_query(const Vec& h, double eps) const {
  check_size(h, op_.cols(), "HeavyHitter::heavy_query");
  if (eps <= 0) throw std::invalid_argument("HeavyHitter::heavy_query: eps must be positive");
  const IncidenceGraph& g = *op_.g;
  std::vector<char> seen(g.m(), 0);
  std::vector<int> out;

  for (const ExpanderPiece* p : decomp_->pieces()) {
    int k = static_cast<int>(p->nodes.size());
    double delta = std::ldexp(eps, -(p->level + 1));  // eps / 2^{level+1}
    // Shift to be orthogonal to the piece degree vector.
    double num = 0, den = 0;
    for (int i = 0; i < k; ++i) {
      num += p->deg[i] * h[p->nodes[i]];
      den += p->deg[i];
    }
    double shift = num / den;
    double node_thresh = 0.5 * delta / (1 + 1e-9);
    for (int i = 0; i < k; ++i) {
      double hv = h[p->nodes[i]] - shift;
      if (std::fabs(hv) < node_thresh) continue;
      for (auto [e, j] : p->adj[i]) {
        (void)j;
        if (seen[e]) continue;
        double val = g_[e] * (h[g.edges[e].second] - h[g.edges[e].first]);
        if (std::fabs(val) >= eps) {
          assert(std::max(std::fabs(h[g.edges[e].first] - shift),
                          std::fabs(h[g.edges[e].second] - shift)) >= node_thresh);
          seen[e] = 1;
          out.push_back(e);
        }
      }
    }
  }
  if (op_.with_identity) {
    int m = g.m();
    for (int v = 0; v < g.n; ++v)
      if (std::fabs(g_[m + v] * h[v]) >= eps) out.push_back(m + v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

HeavyHitter::SampleLaw HeavyHitter::sample_law(const Vec& h, double K) const {
  if (K <= 0) throw std::invalid_argument("HeavyHitter::sample: K must be positive");
  SampleLaw law;
  law.pcs = decomp_->pieces();
  law.shifted.resize(law.pcs.size());
  double denom = 0;
  for (size_t pi = 0; pi < law.pcs.size(); ++pi) {
    const ExpanderPiece* p = law.pcs[pi];
    int k = static_cast<int>(p->nodes.size());
    double num = 0, den = 0;
    for (int i = 0; i < k; ++i) {
      num += p->deg[i] * h[p->nodes[i]];
      den += p->deg[i];
    }
    double shift = num / den;
    auto& sh = law.shifted[pi];
    sh.resize(k);
    double scale2 = std::ldexp(1.0, 2 * p->level);  // 2^{2 level}
    for (int i = 0; i < k; ++i) {
      sh[i] = h[p->nodes[i]] - shift;
      denom += scale2 * p->deg[i] * sh[i] * sh[i];
    }
  }
  if (op_.with_identity) {
    int m = op_.g->m();
    for (int v = 0; v < op_.g->n; ++v) {
      double val = g_[m + v] * h[v];
      denom += val * val;
    }
  }
  law.Q = denom > 0 ? K / denom : 0.0;
  return law;
}

double HeavyHitter::node_prob(const SampleLaw& law, size_t piece_idx, int local,
                              int level) const {
  double scale2 = std::ldexp(1.0, 2 * level);
  double hv = law.shifted[piece_idx][local];
  return std::min(4.0 * law.Q * scale2 * hv * hv, 1.0);
}

std::vector<int> HeavyHitter::sample(const Vec& h, double K, Rng& rng) const {
  check_size(h, op_.cols(), "HeavyHitter::sample");
  SampleLaw law = sample_law(h, K);
  std::vector<char> mark(op_.rows(), 0);
  for (size_t pi = 0; pi < law.pcs.size(); ++pi) {
    const ExpanderPiece* p = law.pcs[pi];
    for (size_t i = 0; i < p->nodes.size(); ++i) {
      double pv = node_prob(law, pi, static_cast<int>(i), p->level);
      if (pv <= 0) continue;
      for (auto [e, j] : p->adj[i]) {
        (void)j;
        if (rng.bernoulli(pv)) mark[e] = 1;
      }
    }
  }
  if (op_.with_identity) {
    int m = op_.g->m();
    for (int v = 0; v < op_.g->n; ++v) {
      double val = g_[m + v] * h[v];
      double q = std::min(4.0 * law.Q * val * val, 1.0);
      if (q > 0 && rng.bernoulli(q)) mark[m + v] = 1;
    }
  }
  std::vector<int> out;
  for (int r = 0; r < op_.rows(); ++r)
    if (mark[r]) out.push_back(r);
  return out;
}

Vec HeavyHitter::probability(const std::vector<int>& rows, const Vec& h, double K) const {
  check_size(h, op_.cols(), "HeavyHitter::probability");
  SampleLaw law = sample_law(h, K);
  // Piece lookup by edge needs the piece index in the law ordering.
  std::vector<int> piece_index_of_edge(op_.g->m(), -1);
  for (size_t pi = 0; pi < law.pcs.size(); ++pi)
    for (int e : law.pcs[pi]->edges) piece_index_of_edge[e] = static_cast<int>(pi);

  Vec out(rows.size(), 0.0);
  for (size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    if (r < 0 || r >= op_.rows()) throw std::invalid_argument("probability: row out of range");
    if (r < op_.g->m()) {
      int pi = piece_index_of_edge[r];
      if (pi < 0) continue;  // zero-weight edge
      const ExpanderPiece* p = law.pcs[pi];
      int lu = p->local_of(op_.g->edges[r].first);
      int lv = p->local_of(op_.g->edges[r].second);
      double pu = node_prob(law, pi, lu, p->level);
      double pv = node_prob(law, pi, lv, p->level);
      out[i] = pu + pv - pu * pv;
    } else {
      double val = g_[r] * h[r - op_.g->m()];
      out[i] = std::min(4.0 * law.Q * val * val, 1.0);
    }
  }
  return out;
}

std::vector<int> HeavyHitter::leverage_score_sample(double K, Rng& rng) const {
  if (K <= 0) throw std::invalid_argument("leverage_score_sample: K must be positive");
  std::vector<char> mark(op_.rows(), 0);
  double base = 16.0 * K / (phi_ * phi_);
  for (const ExpanderPiece* p : decomp_->pieces()) {
    for (size_t i = 0; i < p->nodes.size(); ++i) {
      double pv = std::min(base / p->deg[i], 1.0);
      for (auto [e, j] : p->adj[i]) {
        (void)j;
        if (rng.bernoulli(pv)) mark[e] = 1;
      }
    }
  }
  if (op_.with_identity) {
    int m = op_.g->m();
    double q = std::min(K, 1.0);
    for (int v = 0; v < op_.g->n; ++v)
      if (g_[m + v] > 0 && rng.bernoulli(q)) mark[m + v] = 1;
  }
  std::vector<int> out;
  for (int r = 0; r < op_.rows(); ++r)
    if (mark[r]) out.push_back(r);
  return out;
}

Vec HeavyHitter::leverage_score_bound(double K, const std::vector<int>& rows) const {
  double base = 16.0 * K / (phi_ * phi_);
  Vec out(rows.size(), 0.0);
  for (size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    if (r < 0 || r >= op_.rows())
      throw std::invalid_argument("leverage_score_bound: row out of range");
    if (r < op_.g->m()) {
      const ExpanderPiece* p = decomp_->piece_of(r);
      if (!p) continue;
      int lu = p->local_of(op_.g->edges[r].first);
      int lv = p->local_of(op_.g->edges[r].second);
      double pu = std::min(base / p->deg[lu], 1.0);
      double pv = std::min(base / p->deg[lv], 1.0);
      out[i] = pu + pv - pu * pv;
    } else {
      out[i] = g_[r] > 0 ? std::min(K, 1.0) : 0.0;
    }
  }
  return out;
}

}  // namespace bmx
