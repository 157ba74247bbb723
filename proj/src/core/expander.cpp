#include "core/expander.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bmx {

int weight_level(double g) {
  if (g < 0 || !std::isfinite(g)) throw std::invalid_argument("weight_level: bad weight");
  if (g == 0.0) return kZeroLevel;
  int e;
  std::frexp(g, &e);  // g = mant * 2^e, mant in [0.5, 1)
  return e - 1;
}

int ExpanderPiece::local_of(int global_node) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), global_node);
  if (it == nodes.end() || *it != global_node) return -1;
  return static_cast<int>(it - nodes.begin());
}

double ExpanderPiece::volume() const {
  double s = 0;
  for (double d : deg) s += d;
  return s;
}

std::unique_ptr<ExpanderPiece> ExpanderDecomposition::make_piece(
    int level, std::vector<int> edge_ids) const {
  auto p = std::make_unique<ExpanderPiece>();
  p->level = level;
  p->edges = std::move(edge_ids);
  p->nodes.reserve(2 * p->edges.size());
  for (int e : p->edges) {
    p->nodes.push_back(g_->edges[e].first);
    p->nodes.push_back(g_->edges[e].second);
  }
  std::sort(p->nodes.begin(), p->nodes.end());
  p->nodes.erase(std::unique(p->nodes.begin(), p->nodes.end()), p->nodes.end());
  int k = static_cast<int>(p->nodes.size());
  p->deg.assign(k, 0.0);
  p->adj.assign(k, {});
  for (int e : p->edges) {
    int lu = p->local_of(g_->edges[e].first);
    int lv = p->local_of(g_->edges[e].second);
    p->deg[lu] += 1;
    p->deg[lv] += 1;
    p->adj[lu].push_back({e, lv});
    p->adj[lv].push_back({e, lu});
  }
  return p;
}

namespace {

// Deterministic pseudo-random start vector for the power iterations.
double hash_unit(long long x) {
  uint64_t z = static_cast<uint64_t>(x) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return (static_cast<double>(z % 1000003ULL) / 1000003.0) - 0.5;
}

// lambda_2 of D^{-1/2} L D^{-1/2} and its eigenvector, by inverse power
// iteration on N + 3 v v^T with deflation of v = D^{1/2} 1 / ||D^{1/2} 1||.
std::pair<double, Eigen::VectorXd> lambda2_pair(const ExpanderPiece& p) {
  int k = static_cast<int>(p.nodes.size());
  if (k <= 1) return {2.0, Eigen::VectorXd::Zero(std::max(1, k))};
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd dsqrt(k);
  for (int i = 0; i < k; ++i) dsqrt(i) = std::sqrt(p.deg[i]);
  for (int i = 0; i < k; ++i) {
    N(i, i) = 1.0;  // deg / deg
    for (auto [e, j] : p.adj[i]) {
      (void)e;
      N(i, j) -= 1.0 / (dsqrt(i) * dsqrt(j));
    }
  }
  Eigen::VectorXd v = dsqrt / dsqrt.norm();
  Eigen::MatrixXd Nshift = N + 3.0 * v * v.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Nshift);

  Eigen::VectorXd y(k);
  for (int i = 0; i < k; ++i) y(i) = hash_unit(p.nodes[i] + 131LL * i);
  y -= v * v.dot(y);
  if (y.norm() < 1e-12) {
    for (int i = 0; i < k; ++i) y(i) = hash_unit(7 * i + 3);
    y -= v * v.dot(y);
  }
  y.normalize();
  double rq = 0.0;
  for (int it = 0; it < 512; ++it) {
    Eigen::VectorXd z = ldlt.solve(y);
    z -= v * v.dot(z);
    double zn = z.norm();
    if (zn < 1e-300) break;
    z /= zn;
    double rq_new = z.dot(N * z);
    bool settled = std::fabs(rq_new - rq) <= 1e-13 * std::max(1.0, std::fabs(rq_new));
    rq = rq_new;
    y = z;
    if (settled && it >= 8) break;
  }
  return {rq, y};
}

}  // namespace

double ExpanderDecomposition::estimate_lambda2(const ExpanderPiece& p) {
  return lambda2_pair(p).first;
}

bool ExpanderDecomposition::certify(const ExpanderPiece& p, double phi) {
  if (p.edges.empty()) throw std::invalid_argument("certify: empty piece");
  if (p.edges.size() == 1) return 2.0 >= phi * phi / 2 - 1e-6;
  return estimate_lambda2(p) >= phi * phi / 2 - 1e-6;
}

void ExpanderDecomposition::decompose_into(
    int level, const std::vector<int>& edge_ids,
    std::vector<std::unique_ptr<ExpanderPiece>>& out) const {
  if (edge_ids.empty()) return;
  auto p = make_piece(level, edge_ids);
  if (p->edges.size() == 1) {
    p->lambda2 = 2.0;
    p->cert_stamp = stamp_;
    out.push_back(std::move(p));
    return;
  }
  auto [lam, y] = lambda2_pair(*p);
  if (lam >= phi_ * phi_ / 2) {
    p->lambda2 = lam;
    p->cert_stamp = stamp_;
    out.push_back(std::move(p));
    return;
  }

  // Sweep cut over the eigenvector embedding y_v / sqrt(deg_v).
  int k = static_cast<int>(p->nodes.size());
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  std::vector<double> emb(k);
  for (int i = 0; i < k; ++i) emb[i] = y(i) / std::sqrt(p->deg[i]);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return emb[a] < emb[b]; });

  double vol_tot = p->volume();
  std::vector<char> in_s(k, 0);
  double vol_s = 0, cut = 0;
  double best = std::numeric_limits<double>::infinity();
  int best_prefix = -1;
  for (int idx = 0; idx < k - 1; ++idx) {
    int v = order[idx];
    in_s[v] = 1;
    vol_s += p->deg[v];
    for (auto [e, j] : p->adj[v]) {
      (void)e;
      cut += in_s[j] ? -1.0 : 1.0;
    }
    double denom = std::min(vol_s, vol_tot - vol_s);
    double cond = denom > 0 ? cut / denom : std::numeric_limits<double>::infinity();
    if (cond < best) {
      best = cond;
      best_prefix = idx;
    }
  }
  if (best_prefix < 0) {
    // No usable cut; fall back to singleton pieces.
    for (int e : p->edges) {
      auto s = make_piece(level, {e});
      s->lambda2 = 2.0;
      s->cert_stamp = stamp_;
      out.push_back(std::move(s));
    }
    return;
  }
  std::fill(in_s.begin(), in_s.end(), 0);
  for (int idx = 0; idx <= best_prefix; ++idx) in_s[order[idx]] = 1;

  std::vector<int> left, right, crossing;
  for (int e : p->edges) {
    int lu = p->local_of(g_->edges[e].first);
    int lv = p->local_of(g_->edges[e].second);
    if (in_s[lu] && in_s[lv])
      left.push_back(e);
    else if (!in_s[lu] && !in_s[lv])
      right.push_back(e);
    else
      crossing.push_back(e);
  }
  decompose_into(level, left, out);
  decompose_into(level, right, out);
  for (int e : crossing) {
    auto s = make_piece(level, {e});
    s->lambda2 = 2.0;
    s->cert_stamp = stamp_;
    out.push_back(std::move(s));
  }
}

ExpanderDecomposition::ExpanderDecomposition(const IncidenceGraph* g, Vec g_scale, double phi)
    : g_(g), phi_(phi), gval_(std::move(g_scale)) {
  if (static_cast<int>(gval_.size()) != g_->m())
    throw std::invalid_argument("ExpanderDecomposition: scale size mismatch");
  if (phi_ <= 0 || phi_ > 0.5)
    throw std::invalid_argument("ExpanderDecomposition: phi must be in (0, 1/2]");
  for (double w : gval_)
    if (w < 0 || !std::isfinite(w))
      throw std::invalid_argument("ExpanderDecomposition: negative weight");

  loc_.assign(g_->m(), nullptr);
  std::map<int, std::vector<int>> by_level;
  for (int e = 0; e < g_->m(); ++e) {
    int lv = weight_level(gval_[e]);
    if (lv != kZeroLevel) by_level[lv].push_back(e);
  }
  for (auto& [lv, edges] : by_level) {
    Bucket& b = buckets_[lv];
    b.edge_count = static_cast<int>(edges.size());
    std::vector<std::unique_ptr<ExpanderPiece>> ps;
    decompose_into(lv, edges, ps);
    for (auto& p : ps) attach(b, std::move(p));
  }
}

void ExpanderDecomposition::attach(Bucket& b, std::unique_ptr<ExpanderPiece> p) {
  for (int e : p->edges) loc_[e] = p.get();
  b.pieces.push_back(std::move(p));
}

void ExpanderDecomposition::detach_edge_from_piece(int e, std::vector<int>& changed) {
  ExpanderPiece* p = loc_[e];
  int level = p->level;
  Bucket& b = buckets_.at(level);
  std::vector<int> rest = p->edges;
  rest.erase(std::remove(rest.begin(), rest.end(), e), rest.end());
  auto it = std::find_if(b.pieces.begin(), b.pieces.end(),
                         [&](const auto& q) { return q.get() == p; });
  b.pieces.erase(it);
  loc_[e] = nullptr;
  --b.edge_count;
  ++b.dirty;
  changed.push_back(e);
  if (rest.empty()) return;

  // The surviving edges stay grouped if they still certify; otherwise the
  // remainder is re-decomposed.
  auto fresh = make_piece(level, rest);
  double lam = rest.size() == 1 ? 2.0 : estimate_lambda2(*fresh);
  if (lam >= phi_ * phi_ / 2) {
    fresh->lambda2 = lam;
    fresh->cert_stamp = stamp_;
    attach(b, std::move(fresh));
  } else {
    std::vector<std::unique_ptr<ExpanderPiece>> ps;
    decompose_into(level, rest, ps);
    for (auto& q : ps) {
      for (int ee : q->edges) changed.push_back(ee);
      attach(b, std::move(q));
    }
  }
}

void ExpanderDecomposition::rebuild_bucket(int level, std::vector<int>& changed) {
  Bucket& b = buckets_.at(level);
  std::vector<int> edges;
  for (auto& p : b.pieces)
    for (int e : p->edges) edges.push_back(e);
  std::sort(edges.begin(), edges.end());
  b.pieces.clear();
  b.dirty = 0;
  b.edge_count = static_cast<int>(edges.size());
  std::vector<std::unique_ptr<ExpanderPiece>> ps;
  decompose_into(level, edges, ps);
  for (auto& p : ps) {
    for (int e : p->edges) changed.push_back(e);
    attach(b, std::move(p));
  }
  ++rebuilds_;
}

std::vector<int> ExpanderDecomposition::scale(int e, double s) {
  if (e < 0 || e >= g_->m()) throw std::invalid_argument("scale: edge out of range");
  if (s < 0 || !std::isfinite(s)) throw std::invalid_argument("scale: bad weight");
  ++stamp_;
  std::vector<int> changed;
  int old_level = weight_level(gval_[e]);
  int new_level = weight_level(s);
  gval_[e] = s;
  if (old_level == new_level) return changed;

  if (old_level != kZeroLevel) {
    detach_edge_from_piece(e, changed);
    Bucket& ob = buckets_.at(old_level);
    if (ob.edge_count == 0) {
      buckets_.erase(old_level);
    } else if (ob.dirty > std::max(32, ob.edge_count / 2)) {
      rebuild_bucket(old_level, changed);
    }
  }
  if (new_level != kZeroLevel) {
    Bucket& nb = buckets_[new_level];
    auto p = make_piece(new_level, {e});
    p->lambda2 = 2.0;
    p->cert_stamp = stamp_;
    attach(nb, std::move(p));
    ++nb.edge_count;
    ++nb.dirty;
    if (std::find(changed.begin(), changed.end(), e) == changed.end()) changed.push_back(e);
    if (nb.dirty > std::max(32, nb.edge_count / 2)) rebuild_bucket(new_level, changed);
  }
  std::sort(changed.begin(), changed.end());
  changed.erase(std::unique(changed.begin(), changed.end()), changed.end());
  return changed;
}

std::vector<const ExpanderPiece*> ExpanderDecomposition::pieces() const {
  std::vector<const ExpanderPiece*> out;
  for (const auto& [lv, b] : buckets_)
    for (const auto& p : b.pieces) out.push_back(p.get());
  return out;
}

const ExpanderPiece* ExpanderDecomposition::piece_of(int e) const { return loc_[e]; }

long long ExpanderDecomposition::total_piece_nodes() const {
  long long s = 0;
  for (const auto& [lv, b] : buckets_)
    for (const auto& p : b.pieces) s += static_cast<long long>(p->nodes.size());
  return s;
}

}  // namespace bmx
