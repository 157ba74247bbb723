#include "core/dual_maintainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bmx {

namespace {

class HeavyHitterIndex final : public RowScaleIndex {
 public:
  HeavyHitterIndex(MatrixOp op, Vec g, double phi) : hh_(op, std::move(g), phi) {}
  void scale(int row, double s) override { hh_.scale(row, s); }
  std::vector<int> heavy_query(const Vec& h, double eps) const override {
    return hh_.heavy_query(h, eps);
  }

 private:
  HeavyHitter hh_;
};

class DirectScanIndex final : public RowScaleIndex {
 public:
  DirectScanIndex(MatrixOp op, Vec g) : op_(op), g_(std::move(g)) {}
  void scale(int row, double s) override { g_[row] = s; }
  std::vector<int> heavy_query(const Vec& h, double eps) const override {
    std::vector<int> out;
    for (int r = 0; r < op_.rows(); ++r) {
      if (g_[r] == 0.0) continue;
      if (std::fabs(g_[r] * op_.row_apply(r, h)) >= eps) out.push_back(r);
    }
    return out;
  }

 private:
  MatrixOp op_;
  Vec g_;
};

}  // namespace

DualMaintainer::DualMaintainer(MatrixOp op, Vec v_init, double eps, double phi,
                               DualEngine engine)
    : op_(op), eps_(eps), phi_(phi), engine_(engine), vinit_(std::move(v_init)) {
  if (eps_ <= 0 || eps_ > 1) throw std::invalid_argument("DualMaintainer: eps must be in (0,1]");
  if (static_cast<int>(vinit_.size()) != op_.rows())
    throw std::invalid_argument("DualMaintainer: v_init size mismatch");
  for (double v : vinit_)
    if (v == 0.0 || !std::isfinite(v))
      throw std::invalid_argument("DualMaintainer: v_init has a zero entry");
  reset_period_ = std::max(2, op_.cols());
  L_ = 0;
  while ((1LL << (L_ + 1)) <= reset_period_) ++L_;
  thr_ = 0.2 * eps_ / std::max(1.0, std::log2(static_cast<double>(reset_period_)));

  vbar_ = vinit_;
  fhat_.assign(op_.cols(), 0.0);
  Vec scale(op_.rows());
  for (int i = 0; i < op_.rows(); ++i) scale[i] = 1.0 / std::fabs(vbar_[i]);
  D_.clear();
  for (int j = 0; j <= L_; ++j) {
    if (engine_ == DualEngine::HeavyHitterBacked)
      D_.push_back(std::make_unique<HeavyHitterIndex>(op_, scale, phi_));
    else
      D_.push_back(std::make_unique<DirectScanIndex>(op_, scale));
  }
  f_.assign(L_ + 1, Vec(op_.cols(), 0.0));
  F_.assign(L_ + 1, {});
}

double DualMaintainer::exact_coord(int i) const {
  return vinit_[i] + op_.row_apply(i, fhat_);
}

bool DualMaintainer::verify_index(int i) {
  double exact = exact_coord(i);
  if (std::fabs(vbar_[i] - exact) >= thr_ * std::fabs(vbar_[i])) {
    if (exact == 0.0)
      throw std::runtime_error("DualMaintainer: maintained coordinate reached zero");
    vbar_[i] = exact;
    for (int j = 0; j <= L_; ++j) {
      F_[j].insert(i);
      D_[j]->scale(i, 0.0);
    }
    return true;
  }
  return false;
}

void DualMaintainer::reinitialize(std::vector<int>& changed) {
  Vec exact = compute_exact();
  for (int i = 0; i < op_.rows(); ++i) {
    if (exact[i] == 0.0)
      throw std::runtime_error("DualMaintainer: maintained coordinate reached zero");
    if (exact[i] != vbar_[i]) changed.push_back(i);
  }
  vinit_ = std::move(exact);
  vbar_ = vinit_;
  fhat_.assign(op_.cols(), 0.0);
  t_ = 0;
  Vec scale(op_.rows());
  for (int i = 0; i < op_.rows(); ++i) scale[i] = 1.0 / std::fabs(vbar_[i]);
  for (int j = 0; j <= L_; ++j) {
    if (engine_ == DualEngine::HeavyHitterBacked)
      D_[j] = std::make_unique<HeavyHitterIndex>(op_, scale, phi_);
    else
      D_[j] = std::make_unique<DirectScanIndex>(op_, scale);
    f_[j].assign(op_.cols(), 0.0);
    F_[j].clear();
  }
}

DualMaintainer::AddResult DualMaintainer::add(const Vec& h) {
  check_size(h, op_.cols(), "DualMaintainer::add");
  ++t_;
  for (int v = 0; v < op_.cols(); ++v) fhat_[v] += h[v];

  // FindIndices over the dyadic levels due at this t.
  std::set<int> candidates;
  for (int j = L_; j >= 0; --j) {
    Vec& fj = f_[j];
    for (int v = 0; v < op_.cols(); ++v) fj[v] += h[v];
    if (t_ % (1LL << j) == 0) {
      for (int i : D_[j]->heavy_query(fj, thr_)) candidates.insert(i);
      fj.assign(op_.cols(), 0.0);
    }
  }

  std::set<int> changed_set;
  for (int i : candidates)
    if (verify_index(i)) changed_set.insert(i);
  for (int j = 0; j <= L_; ++j) {
    if (t_ % (1LL << j) != 0) continue;
    // Frozen indices re-enter tracking for the new batch after verification.
    std::vector<int> frozen(F_[j].begin(), F_[j].end());
    for (int i : frozen)
      if (verify_index(i)) changed_set.insert(i);
  }
  for (int j = 0; j <= L_; ++j) {
    if (t_ % (1LL << j) != 0) continue;
    std::vector<int> to_unfreeze(F_[j].begin(), F_[j].end());
    for (int i : changed_set) to_unfreeze.push_back(i);
    std::sort(to_unfreeze.begin(), to_unfreeze.end());
    to_unfreeze.erase(std::unique(to_unfreeze.begin(), to_unfreeze.end()), to_unfreeze.end());
    for (int i : to_unfreeze) D_[j]->scale(i, 1.0 / std::fabs(vbar_[i]));
    F_[j].clear();
  }

  std::vector<int> changed(changed_set.begin(), changed_set.end());
  if (t_ >= reset_period_) reinitialize(changed);
  std::sort(changed.begin(), changed.end());
  changed.erase(std::unique(changed.begin(), changed.end()), changed.end());
  return {&vbar_, std::move(changed)};
}

Vec DualMaintainer::compute_exact() const {
  Vec out = op_.apply(fhat_);
  for (int i = 0; i < op_.rows(); ++i) out[i] += vinit_[i];
  return out;
}

std::vector<long long> DualMaintainer::dyadic_chain(long long t_bar, long long t) {
  if (t_bar < 0 || t < t_bar) throw std::invalid_argument("dyadic_chain: need 0 <= t_bar <= t");
  std::vector<long long> seq{t};
  if (t == t_bar) return seq;
  if (t_bar == 0) {
    long long cur = t;
    while (cur != 0) {
      cur -= cur & (-cur);
      seq.push_back(cur);
    }
    return seq;
  }
  long long diff = t ^ t_bar;
  int ell = 63;
  while (!((diff >> ell) & 1)) --ell;
  long long tp = (t >> ell) << ell;
  long long cur = t;
  while (cur != tp) {
    cur -= cur & (-cur);
    seq.push_back(cur);
  }
  std::vector<long long> ascent;
  cur = t_bar;
  while (cur != tp) {
    ascent.push_back(cur);
    cur += cur & (-cur);
  }
  for (auto it = ascent.rbegin(); it != ascent.rend(); ++it) seq.push_back(*it);
  return seq;
}

}  // namespace bmx
