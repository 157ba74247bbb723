#include "core/gradient_maintainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bmx {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int GradientMaintainer::bucket_index(double z) const {
  if (z < 0.5 || z > 2.0)
    throw std::invalid_argument("GradientMaintainer: z out of [0.5, 2]");
  int l = static_cast<int>(std::floor((z - 0.5) / grid_ + 1e-9));
  return std::min(std::max(l, 0), K_ - 1);
}

GradientMaintainer::GradientMaintainer(MatrixOp op, Vec x_init, Vec g, Vec z, double eps,
                                       double lambda)
    : op_(op), eps_(eps), lambda_(lambda) {
  int rows = op_.rows();
  if (static_cast<int>(x_init.size()) != rows || static_cast<int>(g.size()) != rows ||
      static_cast<int>(z.size()) != rows)
    throw std::invalid_argument("GradientMaintainer: size mismatch");
  if (eps_ <= 0) throw std::invalid_argument("GradientMaintainer: eps must be positive");
  for (double xv : x_init)
    if (xv == 0.0) throw std::invalid_argument("GradientMaintainer: x_init has a zero entry");

  // Grid step <= eps/2 such that 1.0 = 0.5 + K0 * grid is exactly on grid.
  int K0 = static_cast<int>(std::ceil(1.0 / eps_));
  grid_ = 0.5 / K0;
  K_ = 3 * K0 + 1;  // covers [0.5, 2]

  gval_ = std::move(g);
  zval_ = std::move(z);
  xbar_ = std::move(x_init);
  bucket_of_.resize(rows);
  bucket_size_.assign(K_, 0);
  w_.assign(K_, Vec(op_.cols(), 0.0));
  p_exact_ = 0;
  // The running Phi(z) is kept in the linear domain; with very large lambda
  // (paper-constants mode) it overflows doubles, so it is tracked only when
  // representable and potential_log() serves the checks instead.
  p_linear_ok_ = lambda_ * 1.5 < 690.0;
  for (int i = 0; i < rows; ++i) {
    int k = bucket_index(zval_[i]);
    bucket_of_[i] = k;
    ++bucket_size_[k];
    op_.add_row_to(i, gval_[i], w_[k]);
    if (p_linear_ok_)
      p_exact_ += std::exp(lambda_ * (zval_[i] - 1)) + std::exp(-lambda_ * (zval_[i] - 1));
  }

  lhat_.assign(rows, 0);
  f_.push_back(std::vector<double>(K_, 0.0));
  delta_.assign(rows, {kInf, -kInf});
  entry_bucket_.assign(rows, -1);
  hi_.assign(K_, {});
  lo_.assign(K_, {});
  for (int i = 0; i < rows; ++i) update_delta(i);
}

void GradientMaintainer::erase_threshold_entry(int i) {
  int k = entry_bucket_[i];
  if (k < 0) return;
  auto hit = hi_[k].find({delta_[i][0], i});
  if (hit != hi_[k].end()) hi_[k].erase(hit);
  auto lit = lo_[k].find({delta_[i][1], i});
  if (lit != lo_[k].end()) lo_[k].erase(lit);
  entry_bucket_[i] = -1;
}

void GradientMaintainer::update_delta(int i) {
  erase_threshold_entry(i);
  int k = bucket_of_[i];
  double band = gval_[i] != 0.0 ? std::fabs(eps_ * xbar_[i] / (10.0 * gval_[i])) : kInf;
  double base = f_.back()[k];
  delta_[i][0] = band == kInf ? kInf : base + band;
  delta_[i][1] = band == kInf ? -kInf : base - band;
  if (band != kInf) {
    hi_[k].insert({delta_[i][0], i});
    lo_[k].insert({delta_[i][1], i});
    entry_bucket_[i] = k;
  }
}

void GradientMaintainer::compute_x(int i, double hv) {
  int k = bucket_of_[i];
  xbar_[i] += gval_[i] * (f_[t_][k] - f_[lhat_[i]][k]) + hv;
  lhat_[i] = t_;
}

void GradientMaintainer::refresh(int i, double hv) {
  compute_x(i, hv);
  update_delta(i);
}

void GradientMaintainer::update(int i, double a, double c) {
  if (i < 0 || i >= op_.rows()) throw std::invalid_argument("GradientMaintainer::update: index");
  if (pending_product_)
    throw std::logic_error("GradientMaintainer::update between query_product and query_sum");
  int knew = bucket_index(c);  // validates range before any mutation
  compute_x(i, 0.0);
  pending_changed_.insert(i);

  int kold = bucket_of_[i];
  if (p_linear_ok_)
    p_exact_ += std::exp(lambda_ * (c - 1)) + std::exp(-lambda_ * (c - 1)) -
                (std::exp(lambda_ * (zval_[i] - 1)) + std::exp(-lambda_ * (zval_[i] - 1)));
  op_.add_row_to(i, -gval_[i], w_[kold]);
  --bucket_size_[kold];
  gval_[i] = a;
  zval_[i] = c;
  bucket_of_[i] = knew;
  ++bucket_size_[knew];
  op_.add_row_to(i, a, w_[knew]);
  update_delta(i);
}

Vec GradientMaintainer::query_product() {
  // Stable normalized gradient per bucket: phi'(v) = lambda(e^{a} - e^{-a})
  // for a = lambda(v-1); the common factor lambda e^{A} cancels in u.
  double amax = 0;
  for (int k = 0; k < K_; ++k)
    if (bucket_size_[k] > 0)
      amax = std::max(amax, std::fabs(lambda_ * (0.5 + k * grid_ - 1.0)));
  std::vector<double> tval(K_, 0.0);
  double nrm2 = 0;
  for (int k = 0; k < K_; ++k) {
    if (bucket_size_[k] == 0) continue;
    double a = lambda_ * (0.5 + k * grid_ - 1.0);
    tval[k] = std::exp(a - amax) - std::exp(-a - amax);
    nrm2 += static_cast<double>(bucket_size_[k]) * tval[k] * tval[k];
  }
  s_used_.assign(K_, 0.0);
  Vec out(op_.cols(), 0.0);
  if (nrm2 > 0) {
    double nrm = std::sqrt(nrm2);
    for (int k = 0; k < K_; ++k) {
      if (bucket_size_[k] == 0 || tval[k] == 0.0) continue;
      s_used_[k] = tval[k] / nrm;
      axpy(s_used_[k], w_[k], out);
    }
  }
  pending_product_ = true;
  return out;
}

GradientMaintainer::SumResult GradientMaintainer::query_sum(
    const std::vector<std::pair<int, double>>& h) {
  if (!pending_product_)
    throw std::logic_error("GradientMaintainer::query_sum: no preceding query_product");
  pending_product_ = false;
  ++t_;
  std::vector<double> row = f_.back();
  for (int k = 0; k < K_; ++k) row[k] += s_used_[k];
  f_.push_back(std::move(row));

  std::set<int> changed(std::move(pending_changed_));
  pending_changed_.clear();
  for (auto [i, hv] : h) {
    if (i < 0 || i >= op_.rows()) throw std::invalid_argument("query_sum: index out of range");
    refresh(i, hv);
    changed.insert(i);
  }
  const std::vector<double>& fc = f_.back();
  for (int k = 0; k < K_; ++k) {
    while (!hi_[k].empty() && fc[k] > hi_[k].begin()->first) {
      int i = hi_[k].begin()->second;
      refresh(i, 0.0);
      changed.insert(i);
    }
    while (!lo_[k].empty() && fc[k] < lo_[k].rbegin()->first) {
      int i = lo_[k].rbegin()->second;
      refresh(i, 0.0);
      changed.insert(i);
    }
  }
  return {&xbar_, std::vector<int>(changed.begin(), changed.end())};
}

Vec GradientMaintainer::compute_exact_sum() {
  for (int i = 0; i < op_.rows(); ++i)
    if (lhat_[i] < t_) refresh(i, 0.0);
  return xbar_;
}

double GradientMaintainer::potential() const {
  double p = 0;
  for (int k = 0; k < K_; ++k) {
    if (bucket_size_[k] == 0) continue;
    double a = lambda_ * (0.5 + k * grid_ - 1.0);
    p += bucket_size_[k] * (std::exp(a) + std::exp(-a));
  }
  return p;
}

double GradientMaintainer::potential_log() const {
  double amax = 0;
  for (int k = 0; k < K_; ++k)
    if (bucket_size_[k] > 0)
      amax = std::max(amax, std::fabs(lambda_ * (0.5 + k * grid_ - 1.0)));
  double s = 0;
  for (int k = 0; k < K_; ++k) {
    if (bucket_size_[k] == 0) continue;
    double a = lambda_ * (0.5 + k * grid_ - 1.0);
    s += bucket_size_[k] * (std::exp(a - amax) + std::exp(-a - amax));
  }
  return s > 0 ? amax + std::log(s) : -kInf;
}

double GradientMaintainer::zbar_max_dev() const {
  double d = 0;
  for (int k = 0; k < K_; ++k)
    if (bucket_size_[k] > 0) d = std::max(d, std::fabs(0.5 + k * grid_ - 1.0));
  return d;
}

}  // namespace bmx
