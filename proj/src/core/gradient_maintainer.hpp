#pragma once

#include <array>
#include <set>
#include <vector>

#include "core/graph.hpp"
#include "core/vecops.hpp"

namespace bmx {

// Maintains A^T G grad_Phi(zbar)/||grad_Phi(zbar)||_2 over a bucketing of z
// by the grid 0.5 + l*step (step <= eps/2, chosen so that 1.0 is a grid
// point), plus an elementwise approximation xbar of the accumulated iterate
// x^(t) = x_init + sum_l (G u^(l) + h^(l)).
class GradientMaintainer {
 public:
  GradientMaintainer(MatrixOp op, Vec x_init, Vec g, Vec z, double eps, double lambda);

  // Refreshes xbar_i, then sets g_i <- a and z_i <- c.
  void update(int i, double a, double c);

  // Returns A^T G u for u = grad_Phi(zbar)/||grad_Phi(zbar)||_2 (zero vector
  // when the gradient vanishes). Must be followed by query_sum.
  Vec query_product();

  struct SumResult {
    const Vec* xbar;
    std::vector<int> changed;
  };
  // h is sparse: (index, value) pairs.
  SumResult query_sum(const std::vector<std::pair<int, double>>& h);

  Vec compute_exact_sum();

  double potential() const;      // Phi(zbar), linear domain
  double potential_log() const;  // log Phi(zbar), safe for large lambda
  double phi_exact() const { return p_exact_; }  // running Phi(z)

  const Vec& xbar() const { return xbar_; }
  double zbar(int i) const { return 0.5 + bucket_of_[i] * grid_; }
  double z(int i) const { return zval_[i]; }
  double g(int i) const { return gval_[i]; }
  double grid_step() const { return grid_; }
  int buckets() const { return K_; }
  long long rounds() const { return t_; }
  // Largest |zbar - 1| over nonempty buckets (cheap centering certificate).
  double zbar_max_dev() const;

 private:
  void refresh(int i, double hv);   // ComputeX + UpdateDelta
  void compute_x(int i, double hv);
  void update_delta(int i);
  void erase_threshold_entry(int i);
  int bucket_index(double z) const;

  MatrixOp op_;
  double eps_, lambda_, grid_;
  int K_ = 0;
  Vec gval_, zval_;
  std::vector<int> bucket_of_;
  std::vector<long long> bucket_size_;
  std::vector<Vec> w_;  // per bucket: A^T G 1_bucket
  double p_exact_ = 0;

  Vec xbar_;
  std::vector<long long> lhat_;
  std::vector<std::vector<double>> f_;  // prefix sums of bucket step values, per round
  std::vector<std::array<double, 2>> delta_;  // [high, low]
  std::vector<int> entry_bucket_;
  std::vector<std::multiset<std::pair<double, int>>> hi_, lo_;
  long long t_ = 0;

  std::vector<double> s_used_;
  bool pending_product_ = false;
  bool p_linear_ok_ = true;
  std::set<int> pending_changed_;
};

}  // namespace bmx
