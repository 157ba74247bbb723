#pragma once

#include <memory>
#include <set>
#include <vector>

#include "core/graph.hpp"
#include "core/heavy_hitter.hpp"

namespace bmx {

// Inner engine of one dyadic level: a scaled row index answering threshold
// queries on diag(g) A f. The expander-backed heavy hitter is the default;
// the direct scan is an O(rows)-per-query stand-in with O(1) scaling that
// the IPM selects at desk scale.
class RowScaleIndex {
 public:
  virtual ~RowScaleIndex() = default;
  virtual void scale(int row, double s) = 0;
  virtual std::vector<int> heavy_query(const Vec& h, double eps) const = 0;
};

enum class DualEngine { HeavyHitterBacked, DirectScan };

// Maintains vbar ~=_eps v for v = v_init + A * sum_k h^(k) under a stream of
// add(h) calls, with one threshold index per dyadic batch size. The
// structure reinitializes itself after reset_period() adds.
class DualMaintainer {
 public:
  DualMaintainer(MatrixOp op, Vec v_init, double eps, double phi = 1.0 / 16,
                 DualEngine engine = DualEngine::HeavyHitterBacked);

  struct AddResult {
    const Vec* vbar;
    std::vector<int> changed;
  };
  AddResult add(const Vec& h);

  Vec compute_exact() const;  // v_init + A * accumulated h, O(rows)
  const Vec& approx() const { return vbar_; }
  double eps() const { return eps_; }

  long long reset_period() const { return reset_period_; }
  int levels() const { return L_ + 1; }
  long long adds_since_reset() const { return t_; }

  // t = t_0 > t_1 > ... > t_k = t_bar with t_{z+1} = t_z - 2^{l_z} and
  // 2^{l_z} | t_z; k <= 2 log2 t.
  static std::vector<long long> dyadic_chain(long long t_bar, long long t);

 private:
  bool verify_index(int i);
  void reinitialize(std::vector<int>& changed);
  double exact_coord(int i) const;

  MatrixOp op_;
  double eps_, phi_;
  DualEngine engine_;
  long long reset_period_ = 0;
  int L_ = 0;
  double thr_ = 0;
  Vec vinit_, vbar_, fhat_;
  long long t_ = 0;
  std::vector<std::unique_ptr<RowScaleIndex>> D_;
  std::vector<Vec> f_;
  std::vector<std::set<int>> F_;
};

}  // namespace bmx
