#pragma once

#include <memory>
#include <vector>

#include "core/expander.hpp"
#include "core/graph.hpp"
#include "core/rng.hpp"

namespace bmx {

// Large-entry detection and value-squared / leverage-score sampling for
// diag(g) * A, where A is an incidence matrix optionally extended by an
// identity block. Incidence rows go through the expander decomposition;
// identity rows are handled by direct scans.
class HeavyHitter {
 public:
  HeavyHitter(MatrixOp op, Vec g, double phi = 1.0 / 16);

  void scale(int row, double s);
  const Vec& scales() const { return g_; }
  double phi() const { return phi_; }
  const MatrixOp& op() const { return op_; }
  const ExpanderDecomposition& decomposition() const { return *decomp_; }

  // Ratio of largest to smallest nonzero entry of g (1 when none).
  double weight_ratio() const;

  // Exactly { r : |g_r (A h)_r| >= eps }, found by piece-local node scans and
  // re-checked entry by entry before returning. Sorted.
  std::vector<int> heavy_query(const Vec& h, double eps) const;

  // Independent inclusion with probability q_r >= min{K phi^2 (g_r (Ah)_r)^2
  // / (16 ||diag(g) A h||_2^2), 1}. Sorted.
  std::vector<int> sample(const Vec& h, double K, Rng& rng) const;

  // Exact inclusion probabilities of sample(h, K) for the listed rows.
  Vec probability(const std::vector<int>& rows, const Vec& h, double K) const;

  // Independent inclusion with probability >= min{K' sigma(diag(g)A)_r, 1}.
  std::vector<int> leverage_score_sample(double K, Rng& rng) const;

  // Exact inclusion probabilities of leverage_score_sample(K') for the rows.
  Vec leverage_score_bound(double K, const std::vector<int>& rows) const;

 private:
  struct SampleLaw {
    // Per piece: shifted potentials; plus the global normalizer Q.
    std::vector<std::vector<double>> shifted;
    std::vector<const ExpanderPiece*> pcs;
    double Q = 0.0;
  };
  SampleLaw sample_law(const Vec& h, double K) const;
  double node_prob(const SampleLaw& law, size_t piece_idx, int local, int level) const;

  MatrixOp op_;
  double phi_;
  Vec g_;
  std::unique_ptr<ExpanderDecomposition> decomp_;
};

}  // namespace bmx
