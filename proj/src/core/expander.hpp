#pragma once

#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "core/graph.hpp"
#include "core/vecops.hpp"

namespace bmx {

constexpr int kZeroLevel = std::numeric_limits<int>::min();

// Bucket level k for g in [2^k, 2^{k+1}); kZeroLevel for g = 0.
int weight_level(double g);

// A certified phi-expander piece: the subgraph induced by a subset of one
// bucket's edges (isolated nodes removed), with its unweighted degree table
// and the lambda_2 estimate recorded at certification time.
struct ExpanderPiece {
  int level = 0;
  std::vector<int> edges;                            // global edge ids
  std::vector<int> nodes;                            // global node ids, sorted
  std::vector<double> deg;                           // per local node
  std::vector<std::vector<std::pair<int, int>>> adj;  // local: (edge id, local other)
  double lambda2 = 0.0;                              // certification record
  long long cert_stamp = 0;

  int local_of(int global_node) const;
  double volume() const;
};

// Partition of each weight bucket's edges into certified phi-expander
// pieces, maintained under scale() by isolating dirty edges as singleton
// pieces and re-decomposing a bucket from scratch once its dirty count
// exceeds max(32, |bucket|/2).
class ExpanderDecomposition {
 public:
  ExpanderDecomposition(const IncidenceGraph* g, Vec g_scale, double phi);

  // Updates g_e <- s. Returns the edges whose piece assignment changed.
  std::vector<int> scale(int e, double s);

  double phi() const { return phi_; }
  const Vec& scales() const { return gval_; }
  const IncidenceGraph& graph() const { return *g_; }

  // Piece enumeration; pointers are invalidated by the next scale().
  std::vector<const ExpanderPiece*> pieces() const;
  const ExpanderPiece* piece_of(int e) const;  // nullptr for zero-weight edges

  // Fresh estimate of lambda_2 of the piece's normalized Laplacian via
  // inverse power iteration with deflation of D^{1/2} 1.
  static double estimate_lambda2(const ExpanderPiece& p);

  // true iff estimated lambda_2 >= phi^2/2 - 1e-6.
  static bool certify(const ExpanderPiece& p, double phi);

  // Diagnostics (not asserted anywhere).
  long long total_piece_nodes() const;
  long long rebuild_count() const { return rebuilds_; }

 private:
  struct Bucket {
    std::vector<std::unique_ptr<ExpanderPiece>> pieces;
    int edge_count = 0;
    int dirty = 0;
  };

  std::unique_ptr<ExpanderPiece> make_piece(int level, std::vector<int> edge_ids) const;
  void decompose_into(int level, const std::vector<int>& edge_ids,
                      std::vector<std::unique_ptr<ExpanderPiece>>& out) const;
  void rebuild_bucket(int level, std::vector<int>& changed);
  void attach(Bucket& b, std::unique_ptr<ExpanderPiece> p);
  void detach_edge_from_piece(int e, std::vector<int>& changed);

  const IncidenceGraph* g_;
  double phi_;
  Vec gval_;
  std::map<int, Bucket> buckets_;
  std::vector<ExpanderPiece*> loc_;  // per edge; nullptr when zero weight
  long long stamp_ = 0;
  long long rebuilds_ = 0;
};

}  // namespace bmx
