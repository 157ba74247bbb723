#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "core/dual_maintainer.hpp"
#include "core/gradient_maintainer.hpp"
#include "core/graph.hpp"
#include "core/heavy_hitter.hpp"
#include "core/rng.hpp"
#include "core/sdd.hpp"

namespace bmx {

enum class IpmMode { Paper, Practical, ExactStep };

struct IpmParams {
  IpmMode mode = IpmMode::Practical;
  double eps = 0.25;  // paper mode requires eps <= 1/80
  double c_lambda = 4.0;
  double c_gamma = 0.1;
  double c_r = 0.5;
  double sample_C = 4.0;  // constant in the sampling lower bound
  double phi = 1.0 / 16;
  int max_phase_retries = 64;
  bool dense_p2 = false;  // exact-weight solve for the p2 estimate
  // Inner engine of the slack maintainer; the direct scan is faster at desk
  // scale, the heavy-hitter-backed one is the composed configuration.
  DualEngine dual_engine = DualEngine::DirectScan;

  double lambda(int m) const;
  double gamma(int m) const;
  double r(int m) const;
  void validate(int m) const;
};

// Centrality potential Phi(v) = sum_i e^{lambda(v_i-1)} + e^{-lambda(v_i-1)}.
double phi_potential(const Vec& v, double lambda);
double phi_potential_log(const Vec& v, double lambda);
Vec phi_gradient(const Vec& v, double lambda);

struct StepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepReport {
  bool want_norms = false;  // set before the call to get the dense diagnostics
  double norm_delta_p = 0;
  double norm_delta_c = 0;
  long long nnz_R = 0;
  bool mu_refresh = false;
  std::vector<std::pair<int, double>> sampled_R;  // (row, R_ii)
  Vec delta_r;                                    // dense Sbar^-1 A h'' when want_norms
};

using SparseDiag = std::vector<std::pair<int, double>>;

// R_ii = 1/q_i with probability q_i, q_i >= min{1, K sqrt(m)((d_r)_i^2 /
// ||d_r||^2 + 1/m) + C sigma_i log(m/(eps r)) / gamma^2}; E[R] = I.
SparseDiag sample_primal(double K, HeavyHitter& hh_sigma, HeavyHitter& hh_s, const Vec& h,
                         const IpmParams& prm, int m, Rng& rng);
// Exact inclusion probabilities of sample_primal for the given rows.
Vec sample_primal_law(double K, const HeavyHitter& hh_sigma, const HeavyHitter& hh_s,
                      const Vec& h, const IpmParams& prm, int m,
                      const std::vector<int>& rows);

// One path-following run's state: the exact iterates live inside the
// maintenance structures; only approximations and Delta are dense here.
// The cost vector never appears below: dual feasibility is structural
// (s moves inside im(A) only), and cost switches are applied by the caller.
class IpmState {
 public:
  IpmState(MatrixOp op, Vec b, const Vec& x0, const Vec& s0, double mu0,
           const IpmParams& prm, Rng* rng);

  void short_step(double mu_new, StepReport* rep = nullptr);

  Vec x_exact() { return Dx_->compute_exact_sum(); }
  Vec s_exact() const { return Ds_->compute_exact(); }
  double mu() const { return mu_; }
  const Vec& delta() const { return delta_; }
  const Vec& xbar() const { return xbar_; }
  const Vec& sbar() const { return sbar_; }

  double potential_log() const { return Dx_->potential_log(); }
  double potential_linear() const { return Dx_->potential(); }
  double zbar_max_dev() const { return Dx_->zbar_max_dev(); }
  // ||Delta||_{(A^T X S^-1 A)^-1} estimated with approximate weights.
  double infeasibility_estimate(double acc = 0.1) const;

  const IpmParams& params() const { return prm_; }
  double gamma() const { return gamma_; }
  double lambda() const { return lambda_; }

 private:
  MatrixOp op_;
  Vec b_;
  int m_, n_;
  IpmParams prm_;
  double lambda_, gamma_;
  Rng* rng_;
  double mu_, mubar_;
  Vec xbar_, sbar_, delta_;
  Vec hh_s_pushed_, hh_sig_pushed_;  // scales last pushed into the samplers
  std::unique_ptr<GradientMaintainer> Dx_;
  std::unique_ptr<DualMaintainer> Ds_;
  std::unique_ptr<HeavyHitter> hh_s_, hh_sigma_;
};

struct PathFollowResult {
  bool ok = false;
  std::string error;
  Vec x, s;
  double mu = 0;
  long long iterations = 0;
  long long phase_retries = 0;
  std::vector<double> gap_history;  // sum x_i s_i at phase boundaries
};

struct TraceRow {
  long long iteration;
  double mu;
  double phi_zbar;
  double delta_norm2;
  long long nnz_R;
  int phase;
  int retries;
};
using TraceSink = std::function<void(const TraceRow&)>;
// Called at successful phase boundaries with the exact iterate; returning
// true stops the run early.
using PhaseCallback = std::function<bool(const Vec&, const Vec&, double)>;

PathFollowResult path_following(MatrixOp op, const Vec& b, const Vec& x0, const Vec& s0,
                                double mu0, double mu_target, const IpmParams& prm, Rng& rng,
                                TraceSink trace = {}, PhaseCallback phase_cb = {});

// x' = x + X S^-1 A H^-1 (b - A^T x) with H^-1 ~=_delta (A^T X S^-1 A)^-1.
Vec feasibility_project(const MatrixOp& op, const Vec& b, const Vec& x, const Vec& s,
                        double delta_acc);

}  // namespace bmx
