#include "core/ipm.hpp"

#include <algorithm>
#include <cmath>

namespace bmx {

double IpmParams::lambda(int m) const {
  if (mode == IpmMode::Paper) return 36.0 / eps * std::log(240.0 * m / (eps * eps));
  return c_lambda / eps;
}

double IpmParams::gamma(int m) const {
  if (mode == IpmMode::Paper) return eps / (100.0 * lambda(m));
  return c_gamma * eps;
}

double IpmParams::r(int m) const {
  double g = gamma(m);
  if (mode == IpmMode::Paper) return eps * g / std::sqrt(static_cast<double>(m));
  return c_r * g / std::sqrt(static_cast<double>(m));
}

void IpmParams::validate(int m) const {
  (void)m;
  if (eps <= 0) throw std::invalid_argument("IpmParams: eps must be positive");
  if (mode == IpmMode::Paper && eps > 1.0 / 80)
    throw std::invalid_argument("IpmParams: paper mode requires eps <= 1/80");
  if (mode != IpmMode::Paper && eps > 0.5)
    throw std::invalid_argument("IpmParams: eps too large");
}

double phi_potential(const Vec& v, double lambda) {
  double p = 0;
  for (double x : v) {
    double a = lambda * (x - 1);
    if (std::fabs(a) > 500) {
      // Log-domain guard: the result may round to inf, but never to NaN.
      p += std::exp(std::min(std::fabs(a), 709.0));
      p += std::exp(-std::fabs(a));
    } else {
      p += std::exp(a) + std::exp(-a);
    }
  }
  return p;
}

double phi_potential_log(const Vec& v, double lambda) {
  double amax = 0;
  for (double x : v) amax = std::max(amax, std::fabs(lambda * (x - 1)));
  double s = 0;
  for (double x : v) {
    double a = lambda * (x - 1);
    s += std::exp(a - amax) + std::exp(-a - amax);
  }
  return amax + std::log(s);
}

Vec phi_gradient(const Vec& v, double lambda) {
  Vec g(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    double a = lambda * (v[i] - 1);
    if (std::fabs(a) > 500) {
      double mag = std::exp(std::min(std::fabs(a), 709.0));
      g[i] = lambda * (a > 0 ? mag : -mag);
    } else {
      g[i] = lambda * (std::exp(a) - std::exp(-a));
    }
  }
  return g;
}

SparseDiag sample_primal(double K, HeavyHitter& hh_sigma, HeavyHitter& hh_s, const Vec& h,
                         const IpmParams& prm, int m, Rng& rng) {
  double gamma = prm.gamma(m), r = prm.r(m);
  double Ksig = 3.0 * prm.sample_C * std::log(m / (prm.eps * r)) / (gamma * gamma);
  double phi = hh_s.phi();
  double Kv = 3.0 * K * std::sqrt(static_cast<double>(m)) * 16.0 / (phi * phi);
  double w_prob = std::min(3.0 * K / std::sqrt(static_cast<double>(m)), 1.0);

  std::vector<int> Iu = hh_sigma.leverage_score_sample(Ksig, rng);
  std::vector<int> Iv = hh_s.sample(h, Kv, rng);
  std::vector<int> I;
  I.reserve(Iu.size() + Iv.size() + 16);
  I.insert(I.end(), Iu.begin(), Iu.end());
  I.insert(I.end(), Iv.begin(), Iv.end());
  for (int i = 0; i < m; ++i)
    if (rng.bernoulli(w_prob)) I.push_back(i);
  std::sort(I.begin(), I.end());
  I.erase(std::unique(I.begin(), I.end()), I.end());

  Vec u = hh_sigma.leverage_score_bound(Ksig, I);
  Vec v = hh_s.probability(I, h, Kv);
  SparseDiag R;
  R.reserve(I.size());
  for (size_t idx = 0; idx < I.size(); ++idx) {
    double union_prob = 1 - (1 - u[idx]) * (1 - v[idx]) * (1 - w_prob);
    double q = std::min({1.0, u[idx] + v[idx] + w_prob, union_prob});
    if (q <= 0) continue;
    // Alg-4 acceptance ratio, clamped to a valid probability; the resulting
    // exact inclusion probability is q, and R_ii = 1/q keeps E[R] = I.
    double accept = std::min(1.0, q / union_prob);
    if (rng.bernoulli(accept)) R.push_back({I[idx], 1.0 / q});
  }
  return R;
}

Vec sample_primal_law(double K, const HeavyHitter& hh_sigma, const HeavyHitter& hh_s,
                      const Vec& h, const IpmParams& prm, int m,
                      const std::vector<int>& rows) {
  double gamma = prm.gamma(m), r = prm.r(m);
  double Ksig = 3.0 * prm.sample_C * std::log(m / (prm.eps * r)) / (gamma * gamma);
  double phi = hh_s.phi();
  double Kv = 3.0 * K * std::sqrt(static_cast<double>(m)) * 16.0 / (phi * phi);
  double w_prob = std::min(3.0 * K / std::sqrt(static_cast<double>(m)), 1.0);
  Vec u = hh_sigma.leverage_score_bound(Ksig, rows);
  Vec v = hh_s.probability(rows, h, Kv);
  Vec q(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    double union_prob = 1 - (1 - u[i]) * (1 - v[i]) * (1 - w_prob);
    q[i] = std::min({1.0, u[i] + v[i] + w_prob, union_prob});
  }
  return q;
}

IpmState::IpmState(MatrixOp op, Vec b, const Vec& x0, const Vec& s0, double mu0,
                   const IpmParams& prm, Rng* rng)
    : op_(op), b_(std::move(b)), m_(op.rows()), n_(op.cols()), prm_(prm), rng_(rng) {
  prm_.validate(m_);
  lambda_ = prm_.lambda(m_);
  gamma_ = prm_.gamma(m_);
  check_size(x0, m_, "IpmState x0");
  check_size(s0, m_, "IpmState s0");
  for (int i = 0; i < m_; ++i)
    if (x0[i] <= 0 || s0[i] <= 0) throw std::invalid_argument("IpmState: x, s must be positive");
  mu_ = mubar_ = mu0;
  xbar_ = x0;
  sbar_ = s0;
  delta_ = residual(op_, x0, b_);

  Vec g0(m_), z0(m_), inv_s(m_), sig_scale(m_);
  for (int i = 0; i < m_; ++i) {
    g0[i] = -gamma_ * xbar_[i];
    z0[i] = xbar_[i] * sbar_[i] / mubar_;
    inv_s[i] = 1.0 / sbar_[i];
    sig_scale[i] = std::sqrt(xbar_[i] / sbar_[i]);
  }
  Dx_ = std::make_unique<GradientMaintainer>(op_, x0, g0, z0, gamma_ / 16, lambda_);
  Ds_ = std::make_unique<DualMaintainer>(op_, s0, gamma_ / 16, prm_.phi, prm_.dual_engine);
  hh_s_ = std::make_unique<HeavyHitter>(op_, inv_s, prm_.phi);
  hh_sigma_ = std::make_unique<HeavyHitter>(op_, sig_scale, prm_.phi);
  hh_s_pushed_ = inv_s;
  hh_sig_pushed_ = sig_scale;
}

double IpmState::infeasibility_estimate(double acc) const {
  WeightedSystem sys;
  sys.graph = op_.g;
  sys.weights.resize(op_.g->m());
  for (int e = 0; e < op_.g->m(); ++e) sys.weights[e] = xbar_[e] / sbar_[e];
  if (op_.with_identity) {
    sys.diag_extra.resize(n_);
    for (int v = 0; v < n_; ++v) sys.diag_extra[v] = xbar_[op_.g->m() + v] / sbar_[op_.g->m() + v];
  }
  SddSolver solver(sys);
  return solver.pinv_norm(delta_, acc);
}

void IpmState::short_step(double mu_new, StepReport* rep) {
  if (mu_new <= 0) throw std::invalid_argument("short_step: mu_new must be positive");
  bool exact_mode = prm_.mode == IpmMode::ExactStep;

  // Refresh mubar and the z coordinates when mu drifted by gamma/8.
  if (std::fabs(std::log(mubar_ / mu_new)) > gamma_ / 8) {
    mubar_ = mu_new;
    if (rep) rep->mu_refresh = true;
    for (int i = 0; i < m_; ++i) {
      double z = xbar_[i] * sbar_[i] / mubar_;
      if (z < 0.5 || z > 2.0) throw StepError("short_step: z left [0.5,2] on mu refresh");
      Dx_->update(i, -gamma_ * xbar_[i], z);
    }
  }

  // Sparsifier for H ~=_gamma A^T Xbar Sbar^-1 A. At desk scale the leverage
  // sample usually covers most rows; fall back to the exact weights then.
  WeightedSystem sys;
  sys.graph = op_.g;
  sys.weights.assign(op_.g->m(), 0.0);
  if (op_.with_identity) sys.diag_extra.assign(n_, 0.0);
  auto put_weight = [&](int row, double w) {
    if (row < op_.g->m())
      sys.weights[row] = w;
    else
      sys.diag_extra[row - op_.g->m()] = w;
  };
  bool sparsified = false;
  if (!exact_mode) {
    double Klev = prm_.sample_C * std::log(std::max(m_, 2)) / (gamma_ * gamma_ / 4);
    std::vector<int> Ilev = hh_sigma_->leverage_score_sample(Klev, *rng_);
    if (static_cast<int>(Ilev.size()) < m_ / 2) {
      Vec p = hh_sigma_->leverage_score_bound(Klev, Ilev);
      for (size_t i = 0; i < Ilev.size(); ++i)
        put_weight(Ilev[i], (xbar_[Ilev[i]] / sbar_[Ilev[i]]) / p[i]);
      sparsified = true;
    }
  }
  if (!sparsified)
    for (int i = 0; i < m_; ++i) put_weight(i, xbar_[i] / sbar_[i]);

  SddSolver solver(sys);
  double solve_acc = exact_mode ? 1e-12 : gamma_ / 2;

  // Step direction and the two projected systems.
  Vec hq = Dx_->query_product();  // A^T Xbar g, g = -gamma grad Phi/||grad Phi||
  Vec rhs(n_);
  for (int v = 0; v < n_; ++v) rhs[v] = hq[v] + delta_[v];
  // On any failure from here on the state is inconsistent and must be
  // discarded (path_following rebuilds from its phase snapshot).
  Vec hpp, hdual;
  try {
    hpp = solver.solve(rhs, solve_acc);
    hdual = solver.solve(hq, solve_acc);
  } catch (const std::exception& e) {
    throw StepError(std::string("short_step: solver failed: ") + e.what());
  }

  // Sample rows of delta_r = Sbar^-1 A h''.
  SparseDiag R;
  if (exact_mode) {
    R.reserve(m_);
    for (int i = 0; i < m_; ++i) R.push_back({i, 1.0});
  } else {
    R = sample_primal(1.0, *hh_sigma_, *hh_s_, hpp, prm_, m_, *rng_);
  }

  std::vector<std::pair<int, double>> hx;
  hx.reserve(R.size());
  for (auto [i, rii] : R) {
    // -R_ii * xbar_i/sbar_i * (A h'')_i
    double v = -rii * (xbar_[i] / sbar_[i]) * op_.row_apply(i, hpp);
    if (v != 0.0) hx.push_back({i, v});
  }

  if (rep) {
    rep->nnz_R = static_cast<long long>(R.size());
    rep->sampled_R = R;
  }
  if (rep && rep->want_norms) {
    Vec hc = solver.solve(delta_, solve_acc);
    rep->delta_r.assign(m_, 0.0);
    double np2 = 0, nc2 = 0;
    for (int i = 0; i < m_; ++i) {
      double dp_i = op_.row_apply(i, hdual) / sbar_[i];
      double dc_i = op_.row_apply(i, hc) / sbar_[i];
      rep->delta_r[i] = op_.row_apply(i, hpp) / sbar_[i];
      np2 += dp_i * dp_i;
      nc2 += dc_i * dc_i;
    }
    rep->norm_delta_p = std::sqrt(np2);
    rep->norm_delta_c = std::sqrt(nc2);
  }

  auto xres = Dx_->query_sum(hx);
  auto sres = Ds_->add(hdual);

  // Delta <- Delta + A^T delta_x = Delta + hq + sum_i hx_i a_i.
  for (int v = 0; v < n_; ++v) delta_[v] += hq[v];
  for (auto [i, val] : hx) op_.add_row_to(i, val, delta_);

  // Positivity and approximation refresh for the touched coordinates.
  const Vec& xt = *xres.xbar;
  const Vec& st = *sres.vbar;
  std::vector<int> touched;
  touched.reserve(xres.changed.size() + sres.changed.size());
  touched.insert(touched.end(), xres.changed.begin(), xres.changed.end());
  touched.insert(touched.end(), sres.changed.begin(), sres.changed.end());
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (int i : touched) {
    if (xt[i] <= 0 || st[i] <= 0) throw StepError("short_step: nonpositive iterate entry");
    bool xdrift = std::fabs(std::log(xt[i] / xbar_[i])) > gamma_ / 16;
    bool sdrift = std::fabs(std::log(st[i] / sbar_[i])) > gamma_ / 16;
    if (xdrift || sdrift) {
      xbar_[i] = xt[i];
      sbar_[i] = st[i];
      double z = xbar_[i] * sbar_[i] / mubar_;
      if (z < 0.5 || z > 2.0) throw StepError("short_step: z left [0.5,2] after step");
      Dx_->update(i, -gamma_ * xbar_[i], z);
      // The sampler scales tolerate gamma/2 staleness; pushing them lazily
      // keeps piece churn in the decompositions low.
      double inv_s = 1.0 / sbar_[i];
      double sig = std::sqrt(xbar_[i] / sbar_[i]);
      if (std::fabs(std::log(inv_s / hh_s_pushed_[i])) > gamma_ / 2) {
        hh_s_->scale(i, inv_s);
        hh_s_pushed_[i] = inv_s;
      }
      if (std::fabs(std::log(sig / hh_sig_pushed_[i])) > gamma_ / 2) {
        hh_sigma_->scale(i, sig);
        hh_sig_pushed_[i] = sig;
      }
    }
  }
  mu_ = mu_new;
}

Vec feasibility_project(const MatrixOp& op, const Vec& b, const Vec& x, const Vec& s,
                        double delta_acc) {
  if (delta_acc > 0.5) throw std::invalid_argument("feasibility_project: delta > 1/2");
  WeightedSystem sys;
  sys.graph = op.g;
  sys.weights.resize(op.g->m());
  for (int e = 0; e < op.g->m(); ++e) sys.weights[e] = x[e] / s[e];
  if (op.with_identity) {
    sys.diag_extra.resize(op.cols());
    for (int v = 0; v < op.cols(); ++v)
      sys.diag_extra[v] = x[op.g->m() + v] / s[op.g->m() + v];
  }
  Vec rhs = residual(op, x, b);
  for (double& r : rhs) r = -r;  // b - A^T x
  SddSolver solver(sys);
  Vec y = solver.solve(rhs, delta_acc / 20.0);
  Vec out = x;
  for (int i = 0; i < op.rows(); ++i) out[i] += (x[i] / s[i]) * op.row_apply(i, y);
  return out;
}

PathFollowResult path_following(MatrixOp op, const Vec& b, const Vec& x0, const Vec& s0,
                                double mu0, double mu_target, const IpmParams& prm, Rng& rng,
                                TraceSink trace, PhaseCallback phase_cb) {
  PathFollowResult out;
  int m = op.rows();
  prm.validate(m);
  double eps = prm.eps, lambda = prm.lambda(m), gamma = prm.gamma(m), r0 = prm.r(m);
  bool paper = prm.mode == IpmMode::Paper;

  if (mu0 == mu_target) {
    out.ok = true;
    out.x = x0;
    out.s = s0;
    out.mu = mu0;
    return out;
  }

  Vec snap_x = x0, snap_s = s0;
  double snap_mu = mu0;
  auto state = std::make_unique<IpmState>(op, b, snap_x, snap_s, snap_mu, prm, &rng);

  double r_eff = r0;
  long long iters = 0, retries_total = 0;
  int phase = 0, consecutive_fails = 0;
  int retries_this_phase = 0;
  double mu = mu0;

  auto p1_fail_iter = [&](double p1log) {
    if (paper) return p1log > 0.75 * lambda * eps - 1.0 / 3.0;
    return state->zbar_max_dev() > 0.72 * eps;
  };
  auto p1_fail_phase = [&](double p1log) {
    if (paper) return p1log > 0.25 * lambda * eps - 1.0 / 3.0;
    return state->zbar_max_dev() > 0.72 * eps;
  };

  bool polishing = false;
  int polish_rounds = 0;
  while (true) {
    if (mu == mu_target && !polishing) {
      if (paper || state->zbar_max_dev() <= 0.45 * eps) break;
      polishing = true;  // recenter at fixed mu until the iterate is tight
    }
    if (polishing) {
      if (state->zbar_max_dev() <= 0.30 * eps) break;
      if (++polish_rounds > 64) {
        out.error = "path_following: centering polish did not converge";
        return out;
      }
    }
    ++phase;
    long long phase_len = static_cast<long long>(std::ceil(eps / r_eff));
    phase_len = std::min(phase_len, static_cast<long long>(4e6));
    bool fail = false;
    double p1log = 0, p2 = 0;
    for (long long i = 0; i < phase_len; ++i) {
      double mu_new;
      if (mu_target < mu)
        mu_new = std::max(mu_target, (1 - r_eff) * mu);
      else
        mu_new = std::min(mu_target, (1 + r_eff) * mu);
      StepReport rep;
      try {
        state->short_step(mu_new, &rep);
      } catch (const StepError&) {
        fail = true;
        break;
      }
      mu = mu_new;
      ++iters;
      p1log = state->potential_log();
      p2 = state->infeasibility_estimate(prm.dense_p2 ? 1e-8 : 0.1);
      if (trace) {
        TraceRow row{iters, mu, state->potential_linear(), norm2(state->delta()),
                     rep.nnz_R, phase, retries_this_phase};
        trace(row);
      }
      bool p2_bad = p2 > eps * gamma * std::exp(-1.0 / 3.0) * std::sqrt(mu);
      if (p1_fail_iter(p1log) || p2_bad) {
        fail = p2_bad || p1_fail_phase(p1log);
        break;
      }
      if (mu == mu_target && !polishing) break;
    }
    if (!fail) {
      fail = p1_fail_phase(p1log) || p2 > eps * gamma * std::exp(-1.0 / 3.0) * std::sqrt(mu);
    }
    if (fail) {
      ++retries_total;
      ++retries_this_phase;
      if (++consecutive_fails >= 2) {
        r_eff = std::max(r_eff / 2, r0 / 1024);
        consecutive_fails = 0;
      }
      if (retries_this_phase > prm.max_phase_retries) {
        out.error = "path_following: phase retry cap exceeded";
        return out;
      }
      mu = snap_mu;
      state = std::make_unique<IpmState>(op, b, snap_x, snap_s, snap_mu, prm, &rng);
      continue;
    }
    retries_this_phase = 0;
    consecutive_fails = 0;
    snap_x = state->x_exact();
    snap_s = state->s_exact();
    snap_mu = mu;
    double gap = dot(snap_x, snap_s);
    out.gap_history.push_back(gap);
    if (phase_cb && phase_cb(snap_x, snap_s, mu)) break;
  }

  out.ok = true;
  out.x = state->x_exact();
  out.s = state->s_exact();
  out.mu = mu;
  out.iterations = iters;
  out.phase_retries = retries_total;
  return out;
}

}  // namespace bmx
