#include "core/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/oracles.hpp"
#include "core/sdd.hpp"

namespace bmx {

long long MatchingInstance::weight_bound() const {
  long long w = 1;
  for (long long bv : b) w = std::max(w, std::llabs(bv));
  for (long long ce : c) w = std::max(w, std::llabs(ce));
  return w;
}

void MatchingInstance::validate_perfect() const {
  if (static_cast<int>(b.size()) != nU + nV)
    throw std::invalid_argument("MatchingInstance: b size mismatch");
  if (c.size() != edges.size())
    throw std::invalid_argument("MatchingInstance: cost size mismatch");
  long long su = 0, sv = 0;
  for (int u = 0; u < nU; ++u) {
    if (b[u] < 1) throw std::invalid_argument("MatchingInstance: b must be >= 1");
    su += b[u];
  }
  for (int v = 0; v < nV; ++v) {
    if (b[nU + v] < 1) throw std::invalid_argument("MatchingInstance: b must be >= 1");
    sv += b[nU + v];
  }
  if (su != sv) throw std::invalid_argument("MatchingInstance: unbalanced b");
  for (auto [u, v] : edges)
    if (u < 0 || u >= nU || v < 0 || v >= nV)
      throw std::invalid_argument("MatchingInstance: edge endpoint out of range");
}

InitialPoint initial_point(int nU, int nV, const std::vector<std::pair<int, int>>& edges,
                           const std::vector<long long>& b) {
  for (size_t i = 0; i < b.size(); ++i)
    if (b[i] < 1) throw std::invalid_argument("initial_point: b must be >= 1");
  InitialPoint out;
  out.inst = starred_flow_graph(nU, nV, edges, b);
  int n = out.inst.graph.n;
  int mb = static_cast<int>(edges.size());
  std::vector<long long> deg(nU + nV, 0);
  for (auto [u, v] : edges) {
    ++deg[u];
    ++deg[nU + v];
  }
  for (int i = 0; i < nU + nV; ++i)
    if (deg[i] >= n)
      throw std::invalid_argument("initial_point: parallel edges make deg >= n");

  int m = out.inst.graph.m();
  out.x.assign(m, Rat(0));
  for (int e = 0; e < mb; ++e) out.x[e] = Rat(1, n);
  for (int u = 0; u < nU; ++u) out.x[mb + u] = Rat(b[u]) - Rat(deg[u], n);
  for (int v = 0; v < nV; ++v) out.x[mb + nU + v] = Rat(b[nU + v]) - Rat(deg[nU + v], n);
  out.s.resize(m);
  for (int e = 0; e < m; ++e) {
    if (!(out.x[e] > 0)) throw std::logic_error("initial_point: nonpositive x");
    out.s[e] = Rat(1) / out.x[e];
  }
  out.inst.cost = out.s;  // c' = s with y = 0
  return out;
}

Vec switch_cost(const Vec& s, const Vec& c_old, const Vec& c_new, double mu, double d_inf,
                double eps) {
  if (eps <= 0 || eps > 1) throw std::invalid_argument("switch_cost: eps in (0,1] required");
  double cn = norm_inf(c_new);
  if (cn < 1) throw std::invalid_argument("switch_cost: ||c_new||_inf must be >= 1");
  if (mu < 45.0 * cn * d_inf / eps)
    throw std::invalid_argument("switch_cost: mu below 45 ||c_new||_inf ||d||_inf / eps");
  Vec out(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    out[i] = s[i] + (c_new[i] - c_old[i]);
    if (out[i] <= 0) throw std::runtime_error("switch_cost: slack left positivity");
  }
  return out;
}

std::vector<Rat> isolation_perturbation(int m, long long W, Rng& rng) {
  Rat denom(4 * BigInt(m) * BigInt(m) * BigInt(W) * BigInt(W));
  std::vector<Rat> z(m);
  for (int e = 0; e < m; ++e)
    z[e] = Rat(BigInt(rng.uniform_int(1, 2 * static_cast<long long>(m) * W))) / denom;
  return z;
}

std::vector<Rat> make_feasible(const FlowInstance& starred, int nU, int nV, const Vec& x,
                               const Vec& s, double mu, double eps_opt) {
  const IncidenceGraph& g = starred.graph;
  int n = g.n, m = g.m();
  int mb = m - nU - nV;  // bipartite edges come first
  if (mu > eps_opt / (24.0 * n))
    throw std::invalid_argument("make_feasible: mu exceeds eps/(24n)");
  MatrixOp op{&g, false};

  double cinf = 0, dinf = 0;
  for (const Rat& cv : starred.cost) cinf = std::max(cinf, std::fabs(to_double(cv)));
  for (const Rat& dv : starred.demand) dinf = std::max(dinf, std::fabs(to_double(dv)));
  double delta = eps_opt * eps_opt /
                 (12.0 * std::pow(std::max(1.0, cinf) * std::max(1.0, dinf) * m, 2));
  delta = std::min(delta, 0.49);

  Vec d = starred.demand_d();
  Vec xp = feasibility_project(op, d, x, s, delta);

  // Exact rational repair: U rows first (star edge (u,z) and outgoing
  // bipartite edges), then V rows via bipartite reductions compensated on
  // the U star edges, finally (z,v) picks up the exact remainder.
  std::vector<Rat> f(m);
  for (int e = 0; e < m; ++e) f[e] = xp[e] > 0 ? rat_of_double(xp[e]) : Rat(0);

  std::vector<std::vector<int>> out_edges(nU), in_edges(nV);
  for (int e = 0; e < mb; ++e) {
    out_edges[g.edges[e].first].push_back(e);
    in_edges[g.edges[e].second - nU].push_back(e);
  }
  auto star_u = [&](int u) { return mb + u; };
  auto star_v = [&](int v) { return mb + nU + v; };

  for (int u = 0; u < nU; ++u) {
    Rat out_sum(0);
    for (int e : out_edges[u]) out_sum += f[e];
    out_sum += f[star_u(u)];
    Rat target = -starred.demand[u];  // = b_u
    if (out_sum > target) {
      Rat surplus = out_sum - target;
      Rat take = std::min(surplus, f[star_u(u)]);
      f[star_u(u)] -= take;
      surplus -= take;
      for (int e : out_edges[u]) {
        if (surplus == 0) break;
        Rat t2 = std::min(surplus, f[e]);
        f[e] -= t2;
        surplus -= t2;
      }
    } else {
      f[star_u(u)] += target - out_sum;
    }
  }
  for (int v = 0; v < nV; ++v) {
    Rat bip_in(0);
    for (int e : in_edges[v]) bip_in += f[e];
    Rat target = starred.demand[nU + v];  // = b_v
    if (bip_in > target) {
      Rat excess = bip_in - target;
      for (int e : in_edges[v]) {
        if (excess == 0) break;
        Rat t2 = std::min(excess, f[e]);
        f[e] -= t2;
        f[star_u(g.edges[e].first)] += t2;
        excess -= t2;
      }
      f[star_v(v)] = Rat(0);
    } else {
      f[star_v(v)] = target - bip_in;
    }
  }
  return f;
}

std::optional<std::vector<Rat>> perturb_and_round(const FlowInstance& starred,
                                                  const std::vector<Rat>& f) {
  std::vector<Rat> g(f.size());
  for (size_t e = 0; e < f.size(); ++e) {
    BigInt r = rat_round(f[e]);
    if (r < 0) return std::nullopt;
    g[e] = Rat(r);
  }
  MatrixOp op{&starred.graph, false};
  std::vector<Rat> res = residual_exact(op, g, starred.demand);
  for (const Rat& rv : res)
    if (rv != 0) return std::nullopt;
  return g;
}

namespace {

struct PreparedInstance {
  MatchingInstance inst;            // deduplicated
  std::vector<int> orig_edge;       // prepared edge -> original edge id
  int orig_edge_count = 0;
};

// Parallel edges are redundant for b-matchings; keep the cheapest copy.
PreparedInstance dedupe(const MatchingInstance& in) {
  PreparedInstance out;
  out.inst.nU = in.nU;
  out.inst.nV = in.nV;
  out.inst.b = in.b;
  out.orig_edge_count = static_cast<int>(in.edges.size());
  std::vector<int> order(in.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int bi) {
    if (in.edges[a] != in.edges[bi]) return in.edges[a] < in.edges[bi];
    return in.c[a] < in.c[bi];
  });
  for (int e : order) {
    if (!out.inst.edges.empty() && out.inst.edges.back() == in.edges[e]) continue;
    out.inst.edges.push_back(in.edges[e]);
    out.inst.c.push_back(in.c[e]);
    out.orig_edge.push_back(e);
  }
  return out;
}

struct TrialOutcome {
  bool certified = false;
  std::vector<Rat> rounded;  // starred coordinates
  Rat cert_gap = Rat(0);
  Vec dual_y;
  double dual_residual = 0;
};

}  // namespace

MatchingResult solve_matching(const MatchingInstance& input, const MatchingConfig& cfg) {
  MatchingResult res;
  try {
    input.validate_perfect();
  } catch (const std::exception& e) {
    res.status = SolveStatus::Error;
    res.error = e.what();
    return res;
  }

  PreparedInstance prep = dedupe(input);
  const MatchingInstance& inst = prep.inst;
  int nU = inst.nU, nV = inst.nV;
  int mb = static_cast<int>(inst.edges.size());

  long long W = input.weight_bound();
  long long cinf = 0, binf = 0;
  BigInt bnorm1 = 0;
  for (long long bv : inst.b) {
    bnorm1 += bv;
    binf = std::max(binf, bv);
  }
  for (long long ce : inst.c) cinf = std::max(cinf, std::llabs(ce));
  // Star edges cost ||b||_1 ||c||_inf + 1; the +1 keeps the infeasibility
  // threshold strict for all-zero-cost instances.
  BigInt star_cost = bnorm1 * cinf + 1;

  InitialPoint ip;
  try {
    ip = initial_point(nU, nV, inst.edges, inst.b);
  } catch (const std::exception& e) {
    res.status = SolveStatus::Error;
    res.error = e.what();
    return res;
  }
  FlowInstance starred = ip.inst;  // cost = c' for now
  const IncidenceGraph& g = starred.graph;
  int m = g.m(), n = g.n;
  MatrixOp op{&g, false};
  Vec d = starred.demand_d();

  // c'' on the starred graph: original costs + expensive star edges.
  std::vector<Rat> c2(m);
  for (int e = 0; e < mb; ++e) c2[e] = Rat(inst.c[e]);
  for (int e = mb; e < m; ++e) c2[e] = Rat(star_cost);

  Vec cprime_d(m), x0(m), s0(m);
  for (int e = 0; e < m; ++e) {
    cprime_d[e] = to_double(starred.cost[e]);
    x0[e] = to_double(ip.x[e]);
    s0[e] = to_double(ip.s[e]);
  }

  IpmParams prm = cfg.ipm;
  double eps = prm.eps;
  double c2inf = to_double(Rat(star_cost)) + 1.0;  // perturbations stay below 1
  double mu_big = 45.0 * c2inf * static_cast<double>(binf) / eps;

  Rng rng(cfg.seed);
  PathFollowResult up =
      path_following(op, d, x0, s0, 1.0, mu_big, prm, rng, cfg.trace, {});
  res.iterations += up.iterations;
  res.phase_retries += up.phase_retries;
  if (!up.ok) {
    res.status = SolveStatus::Error;
    res.error = "ascent failed: " + up.error;
    return res;
  }

  int trials = cfg.trials > 0
                   ? cfg.trials
                   : static_cast<int>(std::ceil(8.0 * std::log(std::max(n, 3))));

  double mu_floor = 1.0 / (24.0 * n * 12.0 * std::pow(static_cast<double>(m), 2) *
                           std::pow(static_cast<double>(binf) * (c2inf + 1.0), 3));
  mu_floor = std::max(mu_floor, 1e-300);

  std::optional<TrialOutcome> best;
  for (int trial = 0; trial < trials && !best; ++trial) {
    Rng trial_rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 0x100 + trial);
    std::vector<Rat> z = isolation_perturbation(m, W, trial_rng);
    std::vector<Rat> ct(m);
    Vec ct_d(m);
    for (int e = 0; e < m; ++e) {
      ct[e] = c2[e] + z[e];
      ct_d[e] = to_double(ct[e]);
    }

    Vec s_sw;
    try {
      s_sw = switch_cost(up.s, cprime_d, ct_d, mu_big, static_cast<double>(binf), eps);
    } catch (const std::exception& e) {
      res.status = SolveStatus::Error;
      res.error = std::string("switch_cost: ") + e.what();
      return res;
    }

    TrialOutcome outcome;
    auto attempt = [&](const Vec& x, const Vec& s, double mu) -> bool {
      if (mu * m > 0.05) return false;
      std::vector<Rat> f;
      try {
        f = make_feasible(starred, nU, nV, x, s, mu, 24.0 * n * mu * 1.0001);
      } catch (const std::exception&) {
        return false;
      }
      auto rounded = perturb_and_round(starred, f);
      if (!rounded) return false;
      // Dual certificate: y from one least-squares fit, slack made exactly
      // rational, gap bounded using congestion <= ||b||_inf.
      Vec target(m);
      for (int e = 0; e < m; ++e) target[e] = ct_d[e] - s[e];
      Vec y = oracle::dense_least_squares(op, target);
      Vec ay = op.apply(y);
      double resid2 = 0, tnorm = 0;
      for (int e = 0; e < m; ++e) {
        resid2 += (target[e] - ay[e]) * (target[e] - ay[e]);
        tnorm += target[e] * target[e];
      }
      std::vector<Rat> yr(n), shat(m);
      for (int v = 0; v < n; ++v) yr[v] = rat_of_double(y[v]);
      Rat lb(0);
      for (int v = 0; v < n; ++v) lb += starred.demand[v] * yr[v];
      for (int e = 0; e < m; ++e) {
        Rat sv = ct[e] - (yr[g.edges[e].second] - yr[g.edges[e].first]);
        if (sv < 0) lb += sv * Rat(binf);
      }
      Rat obj(0);
      for (int e = 0; e < m; ++e) obj += ct[e] * (*rounded)[e];
      Rat gap = obj - lb;
      if (gap < Rat(1, 2)) {
        outcome.certified = true;
        outcome.rounded = std::move(*rounded);
        outcome.cert_gap = gap;
        outcome.dual_y = std::move(y);
        outcome.dual_residual = tnorm > 0 ? std::sqrt(resid2 / tnorm) : 0.0;
        return true;
      }
      return false;
    };

    PathFollowResult down = path_following(
        op, d, up.x, s_sw, mu_big, mu_floor, prm, trial_rng, cfg.trace,
        [&](const Vec& x, const Vec& s, double mu) { return attempt(x, s, mu); });
    res.iterations += down.iterations;
    res.phase_retries += down.phase_retries;
    res.trials_used = trial + 1;
    if (!down.ok) continue;  // retry with a fresh perturbation
    if (!outcome.certified) {
      // Reached the floor; final repair and rounding attempt.
      attempt(down.x, down.s, down.mu);
    }
    if (outcome.certified) best = std::move(outcome);
  }

  if (!best) {
    res.status = SolveStatus::TrialsExhausted;
    res.error = "no rounding trial produced a certified optimal flow";
    return res;
  }

  // Star usage means no perfect b-matching exists.
  for (int e = mb; e < m; ++e)
    if (best->rounded[e] != 0) {
      res.status = SolveStatus::Infeasible;
      res.certified = true;
      res.certificate_gap = best->cert_gap;
      return res;
    }

  res.status = SolveStatus::Optimal;
  res.certified = true;
  res.certificate_gap = best->cert_gap;
  res.dual_y = best->dual_y;
  res.dual_residual = best->dual_residual;
  res.flow.assign(prep.orig_edge_count, 0);
  res.objective = Rat(0);
  for (int e = 0; e < mb; ++e) {
    BigInt val = rat_num(best->rounded[e]);
    long long vi = val.convert_to<long long>();
    res.flow[prep.orig_edge[e]] = vi;
    res.objective += Rat(inst.c[e]) * Rat(vi);
  }
  return res;
}

FractionalSolve solve_flow_fractional(const MatchingInstance& input, const Rat& gap_target,
                                      const MatchingConfig& cfg) {
  FractionalSolve out;
  try {
    input.validate_perfect();
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  if (!(gap_target > 0)) {
    out.error = "gap_target must be positive";
    return out;
  }

  PreparedInstance prep = dedupe(input);
  const MatchingInstance& inst = prep.inst;
  int nU = inst.nU, nV = inst.nV;
  int mb = static_cast<int>(inst.edges.size());
  out.bipartite_edges = mb;

  long long cinf = 0, binf = 0;
  BigInt bnorm1 = 0;
  for (long long bv : inst.b) {
    bnorm1 += bv;
    binf = std::max(binf, bv);
  }
  for (long long ce : inst.c) cinf = std::max(cinf, std::llabs(ce));
  BigInt star_cost = bnorm1 * cinf + 1;

  InitialPoint ip;
  try {
    ip = initial_point(nU, nV, inst.edges, inst.b);
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  FlowInstance starred = ip.inst;
  const IncidenceGraph& g = starred.graph;
  int m = g.m(), n = g.n;
  MatrixOp op{&g, false};
  Vec d = starred.demand_d();

  std::vector<Rat> c2(m);
  for (int e = 0; e < mb; ++e) c2[e] = Rat(inst.c[e]);
  for (int e = mb; e < m; ++e) c2[e] = Rat(star_cost);
  Vec c2_d(m), cprime_d(m), x0(m), s0(m);
  for (int e = 0; e < m; ++e) {
    c2_d[e] = to_double(c2[e]);
    cprime_d[e] = to_double(starred.cost[e]);
    x0[e] = to_double(ip.x[e]);
    s0[e] = to_double(ip.s[e]);
  }

  IpmParams prm = cfg.ipm;
  double eps = prm.eps;
  double mu_big = 45.0 * to_double(Rat(star_cost)) * static_cast<double>(binf) / eps;
  Rng rng(cfg.seed);
  PathFollowResult up = path_following(op, d, x0, s0, 1.0, mu_big, prm, rng, cfg.trace, {});
  out.iterations += up.iterations;
  if (!up.ok) {
    out.error = "ascent failed: " + up.error;
    return out;
  }
  Vec s_sw;
  try {
    s_sw = switch_cost(up.s, cprime_d, c2_d, mu_big, static_cast<double>(binf), eps);
  } catch (const std::exception& e) {
    out.error = std::string("switch_cost: ") + e.what();
    return out;
  }

  double target_d = std::max(to_double(gap_target), 1e-280);
  double mu_floor = std::max(target_d / (64.0 * m * n), 1e-295);
  bool certified = false;
  auto attempt = [&](const Vec& x, const Vec& s, double mu) -> bool {
    if (mu * m > 4.0 * target_d) return false;
    std::vector<Rat> f;
    try {
      f = make_feasible(starred, nU, nV, x, s, mu, 24.0 * n * mu * 1.0001);
    } catch (const std::exception&) {
      return false;
    }
    Vec target(m);
    for (int e = 0; e < m; ++e) target[e] = c2_d[e] - s[e];
    Vec y = oracle::dense_least_squares(op, target);
    std::vector<Rat> yr(n);
    for (int v = 0; v < n; ++v) yr[v] = rat_of_double(y[v]);
    Rat lb(0);
    for (int v = 0; v < n; ++v) lb += starred.demand[v] * yr[v];
    for (int e = 0; e < m; ++e) {
      Rat sv = c2[e] - (yr[g.edges[e].second] - yr[g.edges[e].first]);
      if (sv < 0) lb += sv * Rat(binf);
    }
    Rat cost(0);
    for (int e = 0; e < m; ++e) cost += c2[e] * f[e];
    Rat gap = cost - lb;
    if (gap <= gap_target) {
      certified = true;
      out.f = std::move(f);
      out.cost = cost;
      out.gap = gap;
      return true;
    }
    return false;
  };
  PathFollowResult down = path_following(
      op, d, up.x, s_sw, mu_big, mu_floor, prm, rng, cfg.trace,
      [&](const Vec& x, const Vec& s, double mu) { return attempt(x, s, mu); });
  out.iterations += down.iterations;
  if (!down.ok) {
    out.error = "descent failed: " + down.error;
    return out;
  }
  if (!certified) attempt(down.x, down.s, down.mu);
  if (!certified) {
    out.error = "could not certify the requested duality gap";
    return out;
  }
  out.star_mass = Rat(0);
  for (int e = mb; e < m; ++e) out.star_mass += out.f[e];
  out.edge_origin = prep.orig_edge;
  out.ok = true;
  return out;
}

}  // namespace bmx
