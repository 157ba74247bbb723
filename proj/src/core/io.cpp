#include "core/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

namespace bmx::io {

namespace {

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

long long to_ll(const std::string& s, const std::string& path, int line) {
  try {
    size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(path, line, "malformed integer '" + s + "'");
  }
}

}  // namespace

DimacsInstance parse_dimacs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  DimacsInstance out;
  int n = -1;
  long long m = -1;
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    auto tok = tokens(line);
    if (tok.empty() || tok[0] == "c") continue;
    if (tok[0] == "p") {
      if (tok.size() != 4 || tok[1] != "min") fail(path, ln, "expected 'p min <n> <m>'");
      n = static_cast<int>(to_ll(tok[2], path, ln));
      m = to_ll(tok[3], path, ln);
      if (n < 0 || m < 0) fail(path, ln, "negative sizes");
      out.demand.assign(n, 0);
    } else if (tok[0] == "n") {
      if (n < 0) fail(path, ln, "node line before problem line");
      if (tok.size() != 3) fail(path, ln, "expected 'n <id> <demand>'");
      long long id = to_ll(tok[1], path, ln);
      if (id < 1 || id > n) fail(path, ln, "node id out of range");
      out.demand[id - 1] = to_ll(tok[2], path, ln);
    } else if (tok[0] == "a") {
      if (n < 0) fail(path, ln, "arc line before problem line");
      if (tok.size() != 6) fail(path, ln, "expected 'a <u> <v> <low> <cap> <cost>'");
      long long u = to_ll(tok[1], path, ln), v = to_ll(tok[2], path, ln);
      if (u < 1 || u > n || v < 1 || v > n) fail(path, ln, "arc endpoint out of range");
      if (to_ll(tok[3], path, ln) != 0) fail(path, ln, "nonzero lower bounds unsupported");
      const std::string& cap = tok[4];
      if (cap != "-1" && cap != "*" && cap != "inf")
        fail(path, ln, "capacitated arcs unsupported (use -1, * or inf)");
      edges.push_back({static_cast<int>(u - 1), static_cast<int>(v - 1)});
      out.cost.push_back(to_ll(tok[5], path, ln));
    } else {
      fail(path, ln, "unknown line type '" + tok[0] + "'");
    }
  }
  if (n < 0) throw ParseError(path + ": missing problem line");
  if (static_cast<long long>(edges.size()) != m)
    throw ParseError(path + ": arc count does not match the problem line");
  long long bal = 0;
  for (long long d : out.demand) bal += d;
  if (bal != 0) throw ParseError(path + ": demands do not sum to zero");
  out.g = build_incidence(std::move(edges), n);
  return out;
}

void write_dimacs(const std::string& path, const DimacsInstance& inst) {
  std::ofstream o(path);
  o << "p min " << inst.g.n << " " << inst.g.m() << "\n";
  for (int v = 0; v < inst.g.n; ++v)
    if (inst.demand[v] != 0) o << "n " << v + 1 << " " << inst.demand[v] << "\n";
  for (int e = 0; e < inst.g.m(); ++e)
    o << "a " << inst.g.edges[e].first + 1 << " " << inst.g.edges[e].second + 1 << " 0 -1 "
      << inst.cost[e] << "\n";
}

MatchingInstance parse_matching(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  MatchingInstance out;
  long long m = -1;
  bool have_p = false;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    auto tok = tokens(line);
    if (tok.empty() || tok[0] == "c") continue;
    if (tok[0] == "p") {
      if (tok.size() != 5 || tok[1] != "bmatch")
        fail(path, ln, "expected 'p bmatch <|U|> <|V|> <m>'");
      out.nU = static_cast<int>(to_ll(tok[2], path, ln));
      out.nV = static_cast<int>(to_ll(tok[3], path, ln));
      m = to_ll(tok[4], path, ln);
      if (out.nU < 0 || out.nV < 0 || m < 0) fail(path, ln, "negative sizes");
      out.b.assign(out.nU + out.nV, 1);
      have_p = true;
    } else if (tok[0] == "b") {
      if (!have_p) fail(path, ln, "b line before problem line");
      if (tok.size() != 4 || (tok[1] != "u" && tok[1] != "v"))
        fail(path, ln, "expected 'b <u|v> <id> <val>'");
      long long id = to_ll(tok[2], path, ln);
      int lim = tok[1] == "u" ? out.nU : out.nV;
      if (id < 1 || id > lim) fail(path, ln, "side index out of range");
      long long val = to_ll(tok[3], path, ln);
      out.b[(tok[1] == "u" ? 0 : out.nU) + id - 1] = val;
    } else if (tok[0] == "e") {
      if (!have_p) fail(path, ln, "e line before problem line");
      if (tok.size() != 4) fail(path, ln, "expected 'e <u> <v> <cost>'");
      long long u = to_ll(tok[1], path, ln), v = to_ll(tok[2], path, ln);
      if (u < 1 || u > out.nU || v < 1 || v > out.nV)
        fail(path, ln, "edge endpoint out of range");
      out.edges.push_back({static_cast<int>(u - 1), static_cast<int>(v - 1)});
      out.c.push_back(to_ll(tok[3], path, ln));
    } else {
      fail(path, ln, "unknown line type '" + tok[0] + "'");
    }
  }
  if (!have_p) throw ParseError(path + ": missing problem line");
  if (static_cast<long long>(out.edges.size()) != m)
    throw ParseError(path + ": edge count does not match the problem line");
  return out;
}

void write_matching(const std::string& path, const MatchingInstance& inst) {
  std::ofstream o(path);
  o << "p bmatch " << inst.nU << " " << inst.nV << " " << inst.edges.size() << "\n";
  for (int u = 0; u < inst.nU; ++u)
    if (inst.b[u] != 1) o << "b u " << u + 1 << " " << inst.b[u] << "\n";
  for (int v = 0; v < inst.nV; ++v)
    if (inst.b[inst.nU + v] != 1) o << "b v " << v + 1 << " " << inst.b[inst.nU + v] << "\n";
  for (size_t e = 0; e < inst.edges.size(); ++e)
    o << "e " << inst.edges[e].first + 1 << " " << inst.edges[e].second + 1 << " " << inst.c[e]
      << "\n";
}

OtInstance parse_ot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  OtInstance out;
  std::string line;
  int ln = 0;
  int n = -1, n2 = -1;
  int cost_rows = 0;
  auto parse_rats = [&](const std::vector<std::string>& tok, size_t from, size_t count) {
    std::vector<Rat> vals;
    if (tok.size() - from != count)
      fail(path, ln, "expected " + std::to_string(count) + " values");
    for (size_t i = from; i < tok.size(); ++i) {
      try {
        vals.push_back(rat_parse(tok[i]));
      } catch (const std::exception&) {
        fail(path, ln, "malformed number '" + tok[i] + "'");
      }
    }
    return vals;
  };
  int stage = 0;  // 0: header, 1: row marginals, 2: col marginals, 3+: cost rows
  while (std::getline(in, line)) {
    ++ln;
    auto tok = tokens(line);
    if (tok.empty() || tok[0] == "c") continue;
    if (stage == 0) {
      if (tok.size() != 3 || tok[0] != "ot") fail(path, ln, "expected 'ot <n> <n''>'");
      n = static_cast<int>(to_ll(tok[1], path, ln));
      n2 = static_cast<int>(to_ll(tok[2], path, ln));
      if (n < 1 || n2 < 1) fail(path, ln, "sizes must be positive");
      stage = 1;
    } else if (stage == 1) {
      out.r = parse_rats(tok, 0, n);
      stage = 2;
    } else if (stage == 2) {
      out.c = parse_rats(tok, 0, n2);
      stage = 3;
    } else {
      if (cost_rows >= n) fail(path, ln, "too many cost rows");
      out.cost.push_back(parse_rats(tok, 0, n2));
      ++cost_rows;
    }
  }
  if (stage < 3 || cost_rows != n) throw ParseError(path + ": incomplete ot instance");
  return out;
}

void write_ot(const std::string& path, const OtInstance& inst) {
  std::ofstream o(path);
  o << "ot " << inst.r.size() << " " << inst.c.size() << "\n";
  for (size_t i = 0; i < inst.r.size(); ++i) o << (i ? " " : "") << rat_to_string(inst.r[i]);
  o << "\n";
  for (size_t j = 0; j < inst.c.size(); ++j) o << (j ? " " : "") << rat_to_string(inst.c[j]);
  o << "\n";
  for (const auto& row : inst.cost) {
    for (size_t j = 0; j < row.size(); ++j) o << (j ? " " : "") << rat_to_string(row[j]);
    o << "\n";
  }
}

TraceWriter::TraceWriter(const std::string& path) {
  out_ = std::make_shared<std::ofstream>(path);
  if (!*out_) throw std::runtime_error("cannot open trace file " + path);
  json_ = path.size() > 6 && path.substr(path.size() - 6) == ".jsonl";
  if (json_) {
    *out_ << "{\"schema\":\"trace-v1\"}\n";
  } else {
    *out_ << "trace-v1\n";
    *out_ << "iteration,mu,phi_zbar,delta_norm2,nnz_R,phase,retries\n";
  }
}

TraceSink TraceWriter::sink() {
  auto out = out_;
  bool json = json_;
  return [out, json](const TraceRow& r) {
    char buf[256];
    if (json) {
      std::snprintf(buf, sizeof(buf),
                    "{\"iteration\":%lld,\"mu\":%.17g,\"phi_zbar\":%.17g,"
                    "\"delta_norm2\":%.17g,\"nnz_R\":%lld,\"phase\":%d,\"retries\":%d}\n",
                    r.iteration, r.mu, r.phi_zbar, r.delta_norm2, r.nnz_R, r.phase, r.retries);
    } else {
      std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%lld,%d,%d\n", r.iteration, r.mu,
                    r.phi_zbar, r.delta_norm2, r.nnz_R, r.phase, r.retries);
    }
    *out << buf;
  };
}

void write_matching_solution(const std::string& path, const MatchingInstance& inst,
                             const MatchingResult& res) {
  std::ofstream o(path);
  switch (res.status) {
    case SolveStatus::Optimal: o << "status optimal\n"; break;
    case SolveStatus::Infeasible: o << "status infeasible\n"; break;
    case SolveStatus::TrialsExhausted: o << "status trials-exhausted\n"; break;
    case SolveStatus::Error: o << "status error\n"; break;
  }
  if (res.status != SolveStatus::Optimal) return;
  o << "objective " << rat_to_string(res.objective) << "\n";
  o << "certificate-gap " << rat_to_string(res.certificate_gap) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", res.dual_residual);
  o << "dual-residual " << buf << "\n";
  for (size_t e = 0; e < res.flow.size(); ++e)
    if (res.flow[e] != 0)
      o << "f " << inst.edges[e].first + 1 << " " << inst.edges[e].second + 1 << " "
        << res.flow[e] << "\n";
}

void write_flow_solution(const std::string& path, const DimacsInstance& inst,
                         const TransshipmentResult& res) {
  std::ofstream o(path);
  switch (res.verdict) {
    case FlowVerdict::Optimal: o << "status optimal\n"; break;
    case FlowVerdict::Infeasible: o << "status infeasible\n"; break;
    case FlowVerdict::NegInfinite: o << "status negative-infinite\n"; break;
    case FlowVerdict::Error: o << "status error\n"; break;
  }
  if (res.verdict == FlowVerdict::NegInfinite) {
    o << "cycle";
    for (int e : res.witness_cycle) o << " " << e + 1;
    o << "\n";
    return;
  }
  if (res.verdict != FlowVerdict::Optimal) return;
  o << "objective " << rat_to_string(res.objective) << "\n";
  for (size_t e = 0; e < res.flow.size(); ++e)
    if (res.flow[e] != 0)
      o << "f " << inst.g.edges[e].first + 1 << " " << inst.g.edges[e].second + 1 << " "
        << res.flow[e] << "\n";
}

void write_sssp_solution(const std::string& path, const SsspResult& res) {
  std::ofstream o(path);
  if (res.status == SsspResult::Status::NegativeCycle) {
    o << "status negative-cycle\n";
    o << "cycle";
    for (int e : res.witness_cycle) o << " " << e + 1;
    o << "\n";
    return;
  }
  if (res.status != SsspResult::Status::Ok) {
    o << "status error\n";
    return;
  }
  o << "status ok\n";
  for (size_t v = 0; v < res.dist.size(); ++v) {
    if (!res.reachable[v]) {
      o << "d " << v + 1 << " unreachable\n";
    } else {
      o << "d " << v + 1 << " " << res.dist[v];
      if (res.parent_edge[v] >= 0) o << " via " << res.parent_edge[v] + 1;
      o << "\n";
    }
  }
}

void write_mmc_solution(const std::string& path, const MinMeanCycleResult& res) {
  std::ofstream o(path);
  if (!res.ok) {
    o << "status error\n";
    return;
  }
  o << "status ok\n";
  o << "mean " << rat_to_string(res.mean) << "\n";
  o << "cycle";
  for (int e : res.cycle_edges) o << " " << e + 1;
  o << "\n";
}

void write_ot_solution(const std::string& path, const OtResult& res) {
  std::ofstream o(path);
  if (!res.ok) {
    o << "status error\n";
    return;
  }
  o << "status ok\n";
  o << "value " << rat_to_string(res.value) << "\n";
  for (size_t i = 0; i < res.coupling.size(); ++i)
    for (size_t j = 0; j < res.coupling[i].size(); ++j)
      if (res.coupling[i][j] != 0)
        o << "x " << i + 1 << " " << j + 1 << " " << rat_to_string(res.coupling[i][j]) << "\n";
}

}  // namespace bmx::io
