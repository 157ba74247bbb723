#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/ipm.hpp"
#include "core/matching.hpp"
#include "core/rational.hpp"
#include "core/reductions.hpp"

namespace bmx::io {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// DIMACS min-cost: "p min <n> <m>", "n <id> <demand>", "a <u> <v> <low> <cap>
// <cost>". Only uncapacitated arcs are accepted: low must be 0 and cap must
// be one of -1, *, inf.
struct DimacsInstance {
  IncidenceGraph g;
  std::vector<long long> demand;
  std::vector<long long> cost;
};
DimacsInstance parse_dimacs(const std::string& path);
void write_dimacs(const std::string& path, const DimacsInstance& inst);

// "p bmatch <|U|> <|V|> <m>", "b <u|v> <id> <val>", "e <u> <v> <cost>".
MatchingInstance parse_matching(const std::string& path);
void write_matching(const std::string& path, const MatchingInstance& inst);

// "ot <n> <n'>", a line of n row marginals, a line of n' column marginals,
// then n rows of n' costs; rationals as a/b or decimals.
struct OtInstance {
  std::vector<Rat> r, c;
  std::vector<std::vector<Rat>> cost;
};
OtInstance parse_ot(const std::string& path);
void write_ot(const std::string& path, const OtInstance& inst);

// Versioned per-iteration trace: CSV with a "trace-v1" header line, or JSON
// lines when the path ends in .jsonl.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path);
  TraceSink sink();

 private:
  std::shared_ptr<std::ofstream> out_;
  bool json_ = false;
};

void write_matching_solution(const std::string& path, const MatchingInstance& inst,
                             const MatchingResult& res);
void write_flow_solution(const std::string& path, const DimacsInstance& inst,
                         const TransshipmentResult& res);
void write_sssp_solution(const std::string& path, const SsspResult& res);
void write_mmc_solution(const std::string& path, const MinMeanCycleResult& res);
void write_ot_solution(const std::string& path, const OtResult& res);

}  // namespace bmx::io
