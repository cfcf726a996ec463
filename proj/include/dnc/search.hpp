#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dnc::candgen {
struct LayerBlockSpec;
}

namespace dnc::search {

using BigInt = boost::multiprecision::cpp_int;

struct BlockCandidate {
  int block_index = 0;  // 1-based, matches the table file format
  std::string candidate_id;
  double delta_metric = 0.0;  // error-metric change, percentage points
  double delta_time = 0.0;    // runtime change, ms (either sign)
  std::shared_ptr<const candgen::LayerBlockSpec> spec;
};

struct CandidateTable {
  std::vector<std::vector<BlockCandidate>> blocks;
  // File header metadata (seed, grid_hash, synthetic_dm, metric_name, ...).
  std::map<std::string, std::string> header;

  int block_count() const { return int(blocks.size()); }
  bool block_has_identity(int block) const;  // 0-based
};

// Structural checks: at least one block, every block non-empty, deltas
// finite, candidate ids unique per block, stored block_index consistent,
// and any "teacher" row is exactly (0, 0). Throws INVALID_ARGUMENT.
void validate_table(const CandidateTable& table);

struct SelectionPlan {
  std::vector<std::string> choices;  // one candidate_id per block
  double objective = 0.0;            // sum of chosen delta_metric
  double total_delta_time = 0.0;     // sum of chosen delta_time, ms
  double budget = 0.0;               // ms
  bool optimal = false;
};

// Sums a choice sequence's (delta_metric, delta_time) in block order. All
// solvers accumulate in this same order, so recomputed totals compare
// bit-equal against plan fields.
std::pair<double, double> recompute_totals(const CandidateTable& table,
                                           const std::vector<std::string>& choices);

// Depth-first branch-and-bound. Lower bound at a node: accumulated
// delta_metric plus, per undecided block, the minimum delta_metric among
// candidates individually compatible with the remaining slack (computed
// against per-block minimum delta_time suffix sums). Throws InfeasibleError
// carrying the tightest achievable total delta_time when the budget cannot
// be met. Budget may be +/-inf; NaN is rejected.
SelectionPlan solve_exact(const CandidateTable& table, double budget);

// Multiple-choice knapsack DP after offsetting each block's delta_time by
// its per-block minimum (weights become non-negative). Item weights are
// ceil-rounded and the capacity floor-rounded to `resolution`, so any plan
// the DP returns is feasible in full precision; the reported objective is
// recomputed from un-discretized table values.
SelectionPlan solve_dp(const CandidateTable& table, double budget,
                       double resolution = 0.01);

// Exhaustive enumeration, the small-instance oracle. Guarded to product of
// block sizes <= 10^7 (TOO_LARGE beyond).
SelectionPlan brute_force(const CandidateTable& table, double budget);

struct SweepEntry {
  double budget = 0.0;
  std::optional<SelectionPlan> plan;   // empty: this budget is infeasible
  double min_total_delta_time = 0.0;   // tightest achievable total, ms
};

// One solve_exact per budget (ascending); infeasible budgets yield an empty
// entry instead of aborting the sweep. Objectives are non-increasing in the
// budget because the feasible sets are nested.
std::vector<SweepEntry> pareto_sweep(const CandidateTable& table,
                                     const std::vector<double>& budgets);

// Product of block candidate counts, exact at any scale.
BigInt count_search_space(const CandidateTable& table);

}  // namespace dnc::search
