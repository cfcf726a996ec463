#include "dnc/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>

#include "dnc/error.hpp"
#include "dnc/text.hpp"

namespace dnc::search {

namespace {

constexpr double kBruteForceLimit = 1e7;
constexpr long long kMaxDpSlots = 2'000'000;

void check_budget(double budget) {
  if (std::isnan(budget)) fail(Errc::InvalidArgument, "budget is NaN");
}

// Plain accumulation of per-block minimum delta_time in block order; by
// monotonicity of IEEE addition this equals the smallest total any choice
// sequence can reach, so the infeasibility test budget < min_total is exact.
double min_total_delta_time(const CandidateTable& t) {
  double acc = 0.0;
  for (const auto& block : t.blocks) {
    double m = block[0].delta_time;
    for (const auto& c : block) m = std::min(m, c.delta_time);
    acc += m;
  }
  return acc;
}

[[noreturn]] void throw_infeasible(const CandidateTable& t, double budget) {
  double m = min_total_delta_time(t);
  throw InfeasibleError(
      m, "budget " + format_shortest(budget) +
             " ms below tightest achievable total delta_time " +
             format_shortest(m) + " ms");
}

// Candidate order used whenever one representative per block is wanted:
// smallest delta_metric, then delta_time, then candidate_id.
bool candidate_less(const BlockCandidate& a, const BlockCandidate& b) {
  if (a.delta_metric != b.delta_metric) return a.delta_metric < b.delta_metric;
  if (a.delta_time != b.delta_time) return a.delta_time < b.delta_time;
  return a.candidate_id < b.candidate_id;
}

SelectionPlan finish_plan(const CandidateTable& t, const std::vector<int>& pick,
                          double budget) {
  SelectionPlan plan;
  plan.choices.reserve(t.blocks.size());
  for (size_t i = 0; i < t.blocks.size(); ++i)
    plan.choices.push_back(t.blocks[i][size_t(pick[i])].candidate_id);
  auto [obj, dt] = recompute_totals(t, plan.choices);
  plan.objective = obj;
  plan.total_delta_time = dt;
  plan.budget = budget;
  plan.optimal = true;
  return plan;
}

struct BranchAndBound {
  const CandidateTable& t;
  double budget;
  double eps;  // slack for the relaxed per-candidate compatibility test
  int n;

  // Per block: the (delta_time ascending, delta_metric descending) staircase
  // left after dropping dominated candidates, and the same staircase in
  // delta_metric-ascending order for DFS expansion.
  std::vector<std::vector<int>> stair;
  std::vector<std::vector<double>> stair_dt;
  std::vector<std::vector<double>> stair_dm;
  std::vector<std::vector<int>> expand;
  std::vector<double> min_dt;
  std::vector<double> suffix_min_dt;  // suffix sums of min_dt, last entry 0

  // Lower convex hull of each block's staircase plus the hull edges of all
  // blocks merged by descending metric-gain per ms. Together they give the
  // linear-relaxation optimum of the remaining blocks, a second admissible
  // cut for instances whose tradeoff curves are nearly affine and where the
  // per-block bound alone barely prunes.
  struct HullEdge {
    double rate;
    int block;
    int pos;  // index of the edge within its block's hull
    double width;
    double gain;
  };
  std::vector<std::vector<int>> hull;  // per block: indices into the staircase
  std::vector<HullEdge> edges;
  std::vector<double> suffix_dm_fast;  // suffix sums of dm at each block's
                                       // fastest staircase point

  bool have_best = false;
  double best_obj = 0.0;
  double best_dt = 0.0;
  std::vector<int> best;
  std::vector<int> cur;

  BranchAndBound(const CandidateTable& table, double b)
      : t(table), budget(b), n(table.block_count()) {
    eps = 1e-9 * (1.0 + std::fabs(budget));
    stair.resize(size_t(n));
    stair_dt.resize(size_t(n));
    stair_dm.resize(size_t(n));
    expand.resize(size_t(n));
    min_dt.resize(size_t(n));
    hull.resize(size_t(n));
    cur.assign(size_t(n), 0);
    for (int i = 0; i < n; ++i) prep_block(i);
    suffix_min_dt.assign(size_t(n) + 1, 0.0);
    suffix_dm_fast.assign(size_t(n) + 1, 0.0);
    for (int i = n - 1; i >= 0; --i) {
      suffix_min_dt[size_t(i)] = min_dt[size_t(i)] + suffix_min_dt[size_t(i) + 1];
      suffix_dm_fast[size_t(i)] =
          stair_dm[size_t(i)].front() + suffix_dm_fast[size_t(i) + 1];
    }
    std::sort(edges.begin(), edges.end(), [](const HullEdge& a, const HullEdge& b) {
      if (a.rate != b.rate) return a.rate > b.rate;
      if (a.block != b.block) return a.block < b.block;
      return a.pos < b.pos;
    });
  }

  // A candidate is kept only if no other is at least as good on both deltas
  // (ties resolved toward the smaller id). Dropping dominated candidates
  // cannot change the optimal objective, and on tie-free data cannot change
  // the tie-broken plan either.
  void prep_block(int i) {
    const auto& block = t.blocks[size_t(i)];
    std::vector<int> idx(block.size());
    for (size_t k = 0; k < block.size(); ++k) idx[k] = int(k);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      const auto& ca = block[size_t(a)];
      const auto& cb = block[size_t(b)];
      if (ca.delta_time != cb.delta_time) return ca.delta_time < cb.delta_time;
      if (ca.delta_metric != cb.delta_metric)
        return ca.delta_metric < cb.delta_metric;
      return ca.candidate_id < cb.candidate_id;
    });
    double best_dm = std::numeric_limits<double>::infinity();
    for (int k : idx) {
      const auto& c = block[size_t(k)];
      if (c.delta_metric < best_dm) {
        best_dm = c.delta_metric;
        stair[size_t(i)].push_back(k);
        stair_dt[size_t(i)].push_back(c.delta_time);
        stair_dm[size_t(i)].push_back(c.delta_metric);
      }
    }
    min_dt[size_t(i)] = stair_dt[size_t(i)].front();
    expand[size_t(i)].assign(stair[size_t(i)].rbegin(), stair[size_t(i)].rend());

    // Lower hull over the staircase; collinear interior points are dropped.
    // Staircase delta_time is strictly increasing, so chord tests need no
    // division.
    const auto& xs = stair_dt[size_t(i)];
    const auto& ys = stair_dm[size_t(i)];
    auto& h = hull[size_t(i)];
    for (int p = 0; p < int(xs.size()); ++p) {
      while (h.size() >= 2) {
        int a = h[h.size() - 2];
        int m = h.back();
        if ((ys[size_t(m)] - ys[size_t(a)]) * (xs[size_t(p)] - xs[size_t(a)]) >=
            (ys[size_t(p)] - ys[size_t(a)]) * (xs[size_t(m)] - xs[size_t(a)]))
          h.pop_back();
        else
          break;
      }
      h.push_back(p);
    }
    for (size_t e = 0; e + 1 < h.size(); ++e) {
      double width = xs[size_t(h[e + 1])] - xs[size_t(h[e])];
      double gain = ys[size_t(h[e])] - ys[size_t(h[e + 1])];
      edges.push_back({gain / width, i, int(e), width, gain});
    }
  }

  bool better_than_best(const std::vector<int>& pick, double obj,
                        double dt) const {
    if (!have_best) return true;
    if (obj != best_obj) return obj < best_obj;
    if (dt != best_dt) return dt < best_dt;
    for (int i = 0; i < n; ++i) {
      const auto& a = t.blocks[size_t(i)][size_t(pick[size_t(i)])].candidate_id;
      const auto& b = t.blocks[size_t(i)][size_t(best[size_t(i)])].candidate_id;
      if (a != b) return a < b;
    }
    return false;
  }

  void consider(const std::vector<int>& pick, double obj, double dt) {
    if (better_than_best(pick, obj, dt)) {
      have_best = true;
      best = pick;
      best_obj = obj;
      best_dt = dt;
    }
  }

  std::pair<double, double> fold_pick(const std::vector<int>& pick) const {
    double dm = 0.0;
    double dt = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& c = t.blocks[size_t(i)][size_t(pick[size_t(i)])];
      dm += c.delta_metric;
      dt += c.delta_time;
    }
    return {dm, dt};
  }

  // Starting incumbent: every block at its fastest point, then hull edges
  // applied greedily by gain rate while the budget holds. A strong first
  // incumbent makes both cuts effective from the root; the DFS still visits
  // every subtree that could beat or tie it, so the final plan is unchanged.
  void greedy_warm_start() {
    std::vector<int> at(size_t(n), 0);
    std::vector<char> blocked(size_t(n), 0);
    double run = 0.0;
    for (int i = 0; i < n; ++i) run += stair_dt[size_t(i)].front();
    for (const HullEdge& e : edges) {
      if (blocked[size_t(e.block)] || at[size_t(e.block)] != e.pos) {
        blocked[size_t(e.block)] = 1;
        continue;
      }
      if (run + e.width <= budget) {
        run += e.width;
        at[size_t(e.block)] = e.pos + 1;
      } else {
        blocked[size_t(e.block)] = 1;
      }
    }
    std::vector<int> pick(size_t(n), 0);
    for (int i = 0; i < n; ++i)
      pick[size_t(i)] = stair[size_t(i)][size_t(hull[size_t(i)][size_t(at[size_t(i)])])];
    auto [dm, dt] = fold_pick(pick);
    if (dt <= budget) consider(pick, dm, dt);

    std::vector<int> fastest(size_t(n), 0);
    for (int i = 0; i < n; ++i) fastest[size_t(i)] = stair[size_t(i)].front();
    auto [dm0, dt0] = fold_pick(fastest);
    if (dt0 <= budget) consider(fastest, dm0, dt0);
  }

  void dfs(int k, double dm_acc, double dt_acc) {
    if (k == n) {
      if (dt_acc <= budget) consider(cur, dm_acc, dt_acc);
      return;
    }
    const auto& block = t.blocks[size_t(k)];
    for (int idx : expand[size_t(k)]) {
      const auto& c = block[size_t(idx)];
      double dm_child = dm_acc + c.delta_metric;
      double dt_child = dt_acc + c.delta_time;

      // Exact filter: finishing with every remaining block at its fastest
      // still overshoots the budget, so no completion is feasible.
      double fill = dt_child;
      for (int j = k + 1; j < n; ++j) fill += min_dt[size_t(j)];
      if (fill > budget) continue;

      if (have_best) {
        double bound = dm_child;
        double base = dt_child + suffix_min_dt[size_t(k) + 1];
        bool pruned = false;
        for (int j = k + 1; j < n; ++j) {
          double limit = budget + eps - (base - min_dt[size_t(j)]);
          const auto& dts = stair_dt[size_t(j)];
          auto it = std::upper_bound(dts.begin(), dts.end(), limit);
          if (it == dts.begin()) {
            pruned = true;
            break;
          }
          bound += stair_dm[size_t(j)][size_t(it - dts.begin()) - 1];
        }
        // Strict comparison: an equal bound may still hide a plan that wins
        // the (delta_time, candidate_id) tie-break.
        if (pruned || bound > best_obj) continue;

        // Linear-relaxation cut: remaining blocks at their fastest points,
        // hull edges bought greedily with the leftover slack, last edge
        // fractional. The margin absorbs rounding of the rate arithmetic so
        // exact ties are never cut off.
        double slack = budget - dt_child - suffix_min_dt[size_t(k) + 1];
        if (slack < 0.0) slack = 0.0;
        double lp = dm_child + suffix_dm_fast[size_t(k) + 1];
        for (const HullEdge& e : edges) {
          if (slack <= 0.0) break;
          if (e.block <= k) continue;
          if (e.width <= slack) {
            lp -= e.gain;
            slack -= e.width;
          } else {
            lp -= e.gain * (slack / e.width);
            break;
          }
        }
        if (lp > best_obj + 1e-9 * (1.0 + std::fabs(best_obj))) continue;
      }

      cur[size_t(k)] = idx;
      dfs(k + 1, dm_child, dt_child);
    }
  }
};

SelectionPlan solve_exact_impl(const CandidateTable& t, double budget,
                               const SelectionPlan* hint) {
  validate_table(t);
  check_budget(budget);
  if (min_total_delta_time(t) > budget) throw_infeasible(t, budget);

  BranchAndBound bnb(t, budget);
  if (hint && int(hint->choices.size()) == t.block_count()) {
    std::vector<int> pick(hint->choices.size(), -1);
    for (size_t i = 0; i < hint->choices.size(); ++i) {
      const auto& block = t.blocks[i];
      for (size_t k = 0; k < block.size(); ++k)
        if (block[k].candidate_id == hint->choices[i]) pick[i] = int(k);
    }
    if (std::find(pick.begin(), pick.end(), -1) == pick.end()) {
      auto [obj, dt] = recompute_totals(t, hint->choices);
      if (dt <= budget) bnb.consider(pick, obj, dt);
    }
  }
  bnb.greedy_warm_start();
  bnb.dfs(0, 0.0, 0.0);
  return finish_plan(t, bnb.best, budget);
}

}  // namespace

bool CandidateTable::block_has_identity(int block) const {
  for (const auto& c : blocks[size_t(block)])
    if (c.candidate_id == "teacher") return true;
  return false;
}

void validate_table(const CandidateTable& table) {
  if (table.blocks.empty())
    fail(Errc::InvalidArgument, "candidate table has no blocks");
  for (size_t i = 0; i < table.blocks.size(); ++i) {
    const auto& block = table.blocks[i];
    if (block.empty())
      fail(Errc::InvalidArgument,
           "block " + std::to_string(i + 1) + " has no candidates");
    std::set<std::string_view> ids;
    for (const auto& c : block) {
      if (c.block_index != int(i) + 1)
        fail(Errc::InvalidArgument,
             "candidate '" + c.candidate_id + "' carries block_index " +
                 std::to_string(c.block_index) + " inside block " +
                 std::to_string(i + 1));
      if (c.candidate_id.empty())
        fail(Errc::InvalidArgument,
             "empty candidate_id in block " + std::to_string(i + 1));
      if (!std::isfinite(c.delta_metric) || !std::isfinite(c.delta_time))
        fail(Errc::InvalidArgument,
             "non-finite deltas for candidate '" + c.candidate_id +
                 "' in block " + std::to_string(i + 1));
      if (!ids.insert(c.candidate_id).second)
        fail(Errc::InvalidArgument,
             "duplicate candidate_id '" + c.candidate_id + "' in block " +
                 std::to_string(i + 1));
      if (c.candidate_id == "teacher" &&
          (c.delta_metric != 0.0 || c.delta_time != 0.0))
        fail(Errc::InvalidArgument,
             "identity candidate in block " + std::to_string(i + 1) +
                 " must have zero deltas");
    }
  }
}

std::pair<double, double> recompute_totals(const CandidateTable& table,
                                           const std::vector<std::string>& choices) {
  if (choices.size() != table.blocks.size())
    fail(Errc::InvalidArgument, "plan has " + std::to_string(choices.size()) +
                                    " choices for " +
                                    std::to_string(table.blocks.size()) +
                                    " blocks");
  double dm = 0.0;
  double dt = 0.0;
  for (size_t i = 0; i < table.blocks.size(); ++i) {
    const BlockCandidate* found = nullptr;
    for (const auto& c : table.blocks[i])
      if (c.candidate_id == choices[i]) {
        found = &c;
        break;
      }
    if (!found)
      fail(Errc::InvalidArgument, "candidate '" + choices[i] +
                                      "' not present in block " +
                                      std::to_string(i + 1));
    dm += found->delta_metric;
    dt += found->delta_time;
  }
  return {dm, dt};
}

SelectionPlan solve_exact(const CandidateTable& table, double budget) {
  return solve_exact_impl(table, budget, nullptr);
}

SelectionPlan brute_force(const CandidateTable& table, double budget) {
  validate_table(table);
  check_budget(budget);
  double combos = 1.0;
  for (const auto& block : table.blocks) combos *= double(block.size());
  if (combos > kBruteForceLimit)
    fail(Errc::TooLarge, "search space of " + format_shortest(combos) +
                             " combinations exceeds the brute-force guard");

  const int n = table.block_count();
  std::vector<int> cur(size_t(n), 0);
  std::vector<int> best;
  double best_obj = 0.0;
  double best_dt = 0.0;

  auto leaf = [&]() {
    double dm = 0.0;
    double dt = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& c = table.blocks[size_t(i)][size_t(cur[size_t(i)])];
      dm += c.delta_metric;
      dt += c.delta_time;
    }
    if (dt > budget) return;
    bool take = best.empty();
    if (!take) {
      if (dm != best_obj) {
        take = dm < best_obj;
      } else if (dt != best_dt) {
        take = dt < best_dt;
      } else {
        for (int i = 0; i < n; ++i) {
          const auto& a = table.blocks[size_t(i)][size_t(cur[size_t(i)])].candidate_id;
          const auto& b = table.blocks[size_t(i)][size_t(best[size_t(i)])].candidate_id;
          if (a != b) {
            take = a < b;
            break;
          }
        }
      }
    }
    if (take) {
      best = cur;
      best_obj = dm;
      best_dt = dt;
    }
  };

  // Odometer over all combinations.
  while (true) {
    leaf();
    int i = n - 1;
    while (i >= 0 && cur[size_t(i)] + 1 == int(table.blocks[size_t(i)].size())) {
      cur[size_t(i)] = 0;
      --i;
    }
    if (i < 0) break;
    ++cur[size_t(i)];
  }

  if (best.empty()) throw_infeasible(table, budget);
  return finish_plan(table, best, budget);
}

SelectionPlan solve_dp(const CandidateTable& table, double budget,
                       double resolution) {
  validate_table(table);
  check_budget(budget);
  if (!(resolution > 0.0) || !std::isfinite(resolution))
    fail(Errc::InvalidArgument, "resolution must be a positive finite ms value");

  const int n = table.block_count();
  double min_total = min_total_delta_time(table);
  if (min_total > budget) throw_infeasible(table, budget);

  if (std::isinf(budget)) {
    // Constraint vacuous: per-block independent minimum.
    std::vector<int> pick(size_t(n), 0);
    for (int i = 0; i < n; ++i) {
      const auto& block = table.blocks[size_t(i)];
      for (size_t k = 1; k < block.size(); ++k)
        if (candidate_less(block[k], block[size_t(pick[size_t(i)])]))
          pick[size_t(i)] = int(k);
    }
    return finish_plan(table, pick, budget);
  }

  // Offset each block by its minimum delta_time so item weights are
  // non-negative, then discretize: weights round up, capacity rounds down.
  // Any selection the DP admits is therefore feasible in full precision,
  // and the all-minima selection always has discretized weight 0, so a
  // truly feasible instance is never reported infeasible.
  std::vector<double> block_min(size_t(n), 0.0);
  double offset_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& block = table.blocks[size_t(i)];
    double m = block[0].delta_time;
    for (const auto& c : block) m = std::min(m, c.delta_time);
    block_min[size_t(i)] = m;
    offset_sum += m;
  }
  double cap = budget - offset_sum;
  if (cap < 0.0) cap = 0.0;

  std::vector<std::vector<long long>> weight(size_t(n), std::vector<long long>{});
  double weight_cap = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& block = table.blocks[size_t(i)];
    weight[size_t(i)].resize(block.size());
    long long wmax = 0;
    for (size_t k = 0; k < block.size(); ++k) {
      double w = block[k].delta_time - block_min[size_t(i)];
      double q = std::ceil(w / resolution);
      if (q > 4e18) fail(Errc::TooLarge, "time resolution too fine for the DP table");
      long long u = (long long)(q);
      while (double(u) * resolution < w) ++u;
      weight[size_t(i)][k] = u;
      wmax = std::max(wmax, u);
    }
    weight_cap += double(wmax);
  }
  double cap_slots = std::floor(cap / resolution);
  double c_dbl = std::min(cap_slots, weight_cap);
  if (!(c_dbl + 1.0 <= double(kMaxDpSlots)))
    fail(Errc::TooLarge, "DP table would need " + format_shortest(c_dbl + 1.0) +
                             " capacity slots; use a coarser resolution");
  long long cmax = (long long)(c_dbl);
  while (cmax > 0 && double(cmax) * resolution > cap) --cmax;
  const size_t slots = size_t(cmax) + 1;

  std::vector<char> old_valid(slots, 0), new_valid(slots, 0);
  std::vector<double> old_obj(slots), new_obj(slots);
  std::vector<double> old_dt(slots), new_dt(slots);
  std::vector<std::vector<int32_t>> choice(size_t(n),
                                           std::vector<int32_t>(slots, -1));
  old_valid[0] = 1;
  old_obj[0] = 0.0;
  old_dt[0] = 0.0;

  // Candidate indices for blocks 0..j of the state reaching `slot` after
  // block j, where `cand` was taken at block j itself.
  auto trace = [&](int j, size_t slot, int32_t cand) {
    std::vector<int32_t> path(size_t(j) + 1);
    for (int i = j;; --i) {
      path[size_t(i)] = cand;
      if (i == 0) break;
      slot -= size_t(weight[size_t(i)][size_t(cand)]);
      cand = choice[size_t(i) - 1][slot];
    }
    return path;
  };
  auto path_less = [&](int j, const std::vector<int32_t>& a,
                       const std::vector<int32_t>& b) {
    for (int i = 0; i <= j; ++i) {
      const auto& ia = table.blocks[size_t(i)][size_t(a[size_t(i)])].candidate_id;
      const auto& ib = table.blocks[size_t(i)][size_t(b[size_t(i)])].candidate_id;
      if (ia != ib) return ia < ib;
    }
    return false;
  };

  for (int j = 0; j < n; ++j) {
    std::fill(new_valid.begin(), new_valid.end(), 0);
    const auto& block = table.blocks[size_t(j)];
    for (size_t s = 0; s < slots; ++s) {
      if (!old_valid[s]) continue;
      for (size_t k = 0; k < block.size(); ++k) {
        long long u = weight[size_t(j)][k];
        if (u > cmax - (long long)(s)) continue;
        size_t ns = s + size_t(u);
        double obj = old_obj[s] + block[k].delta_metric;
        double dt = old_dt[s] + block[k].delta_time;
        bool take = !new_valid[ns];
        if (!take) {
          if (obj != new_obj[ns]) {
            take = obj < new_obj[ns];
          } else if (dt != new_dt[ns]) {
            take = dt < new_dt[ns];
          } else {
            std::vector<int32_t> mine = j == 0 ? std::vector<int32_t>{int32_t(k)}
                                               : trace(j - 1, s, choice[size_t(j) - 1][s]);
            if (j > 0) mine.push_back(int32_t(k));
            take = path_less(j, mine, trace(j, ns, choice[size_t(j)][ns]));
          }
        }
        if (take) {
          new_valid[ns] = 1;
          new_obj[ns] = obj;
          new_dt[ns] = dt;
          choice[size_t(j)][ns] = int32_t(k);
        }
      }
    }
    old_valid.swap(new_valid);
    old_obj.swap(new_obj);
    old_dt.swap(new_dt);
  }

  size_t best_slot = slots;
  for (size_t s = 0; s < slots; ++s) {
    if (!old_valid[s]) continue;
    if (best_slot == slots) {
      best_slot = s;
      continue;
    }
    bool take = false;
    if (old_obj[s] != old_obj[best_slot]) {
      take = old_obj[s] < old_obj[best_slot];
    } else if (old_dt[s] != old_dt[best_slot]) {
      take = old_dt[s] < old_dt[best_slot];
    } else {
      take = path_less(n - 1, trace(n - 1, s, choice[size_t(n) - 1][s]),
                       trace(n - 1, best_slot, choice[size_t(n) - 1][best_slot]));
    }
    if (take) best_slot = s;
  }
  if (best_slot == slots) throw_infeasible(table, budget);

  auto path = trace(n - 1, best_slot, choice[size_t(n) - 1][best_slot]);
  std::vector<int> pick(path.begin(), path.end());
  SelectionPlan plan = finish_plan(table, pick, budget);
  if (plan.total_delta_time > budget)
    fail(Errc::ResolutionTooCoarse,
         "discretized solution violates the budget in full precision; "
         "decrease resolution");
  return plan;
}

std::vector<SweepEntry> pareto_sweep(const CandidateTable& table,
                                     const std::vector<double>& budgets) {
  validate_table(table);
  for (size_t i = 0; i + 1 < budgets.size(); ++i)
    if (!(budgets[i] <= budgets[i + 1]))
      fail(Errc::InvalidArgument, "budgets must be sorted ascending");

  double min_total = min_total_delta_time(table);
  std::vector<SweepEntry> out;
  out.reserve(budgets.size());
  const SelectionPlan* hint = nullptr;
  for (double b : budgets) {
    SweepEntry entry;
    entry.budget = b;
    entry.min_total_delta_time = min_total;
    try {
      // A plan feasible at a smaller budget stays feasible here, so it can
      // seed the incumbent.
      entry.plan = solve_exact_impl(table, b, hint);
    } catch (const InfeasibleError&) {
    }
    out.push_back(std::move(entry));
    if (out.back().plan) hint = &*out.back().plan;
  }
  return out;
}

BigInt count_search_space(const CandidateTable& table) {
  validate_table(table);
  BigInt total = 1;
  for (const auto& block : table.blocks) total *= BigInt(block.size());
  return total;
}

}  // namespace dnc::search
