#pragma once

#include <string>
#include <vector>

#include "dnc/search.hpp"
#include "dnc/text.hpp"

namespace testutil {

// Deltas land on a coarse binary lattice (delta_metric multiples of 2^-9,
// delta_time multiples of 2^-6) so solver sums are exact and the DP's
// power-of-two discretization introduces no rounding; 0-tolerance oracle
// comparisons are then meaningful.
inline dnc::search::CandidateTable random_table(dnc::Rng& rng, int max_blocks = 6,
                                                int max_cands = 8) {
  dnc::search::CandidateTable t;
  int n = int(rng.uniform_int(1, max_blocks));
  t.blocks.resize(size_t(n));
  for (int i = 0; i < n; ++i) {
    int c = int(rng.uniform_int(1, max_cands));
    for (int k = 0; k < c; ++k) {
      dnc::search::BlockCandidate cand;
      cand.block_index = i + 1;
      cand.candidate_id = "c" + std::to_string(k);
      cand.delta_metric = double(rng.uniform_int(-256, 1024)) / 512.0;
      cand.delta_time = double(rng.uniform_int(-512, 128)) / 64.0;
      t.blocks[size_t(i)].push_back(std::move(cand));
    }
  }
  return t;
}

// A budget near the achievable totals: one random candidate per block plus
// a few lattice steps of slack in either direction.
inline double random_budget(dnc::Rng& rng, const dnc::search::CandidateTable& t) {
  double dt = 0.0;
  for (const auto& block : t.blocks)
    dt += block[size_t(rng.uniform_int(0, int64_t(block.size()) - 1))].delta_time;
  return dt + double(rng.uniform_int(-4, 4)) / 64.0;
}

inline dnc::search::CandidateTable make_table(
    const std::vector<std::vector<std::tuple<std::string, double, double>>>& blocks) {
  dnc::search::CandidateTable t;
  t.blocks.resize(blocks.size());
  for (size_t i = 0; i < blocks.size(); ++i) {
    for (const auto& [id, dm, dt] : blocks[i]) {
      dnc::search::BlockCandidate c;
      c.block_index = int(i) + 1;
      c.candidate_id = id;
      c.delta_metric = dm;
      c.delta_time = dt;
      t.blocks[i].push_back(std::move(c));
    }
  }
  return t;
}

}  // namespace testutil
