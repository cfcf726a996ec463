// End-to-end acceptance checks, one printed line per criterion. Each check
// pins its tolerances inline; the binary exits nonzero if any line fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "dnc/error.hpp"
#include "dnc/io.hpp"
#include "dnc/label.hpp"
#include "dnc/metrics.hpp"
#include "dnc/prune.hpp"
#include "dnc/search.hpp"
#include "dnc/text.hpp"

namespace fs = std::filesystem;
using namespace dnc;
using search::CandidateTable;
using search::SelectionPlan;

namespace {

std::string data_path(const char* name) {
  return std::string(DNC_DATA_DIR) + "/" + name;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---- shared generators ----------------------------------------------------

// Deltas on a binary lattice (metric 2^-9, time 2^-6) keep solver sums exact,
// so zero-tolerance cross-solver comparisons are meaningful.
CandidateTable random_table(Rng& rng, int max_blocks = 6, int max_cands = 8) {
  CandidateTable t;
  int n = int(rng.uniform_int(1, max_blocks));
  t.blocks.resize(size_t(n));
  for (int i = 0; i < n; ++i) {
    int c = int(rng.uniform_int(1, max_cands));
    for (int k = 0; k < c; ++k) {
      search::BlockCandidate cand;
      cand.block_index = i + 1;
      cand.candidate_id = "c" + std::to_string(k);
      cand.delta_metric = double(rng.uniform_int(-256, 1024)) / 512.0;
      cand.delta_time = double(rng.uniform_int(-512, 128)) / 64.0;
      t.blocks[size_t(i)].push_back(std::move(cand));
    }
  }
  return t;
}

double random_budget(Rng& rng, const CandidateTable& t) {
  double dt = 0.0;
  for (const auto& block : t.blocks)
    dt += block[size_t(rng.uniform_int(0, int64_t(block.size()) - 1))].delta_time;
  return dt + double(rng.uniform_int(-4, 4)) / 64.0;
}

// Totals recomputed from the chosen candidates, independent of the plan's own
// bookkeeping.
std::pair<double, double> recompute(const CandidateTable& t,
                                    const SelectionPlan& plan) {
  double dm = 0.0, dt = 0.0;
  for (size_t i = 0; i < t.blocks.size(); ++i) {
    bool found = false;
    for (const auto& cand : t.blocks[i])
      if (cand.candidate_id == plan.choices[i]) {
        dm += cand.delta_metric;
        dt += cand.delta_time;
        found = true;
        break;
      }
    if (!found) return {std::nan(""), std::nan("")};
  }
  return {dm, dt};
}

std::map<std::string, prune::LayerTensors> random_tensors(
    const prune::LayerGraph& graph, uint64_t seed) {
  std::map<std::string, prune::LayerTensors> out;
  Rng rng(seed);
  for (const auto& n : graph.nodes) {
    prune::LayerTensors t;
    t.weights.shape = {n.out_channels, n.in_channels};
    t.gradients.shape = t.weights.shape;
    size_t count = t.weights.element_count();
    for (size_t i = 0; i < count; ++i) {
      t.weights.data.push_back(float(rng.uniform(-1.0, 1.0)));
      t.gradients.data.push_back(float(rng.uniform(-1.0, 1.0)));
    }
    out.emplace(n.id, std::move(t));
  }
  return out;
}

// ---- geometry fixtures ----------------------------------------------------

label::CameraRig rig_320(int w, int h) {
  return label::CameraRig{320.0, 320.0, double(w) / 2.0, double(h) / 2.0, 0.5};
}

// Plane Z = a*X + b*Y + c through the pinhole model.
Image plane_depth(const label::CameraRig& rig, int w, int h, double a,
                  double b, double c) {
  Image z(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double denom = 1.0 - a * (double(u) - rig.cx) / rig.fx -
                     b * (double(v) - rig.cy) / rig.fy;
      z.at(u, v) = float(c / denom);
    }
  return z;
}

label::DisparityMap disparity_of_depth(const Image& z,
                                       const label::CameraRig& rig) {
  label::DisparityMap d;
  d.values = Image(z.width, z.height);
  d.valid = Mask(z.width, z.height, true);
  for (int v = 0; v < z.height; ++v)
    for (int u = 0; u < z.width; ++u)
      d.values.at(u, v) = float(rig.fx * rig.baseline / double(z.at(u, v)));
  return d;
}

Image mono_from_disparity(const label::DisparityMap& d,
                          const label::CameraRig& rig) {
  Image z(d.values.width, d.values.height);
  for (int v = 0; v < z.height; ++v)
    for (int u = 0; u < z.width; ++u)
      z.at(u, v) = float(rig.fx * rig.baseline / double(d.values.at(u, v)));
  return z;
}

// ---- criteria -------------------------------------------------------------

bool solver_oracle_equivalence(std::string& note) {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(20260817);
  const int rounds = 1200;
  for (int round = 0; round < rounds; ++round) {
    auto table = random_table(rng);
    double budget = random_budget(rng, table);

    SelectionPlan oracle, exact, dp;
    int infeasible = 0;
    auto attempt = [&](SelectionPlan& out, const std::function<SelectionPlan()>& f) {
      try {
        out = f();
      } catch (const InfeasibleError&) {
        ++infeasible;
      }
    };
    attempt(oracle, [&] { return search::brute_force(table, budget); });
    attempt(exact, [&] { return search::solve_exact(table, budget); });
    attempt(dp, [&] { return search::solve_dp(table, budget, 0.015625); });

    if (infeasible != 0) {
      if (infeasible != 3) {
        note = "feasibility disagreement at round " + std::to_string(round);
        return false;
      }
      continue;
    }
    if (exact.objective != oracle.objective || dp.objective != oracle.objective) {
      note = "objective mismatch at round " + std::to_string(round);
      return false;
    }
    if (exact.choices != oracle.choices || dp.choices != oracle.choices) {
      note = "choice mismatch at round " + std::to_string(round);
      return false;
    }
    for (const SelectionPlan* plan : {&oracle, &exact, &dp}) {
      auto [dm, dt] = recompute(table, *plan);
      if (dm != plan->objective || dt != plan->total_delta_time || dt > budget) {
        note = "full-precision recheck failed at round " + std::to_string(round);
        return false;
      }
    }
  }
  double secs = seconds_since(t0);
  note = std::to_string(rounds) + " tables, " + format_shortest(secs) + " s";
  return secs < 60.0;
}

bool full_scale_tractability(std::string& note) {
  auto spec = io::read_grid_file(data_path("grid.txt"));
  spec.metric.seed = 42;
  auto table = candgen::build_candidate_table(spec.teachers, spec.grid,
                                              spec.cost, spec.metric,
                                              spec.limit, spec.include_identity);
  if (table.block_count() != 8) {
    note = "expected 8 blocks, got " + std::to_string(table.block_count());
    return false;
  }
  for (const auto& block : table.blocks)
    if (block.size() != 200) {
      note = "expected 200 candidates per block";
      return false;
    }
  if (search::count_search_space(table).str() != "2560000000000000000") {
    note = "search space is " + search::count_search_space(table).str();
    return false;
  }

  double lo = 0.0, hi = 0.0;
  for (const auto& block : table.blocks) {
    double mn = block[0].delta_time, mx = block[0].delta_time;
    for (const auto& cand : block) {
      mn = std::min(mn, cand.delta_time);
      mx = std::max(mx, cand.delta_time);
    }
    lo += mn;
    hi += mx;
  }
  double worst = 0.0;
  for (double f : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    auto t0 = std::chrono::steady_clock::now();
    auto plan = search::solve_exact(table, lo + f * (hi - lo));
    double secs = seconds_since(t0);
    worst = std::max(worst, secs);
    if (!plan.optimal) {
      note = "solver returned a non-optimal plan";
      return false;
    }
  }
  note = "8 blocks x 200 candidates, worst solve " + format_shortest(worst) + " s";
  return worst < 5.0;
}

bool budget_monotonicity(std::string& note) {
  Rng rng(31337);
  for (int round = 0; round < 100; ++round) {
    auto table = random_table(rng);
    std::vector<double> budgets;
    for (int k = 0; k < 6; ++k) budgets.push_back(random_budget(rng, table));
    std::sort(budgets.begin(), budgets.end());

    auto entries = search::pareto_sweep(table, budgets);
    double prev = std::numeric_limits<double>::infinity();
    bool seen_feasible = false;
    for (const auto& entry : entries) {
      if (!entry.plan) {
        if (seen_feasible) {
          note = "infeasible after feasible at round " + std::to_string(round);
          return false;
        }
        continue;
      }
      seen_feasible = true;
      if (entry.plan->objective > prev) {
        note = "objective increased with budget at round " + std::to_string(round);
        return false;
      }
      prev = entry.plan->objective;
    }
  }
  note = "100 tables, objectives non-increasing in budget";
  return true;
}

bool graph_constraints(std::string& note) {
  auto graph = io::read_layer_graph(data_path("graph.tsv"));
  Rng rng(77);
  for (int round = 0; round < 100; ++round) {
    prune::PrunePlan plan;
    if (round % 2 == 0) {
      plan = prune::global_prune(
          prune::taylor_importance(graph, random_tensors(graph, 1000 + uint64_t(round))),
          graph, rng.uniform(0.05, 0.95));
    } else {
      plan.ratio = 0.5;
      for (const auto& grp : graph.groups) {
        if (grp.fixed) continue;
        int keep = 1 + int(rng.uniform_int(0, grp.width - 1));
        std::vector<int> removed;
        for (int c = 0; c < grp.width; ++c) removed.push_back(c);
        for (int c = grp.width - 1; c > 0; --c)
          std::swap(removed[size_t(c)], removed[size_t(rng.uniform_int(0, c))]);
        removed.resize(size_t(grp.width - keep));
        std::sort(removed.begin(), removed.end());
        if (!removed.empty()) plan.removals[grp.group_id] = removed;
      }
    }
    auto pruned = prune::apply_plan(graph, plan);
    bool ok = pruned.find_node("me")->in_channels == 192 &&
              pruned.find_node("disp_head")->out_channels == 1 &&
              pruned.find_node("mask_head")->out_channels == 576 &&
              pruned.find_node("hidden_update")->in_channels ==
                  pruned.find_node("hidden_update")->out_channels;
    if (!ok) {
      note = "constraint violated at round " + std::to_string(round);
      return false;
    }
  }
  note = "100 plans, fixed widths and the hidden loop preserved";
  return true;
}

bool pruning_shrinkage(std::string& note) {
  auto graph = io::read_layer_graph(data_path("graph.tsv"));
  auto importance = prune::taylor_importance(graph, random_tensors(graph, 1));

  long long prunable = 0;
  for (const auto& grp : graph.groups)
    if (!grp.fixed) prunable += grp.width;
  if (prunable != 224) {
    note = "expected 224 prunable channels, got " + std::to_string(prunable);
    return false;
  }

  const long long expected_remaining[9] = {202, 180, 157, 135, 112,
                                           90,  68,  45,  23};
  double prev_flops = std::numeric_limits<double>::infinity();
  long long prev_remaining = prunable + 1;
  for (int k = 1; k <= 9; ++k) {
    auto plan = prune::global_prune(importance, graph, double(k) / 10.0);
    long long remaining = prunable - plan.channels_removed;
    if (remaining != expected_remaining[k - 1]) {
      note = "alpha " + format_shortest(double(k) / 10.0) + " left " +
             std::to_string(remaining) + " channels, expected " +
             std::to_string(expected_remaining[k - 1]);
      return false;
    }
    if (remaining >= prev_remaining) {
      note = "remaining channels did not shrink";
      return false;
    }
    double flops = prune::estimate_graph_flops(prune::apply_plan(graph, plan));
    if (flops > prev_flops) {
      note = "estimated flops increased between ratios";
      return false;
    }
    prev_remaining = remaining;
    prev_flops = flops;
  }
  note = "alpha 0.1..0.9, counts match goldens, flops non-increasing";
  return true;
}

bool retrain_objective(std::string& note) {
  Image gt(4, 3, 5.0f);
  Mask valid(4, 3, true);

  std::vector<Image> perfect{Image(4, 3, 5.0f), Image(4, 3, 5.0f)};
  if (prune::retrain_loss(perfect, gt, valid, {}, 0.9, 0.1) != 0.0) {
    note = "all-match case is not exactly zero";
    return false;
  }

  // Two iterations: first off by 1 everywhere (weight 0.9), last perfect.
  std::vector<Image> two{Image(4, 3, 6.0f), Image(4, 3, 5.0f)};
  double loss = prune::retrain_loss(two, gt, valid, {}, 0.9, 0.1);
  if (std::fabs(loss - 0.9) > 1e-9) {
    note = "two-iteration case gave " + format_shortest(loss);
    return false;
  }
  note = "geometric weighting reproduces 0.9 within 1e-9, zero case exact";
  return true;
}

bool normal_geometry(std::string& note) {
  const double a = 0.2, b = -0.1, c = 5.0;
  auto rig = rig_320(64, 48);
  auto depth = label::depth_from_image(plane_depth(rig, 64, 48, a, b, c));
  auto normals = label::normals_from_points(label::unproject(depth, rig));

  double len = std::sqrt(a * a + b * b + 1.0);
  double ex = a / len, ey = b / len, ez = -1.0 / len;
  for (int v = 1; v < 47; ++v)
    for (int u = 1; u < 63; ++u) {
      size_t i = size_t(v) * 64 + size_t(u);
      if (!normals.defined.get(u, v) || std::fabs(normals.nx[i] - ex) > 1e-3 ||
          std::fabs(normals.ny[i] - ey) > 1e-3 ||
          std::fabs(normals.nz[i] - ez) > 1e-3) {
        note = "slanted plane normal off at (" + std::to_string(u) + "," +
               std::to_string(v) + ")";
        return false;
      }
    }

  label::DepthMap flat;
  flat.z = Image(16, 12, 2.0f);
  flat.valid = Mask(16, 12, true);
  auto facing = label::normals_from_points(label::unproject(flat, rig_320(16, 12)));
  for (int v = 0; v < 12; ++v)
    for (int u = 0; u < 16; ++u) {
      size_t i = size_t(v) * 16 + size_t(u);
      if (!facing.defined.get(u, v) || std::fabs(facing.nx[i]) > 1e-12 ||
          std::fabs(facing.ny[i]) > 1e-12 || std::fabs(facing.nz[i] + 1.0) > 1e-12) {
        note = "fronto-parallel normal off at (" + std::to_string(u) + "," +
               std::to_string(v) + ")";
        return false;
      }
    }
  note = "slanted plane within 1e-3, fronto-parallel within 1e-12";
  return true;
}

bool curation_semantics(std::string& note) {
  auto rig = rig_320(32, 24);
  auto disp = disparity_of_depth(plane_depth(rig, 32, 24, 0.2, -0.1, 5.0), rig);
  auto mono = mono_from_disparity(disp, rig);
  Mask no_sky(32, 24, false);

  auto verdict = label::curate_sample(disp, mono, rig, no_sky);
  if (verdict.agreement_fraction != 1.0 || !verdict.accepted) {
    note = "self-consistent sample not fully accepted";
    return false;
  }
  for (float s : {0.1f, 10.0f}) {
    Image scaled = mono;
    for (auto& z : scaled.pixels) z *= s;
    auto v = label::curate_sample(disp, scaled, rig, no_sky);
    if (v.agreement_fraction != verdict.agreement_fraction || !v.accepted) {
      note = "depth scale " + format_shortest(double(s)) + " changed the fraction";
      return false;
    }
  }

  // Warping the right half tilts its mono normals; the 3x3 windows also spoil
  // column 15, leaving exactly 15 of 32 columns agreeing: 360/768 = 0.46875.
  auto flat = disparity_of_depth(plane_depth(rig, 32, 24, 0.0, 0.0, 5.0), rig);
  Image warped = mono_from_disparity(flat, rig);
  for (int v = 0; v < 24; ++v)
    for (int u = 16; u < 32; ++u)
      warped.at(u, v) *= float(1.0 + 0.3 * std::sin(u * 1.3) * std::sin(v * 1.1));
  auto rejected = label::curate_sample(flat, warped, rig, no_sky);
  if (rejected.accepted || rejected.agreement_fraction != 0.46875) {
    note = "half-warped sample gave fraction " +
           format_shortest(rejected.agreement_fraction);
    return false;
  }
  note = "fraction 1.0 accepted, scale-invariant, half-warped pinned at 0.46875";
  return true;
}

bool metric_definitions(std::string& note) {
  Image gt(10, 1, 20.0f);
  Image pred = gt;
  Mask all(10, 1, true);
  pred.at(1, 0) += 5.0f;
  pred.at(4, 0) -= 5.0f;
  pred.at(7, 0) += 5.0f;
  if (metrics::bp_x(pred, gt, 2.0, all) != 30.0) {
    note = "constructed case is not exactly 30.0";
    return false;
  }

  Rng rng(404);
  for (int round = 0; round < 100; ++round) {
    int w = 2 + int(rng.uniform_int(0, 14));
    int h = 1 + int(rng.uniform_int(0, 9));
    Image p(w, h), g(w, h);
    Mask m(w, h, false);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        p.at(u, v) = float(rng.uniform(0.0, 100.0));
        g.at(u, v) = float(rng.uniform(0.1, 100.0));
        m.set(u, v, rng.uniform_int(0, 3) != 0);
      }
    m.set(0, 0, true);
    double bp1 = metrics::bp_x(p, g, 1.0, m);
    double bp2 = metrics::bp_x(p, g, 2.0, m);
    double bp3 = metrics::bp_x(p, g, 3.0, m);
    double d1 = metrics::d1(p, g, m);
    if (!(bp1 >= bp2 && bp2 >= bp3) || d1 > bp3) {
      note = "ordering violated at round " + std::to_string(round);
      return false;
    }
  }
  note = "hand case exactly 30.0; orderings hold on 100 random maps";
  return true;
}

// ---- round-trips and rerun determinism -------------------------------------

uint32_t fbits(float v) { return std::bit_cast<uint32_t>(v); }
uint64_t dbits(double v) { return std::bit_cast<uint64_t>(v); }

bool tables_identical(const CandidateTable& a, const CandidateTable& b) {
  if (a.header != b.header || a.blocks.size() != b.blocks.size()) return false;
  for (size_t i = 0; i < a.blocks.size(); ++i) {
    if (a.blocks[i].size() != b.blocks[i].size()) return false;
    for (size_t k = 0; k < a.blocks[i].size(); ++k) {
      const auto& x = a.blocks[i][k];
      const auto& y = b.blocks[i][k];
      if (x.block_index != y.block_index || x.candidate_id != y.candidate_id ||
          dbits(x.delta_metric) != dbits(y.delta_metric) ||
          dbits(x.delta_time) != dbits(y.delta_time))
        return false;
    }
  }
  return true;
}

prune::LayerGraph random_graph(Rng& rng) {
  using prune::LayerNode;
  using prune::GraphEdge;
  using prune::NodeKind;
  using prune::RoleTag;
  const NodeKind kinds[] = {NodeKind::Conv2D,       NodeKind::ConvGRUGate,
                            NodeKind::Linear,       NodeKind::MotionEncoder,
                            NodeKind::DispHead,     NodeKind::MaskHead,
                            NodeKind::Other};
  int chain = 2 + int(rng.uniform_int(0, 3));
  std::vector<int> widths;
  for (int i = 0; i <= chain; ++i)
    widths.push_back(1 + int(rng.uniform_int(0, 63)));

  std::vector<LayerNode> nodes;
  std::vector<GraphEdge> edges;
  for (int i = 0; i < chain; ++i) {
    LayerNode n;
    n.id = "n" + std::to_string(i);
    n.kind = kinds[rng.uniform_int(0, 6)];
    n.in_channels = widths[size_t(i)];
    n.out_channels = widths[size_t(i) + 1];
    if (i == 0 && rng.uniform_int(0, 1) == 0)
      n.role_tags.insert(RoleTag::ConsumesVolumeFeature);
    nodes.push_back(std::move(n));
    if (i > 0) edges.push_back({"n" + std::to_string(i - 1), nodes.back().id, false});
  }
  if (rng.uniform_int(0, 1) == 0) {
    LayerNode loop;
    loop.id = "loop";
    loop.kind = NodeKind::ConvGRUGate;
    loop.in_channels = loop.out_channels = widths[size_t(chain)];
    loop.role_tags.insert(RoleTag::ConsumesHidden);
    loop.role_tags.insert(RoleTag::ProducesHidden);
    edges.push_back({nodes.back().id, "loop", false});
    edges.push_back({"loop", "loop", true});
    nodes.push_back(std::move(loop));
  }
  return prune::build_dependency_graph(nodes, edges);
}

bool graphs_identical(const prune::LayerGraph& a, const prune::LayerGraph& b) {
  if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size())
    return false;
  for (size_t i = 0; i < a.nodes.size(); ++i) {
    const auto& x = a.nodes[i];
    const auto& y = b.nodes[i];
    if (x.id != y.id || x.kind != y.kind || x.in_channels != y.in_channels ||
        x.out_channels != y.out_channels || x.role_tags != y.role_tags)
      return false;
  }
  for (size_t i = 0; i < a.edges.size(); ++i) {
    const auto& x = a.edges[i];
    const auto& y = b.edges[i];
    if (x.producer != y.producer || x.consumer != y.consumer ||
        x.recurrent != y.recurrent)
      return false;
  }
  return true;
}

bool format_round_trips(std::string& note) {
  fs::path dir = fs::temp_directory_path() /
                 ("dnc_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  struct Cleanup {
    fs::path d;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(d, ec);
    }
  } cleanup{dir};

  Rng rng(808);
  const float specials[] = {std::bit_cast<float>(uint32_t(0x7fc00123)),
                            std::bit_cast<float>(uint32_t(0x00000001)),
                            -0.0f,
                            std::numeric_limits<float>::infinity(),
                            -std::numeric_limits<float>::infinity(),
                            1e-42f};
  for (int round = 0; round < 50; ++round) {
    // Candidate table, with occasional header entries.
    auto table = random_table(rng);
    if (rng.uniform_int(0, 1) == 0)
      table.header["k" + std::to_string(rng.uniform_int(0, 3))] =
          "v" + std::to_string(round);
    std::string table_file = (dir / "t.tsv").string();
    io::write_candidate_table(table_file, table);
    auto table2 = io::read_candidate_table(table_file);
    if (!tables_identical(table, table2)) {
      note = "candidate table round-trip differs at round " + std::to_string(round);
      return false;
    }

    // Selection plan from a real solve (skip infeasible draws).
    try {
      auto plan = search::solve_exact(table, random_budget(rng, table));
      std::string plan_file = (dir / "p.tsv").string();
      io::write_selection_plan(plan_file, plan);
      auto plan2 = io::read_selection_plan(plan_file);
      if (plan.choices != plan2.choices ||
          dbits(plan.objective) != dbits(plan2.objective) ||
          dbits(plan.total_delta_time) != dbits(plan2.total_delta_time) ||
          dbits(plan.budget) != dbits(plan2.budget) ||
          plan.optimal != plan2.optimal) {
        note = "selection plan round-trip differs at round " + std::to_string(round);
        return false;
      }
    } catch (const InfeasibleError&) {
    }

    // PFM image with special payloads sprinkled in.
    int w = 1 + int(rng.uniform_int(0, 15));
    int h = 1 + int(rng.uniform_int(0, 11));
    Image img(w, h);
    for (auto& p : img.pixels)
      p = rng.uniform_int(0, 4) == 0
              ? specials[rng.uniform_int(0, 5)]
              : float(rng.uniform(-1e6, 1e6));
    std::string pfm_file = (dir / "i.pfm").string();
    io::write_pfm(pfm_file, img);
    auto img2 = io::read_pfm(pfm_file);
    if (img2.width != img.width || img2.height != img.height) {
      note = "pfm dimensions differ at round " + std::to_string(round);
      return false;
    }
    for (size_t i = 0; i < img.pixels.size(); ++i)
      if (fbits(img.pixels[i]) != fbits(img2.pixels[i])) {
        note = "pfm payload differs at round " + std::to_string(round);
        return false;
      }

    // PGM mask.
    Mask mask(w, h, false);
    for (auto& bit : mask.bits) bit = rng.uniform_int(0, 1) ? 1 : 0;
    std::string pgm_file = (dir / "m.pgm").string();
    io::write_pgm(pgm_file, mask);
    auto mask2 = io::read_pgm(pgm_file);
    if (mask2.width != mask.width || mask2.height != mask.height ||
        mask2.bits != mask.bits) {
      note = "pgm round-trip differs at round " + std::to_string(round);
      return false;
    }

    // Layer graph, plus writer determinism.
    auto graph = random_graph(rng);
    std::string graph_file = (dir / "g.tsv").string();
    io::write_layer_graph(graph_file, graph);
    auto graph2 = io::read_layer_graph(graph_file);
    if (!graphs_identical(graph, graph2)) {
      note = "graph round-trip differs at round " + std::to_string(round);
      return false;
    }
    std::string graph_file2 = (dir / "g2.tsv").string();
    io::write_layer_graph(graph_file2, graph2);
    if (io::read_file(graph_file) != io::read_file(graph_file2)) {
      note = "graph rewrite is not byte-identical at round " + std::to_string(round);
      return false;
    }
  }
  note = "50 instances of each format, all bit-exact";
  return true;
}

int run_tool(const std::string& args) {
  std::string cmd = std::string(DNC_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return status;
}

bool cli_rerun_determinism(std::string& note) {
  fs::path dir = fs::temp_directory_path() /
                 ("dnc_acceptance_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  struct Cleanup {
    fs::path d;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(d, ec);
    }
  } cleanup{dir};

  // search: same table and budgets twice.
  std::string table_file = (dir / "table.tsv").string();
  if (run_tool("generate --grid " + data_path("grid.txt") + " --out " +
               table_file + " --seed 5 --limit 12") != 0) {
    note = "generate failed";
    return false;
  }
  // Every generated candidate is strictly faster than its teacher, so any
  // selection's total is negative: budgets 0 and inf are always feasible.
  for (const char* sub : {"a", "b"}) {
    if (run_tool("search --table " + table_file + " --budgets=0,inf " +
                 "--out-dir " + (dir / sub).string()) != 0) {
      note = "search failed";
      return false;
    }
  }
  for (const char* name : {"plan_1.tsv", "plan_2.tsv"}) {
    if (io::read_file((dir / "a" / name).string()) !=
        io::read_file((dir / "b" / name).string())) {
      note = std::string("search rerun differs in ") + name;
      return false;
    }
  }

  // curate: one accepted and one rejected sample, run twice.
  auto rig = rig_320(32, 24);
  auto good = disparity_of_depth(plane_depth(rig, 32, 24, 0.2, -0.1, 5.0), rig);
  auto flat = disparity_of_depth(plane_depth(rig, 32, 24, 0.0, 0.0, 5.0), rig);
  Image warped = mono_from_disparity(flat, rig);
  for (int v = 0; v < 24; ++v)
    for (int u = 16; u < 32; ++u)
      warped.at(u, v) *= float(1.0 + 0.3 * std::sin(u * 1.3) * std::sin(v * 1.1));

  for (const auto& [name, disp, mono] :
       {std::tuple{"keep", good, mono_from_disparity(good, rig)},
        std::tuple{"drop", flat, warped}}) {
    fs::path sample = dir / "samples" / name;
    fs::create_directories(sample);
    io::write_pfm((sample / "disp.pfm").string(), disp.values);
    io::write_pfm((sample / "mono_depth.pfm").string(), mono);
    io::atomic_write((sample / "rig.txt").string(),
                     "fx=320\nfy=320\ncx=16\ncy=12\nbaseline=0.5\n");
  }
  std::string manifest = (dir / "manifest.txt").string();
  io::atomic_write(manifest, (dir / "samples" / "keep").string() + "\n" +
                                 (dir / "samples" / "drop").string() + "\n");

  for (const char* sub : {"va", "vb"}) {
    if (run_tool("curate --manifest " + manifest + " --out " +
                 (dir / sub / "verdicts.tsv").string() + " --labels-dir " +
                 (dir / sub / "labels").string()) != 0) {
      note = "curate failed";
      return false;
    }
  }
  if (io::read_file((dir / "va" / "verdicts.tsv").string()) !=
      io::read_file((dir / "vb" / "verdicts.tsv").string())) {
    note = "curate rerun differs in the verdict report";
    return false;
  }
  for (const char* name : {"label.pfm", "label_valid.pgm", "consistency.pgm"}) {
    if (io::read_file((dir / "va" / "labels" / "keep" / name).string()) !=
        io::read_file((dir / "vb" / "labels" / "keep" / name).string())) {
      note = std::string("curate rerun differs in ") + name;
      return false;
    }
  }
  note = "search and curate reruns byte-identical";
  return true;
}

bool io_round_trips(std::string& note) {
  std::string formats, reruns;
  bool formats_ok = format_round_trips(formats);
  bool reruns_ok = cli_rerun_determinism(reruns);
  note = (formats_ok ? formats : "FORMATS: " + formats) + "; " +
         (reruns_ok ? reruns : "RERUNS: " + reruns);
  return formats_ok && reruns_ok;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const Criterion criteria[] = {
      {"solver oracle equivalence", solver_oracle_equivalence},
      {"full-scale exact solve under 5 s", full_scale_tractability},
      {"objective monotone in budget", budget_monotonicity},
      {"fixed widths and hidden loop preserved", graph_constraints},
      {"pruning shrinks monotonically", pruning_shrinkage},
      {"retraining objective hand values", retrain_objective},
      {"surface normals from analytic planes", normal_geometry},
      {"curation accept/scale/reject semantics", curation_semantics},
      {"metric definitions and orderings", metric_definitions},
      {"round-trips and rerun determinism", io_round_trips},
  };

  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    std::string note;
    bool ok = false;
    try {
      ok = c.run(note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("%s %2d %s%s%s\n", ok ? "PASS" : "FAIL", index, c.name,
                note.empty() ? "" : " -- ", note.c_str());
  }
  if (failures) std::printf("%d of %d checks failed\n", failures, index);
  return failures == 0 ? 0 : 1;
}
