#include <CLI11.hpp>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>
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

namespace {

// 0 = success, 1 = bad input, 2 = the inputs were fine but the result is
// infeasible or degenerate.
int exit_code_for(Errc code) {
  switch (code) {
    case Errc::Infeasible:
    case Errc::EmptySpace:
    case Errc::AllFixed:
    case Errc::Degenerate:
    case Errc::EmptyMask:
    case Errc::ResolutionTooCoarse:
      return 2;
    default:
      return 1;
  }
}

uint64_t parse_seed(const std::string& tok, const std::string& what) {
  if (tok.empty()) fail(Errc::ParseError, what + ": empty value");
  for (char c : tok)
    if (c < '0' || c > '9')
      fail(Errc::ParseError,
           what + " must be a decimal unsigned integer, got '" + tok + "'");
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size() || errno == ERANGE)
    fail(Errc::ParseError, what + " '" + tok + "' is out of range");
  return v;
}

// Explicit flag beats the config file; the DNC_SEED environment variable is
// the last fallback before 0.
uint64_t resolve_seed(std::string seed_str) {
  if (seed_str.empty()) {
    const char* env = std::getenv("DNC_SEED");
    if (env) seed_str = env;
  }
  return seed_str.empty() ? 0 : parse_seed(seed_str, "seed");
}

// Optional key=value file per subcommand. Keys are spelled like the long
// flags without the dashes; a flag given on the command line wins over the
// file, and keys that match no flag are rejected.
struct ConfigMap {
  struct Binding {
    std::string key;
    CLI::Option* flag;
    std::function<void(const std::string&)> apply;
  };
  std::vector<Binding> bindings;

  void add(CLI::Option* flag, const std::string& key, std::string* dst) {
    bindings.push_back({key, flag, [dst](const std::string& v) { *dst = v; }});
  }
  void add(CLI::Option* flag, const std::string& key, double* dst) {
    bindings.push_back({key, flag, [dst, key](const std::string& v) {
                          *dst = parse_double(v, "config key " + key);
                        }});
  }
  void add(CLI::Option* flag, const std::string& key, int* dst) {
    bindings.push_back({key, flag, [dst, key](const std::string& v) {
                          *dst = int(parse_int(v, "config key " + key));
                        }});
  }
  void add(CLI::Option* flag, const std::string& key, long long* dst) {
    bindings.push_back({key, flag, [dst, key](const std::string& v) {
                          *dst = parse_int(v, "config key " + key);
                        }});
  }
  void add(CLI::Option* flag, const std::string& key, uint64_t* dst) {
    bindings.push_back({key, flag, [dst, key](const std::string& v) {
                          *dst = parse_seed(v, "config key " + key);
                        }});
  }

  void apply(const std::string& path) const {
    if (path.empty()) return;
    auto kv = io::read_key_values(path);
    std::set<std::string> known;
    for (const auto& b : bindings) {
      known.insert(b.key);
      auto it = kv.find(b.key);
      if (it == kv.end()) continue;
      if (b.flag->count() > 0) continue;
      b.apply(it->second);
    }
    for (const auto& [key, value] : kv)
      if (!known.count(key))
        fail(Errc::ParseError, path + ": unknown config key '" + key + "'");
  }
};

void require_set(const std::string& value, const char* flag) {
  if (value.empty())
    fail(Errc::InvalidArgument, std::string("missing required ") + flag);
}

std::vector<double> parse_budgets(const std::string& csv) {
  if (csv.empty())
    fail(Errc::InvalidArgument, "at least one budget is required");
  std::vector<double> out;
  for (auto tok : split(csv, ','))
    out.push_back(parse_double(tok, "budgets"));
  return out;
}

std::string hex16(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
  return buf;
}

std::string sample_id(const std::string& dir) {
  fs::path p(dir);
  if (!p.has_filename()) p = p.parent_path();  // tolerate a trailing slash
  std::string name = p.filename().string();
  return name.empty() ? dir : name;
}

// Deterministic stand-in tensors for runs without measured weights and
// gradients: every layer gets dense (out, in) arrays from one shared stream.
std::map<std::string, prune::LayerTensors> synthetic_tensors(
    const prune::LayerGraph& graph, uint64_t seed) {
  std::map<std::string, prune::LayerTensors> out;
  Rng rng(seed);
  for (const auto& n : graph.nodes) {
    prune::LayerTensors t;
    t.weights.shape = {n.out_channels, n.in_channels};
    t.gradients.shape = t.weights.shape;
    size_t count = t.weights.element_count();
    t.weights.data.reserve(count);
    t.gradients.data.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      t.weights.data.push_back(float(rng.uniform(-1.0, 1.0)));
      t.gradients.data.push_back(float(rng.uniform(-1.0, 1.0)));
    }
    out.emplace(n.id, std::move(t));
  }
  return out;
}

struct GenerateOpts {
  std::string grid;
  std::string out;
  std::string seed;
  int limit = -1;             // -1: keep the grid file's value
  int include_identity = -1;  // -1: keep the grid file's value
};

int run_generate(const GenerateOpts& opts) {
  require_set(opts.grid, "--grid");
  require_set(opts.out, "--out");
  if (opts.limit < -1)
    fail(Errc::InvalidArgument, "limit must be non-negative");
  if (opts.include_identity < -1 || opts.include_identity > 1)
    fail(Errc::InvalidArgument, "include-identity must be 0 or 1");

  io::GenerationSpec spec = io::read_grid_file(opts.grid);
  const uint64_t seed = resolve_seed(opts.seed);
  spec.metric.seed = seed;
  if (opts.limit >= 0) spec.limit = opts.limit;
  if (opts.include_identity >= 0)
    spec.include_identity = opts.include_identity != 0;

  auto table =
      candgen::build_candidate_table(spec.teachers, spec.grid, spec.cost,
                                     spec.metric, spec.limit,
                                     spec.include_identity);
  table.header["seed"] = std::to_string(seed);
  table.header["grid_hash"] = hex16(io::file_hash(opts.grid));
  table.header["metric_name"] = spec.metric_name;
  io::write_candidate_table(opts.out, table);

  size_t candidates = 0;
  for (const auto& block : table.blocks) candidates += block.size();
  std::cout << "wrote " << opts.out << ": " << table.block_count()
            << " blocks, " << candidates << " candidates, search space "
            << search::count_search_space(table).str() << "\n";
  return 0;
}

struct SearchOpts {
  std::string table;
  std::string budgets;
  std::string out_dir;
  std::string prefix = "plan";
  std::string solver = "exact";
  double resolution = 0.01;
};

search::SelectionPlan solve_one(const search::CandidateTable& table,
                                double budget, const SearchOpts& opts) {
  if (opts.solver == "dp") return search::solve_dp(table, budget, opts.resolution);
  return search::solve_exact(table, budget);
}

int run_search(const SearchOpts& opts) {
  require_set(opts.table, "--table");
  require_set(opts.out_dir, "--out-dir");
  if (opts.solver != "exact" && opts.solver != "dp")
    fail(Errc::InvalidArgument, "solver must be 'exact' or 'dp'");

  auto table = io::read_candidate_table(opts.table);
  auto budgets = parse_budgets(opts.budgets);
  fs::create_directories(opts.out_dir);

  bool any_infeasible = false;
  for (size_t k = 0; k < budgets.size(); ++k) {
    try {
      auto plan = solve_one(table, budgets[k], opts);
      const std::string file =
          (fs::path(opts.out_dir) /
           (opts.prefix + "_" + std::to_string(k + 1) + ".tsv"))
              .string();
      io::write_selection_plan(file, plan);
      std::cout << format_shortest(budgets[k]) << "\t"
                << format_shortest(plan.objective) << "\t"
                << format_shortest(plan.total_delta_time) << "\t" << file
                << "\n";
    } catch (const InfeasibleError& e) {
      any_infeasible = true;
      std::cout << format_shortest(budgets[k]) << "\tINFEASIBLE\t"
                << format_shortest(e.min_total_dt()) << "\t-\n";
    }
  }
  return any_infeasible ? 2 : 0;
}

struct SweepOpts {
  std::string table;
  std::string budgets;
  std::string out;
};

int run_sweep(const SweepOpts& opts) {
  require_set(opts.table, "--table");
  auto table = io::read_candidate_table(opts.table);
  auto budgets = parse_budgets(opts.budgets);
  auto entries = search::pareto_sweep(table, budgets);

  std::string text = "#budget\tobjective\ttotal_dt\toptimal\n";
  bool any_feasible = false;
  for (const auto& entry : entries) {
    text += format_shortest(entry.budget);
    if (entry.plan) {
      any_feasible = true;
      text += "\t" + format_shortest(entry.plan->objective);
      text += "\t" + format_shortest(entry.plan->total_delta_time);
      text += entry.plan->optimal ? "\t1\n" : "\t0\n";
    } else {
      text += "\tINFEASIBLE\t" +
              format_shortest(entry.min_total_delta_time) + "\t-\n";
    }
  }
  if (!opts.out.empty()) io::atomic_write(opts.out, text);
  std::cout << text;
  return any_feasible ? 0 : 2;
}

struct PruneOpts {
  std::string graph;
  std::string out;
  std::string tensors;
  std::string aggregate = "sum";
  double ratio = 0.0;
  uint64_t tensors_seed = 1;
};

int run_prune(const PruneOpts& opts) {
  require_set(opts.graph, "--graph");
  require_set(opts.out, "--out");
  if (opts.aggregate != "sum" && opts.aggregate != "mean")
    fail(Errc::InvalidArgument, "aggregate must be 'sum' or 'mean'");

  auto graph = io::read_layer_graph(opts.graph);
  auto tensors = opts.tensors.empty()
                     ? synthetic_tensors(graph, opts.tensors_seed)
                     : io::read_tensor_manifest(opts.tensors);
  const auto aggregate = opts.aggregate == "mean" ? prune::GroupAggregate::Mean
                                                  : prune::GroupAggregate::Sum;
  auto importance = prune::taylor_importance(graph, tensors, aggregate);
  auto plan = prune::global_prune(importance, graph, opts.ratio);
  io::write_prune_plan(opts.out, plan);

  // Re-validate by applying the plan, then append the report to the file.
  auto pruned = prune::apply_plan(graph, plan);
  const double flops_before = prune::estimate_graph_flops(graph);
  const double flops_after = prune::estimate_graph_flops(pruned);
  std::string body = io::read_file(opts.out);
  body += "#validated=1 #flops_before=" + format_shortest(flops_before) +
          " #flops_after=" + format_shortest(flops_after) + "\n";
  io::atomic_write(opts.out, body);

  const double fraction =
      plan.params_before > 0.0 ? plan.params_after / plan.params_before : 0.0;
  std::cout << "ratio=" << format_shortest(plan.ratio) << " removed="
            << plan.channels_removed << "/" << plan.channels_total
            << " params=" << format_shortest(plan.params_before) << "->"
            << format_shortest(plan.params_after) << " param_fraction="
            << format_shortest(fraction) << " flops="
            << format_shortest(flops_before) << "->"
            << format_shortest(flops_after) << " validated=ok\n";
  return 0;
}

struct CurateOpts {
  std::string manifest;
  std::string out;
  std::string labels_dir;
  int stride = 1;
  label::CurationThresholds thresholds;
};

int run_curate(const CurateOpts& opts) {
  require_set(opts.manifest, "--manifest");
  require_set(opts.out, "--out");

  auto dirs = io::read_manifest(opts.manifest);
  dirs = label::subsample_manifest(dirs, opts.stride);

  std::vector<io::VerdictRow> rows;
  long long accepted = 0;
  for (const auto& dir : dirs) {
    io::VerdictRow row;
    row.sample_id = sample_id(dir);
    try {
      auto disp = io::read_disparity((fs::path(dir) / "disp.pfm").string());
      auto mono = io::read_pfm((fs::path(dir) / "mono_depth.pfm").string());
      auto rig = io::read_rig((fs::path(dir) / "rig.txt").string());
      const std::string sky_path = (fs::path(dir) / "sky.pgm").string();
      Mask sky = fs::exists(sky_path)
                     ? io::read_pgm(sky_path)
                     : Mask(disp.values.width, disp.values.height, false);

      auto verdict = label::curate_sample(disp, mono, rig, sky, opts.thresholds);
      row.ok = true;
      row.accepted = verdict.accepted;
      row.fraction = verdict.agreement_fraction;
      row.threshold = opts.thresholds.cosine_threshold;
      if (row.accepted) ++accepted;

      if (!opts.labels_dir.empty()) {
        const fs::path sample_out = fs::path(opts.labels_dir) / row.sample_id;
        fs::create_directories(sample_out);
        io::write_pfm((sample_out / "label.pfm").string(),
                      verdict.final_label.values);
        io::write_pgm((sample_out / "label_valid.pgm").string(),
                      verdict.final_label.valid);
        io::write_pgm((sample_out / "consistency.pgm").string(),
                      verdict.consistency);
      }
    } catch (const Error& e) {
      // One broken sample must not abort the batch; record it and move on.
      row.ok = false;
      row.error = errc_name(e.code());
    }
    if (row.ok) {
      std::cout << row.sample_id << "\t" << (row.accepted ? 1 : 0) << "\t"
                << format_shortest(row.fraction) << "\t"
                << format_shortest(row.threshold) << "\n";
    } else {
      std::cout << row.sample_id << "\terror\t" << row.error << "\n";
    }
    rows.push_back(std::move(row));
  }
  io::write_verdict_report(opts.out, rows);
  std::cout << "accepted " << accepted << "/" << rows.size() << "\n";
  return 0;
}

struct EvalOpts {
  std::string pred;
  std::string gt;
  std::string mask;
};

int run_eval(const EvalOpts& opts) {
  require_set(opts.pred, "--pred");
  require_set(opts.gt, "--gt");
  require_set(opts.mask, "--mask");
  Image pred = io::read_pfm(opts.pred);
  Image gt = io::read_pfm(opts.gt);
  Mask mask = io::read_pgm(opts.mask);
  std::cout << format_shortest(metrics::bp_x(pred, gt, 1.0, mask)) << "\t"
            << format_shortest(metrics::bp_x(pred, gt, 2.0, mask)) << "\t"
            << format_shortest(metrics::bp_x(pred, gt, 3.0, mask)) << "\t"
            << format_shortest(metrics::d1(pred, gt, mask)) << "\t"
            << format_shortest(metrics::epe(pred, gt, mask)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compression planning toolkit: candidate grids, budgeted block"
               " selection, channel pruning, and pseudo-label curation"};
  app.require_subcommand(1);
  int rc = 0;

  const char* config_help = "key=value configuration file; explicit flags win";

  GenerateOpts gen;
  ConfigMap gen_cfg;
  std::string gen_cfg_path;
  auto* cmd_gen = app.add_subcommand(
      "generate", "expand a grid file into a candidate table");
  gen_cfg.add(cmd_gen->add_option("--grid", gen.grid, "grid specification file"),
              "grid", &gen.grid);
  gen_cfg.add(cmd_gen->add_option("--out", gen.out, "candidate table to write"),
              "out", &gen.out);
  gen_cfg.add(cmd_gen->add_option("--seed", gen.seed,
                                  "seed for the synthetic metric deltas "
                                  "(falls back to DNC_SEED, then 0)"),
              "seed", &gen.seed);
  gen_cfg.add(cmd_gen->add_option("--limit", gen.limit,
                                  "max candidates per block"),
              "limit", &gen.limit);
  gen_cfg.add(cmd_gen->add_option("--include-identity", gen.include_identity,
                                  "0/1: append a zero-cost teacher row per block")
                  ->check(CLI::Range(0, 1)),
              "include-identity", &gen.include_identity);
  cmd_gen->add_option("--config", gen_cfg_path, config_help);
  cmd_gen->callback([&] {
    gen_cfg.apply(gen_cfg_path);
    rc = run_generate(gen);
  });

  SearchOpts sea;
  ConfigMap sea_cfg;
  std::string sea_cfg_path;
  auto* cmd_sea = app.add_subcommand(
      "search", "pick one candidate per block under each time budget");
  sea_cfg.add(cmd_sea->add_option("--table", sea.table, "candidate table file"),
              "table", &sea.table);
  sea_cfg.add(cmd_sea->add_option("--budgets", sea.budgets,
                                  "comma-separated time budgets, ms"),
              "budgets", &sea.budgets);
  sea_cfg.add(cmd_sea->add_option("--out-dir", sea.out_dir,
                                  "directory for plan files"),
              "out-dir", &sea.out_dir);
  sea_cfg.add(cmd_sea->add_option("--prefix", sea.prefix,
                                  "plan file name prefix"),
              "prefix", &sea.prefix);
  sea_cfg.add(cmd_sea->add_option("--solver", sea.solver, "exact or dp")
                  ->check(CLI::IsMember({"exact", "dp"})),
              "solver", &sea.solver);
  sea_cfg.add(cmd_sea->add_option("--resolution", sea.resolution,
                                  "dp time discretization, ms"),
              "resolution", &sea.resolution);
  cmd_sea->add_option("--config", sea_cfg_path, config_help);
  cmd_sea->callback([&] {
    sea_cfg.apply(sea_cfg_path);
    rc = run_search(sea);
  });

  SweepOpts swp;
  ConfigMap swp_cfg;
  std::string swp_cfg_path;
  auto* cmd_swp = app.add_subcommand(
      "sweep", "trace the objective across an ascending budget list");
  swp_cfg.add(cmd_swp->add_option("--table", swp.table, "candidate table file"),
              "table", &swp.table);
  swp_cfg.add(cmd_swp->add_option("--budgets", swp.budgets,
                                  "comma-separated ascending budgets, ms"),
              "budgets", &swp.budgets);
  swp_cfg.add(cmd_swp->add_option("--out", swp.out, "summary file to write"),
              "out", &swp.out);
  cmd_swp->add_option("--config", swp_cfg_path, config_help);
  cmd_swp->callback([&] {
    swp_cfg.apply(swp_cfg_path);
    rc = run_sweep(swp);
  });

  PruneOpts pru;
  ConfigMap pru_cfg;
  std::string pru_cfg_path;
  auto* cmd_pru = app.add_subcommand(
      "prune", "rank channel groups and plan a global prune");
  pru_cfg.add(cmd_pru->add_option("--graph", pru.graph, "layer graph file"),
              "graph", &pru.graph);
  pru_cfg.add(cmd_pru->add_option("--ratio", pru.ratio,
                                  "fraction of prunable channels to remove, "
                                  "in (0, 1)"),
              "ratio", &pru.ratio);
  pru_cfg.add(cmd_pru->add_option("--out", pru.out, "prune plan to write"),
              "out", &pru.out);
  pru_cfg.add(cmd_pru->add_option("--tensors", pru.tensors,
                                  "tensor manifest with weights and gradients"),
              "tensors", &pru.tensors);
  pru_cfg.add(cmd_pru->add_option("--tensors-seed", pru.tensors_seed,
                                  "seed for synthetic tensors when no "
                                  "manifest is given"),
              "tensors-seed", &pru.tensors_seed);
  pru_cfg.add(cmd_pru->add_option("--aggregate", pru.aggregate,
                                  "combine member scores by sum or mean")
                  ->check(CLI::IsMember({"sum", "mean"})),
              "aggregate", &pru.aggregate);
  cmd_pru->add_option("--config", pru_cfg_path, config_help);
  cmd_pru->callback([&] {
    pru_cfg.apply(pru_cfg_path);
    rc = run_prune(pru);
  });

  CurateOpts cur;
  ConfigMap cur_cfg;
  std::string cur_cfg_path;
  auto* cmd_cur = app.add_subcommand(
      "curate", "accept or reject pseudo-labels by normal-map agreement");
  cur_cfg.add(cmd_cur->add_option("--manifest", cur.manifest,
                                  "file listing one sample directory per line"),
              "manifest", &cur.manifest);
  cur_cfg.add(cmd_cur->add_option("--out", cur.out, "verdict report to write"),
              "out", &cur.out);
  cur_cfg.add(cmd_cur->add_option("--labels-dir", cur.labels_dir,
                                  "directory for finalized labels and "
                                  "consistency masks"),
              "labels-dir", &cur.labels_dir);
  cur_cfg.add(cmd_cur->add_option("--stride", cur.stride,
                                  "keep every stride-th sample"),
              "stride", &cur.stride);
  cur_cfg.add(cmd_cur->add_option("--cos-threshold",
                                  cur.thresholds.cosine_threshold,
                                  "per-pixel cosine agreement threshold"),
              "cos-threshold", &cur.thresholds.cosine_threshold);
  cur_cfg.add(cmd_cur->add_option("--accept-fraction",
                                  cur.thresholds.acceptance_fraction,
                                  "minimum agreeing fraction to accept a sample"),
              "accept-fraction", &cur.thresholds.acceptance_fraction);
  cur_cfg.add(cmd_cur->add_option("--epsilon-disp", cur.thresholds.epsilon_disp,
                                  "disparities at or below this are invalid, px"),
              "epsilon-disp", &cur.thresholds.epsilon_disp);
  cur_cfg.add(cmd_cur->add_option("--min-valid",
                                  cur.thresholds.min_valid_pixels,
                                  "fewer defined non-sky pixels than this "
                                  "is degenerate"),
              "min-valid", &cur.thresholds.min_valid_pixels);
  cmd_cur->add_option("--config", cur_cfg_path, config_help);
  cmd_cur->callback([&] {
    cur_cfg.apply(cur_cfg_path);
    rc = run_curate(cur);
  });

  EvalOpts evl;
  ConfigMap evl_cfg;
  std::string evl_cfg_path;
  auto* cmd_evl = app.add_subcommand(
      "eval", "print BP-1/2/3, D1, and EPE for one disparity map");
  evl_cfg.add(cmd_evl->add_option("--pred", evl.pred,
                                  "predicted disparity PFM"),
              "pred", &evl.pred);
  evl_cfg.add(cmd_evl->add_option("--gt", evl.gt, "ground-truth disparity PFM"),
              "gt", &evl.gt);
  evl_cfg.add(cmd_evl->add_option("--mask", evl.mask, "valid-pixel PGM mask"),
              "mask", &evl.mask);
  cmd_evl->add_option("--config", evl_cfg_path, config_help);
  cmd_evl->callback([&] {
    evl_cfg.apply(evl_cfg_path);
    rc = run_eval(evl);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 prints help requests itself; anything else is an input error.
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
  return rc;
}
