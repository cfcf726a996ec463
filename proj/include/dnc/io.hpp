#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dnc/candgen.hpp"
#include "dnc/image.hpp"
#include "dnc/label.hpp"
#include "dnc/prune.hpp"
#include "dnc/search.hpp"

namespace dnc::io {

// Whole file as bytes. Throws IO_ERROR naming the path.
std::string read_file(const std::string& path);

// Writes to "<path>.tmp" and renames over the target, so readers never see
// a half-written file. The parent directory must exist.
void atomic_write(const std::string& path, std::string_view bytes);

// FNV-1a over the file's raw bytes, printed as 16 hex digits elsewhere.
uint64_t file_hash(const std::string& path);

// Candidate tables: `#dnc-candidates v1` first, then `#key=value` metadata,
// then one `block<TAB>candidate_id<TAB>delta_metric<TAB>delta_time` record
// per line with at most 9 fractional digits. Reading validates the table
// structurally; writing emits the canonical decimal form, so values on the
// 1e-9 grid survive a round trip bit-exact.
search::CandidateTable read_candidate_table(const std::string& path);
void write_candidate_table(const std::string& path,
                           const search::CandidateTable& table);

// Selection plans: `block<TAB>candidate_id` lines in block order plus one
// `#objective=.. #total_dt=.. #budget=.. #optimal=0|1` footer. Footer values
// use the shortest round-trip form, so the doubles come back bit-exact.
search::SelectionPlan read_selection_plan(const std::string& path);
void write_selection_plan(const std::string& path,
                          const search::SelectionPlan& plan);

// Layer graphs: `node<TAB>id<TAB>kind<TAB>in<TAB>out<TAB>tags` and
// `edge<TAB>producer<TAB>consumer<TAB>recurrent` lines; tags are a comma
// list or `-` for none. Reading rebuilds the dependency groups, so the
// returned graph is fully validated.
prune::LayerGraph read_layer_graph(const std::string& path);
void write_layer_graph(const std::string& path, const prune::LayerGraph& graph);

// Prune plans: one `group_id<TAB>removed_indices<TAB>width` line per group
// (`-` when the group keeps every channel) plus a `#ratio=..` footer carrying
// the channel counts and parameter totals.
prune::PrunePlan read_prune_plan(const std::string& path);
void write_prune_plan(const std::string& path, const prune::PrunePlan& plan);

// Tensor manifests: `layer_id<TAB>shape<TAB>weights_file<TAB>grads_file`
// lines; the referenced files are raw little-endian float32 arrays resolved
// relative to the manifest. Writing places the arrays next to the manifest.
std::map<std::string, prune::LayerTensors> read_tensor_manifest(
    const std::string& path);
void write_tensor_manifest(const std::string& path,
                           const std::map<std::string, prune::LayerTensors>& tensors);

// Grayscale PFM rasters. Written with scale -1 (little-endian) and rows
// bottom-up per the format's sign convention; both endiannesses are read.
// Pixel bits pass through untouched, so NaN payloads round-trip.
Image read_pfm(const std::string& path);
void write_pfm(const std::string& path, const Image& image);

// Binary PGM (P5, maxval 255): 255 = true, 0 = false. Any nonzero byte
// reads back as true.
Mask read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Mask& mask);

// PFM raster interpreted as a disparity map: positive finite pixels are
// valid, everything else (zero, negative, NaN, inf) is masked out.
label::DisparityMap read_disparity(const std::string& path);

// Camera rigs as `fx= fy= cx= cy= baseline=` lines. All five keys are
// required, unknown keys are rejected, and the values are validated.
label::CameraRig read_rig(const std::string& path);
void write_rig(const std::string& path, const label::CameraRig& rig);

// Plain `key=value` text with `#` comments and blank lines skipped.
// Duplicate or malformed lines raise PARSE_ERROR with the line number.
std::map<std::string, std::string> read_key_values(const std::string& path);

// Curation batch manifest: one sample directory per line, `#` comments and
// blank lines skipped, order preserved.
std::vector<std::string> read_manifest(const std::string& path);

// One curated sample in a verdict report. Rows with ok=false carry the
// failure's error-code name instead of a verdict.
struct VerdictRow {
  std::string sample_id;
  bool ok = false;
  bool accepted = false;
  double fraction = 0.0;
  double threshold = 0.0;
  std::string error;
};

// Verdict reports: `sample_id<TAB>accepted<TAB>fraction<TAB>threshold` rows
// (or `sample_id<TAB>error<TAB>code` for failed samples) between a
// `#dnc-verdicts v1` magic and an `#accepted=<n> #samples=<m>` footer.
std::vector<VerdictRow> read_verdict_report(const std::string& path);
void write_verdict_report(const std::string& path,
                          const std::vector<VerdictRow>& rows);

// Everything cmd_generate needs, parsed from one grid file: the teacher
// stack, the candidate grid, the cost and synthetic-metric models, and the
// table-level options. The metric seed is left for the caller to fill in.
struct GenerationSpec {
  std::vector<candgen::LayerBlockSpec> teachers;
  candgen::ParamGrid grid;
  candgen::CostModel cost;
  candgen::SyntheticMetricModel metric;
  int limit = 200;
  bool include_identity = false;
  std::string metric_name = "bp2";
};

// Grid files are `key=value` text: `kinds`, `channel_multipliers`,
// `kernel_sizes`, `teacher_count`, `teacher_kind`, and `teacher_in_shape`
// are required; everything else has documented defaults. Unknown keys are
// rejected.
GenerationSpec read_grid_file(const std::string& path);

}  // namespace dnc::io
