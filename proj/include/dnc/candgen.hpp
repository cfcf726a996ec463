#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dnc/search.hpp"

namespace dnc::candgen {

enum class LayerKind {
  Conv3D,
  Deconv3D,
  APC,
  ResConv3D,
  VolumeExcitation,
  DispTransformerLayer,
};

const char* kind_name(LayerKind k);
LayerKind parse_kind(std::string_view token);

struct Shape {
  int c = 0;  // channels
  int d = 0;  // disparity
  int h = 0;
  int w = 0;
  bool operator==(const Shape&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::Conv3D;
  int in_channels = 0;
  int out_channels = 0;
  // (d, h, w). An APC layer stores one triple but is costed as its
  // factorized pair: spatial (1, h, w) then disparity (d, 1, 1).
  std::array<int, 3> kernel{1, 1, 1};
  // Conv kinds divide spatial dims by stride (same-padding semantics);
  // Deconv3D multiplies them instead.
  std::array<int, 3> stride{1, 1, 1};
  // Transformer kinds only; zero otherwise.
  int heads = 0;
  int ffn_dim = 0;
  int num_layers = 0;
  // DispTransformerLayer tokenization: tokens = prod(max(1, dim/divisor)).
  std::array<int, 3> token_divisors{4, 16, 16};
};

struct LayerBlockSpec {
  int block_index = 0;  // 1-based
  std::vector<LayerSpec> layers;
  Shape input_shape;
  Shape output_shape;
};

// Shape-chains the block: positive dims, adjacent channel dims matching,
// per-layer spatial propagation landing exactly on output_shape. Throws
// SHAPE_MISMATCH / INVALID_ARGUMENT.
void validate_block_spec(const LayerBlockSpec& spec);

// Output shape of `layer` applied to `in`. Part of validate_block_spec but
// exposed for tests and builders.
Shape propagate(const LayerSpec& layer, const Shape& in);

// FNV-1a over the canonical structural serialization; stable across runs.
uint64_t spec_hash(const LayerBlockSpec& spec);

// Deterministic human-readable candidate id derived from the structure,
// e.g. "conv3d-m16-l2-k3", "dtl-h4-f256-l2", "vexc-l1".
std::string describe(const LayerBlockSpec& spec);

struct CostModel {
  double flops_per_ms = 1e9;
  // Applied to bandwidth-bound kinds (Deconv3D, VolumeExcitation).
  double memory_bandwidth_penalty = 1.5;
};

double estimate_flops(const LayerBlockSpec& spec);
double estimate_latency(const LayerBlockSpec& spec, const CostModel& model);

// True iff the candidate's I/O channel dims equal the teacher's and its
// estimated latency is strictly below teacher_time.
bool validate_candidate(const LayerBlockSpec& spec, const LayerBlockSpec& teacher,
                        double teacher_time, const CostModel& model);

struct ParamGrid {
  std::vector<LayerKind> kinds;
  std::vector<double> channel_multipliers;
  int max_layers = 1;
  std::vector<int> kernel_sizes;
  std::vector<int> heads;          // transformer variants
  std::vector<int> ffn_dims;       // transformer variants
  std::array<int, 3> token_divisors{4, 16, 16};
};

// Entry layer carrying the teacher's spatial transition (Deconv3D entry for
// upsampling blocks), `layers - 1` internal mid->mid layers, and a 1x1x1
// exit conv back to the teacher's output channels. VolumeExcitation and
// DispTransformerLayer blocks are shape-preserving stacks instead.
LayerBlockSpec make_uniform_block(int block_index, LayerKind kind, Shape in,
                                  Shape out, int mid, int layers, int kernel,
                                  int heads, int ffn_dim,
                                  std::array<int, 3> token_divisors);

// Deterministic expansion of the grid against one teacher block: every
// returned spec passes validate_candidate, sorted by estimated latency
// ascending then spec hash, truncated to `limit`. Throws EMPTY_SPACE when
// nothing satisfies both constraints.
std::vector<LayerBlockSpec> enumerate_block_candidates(
    const LayerBlockSpec& teacher, const ParamGrid& grid, double teacher_time,
    const CostModel& model, int limit);

// Placeholder error-metric deltas for generated tables: proportional to the
// block's FLOP reduction fraction plus seeded uniform noise. Real deltas
// come from measurements; tables carry synthetic_dm=1 in their header so
// downstream consumers can tell the difference.
struct SyntheticMetricModel {
  double scale = 1.0;   // percentage points at 100% FLOP reduction
  double noise = 0.05;  // uniform +/- amplitude
  uint64_t seed = 0;
};

search::CandidateTable build_candidate_table(
    const std::vector<LayerBlockSpec>& teachers, const ParamGrid& grid,
    const CostModel& model, const SyntheticMetricModel& dm, int limit,
    bool include_identity);

}  // namespace dnc::candgen
