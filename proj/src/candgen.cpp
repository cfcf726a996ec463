#include "dnc/candgen.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "dnc/error.hpp"
#include "dnc/text.hpp"

namespace dnc::candgen {

namespace {

constexpr std::array<LayerKind, 6> kAllKinds = {
    LayerKind::Conv3D,          LayerKind::Deconv3D,
    LayerKind::APC,             LayerKind::ResConv3D,
    LayerKind::VolumeExcitation, LayerKind::DispTransformerLayer,
};

bool is_transformer(LayerKind k) { return k == LayerKind::DispTransformerLayer; }

bool shape_preserving(LayerKind k) {
  return k == LayerKind::VolumeExcitation || k == LayerKind::DispTransformerLayer;
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct SpatialTransition {
  bool up = false;
  std::array<int, 3> factor{1, 1, 1};  // stride for conv entry, scale for deconv
};

// Per-axis factor between a block's input and output dims. Downsampling
// uses same-padding semantics (out = ceil(in / stride)); upsampling must be
// an exact multiple. Mixing directions across axes is rejected.
SpatialTransition spatial_transition(const Shape& in, const Shape& out) {
  const int id[3] = {in.d, in.h, in.w};
  const int od[3] = {out.d, out.h, out.w};
  SpatialTransition tr;
  bool down = false;
  for (int a = 0; a < 3; ++a) {
    if (od[a] == id[a]) continue;
    if (od[a] > id[a]) {
      if (od[a] % id[a] != 0)
        fail(Errc::ShapeMismatch, "output dims must be an integer multiple of input dims when upsampling");
      tr.factor[size_t(a)] = od[a] / id[a];
      tr.up = true;
    } else {
      int s = ceil_div(id[a], od[a]);
      if (ceil_div(id[a], s) != od[a])
        fail(Errc::ShapeMismatch, "no integer stride maps input dim " +
                                      std::to_string(id[a]) + " onto output dim " +
                                      std::to_string(od[a]));
      tr.factor[size_t(a)] = s;
      down = true;
    }
  }
  if (tr.up && down)
    fail(Errc::ShapeMismatch, "block mixes up- and down-sampling across axes");
  return tr;
}

double layer_flops(const LayerSpec& l, const Shape& out) {
  const double vox = double(out.d) * double(out.h) * double(out.w);
  const double kvol = double(l.kernel[0]) * double(l.kernel[1]) * double(l.kernel[2]);
  const double cin = l.in_channels;
  const double cout = l.out_channels;
  switch (l.kind) {
    case LayerKind::Conv3D:
    case LayerKind::Deconv3D:
      // Deconv counted as the equivalent transposed conv at output resolution.
      return 2.0 * cin * cout * kvol * vox;
    case LayerKind::APC:
      // Factorized pair: spatial (1,h,w) then disparity (d,1,1).
      return 2.0 * cin * cout * double(l.kernel[1]) * double(l.kernel[2]) * vox +
             2.0 * cout * cout * double(l.kernel[0]) * vox;
    case LayerKind::ResConv3D: {
      double f = 2.0 * cin * cout * kvol * vox + 2.0 * cout * cout * kvol * vox;
      bool strided = l.stride != std::array<int, 3>{1, 1, 1};
      if (l.in_channels != l.out_channels || strided) f += 2.0 * cin * cout * vox;  // 1x1x1 skip
      return f;
    }
    case LayerKind::VolumeExcitation:
      // Elementwise modulation plus the 2D guidance projection.
      return cout * vox + 2.0 * cin * cout * double(out.h) * double(out.w);
    case LayerKind::DispTransformerLayer: {
      const double tokens = double(std::max(1, out.d / l.token_divisors[0])) *
                            double(std::max(1, out.h / l.token_divisors[1])) *
                            double(std::max(1, out.w / l.token_divisors[2]));
      const double e = cout;
      const double per_layer =
          2.0 * (4.0 * tokens * e * e +          // q/k/v/out projections
                 2.0 * tokens * tokens * e +     // attention matmuls
                 2.0 * tokens * e * double(l.ffn_dim) * 2.0);  // feed-forward pair
      return per_layer * double(l.num_layers);
    }
  }
  return 0.0;
}

double kind_penalty(LayerKind k, const CostModel& model) {
  return (k == LayerKind::Deconv3D || k == LayerKind::VolumeExcitation)
             ? model.memory_bandwidth_penalty
             : 1.0;
}

void check_model(const CostModel& model) {
  if (!(model.flops_per_ms > 0.0))
    fail(Errc::InvalidArgument, "flops_per_ms must be positive");
  if (!(model.memory_bandwidth_penalty > 0.0))
    fail(Errc::InvalidArgument, "memory_bandwidth_penalty must be positive");
}

}  // namespace

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv3D: return "Conv3D";
    case LayerKind::Deconv3D: return "Deconv3D";
    case LayerKind::APC: return "APC";
    case LayerKind::ResConv3D: return "ResConv3D";
    case LayerKind::VolumeExcitation: return "VolumeExcitation";
    case LayerKind::DispTransformerLayer: return "DispTransformerLayer";
  }
  return "?";
}

LayerKind parse_kind(std::string_view token) {
  for (LayerKind k : kAllKinds)
    if (token == kind_name(k)) return k;
  fail(Errc::ParseError, "unknown layer kind '" + std::string(token) + "'");
}

Shape propagate(const LayerSpec& layer, const Shape& in) {
  if (layer.in_channels != in.c)
    fail(Errc::ShapeMismatch, "layer expects " + std::to_string(layer.in_channels) +
                                  " input channels, got " + std::to_string(in.c));
  Shape out;
  out.c = layer.out_channels;
  if (layer.kind == LayerKind::Deconv3D) {
    out.d = in.d * layer.stride[0];
    out.h = in.h * layer.stride[1];
    out.w = in.w * layer.stride[2];
  } else if (shape_preserving(layer.kind)) {
    out.d = in.d;
    out.h = in.h;
    out.w = in.w;
  } else {
    out.d = ceil_div(in.d, layer.stride[0]);
    out.h = ceil_div(in.h, layer.stride[1]);
    out.w = ceil_div(in.w, layer.stride[2]);
  }
  return out;
}

void validate_block_spec(const LayerBlockSpec& spec) {
  if (spec.block_index < 1)
    fail(Errc::InvalidArgument, "block_index must be >= 1");
  if (spec.layers.empty())
    fail(Errc::InvalidArgument, "block " + std::to_string(spec.block_index) + " has no layers");
  for (int v : {spec.input_shape.c, spec.input_shape.d, spec.input_shape.h,
                spec.input_shape.w, spec.output_shape.c, spec.output_shape.d,
                spec.output_shape.h, spec.output_shape.w})
    if (v < 1) fail(Errc::InvalidArgument, "block shapes must be positive");

  for (const auto& l : spec.layers) {
    if (l.in_channels < 1 || l.out_channels < 1)
      fail(Errc::InvalidArgument, "layer channels must be positive");
    for (int k : l.kernel)
      if (k < 1) fail(Errc::InvalidArgument, "kernel dims must be positive");
    for (int s : l.stride)
      if (s < 1) fail(Errc::InvalidArgument, "stride dims must be positive");
    if (is_transformer(l.kind)) {
      if (l.heads < 1 || l.ffn_dim < 1 || l.num_layers < 1)
        fail(Errc::InvalidArgument, "transformer layers need positive heads, ffn_dim and num_layers");
      for (int d : l.token_divisors)
        if (d < 1) fail(Errc::InvalidArgument, "token divisors must be positive");
    } else if (l.heads != 0 || l.ffn_dim != 0 || l.num_layers != 0) {
      fail(Errc::InvalidArgument, std::string(kind_name(l.kind)) +
                                      " layers must leave transformer fields zero");
    }
    if (shape_preserving(l.kind) && l.in_channels != l.out_channels)
      fail(Errc::ShapeMismatch, std::string(kind_name(l.kind)) +
                                    " layers must preserve the channel count");
  }

  Shape cur = spec.input_shape;
  for (const auto& l : spec.layers) cur = propagate(l, cur);
  if (!(cur == spec.output_shape))
    fail(Errc::ShapeMismatch,
         "block " + std::to_string(spec.block_index) + " propagates to (" +
             std::to_string(cur.c) + "," + std::to_string(cur.d) + "," +
             std::to_string(cur.h) + "," + std::to_string(cur.w) +
             ") instead of its declared output shape");
}

uint64_t spec_hash(const LayerBlockSpec& spec) {
  std::string s;
  auto shape = [&](const Shape& sh) {
    s += std::to_string(sh.c) + "," + std::to_string(sh.d) + "," +
         std::to_string(sh.h) + "," + std::to_string(sh.w) + ";";
  };
  shape(spec.input_shape);
  shape(spec.output_shape);
  for (const auto& l : spec.layers) {
    s += kind_name(l.kind);
    for (int v : {l.in_channels, l.out_channels, l.kernel[0], l.kernel[1],
                  l.kernel[2], l.stride[0], l.stride[1], l.stride[2], l.heads,
                  l.ffn_dim, l.num_layers, l.token_divisors[0],
                  l.token_divisors[1], l.token_divisors[2]})
      s += " " + std::to_string(v);
    s += ";";
  }
  return fnv1a(s);
}

std::string describe(const LayerBlockSpec& spec) {
  const LayerSpec& entry = spec.layers.front();
  switch (entry.kind) {
    case LayerKind::DispTransformerLayer:
      return "dtl-h" + std::to_string(entry.heads) + "-f" +
             std::to_string(entry.ffn_dim) + "-l" + std::to_string(entry.num_layers);
    case LayerKind::VolumeExcitation:
      return "vexc-l" + std::to_string(spec.layers.size());
    default: {
      const char* tag = entry.kind == LayerKind::Conv3D     ? "conv3d"
                        : entry.kind == LayerKind::Deconv3D ? "deconv3d"
                        : entry.kind == LayerKind::APC      ? "apc"
                                                            : "resconv3d";
      int k = std::max({entry.kernel[0], entry.kernel[1], entry.kernel[2]});
      size_t conv_layers = spec.layers.size() - 1;  // entry + internals, exit excluded
      return std::string(tag) + "-m" + std::to_string(entry.out_channels) + "-l" +
             std::to_string(conv_layers) + "-k" + std::to_string(k);
    }
  }
}

double estimate_flops(const LayerBlockSpec& spec) {
  double total = 0.0;
  Shape cur = spec.input_shape;
  for (const auto& l : spec.layers) {
    Shape out = propagate(l, cur);
    total += layer_flops(l, out);
    cur = out;
  }
  return total;
}

double estimate_latency(const LayerBlockSpec& spec, const CostModel& model) {
  check_model(model);
  double weighted = 0.0;
  Shape cur = spec.input_shape;
  for (const auto& l : spec.layers) {
    Shape out = propagate(l, cur);
    weighted += layer_flops(l, out) * kind_penalty(l.kind, model);
    cur = out;
  }
  return weighted / model.flops_per_ms;
}

bool validate_candidate(const LayerBlockSpec& spec, const LayerBlockSpec& teacher,
                        double teacher_time, const CostModel& model) {
  validate_block_spec(spec);
  validate_block_spec(teacher);
  if (spec.input_shape.c != teacher.input_shape.c) return false;
  if (spec.output_shape.c != teacher.output_shape.c) return false;
  return estimate_latency(spec, model) < teacher_time;
}

LayerBlockSpec make_uniform_block(int block_index, LayerKind kind, Shape in,
                                  Shape out, int mid, int layers, int kernel,
                                  int heads, int ffn_dim,
                                  std::array<int, 3> token_divisors) {
  if (layers < 1) fail(Errc::InvalidArgument, "blocks need at least one layer");
  LayerBlockSpec b;
  b.block_index = block_index;
  b.input_shape = in;
  b.output_shape = out;

  if (shape_preserving(kind)) {
    if (!(in == out))
      fail(Errc::ShapeMismatch, std::string(kind_name(kind)) +
                                    " blocks must preserve the I/O shape");
    if (kind == LayerKind::VolumeExcitation) {
      for (int i = 0; i < layers; ++i) {
        LayerSpec l;
        l.kind = kind;
        l.in_channels = in.c;
        l.out_channels = in.c;
        b.layers.push_back(l);
      }
    } else {
      LayerSpec l;
      l.kind = kind;
      l.in_channels = in.c;
      l.out_channels = in.c;
      l.heads = heads;
      l.ffn_dim = ffn_dim;
      l.num_layers = layers;
      l.token_divisors = token_divisors;
      b.layers.push_back(l);
    }
    validate_block_spec(b);
    return b;
  }

  auto tr = spatial_transition(in, out);
  if (tr.up && kind != LayerKind::Deconv3D)
    fail(Errc::InvalidArgument, "upsampling blocks need a Deconv3D entry");
  if (!tr.up && kind == LayerKind::Deconv3D)
    fail(Errc::InvalidArgument, "Deconv3D entry requires an upsampling block");

  LayerSpec entry;
  entry.kind = kind;
  entry.in_channels = in.c;
  entry.out_channels = mid;
  entry.kernel = {kernel, kernel, kernel};
  entry.stride = tr.factor;
  b.layers.push_back(entry);

  LayerKind internal = kind == LayerKind::Deconv3D ? LayerKind::Conv3D : kind;
  for (int i = 1; i < layers; ++i) {
    LayerSpec l;
    l.kind = internal;
    l.in_channels = mid;
    l.out_channels = mid;
    l.kernel = {kernel, kernel, kernel};
    b.layers.push_back(l);
  }

  LayerSpec exit;
  exit.kind = LayerKind::Conv3D;
  exit.in_channels = mid;
  exit.out_channels = out.c;
  b.layers.push_back(exit);

  validate_block_spec(b);
  return b;
}

std::vector<LayerBlockSpec> enumerate_block_candidates(
    const LayerBlockSpec& teacher, const ParamGrid& grid, double teacher_time,
    const CostModel& model, int limit) {
  validate_block_spec(teacher);
  check_model(model);
  if (limit < 1) fail(Errc::InvalidArgument, "limit must be >= 1");
  if (grid.max_layers < 1) fail(Errc::InvalidArgument, "max_layers must be >= 1");
  for (double m : grid.channel_multipliers)
    if (!(m > 0.0))
      fail(Errc::InvalidArgument, "channel multipliers must be positive");
  for (int k : grid.kernel_sizes)
    if (k < 1) fail(Errc::InvalidArgument, "kernel sizes must be positive");

  const Shape in = teacher.input_shape;
  const Shape out = teacher.output_shape;
  const bool same_shape = in == out;
  const bool upsampling = spatial_transition(in, out).up;
  const int teacher_mid = teacher.layers.front().out_channels;

  std::vector<LayerBlockSpec> specs;
  std::set<std::string> seen;
  auto consider = [&](LayerBlockSpec spec) {
    if (!validate_candidate(spec, teacher, teacher_time, model)) return;
    if (!seen.insert(describe(spec)).second) return;
    specs.push_back(std::move(spec));
  };

  for (LayerKind kind : grid.kinds) {
    if (shape_preserving(kind)) {
      if (!same_shape) continue;
      if (kind == LayerKind::VolumeExcitation) {
        for (int layers = 1; layers <= grid.max_layers; ++layers)
          consider(make_uniform_block(teacher.block_index, kind, in, out, 0,
                                      layers, 1, 0, 0, grid.token_divisors));
      } else {
        for (int layers = 1; layers <= grid.max_layers; ++layers)
          for (int h : grid.heads)
            for (int f : grid.ffn_dims)
              consider(make_uniform_block(teacher.block_index, kind, in, out, 0,
                                          layers, 1, h, f, grid.token_divisors));
      }
      continue;
    }
    if (upsampling != (kind == LayerKind::Deconv3D)) continue;
    for (double mult : grid.channel_multipliers) {
      int mid = std::max(1, int(std::lround(mult * double(teacher_mid))));
      for (int layers = 1; layers <= grid.max_layers; ++layers)
        for (int k : grid.kernel_sizes)
          consider(make_uniform_block(teacher.block_index, kind, in, out, mid,
                                      layers, k, 0, 0, grid.token_divisors));
    }
  }

  if (specs.empty())
    fail(Errc::EmptySpace, "block " + std::to_string(teacher.block_index) +
                               ": no grid candidate is strictly faster than "
                               "its teacher");

  std::vector<std::pair<double, size_t>> order(specs.size());
  for (size_t i = 0; i < specs.size(); ++i)
    order[i] = {estimate_latency(specs[i], model), i};
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return spec_hash(specs[a.second]) < spec_hash(specs[b.second]);
  });

  std::vector<LayerBlockSpec> result;
  result.reserve(std::min(size_t(limit), specs.size()));
  for (size_t i = 0; i < order.size() && int(i) < limit; ++i)
    result.push_back(std::move(specs[order[i].second]));
  return result;
}

search::CandidateTable build_candidate_table(
    const std::vector<LayerBlockSpec>& teachers, const ParamGrid& grid,
    const CostModel& model, const SyntheticMetricModel& dm, int limit,
    bool include_identity) {
  if (teachers.empty()) fail(Errc::InvalidArgument, "no teacher blocks given");
  search::CandidateTable table;
  table.blocks.resize(teachers.size());
  Rng rng(dm.seed);
  for (size_t i = 0; i < teachers.size(); ++i) {
    const auto& teacher = teachers[i];
    if (teacher.block_index != int(i) + 1)
      fail(Errc::InvalidArgument, "teacher blocks must be numbered 1..N in order");
    const double teacher_flops = estimate_flops(teacher);
    const double teacher_time = estimate_latency(teacher, model);
    auto specs = enumerate_block_candidates(teacher, grid, teacher_time, model, limit);
    for (auto& spec : specs) {
      search::BlockCandidate c;
      c.block_index = int(i) + 1;
      c.candidate_id = describe(spec);
      double reduction = 1.0 - estimate_flops(spec) / teacher_flops;
      double noise = dm.noise * (2.0 * rng.next_double() - 1.0);
      c.delta_metric = quantize9(dm.scale * reduction + noise);
      c.delta_time = quantize9(estimate_latency(spec, model) - teacher_time);
      c.spec = std::make_shared<const LayerBlockSpec>(std::move(spec));
      table.blocks[i].push_back(std::move(c));
    }
    if (include_identity) {
      search::BlockCandidate c;
      c.block_index = int(i) + 1;
      c.candidate_id = "teacher";
      c.spec = std::make_shared<const LayerBlockSpec>(teacher);
      table.blocks[i].push_back(std::move(c));
    }
  }
  table.header["synthetic_dm"] = "1";
  search::validate_table(table);
  return table;
}

}  // namespace dnc::candgen
