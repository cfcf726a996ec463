#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dnc/image.hpp"

namespace dnc::prune {

enum class NodeKind {
  Conv2D,
  ConvGRUGate,
  Linear,
  MotionEncoder,
  DispHead,
  MaskHead,
  Other,
};

enum class RoleTag {
  ConsumesHidden,
  ProducesHidden,
  ConsumesVolumeFeature,
  PredictsDisparity,
  PredictsMask,
};

std::string kind_name(NodeKind kind);
NodeKind parse_kind(const std::string& name);
std::string tag_name(RoleTag tag);
RoleTag parse_tag(const std::string& name);

struct LayerNode {
  std::string id;
  NodeKind kind = NodeKind::Other;
  int in_channels = 0;
  int out_channels = 0;
  std::set<RoleTag> role_tags;
};

struct GraphEdge {
  std::string producer;
  std::string consumer;
  bool recurrent = false;
};

enum class Side { In, Out };

struct GroupMember {
  std::string layer_id;
  Side side = Side::In;

  bool operator<(const GroupMember& o) const {
    if (layer_id != o.layer_id) return layer_id < o.layer_id;
    return side < o.side;
  }
  bool operator==(const GroupMember& o) const {
    return layer_id == o.layer_id && side == o.side;
  }
};

// Channel dimensions that must change together. Every (layer, side) slot of
// the graph belongs to exactly one group; fixed groups keep their width
// through any prune plan.
struct ChannelGroup {
  std::string group_id;  // "<layer_id>.<in|out>" of the smallest member
  std::vector<GroupMember> members;
  int width = 0;
  bool fixed = false;
};

struct LayerGraph {
  std::vector<LayerNode> nodes;
  std::vector<GraphEdge> edges;
  std::vector<ChannelGroup> groups;  // sorted by group_id

  const LayerNode* find_node(const std::string& id) const;
  const ChannelGroup* find_group(const std::string& group_id) const;
  // Group that the given slot of the given layer belongs to.
  const ChannelGroup& group_of(const std::string& layer_id, Side side) const;
};

// Joins channel slots with union-find: each forward edge ties the producer's
// out-slot to the consumer's in-slot, and each recurrent edge ties the
// hidden-state producer's out-slot to the hidden-state consumer's in-slot.
// Groups touching a disparity or mask prediction output, or a volume-feature
// input, are fixed. Throws CYCLE if the forward edges are cyclic,
// DIM_MISMATCH if tied slots declare different widths, MISSING_TAG if a
// recurrent edge's endpoints lack the hidden-state tags.
LayerGraph build_dependency_graph(const std::vector<LayerNode>& nodes,
                                  const std::vector<GraphEdge>& edges);

// Dense float array with shape (out_channels, in_channels, kernel dims...).
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  size_t element_count() const;
};

struct LayerTensors {
  Tensor weights;
  Tensor gradients;
};

// Element-wise sum of another gradient snapshot into the accumulated
// gradients, for callers that score after several refinement iterations.
void accumulate_gradients(LayerTensors& tensors, const Tensor& snapshot);

enum class GroupAggregate { Sum, Mean };

// Per-group channel scores, one vector of `width` entries per group.
using ImportanceTable = std::map<std::string, std::vector<double>>;

// Channel score = sum over the channel's weight slice of (weight*gradient)^2,
// combined across all member layers of the group (sum by default, mean when
// requested). Fixed groups receive no scores. Throws MISSING_TENSOR when a
// layer with a prunable slot has no tensors, SHAPE_MISMATCH when arrays
// disagree with declared channel counts.
ImportanceTable taylor_importance(const LayerGraph& graph,
                                  const std::map<std::string, LayerTensors>& tensors,
                                  GroupAggregate aggregate = GroupAggregate::Sum);

struct PrunePlan {
  double ratio = 0.0;
  std::map<std::string, std::vector<int>> removals;  // sorted channel indices
  std::map<std::string, int> resulting_widths;       // all groups, post-prune
  long long channels_total = 0;    // prunable channels before the plan
  long long channels_removed = 0;
  double params_before = 0.0;
  double params_after = 0.0;
};

// Ranks all prunable channels ascending by (score, group_id, channel) and
// removes the lowest floor(ratio * total); removals that would empty a group
// are skipped. Throws ALL_FIXED when the graph has no prunable channels.
PrunePlan global_prune(const ImportanceTable& importance, const LayerGraph& graph,
                       double ratio);

// Returns the graph with group widths updated per the plan, revalidated from
// scratch. Throws INVALID_PLAN if the plan names unknown or fixed groups,
// repeats or overflows channel indices, or empties a group.
LayerGraph apply_plan(const LayerGraph& graph, const PrunePlan& plan);

// Parameter and per-position cost estimates used for plan footers and ratio
// sweeps; kernel area is 3x3 for convolutional kinds and 1 otherwise.
double estimate_parameters(const LayerGraph& graph);
double estimate_graph_flops(const LayerGraph& graph);

// Retraining objective: sum_k gamma^(K-k) * mean |d_k - gt| over valid pixels
// plus lambda * sum_i mean (x_i - ref_i)^2 over latent pairs. The latent term
// is skipped entirely when lambda is 0. Throws SHAPE_MISMATCH on dimension
// disagreements and EMPTY_MASK when no pixel is valid.
double retrain_loss(const std::vector<Image>& disparities, const Image& ground_truth,
                    const Mask& valid,
                    const std::vector<std::pair<Tensor, Tensor>>& latents,
                    double gamma, double lambda);

}  // namespace dnc::prune
