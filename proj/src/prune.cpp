#include "dnc/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dnc/error.hpp"

namespace dnc::prune {

namespace {

struct KindName {
  NodeKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {NodeKind::Conv2D, "Conv2D"},
    {NodeKind::ConvGRUGate, "ConvGRUGate"},
    {NodeKind::Linear, "Linear"},
    {NodeKind::MotionEncoder, "MotionEncoder"},
    {NodeKind::DispHead, "DispHead"},
    {NodeKind::MaskHead, "MaskHead"},
    {NodeKind::Other, "Other"},
};

struct TagName {
  RoleTag tag;
  const char* name;
};

constexpr TagName kTagNames[] = {
    {RoleTag::ConsumesHidden, "consumes_hidden"},
    {RoleTag::ProducesHidden, "produces_hidden"},
    {RoleTag::ConsumesVolumeFeature, "consumes_volume_feature"},
    {RoleTag::PredictsDisparity, "predicts_disparity"},
    {RoleTag::PredictsMask, "predicts_mask"},
};

std::string member_key(const GroupMember& m) {
  return m.layer_id + (m.side == Side::In ? ".in" : ".out");
}

int slot_width(const LayerNode& node, Side side) {
  return side == Side::In ? node.in_channels : node.out_channels;
}

// Union-find over (node, side) slots; two slots per node, in before out.
struct SlotSets {
  std::vector<int> parent;

  explicit SlotSets(size_t slots) : parent(slots) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[size_t(a)] != a) {
      parent[size_t(a)] = parent[size_t(parent[size_t(a)])];
      a = parent[size_t(a)];
    }
    return a;
  }
  void unite(int a, int b) { parent[size_t(find(a))] = find(b); }
};

double kernel_area(NodeKind kind) {
  switch (kind) {
    case NodeKind::Linear:
    case NodeKind::Other:
      return 1.0;
    default:
      return 9.0;
  }
}

// Sum of (weight*gradient)^2 over one channel slice of a layer tensor.
// shape is (out, in, kernel...); an out-channel slice is contiguous, an
// in-channel slice strides over the out dimension.
double slice_score(const LayerTensors& t, Side side, int channel) {
  const auto& shape = t.weights.shape;
  size_t out = size_t(shape[0]);
  size_t in = size_t(shape[1]);
  size_t kv = 1;
  for (size_t d = 2; d < shape.size(); ++d) kv *= size_t(shape[d]);

  double acc = 0.0;
  auto add = [&](size_t offset, size_t count) {
    for (size_t i = offset; i < offset + count; ++i) {
      double p = double(t.weights.data[i]) * double(t.gradients.data[i]);
      acc += p * p;
    }
  };
  if (side == Side::Out) {
    add(size_t(channel) * in * kv, in * kv);
  } else {
    for (size_t o = 0; o < out; ++o) add(o * in * kv + size_t(channel) * kv, kv);
  }
  return acc;
}

void check_layer_tensors(const LayerNode& node, const LayerTensors& t) {
  const auto& shape = t.weights.shape;
  if (shape.size() < 2)
    fail(Errc::ShapeMismatch,
         "layer '" + node.id + "' weights need at least (out, in) dims");
  for (int d : shape)
    if (d <= 0)
      fail(Errc::ShapeMismatch,
           "layer '" + node.id + "' has a non-positive tensor dimension");
  if (shape[0] != node.out_channels || shape[1] != node.in_channels)
    fail(Errc::ShapeMismatch,
         "layer '" + node.id + "' weights are (" + std::to_string(shape[0]) +
             ", " + std::to_string(shape[1]) + ", ...) but the node declares (" +
             std::to_string(node.out_channels) + ", " +
             std::to_string(node.in_channels) + ", ...)");
  if (t.weights.data.size() != t.weights.element_count())
    fail(Errc::ShapeMismatch,
         "layer '" + node.id + "' weight data does not fill its shape");
  if (t.gradients.shape != t.weights.shape ||
      t.gradients.data.size() != t.weights.data.size())
    fail(Errc::ShapeMismatch,
         "layer '" + node.id + "' gradients do not match the weight shape");
}

}  // namespace

std::string kind_name(NodeKind kind) {
  for (const auto& k : kKindNames)
    if (k.kind == kind) return k.name;
  fail(Errc::InvalidArgument, "unknown node kind");
}

NodeKind parse_kind(const std::string& name) {
  for (const auto& k : kKindNames)
    if (name == k.name) return k.kind;
  fail(Errc::ParseError, "unknown node kind '" + name + "'");
}

std::string tag_name(RoleTag tag) {
  for (const auto& t : kTagNames)
    if (t.tag == tag) return t.name;
  fail(Errc::InvalidArgument, "unknown role tag");
}

RoleTag parse_tag(const std::string& name) {
  for (const auto& t : kTagNames)
    if (name == t.name) return t.tag;
  fail(Errc::ParseError, "unknown role tag '" + name + "'");
}

size_t Tensor::element_count() const {
  size_t n = 1;
  for (int d : shape) n *= size_t(d);
  return shape.empty() ? 0 : n;
}

const LayerNode* LayerGraph::find_node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const ChannelGroup* LayerGraph::find_group(const std::string& group_id) const {
  for (const auto& g : groups)
    if (g.group_id == group_id) return &g;
  return nullptr;
}

const ChannelGroup& LayerGraph::group_of(const std::string& layer_id,
                                         Side side) const {
  GroupMember probe{layer_id, side};
  for (const auto& g : groups)
    for (const auto& m : g.members)
      if (m == probe) return g;
  fail(Errc::InvalidArgument,
       "no group contains slot '" + member_key(probe) + "'");
}

LayerGraph build_dependency_graph(const std::vector<LayerNode>& nodes,
                                  const std::vector<GraphEdge>& edges) {
  std::map<std::string, int> index;
  int hidden_producers = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.id.empty()) fail(Errc::InvalidArgument, "node with empty id");
    if (!index.emplace(n.id, int(i)).second)
      fail(Errc::InvalidArgument, "duplicate node id '" + n.id + "'");
    if (n.in_channels <= 0 || n.out_channels <= 0)
      fail(Errc::InvalidArgument,
           "node '" + n.id + "' must have positive channel counts");
    if (n.role_tags.count(RoleTag::ProducesHidden)) ++hidden_producers;
  }
  if (nodes.empty()) fail(Errc::InvalidArgument, "graph has no nodes");
  if (hidden_producers > 1)
    fail(Errc::InvalidArgument,
         "more than one node is tagged " + tag_name(RoleTag::ProducesHidden));

  auto node_at = [&](const std::string& id, const char* end) -> int {
    auto it = index.find(id);
    if (it == index.end())
      fail(Errc::InvalidArgument,
           std::string("edge ") + end + " '" + id + "' is not a node");
    return it->second;
  };

  for (const auto& e : edges) {
    int p = node_at(e.producer, "producer");
    int c = node_at(e.consumer, "consumer");
    if (!e.recurrent) continue;
    if (!nodes[size_t(p)].role_tags.count(RoleTag::ProducesHidden))
      fail(Errc::MissingTag, "recurrent edge producer '" + e.producer +
                                 "' lacks " + tag_name(RoleTag::ProducesHidden));
    if (!nodes[size_t(c)].role_tags.count(RoleTag::ConsumesHidden))
      fail(Errc::MissingTag, "recurrent edge consumer '" + e.consumer +
                                 "' lacks " + tag_name(RoleTag::ConsumesHidden));
  }

  // Kahn's algorithm over the forward edges only; recurrent edges are the
  // intended back-links and do not count toward cycles.
  {
    std::vector<int> indeg(nodes.size(), 0);
    std::vector<std::vector<int>> adj(nodes.size());
    for (const auto& e : edges) {
      if (e.recurrent) continue;
      int p = index.at(e.producer);
      int c = index.at(e.consumer);
      adj[size_t(p)].push_back(c);
      ++indeg[size_t(c)];
    }
    std::vector<int> queue;
    for (size_t i = 0; i < nodes.size(); ++i)
      if (indeg[i] == 0) queue.push_back(int(i));
    size_t seen = 0;
    while (seen < queue.size()) {
      int u = queue[seen++];
      for (int v : adj[size_t(u)])
        if (--indeg[size_t(v)] == 0) queue.push_back(v);
    }
    if (seen != nodes.size())
      fail(Errc::Cycle, "forward edges form a cycle");
  }

  auto slot = [](int node, Side side) {
    return node * 2 + (side == Side::Out ? 1 : 0);
  };
  SlotSets sets(nodes.size() * 2);
  auto tie = [&](int pn, const std::string& pid, int cn, const std::string& cid) {
    int a = slot(pn, Side::Out);
    int b = slot(cn, Side::In);
    if (nodes[size_t(pn)].out_channels != nodes[size_t(cn)].in_channels)
      fail(Errc::DimMismatch,
           "'" + pid + "' produces " +
               std::to_string(nodes[size_t(pn)].out_channels) +
               " channels but '" + cid + "' consumes " +
               std::to_string(nodes[size_t(cn)].in_channels));
    sets.unite(a, b);
  };
  for (const auto& e : edges)
    tie(index.at(e.producer), e.producer, index.at(e.consumer), e.consumer);

  std::map<int, std::vector<GroupMember>> by_root;
  for (size_t i = 0; i < nodes.size(); ++i)
    for (Side side : {Side::In, Side::Out})
      by_root[sets.find(slot(int(i), side))].push_back({nodes[i].id, side});

  LayerGraph graph;
  graph.nodes = nodes;
  graph.edges = edges;
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    ChannelGroup g;
    g.members = members;
    g.group_id = member_key(members.front());
    g.width = slot_width(nodes[size_t(index.at(members.front().layer_id))],
                         members.front().side);
    for (const auto& m : members) {
      const auto& n = nodes[size_t(index.at(m.layer_id))];
      if (slot_width(n, m.side) != g.width)
        fail(Errc::DimMismatch,
             "slot '" + member_key(m) + "' declares " +
                 std::to_string(slot_width(n, m.side)) +
                 " channels but its group '" + g.group_id + "' has " +
                 std::to_string(g.width));
      bool fixes =
          (m.side == Side::Out && (n.role_tags.count(RoleTag::PredictsDisparity) ||
                                   n.role_tags.count(RoleTag::PredictsMask))) ||
          (m.side == Side::In && n.role_tags.count(RoleTag::ConsumesVolumeFeature));
      if (fixes) g.fixed = true;
    }
    graph.groups.push_back(std::move(g));
  }
  std::sort(graph.groups.begin(), graph.groups.end(),
            [](const ChannelGroup& a, const ChannelGroup& b) {
              return a.group_id < b.group_id;
            });
  return graph;
}

void accumulate_gradients(LayerTensors& tensors, const Tensor& snapshot) {
  if (snapshot.shape != tensors.gradients.shape ||
      snapshot.data.size() != tensors.gradients.data.size())
    fail(Errc::ShapeMismatch, "gradient snapshot shape differs from accumulator");
  for (size_t i = 0; i < snapshot.data.size(); ++i)
    tensors.gradients.data[i] += snapshot.data[i];
}

ImportanceTable taylor_importance(const LayerGraph& graph,
                                  const std::map<std::string, LayerTensors>& tensors,
                                  GroupAggregate aggregate) {
  std::set<std::string> checked;
  auto tensors_of = [&](const std::string& layer_id) -> const LayerTensors& {
    auto it = tensors.find(layer_id);
    if (it == tensors.end())
      fail(Errc::MissingTensor,
           "no weight/gradient arrays for prunable layer '" + layer_id + "'");
    if (checked.insert(layer_id).second)
      check_layer_tensors(*graph.find_node(layer_id), it->second);
    return it->second;
  };

  ImportanceTable table;
  for (const auto& g : graph.groups) {
    if (g.fixed) continue;
    std::vector<double> scores(size_t(g.width), 0.0);
    for (const auto& m : g.members) {
      const auto& t = tensors_of(m.layer_id);
      for (int c = 0; c < g.width; ++c)
        scores[size_t(c)] += slice_score(t, m.side, c);
    }
    if (aggregate == GroupAggregate::Mean)
      for (double& s : scores) s /= double(g.members.size());
    table.emplace(g.group_id, std::move(scores));
  }
  return table;
}

PrunePlan global_prune(const ImportanceTable& importance, const LayerGraph& graph,
                       double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0))
    fail(Errc::InvalidArgument, "pruning ratio must lie strictly between 0 and 1");

  struct Entry {
    double score;
    const std::string* group_id;
    int channel;
  };
  std::vector<Entry> entries;
  long long prunable = 0;
  std::map<std::string, int> widths;
  for (const auto& g : graph.groups) {
    widths[g.group_id] = g.width;
    if (g.fixed) continue;
    auto it = importance.find(g.group_id);
    if (it == importance.end() || int(it->second.size()) != g.width)
      fail(Errc::InvalidArgument,
           "importance table does not cover group '" + g.group_id + "' with " +
               std::to_string(g.width) + " scores");
    for (int c = 0; c < g.width; ++c) {
      double s = it->second[size_t(c)];
      if (!(s >= 0.0))
        fail(Errc::InvalidArgument,
             "negative or non-finite score in group '" + g.group_id + "'");
      entries.push_back({s, &it->first, c});
    }
    prunable += g.width;
  }
  if (prunable == 0) fail(Errc::AllFixed, "graph has no prunable channels");

  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score < b.score;
    if (*a.group_id != *b.group_id) return *a.group_id < *b.group_id;
    return a.channel < b.channel;
  });

  // The epsilon keeps exact products like 0.3 * 10 from flooring one short.
  long long target = (long long)(std::floor(ratio * double(prunable) + 1e-9));

  PrunePlan plan;
  plan.ratio = ratio;
  plan.channels_total = prunable;
  for (const auto& e : entries) {
    if (plan.channels_removed == target) break;
    int& w = widths[*e.group_id];
    if (w <= 1) continue;  // never empty a group
    --w;
    plan.removals[*e.group_id].push_back(e.channel);
    ++plan.channels_removed;
  }
  for (auto& [gid, chans] : plan.removals) std::sort(chans.begin(), chans.end());
  plan.resulting_widths = widths;

  plan.params_before = estimate_parameters(graph);
  plan.params_after = estimate_parameters(apply_plan(graph, plan));
  return plan;
}

LayerGraph apply_plan(const LayerGraph& graph, const PrunePlan& plan) {
  std::map<std::string, int> new_width;
  for (const auto& g : graph.groups) new_width[g.group_id] = g.width;

  for (const auto& [gid, chans] : plan.removals) {
    const ChannelGroup* g = graph.find_group(gid);
    if (!g) fail(Errc::InvalidPlan, "plan names unknown group '" + gid + "'");
    if (g->fixed)
      fail(Errc::InvalidPlan, "plan removes channels from fixed group '" + gid + "'");
    for (size_t i = 0; i < chans.size(); ++i) {
      if (chans[i] < 0 || chans[i] >= g->width)
        fail(Errc::InvalidPlan, "channel " + std::to_string(chans[i]) +
                                    " is out of range for group '" + gid + "'");
      if (i > 0 && chans[i] <= chans[i - 1])
        fail(Errc::InvalidPlan,
             "removal indices for group '" + gid + "' are not strictly ascending");
    }
    int w = g->width - int(chans.size());
    if (w < 1)
      fail(Errc::InvalidPlan, "plan would empty group '" + gid + "'");
    new_width[gid] = w;
  }
  for (const auto& [gid, w] : plan.resulting_widths) {
    auto it = new_width.find(gid);
    if (it == new_width.end())
      fail(Errc::InvalidPlan, "plan lists width for unknown group '" + gid + "'");
    if (it->second != w)
      fail(Errc::InvalidPlan, "plan width " + std::to_string(w) +
                                  " for group '" + gid + "' does not match its removals");
  }

  std::vector<LayerNode> nodes = graph.nodes;
  for (auto& n : nodes) {
    n.in_channels = new_width.at(graph.group_of(n.id, Side::In).group_id);
    n.out_channels = new_width.at(graph.group_of(n.id, Side::Out).group_id);
  }
  return build_dependency_graph(nodes, graph.edges);
}

double estimate_parameters(const LayerGraph& graph) {
  double total = 0.0;
  for (const auto& n : graph.nodes)
    total += double(n.out_channels) * double(n.in_channels) * kernel_area(n.kind);
  return total;
}

double estimate_graph_flops(const LayerGraph& graph) {
  // Multiply-accumulate per parameter per output position.
  return 2.0 * estimate_parameters(graph);
}

double retrain_loss(const std::vector<Image>& disparities, const Image& ground_truth,
                    const Mask& valid,
                    const std::vector<std::pair<Tensor, Tensor>>& latents,
                    double gamma, double lambda) {
  if (disparities.empty())
    fail(Errc::InvalidArgument, "need at least one refinement iteration");
  if (!std::isfinite(gamma) || !std::isfinite(lambda))
    fail(Errc::InvalidArgument, "gamma and lambda must be finite");
  if (!valid.same_size(ground_truth))
    fail(Errc::ShapeMismatch, "validity mask size differs from ground truth");
  for (const auto& d : disparities)
    if (!d.same_size(ground_truth))
      fail(Errc::ShapeMismatch, "disparity size differs from ground truth");

  long long count = 0;
  for (uint8_t b : valid.bits) count += b ? 1 : 0;
  if (count == 0) fail(Errc::EmptyMask, "no valid ground-truth pixels");

  const size_t k_total = disparities.size();
  double loss = 0.0;
  for (size_t k = 0; k < k_total; ++k) {
    double sum = 0.0;
    const auto& d = disparities[k];
    for (int y = 0; y < d.height; ++y)
      for (int x = 0; x < d.width; ++x)
        if (valid.get(x, y))
          sum += std::fabs(double(d.at(x, y)) - double(ground_truth.at(x, y)));
    loss += std::pow(gamma, double(k_total - 1 - k)) * (sum / double(count));
  }

  if (lambda != 0.0) {
    for (const auto& [x, ref] : latents) {
      if (x.shape != ref.shape || x.data.size() != ref.data.size())
        fail(Errc::ShapeMismatch, "latent pair shapes differ");
      if (x.data.empty()) fail(Errc::ShapeMismatch, "empty latent tensor");
      double sum = 0.0;
      for (size_t i = 0; i < x.data.size(); ++i) {
        double diff = double(x.data[i]) - double(ref.data[i]);
        sum += diff * diff;
      }
      loss += lambda * (sum / double(x.data.size()));
    }
  }
  return loss;
}

}  // namespace dnc::prune
