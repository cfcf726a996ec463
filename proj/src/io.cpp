#include "dnc/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "dnc/error.hpp"
#include "dnc/text.hpp"

namespace dnc::io {

namespace {

namespace fs = std::filesystem;

constexpr std::string_view kTableMagic = "#dnc-candidates v1";
constexpr std::string_view kPrunePlanMagic = "#dnc-prune-plan v1";
constexpr std::string_view kTensorMagic = "#dnc-tensors v1";
constexpr std::string_view kVerdictMagic = "#dnc-verdicts v1";

constexpr int kMaxBlockIndex = 100000;

[[noreturn]] void parse_fail(const std::string& path, int line,
                             const std::string& msg) {
  fail(Errc::ParseError, path + ":" + std::to_string(line) + ": " + msg);
}

std::string at_line(const std::string& path, int line) {
  return path + ":" + std::to_string(line);
}

struct Line {
  int number = 0;  // 1-based
  std::string_view text;
};

// Lines without their terminators; a trailing '\r' (CRLF input) is dropped.
std::vector<Line> split_lines(std::string_view bytes) {
  std::vector<Line> out;
  int number = 1;
  size_t start = 0;
  while (start < bytes.size()) {
    size_t pos = bytes.find('\n', start);
    size_t end = pos == std::string_view::npos ? bytes.size() : pos;
    std::string_view text = bytes.substr(start, end - start);
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    out.push_back({number++, text});
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool is_ws(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

uint32_t load_le32(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

uint32_t load_be32(const unsigned char* p) {
  return uint32_t(p[3]) | uint32_t(p[2]) << 8 | uint32_t(p[1]) << 16 |
         uint32_t(p[0]) << 24;
}

void store_le32(std::string& out, uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char(v >> 8 & 0xff));
  out.push_back(char(v >> 16 & 0xff));
  out.push_back(char(v >> 24 & 0xff));
}

// Error::what() already carries its "CODE: " prefix; drop it when nesting
// one error's text inside another message.
std::string inner_message(const Error& e) {
  std::string_view w = e.what();
  size_t colon = w.find(": ");
  return std::string(colon == std::string_view::npos ? w
                                                     : w.substr(colon + 2));
}

// Serialized names live in tab-separated records, so they must not carry
// the separators themselves.
void check_field(const std::string& value, const char* what) {
  if (value.empty())
    fail(Errc::InvalidArgument, std::string(what) + " is empty");
  if (value.find_first_of("\t\n\r") != std::string::npos)
    fail(Errc::InvalidArgument,
         std::string(what) + " '" + value + "' contains a separator");
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::IoError, "cannot read '" + path + "'");
  return bytes;
}

void atomic_write(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoError, "cannot create '" + tmp + "'");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.flush();
    if (!out.good()) {
      std::remove(tmp.c_str());
      fail(Errc::IoError, "cannot write '" + tmp + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(Errc::IoError, "cannot rename '" + tmp + "' to '" + path + "'");
  }
}

uint64_t file_hash(const std::string& path) { return fnv1a(read_file(path)); }

search::CandidateTable read_candidate_table(const std::string& path) {
  const std::string bytes = read_file(path);
  const auto lines = split_lines(bytes);
  if (lines.empty() || lines[0].text != kTableMagic)
    parse_fail(path, 1,
               "expected '" + std::string(kTableMagic) + "' header line");

  search::CandidateTable table;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto& [num, text] = lines[i];
    if (text.empty()) continue;
    if (text[0] == '#') {
      size_t eq = text.find('=');
      if (eq == std::string_view::npos || eq == 1)
        parse_fail(path, num, "header line is not '#key=value'");
      std::string key(text.substr(1, eq - 1));
      if (!table.header.emplace(key, std::string(text.substr(eq + 1))).second)
        parse_fail(path, num, "duplicate header key '" + key + "'");
      continue;
    }
    auto fields = split(text, '\t');
    if (fields.size() != 4)
      parse_fail(path, num, "expected 4 tab-separated fields, got " +
                                std::to_string(fields.size()));
    long long block = parse_int(fields[0], at_line(path, num) + ": block index");
    if (block < 1 || block > kMaxBlockIndex)
      parse_fail(path, num,
                 "block index " + std::to_string(block) + " out of range");
    if (fields[1].empty()) parse_fail(path, num, "empty candidate id");

    search::BlockCandidate c;
    c.block_index = int(block);
    c.candidate_id = std::string(fields[1]);
    c.delta_metric =
        parse_double(fields[2], at_line(path, num) + ": delta_metric");
    c.delta_time = parse_double(fields[3], at_line(path, num) + ": delta_time");
    if (table.blocks.size() < size_t(block)) table.blocks.resize(size_t(block));
    table.blocks[size_t(block) - 1].push_back(std::move(c));
  }
  search::validate_table(table);
  return table;
}

void write_candidate_table(const std::string& path,
                           const search::CandidateTable& table) {
  std::string out(kTableMagic);
  out += '\n';
  for (const auto& [key, value] : table.header) {
    check_field(key, "header key");
    if (key.find('=') != std::string::npos ||
        value.find_first_of("\n\r") != std::string::npos)
      fail(Errc::InvalidArgument, "header entry '" + key + "' is not writable");
    out += '#';
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  for (size_t b = 0; b < table.blocks.size(); ++b) {
    for (const auto& c : table.blocks[b]) {
      check_field(c.candidate_id, "candidate id");
      out += std::to_string(b + 1);
      out += '\t';
      out += c.candidate_id;
      out += '\t';
      out += format_decimal9(c.delta_metric);
      out += '\t';
      out += format_decimal9(c.delta_time);
      out += '\n';
    }
  }
  atomic_write(path, out);
}

search::SelectionPlan read_selection_plan(const std::string& path) {
  const std::string bytes = read_file(path);
  search::SelectionPlan plan;
  bool have_footer = false;
  for (const auto& [num, text] : split_lines(bytes)) {
    if (text.empty()) continue;
    if (text[0] == '#') {
      if (!text.starts_with("#objective=")) continue;  // comment
      if (have_footer) parse_fail(path, num, "second footer line");
      auto tokens = split(text, ' ');
      const char* prefixes[] = {"#objective=", "#total_dt=", "#budget=",
                                "#optimal="};
      if (tokens.size() != 4)
        parse_fail(path, num, "footer needs 4 space-separated entries");
      std::string_view values[4];
      for (int t = 0; t < 4; ++t) {
        std::string_view want(prefixes[t]);
        if (!tokens[size_t(t)].starts_with(want))
          parse_fail(path, num,
                     "footer entry " + std::to_string(t + 1) + " must start '" +
                         std::string(want) + "'");
        values[t] = tokens[size_t(t)].substr(want.size());
      }
      plan.objective = parse_double(values[0], at_line(path, num) + ": objective");
      plan.total_delta_time =
          parse_double(values[1], at_line(path, num) + ": total_dt");
      plan.budget = parse_double(values[2], at_line(path, num) + ": budget");
      if (values[3] == "0")
        plan.optimal = false;
      else if (values[3] == "1")
        plan.optimal = true;
      else
        parse_fail(path, num, "optimal flag must be 0 or 1");
      have_footer = true;
      continue;
    }
    if (have_footer) parse_fail(path, num, "choice record after the footer");
    auto fields = split(text, '\t');
    if (fields.size() != 2)
      parse_fail(path, num, "expected 'block<TAB>candidate_id'");
    long long block = parse_int(fields[0], at_line(path, num) + ": block index");
    if (block != (long long)(plan.choices.size()) + 1)
      parse_fail(path, num, "expected block " +
                                std::to_string(plan.choices.size() + 1) +
                                ", got " + std::to_string(block));
    if (fields[1].empty()) parse_fail(path, num, "empty candidate id");
    plan.choices.emplace_back(fields[1]);
  }
  if (!have_footer)
    fail(Errc::ParseError, path + ": missing '#objective=...' footer");
  return plan;
}

void write_selection_plan(const std::string& path,
                          const search::SelectionPlan& plan) {
  std::string out;
  for (size_t i = 0; i < plan.choices.size(); ++i) {
    check_field(plan.choices[i], "candidate id");
    out += std::to_string(i + 1);
    out += '\t';
    out += plan.choices[i];
    out += '\n';
  }
  out += "#objective=" + format_shortest(plan.objective);
  out += " #total_dt=" + format_shortest(plan.total_delta_time);
  out += " #budget=" + format_shortest(plan.budget);
  out += std::string(" #optimal=") + (plan.optimal ? "1" : "0");
  out += '\n';
  atomic_write(path, out);
}

prune::LayerGraph read_layer_graph(const std::string& path) {
  const std::string bytes = read_file(path);
  std::vector<prune::LayerNode> nodes;
  std::vector<prune::GraphEdge> edges;
  for (const auto& [num, text] : split_lines(bytes)) {
    if (text.empty() || text[0] == '#') continue;
    auto fields = split(text, '\t');
    if (fields[0] == "node") {
      if (fields.size() != 6)
        parse_fail(path, num, "node lines need 6 fields, got " +
                                  std::to_string(fields.size()));
      prune::LayerNode n;
      n.id = std::string(fields[1]);
      try {
        n.kind = prune::parse_kind(std::string(fields[2]));
      } catch (const Error& e) {
        parse_fail(path, num, inner_message(e));
      }
      n.in_channels =
          int(parse_int(fields[3], at_line(path, num) + ": in channels"));
      n.out_channels =
          int(parse_int(fields[4], at_line(path, num) + ": out channels"));
      if (fields[5] != "-") {
        for (auto tag : split(fields[5], ',')) {
          try {
            n.role_tags.insert(prune::parse_tag(std::string(tag)));
          } catch (const Error& e) {
            parse_fail(path, num, inner_message(e));
          }
        }
      }
      nodes.push_back(std::move(n));
    } else if (fields[0] == "edge") {
      if (fields.size() != 4)
        parse_fail(path, num, "edge lines need 4 fields, got " +
                                  std::to_string(fields.size()));
      prune::GraphEdge e;
      e.producer = std::string(fields[1]);
      e.consumer = std::string(fields[2]);
      if (fields[3] == "0")
        e.recurrent = false;
      else if (fields[3] == "1")
        e.recurrent = true;
      else
        parse_fail(path, num, "recurrent flag must be 0 or 1");
      edges.push_back(std::move(e));
    } else {
      parse_fail(path, num,
                 "unknown record '" + std::string(fields[0]) + "'");
    }
  }
  return prune::build_dependency_graph(nodes, edges);
}

void write_layer_graph(const std::string& path, const prune::LayerGraph& graph) {
  std::string out;
  for (const auto& n : graph.nodes) {
    check_field(n.id, "node id");
    out += "node\t";
    out += n.id;
    out += '\t';
    out += prune::kind_name(n.kind);
    out += '\t';
    out += std::to_string(n.in_channels);
    out += '\t';
    out += std::to_string(n.out_channels);
    out += '\t';
    if (n.role_tags.empty()) {
      out += '-';
    } else {
      bool first = true;
      for (auto tag : n.role_tags) {
        if (!first) out += ',';
        out += prune::tag_name(tag);
        first = false;
      }
    }
    out += '\n';
  }
  for (const auto& e : graph.edges) {
    out += "edge\t";
    out += e.producer;
    out += '\t';
    out += e.consumer;
    out += '\t';
    out += e.recurrent ? '1' : '0';
    out += '\n';
  }
  atomic_write(path, out);
}

prune::PrunePlan read_prune_plan(const std::string& path) {
  const std::string bytes = read_file(path);
  prune::PrunePlan plan;
  bool have_footer = false;
  for (const auto& [num, text] : split_lines(bytes)) {
    if (text.empty()) continue;
    if (text[0] == '#') {
      if (!text.starts_with("#ratio=")) continue;  // magic or comment
      if (have_footer) parse_fail(path, num, "second footer line");
      auto tokens = split(text, ' ');
      const char* prefixes[] = {"#ratio=",         "#channels_removed=",
                                "#channels_total=", "#params_before=",
                                "#params_after=",   "#param_fraction="};
      if (tokens.size() != 6)
        parse_fail(path, num, "footer needs 6 space-separated entries");
      std::string_view values[6];
      for (int t = 0; t < 6; ++t) {
        std::string_view want(prefixes[t]);
        if (!tokens[size_t(t)].starts_with(want))
          parse_fail(path, num,
                     "footer entry " + std::to_string(t + 1) + " must start '" +
                         std::string(want) + "'");
        values[t] = tokens[size_t(t)].substr(want.size());
      }
      plan.ratio = parse_double(values[0], at_line(path, num) + ": ratio");
      plan.channels_removed =
          parse_int(values[1], at_line(path, num) + ": channels_removed");
      plan.channels_total =
          parse_int(values[2], at_line(path, num) + ": channels_total");
      plan.params_before =
          parse_double(values[3], at_line(path, num) + ": params_before");
      plan.params_after =
          parse_double(values[4], at_line(path, num) + ": params_after");
      // The fraction is derived from the two totals; parse for syntax only.
      parse_double(values[5], at_line(path, num) + ": param_fraction");
      have_footer = true;
      continue;
    }
    if (have_footer) parse_fail(path, num, "group record after the footer");
    auto fields = split(text, '\t');
    if (fields.size() != 3)
      parse_fail(path, num, "expected 'group<TAB>indices<TAB>width'");
    if (fields[0].empty()) parse_fail(path, num, "empty group id");
    std::string gid(fields[0]);
    if (plan.resulting_widths.count(gid))
      parse_fail(path, num, "duplicate group '" + gid + "'");
    if (fields[1] != "-") {
      std::vector<int> chans;
      for (auto tok : split(fields[1], ',')) {
        long long c = parse_int(tok, at_line(path, num) + ": channel index");
        if (!chans.empty() && c <= chans.back())
          parse_fail(path, num, "channel indices must be strictly ascending");
        chans.push_back(int(c));
      }
      plan.removals[gid] = std::move(chans);
    }
    plan.resulting_widths[gid] =
        int(parse_int(fields[2], at_line(path, num) + ": width"));
  }
  if (!have_footer)
    fail(Errc::ParseError, path + ": missing '#ratio=...' footer");
  return plan;
}

void write_prune_plan(const std::string& path, const prune::PrunePlan& plan) {
  std::string out(kPrunePlanMagic);
  out += '\n';
  for (const auto& [gid, width] : plan.resulting_widths) {
    check_field(gid, "group id");
    out += gid;
    out += '\t';
    auto it = plan.removals.find(gid);
    if (it == plan.removals.end() || it->second.empty()) {
      out += '-';
    } else {
      for (size_t i = 0; i < it->second.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(it->second[i]);
      }
    }
    out += '\t';
    out += std::to_string(width);
    out += '\n';
  }
  const double fraction =
      plan.params_before > 0.0 ? plan.params_after / plan.params_before : 0.0;
  out += "#ratio=" + format_shortest(plan.ratio);
  out += " #channels_removed=" + std::to_string(plan.channels_removed);
  out += " #channels_total=" + std::to_string(plan.channels_total);
  out += " #params_before=" + format_shortest(plan.params_before);
  out += " #params_after=" + format_shortest(plan.params_after);
  out += " #param_fraction=" + format_shortest(fraction);
  out += '\n';
  atomic_write(path, out);
}

namespace {

// Raw float32 payload of one tensor file, little-endian on disk.
prune::Tensor read_raw_tensor(const std::string& path,
                              const std::vector<int>& shape) {
  const std::string bytes = read_file(path);
  size_t count = 1;
  for (int d : shape) count *= size_t(d);
  if (bytes.size() != count * 4)
    fail(Errc::ShapeMismatch,
         "'" + path + "' holds " + std::to_string(bytes.size()) +
             " bytes, shape needs " + std::to_string(count * 4));
  prune::Tensor t;
  t.shape = shape;
  t.data.resize(count);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (size_t i = 0; i < count; ++i)
    t.data[i] = std::bit_cast<float>(load_le32(p + i * 4));
  return t;
}

std::string encode_raw_tensor(const prune::Tensor& t) {
  std::string bytes;
  bytes.reserve(t.data.size() * 4);
  for (float f : t.data) store_le32(bytes, std::bit_cast<uint32_t>(f));
  return bytes;
}

// Layer ids become file names; anything outside the portable set is folded
// to '_' and collisions are rejected rather than silently merged.
std::string sanitize_base(const std::string& id) {
  std::string base;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    base += ok ? c : '_';
  }
  return base;
}

}  // namespace

std::map<std::string, prune::LayerTensors> read_tensor_manifest(
    const std::string& path) {
  const std::string bytes = read_file(path);
  const fs::path dir = fs::path(path).parent_path();
  auto resolve = [&](std::string_view name) {
    fs::path p(std::string{name});
    return (p.is_absolute() ? p : dir / p).string();
  };

  std::map<std::string, prune::LayerTensors> tensors;
  for (const auto& [num, text] : split_lines(bytes)) {
    if (text.empty() || text[0] == '#') continue;
    auto fields = split(text, '\t');
    if (fields.size() != 4)
      parse_fail(path, num,
                 "expected 'layer<TAB>shape<TAB>weights<TAB>grads'");
    std::string id(fields[0]);
    if (id.empty()) parse_fail(path, num, "empty layer id");
    if (tensors.count(id)) parse_fail(path, num, "duplicate layer '" + id + "'");

    std::vector<int> shape;
    size_t count = 1;
    for (auto tok : split(fields[1], ',')) {
      long long d = parse_int(tok, at_line(path, num) + ": shape");
      if (d < 1) parse_fail(path, num, "non-positive shape dimension");
      count *= size_t(d);
      if (count > size_t(1) << 30)
        parse_fail(path, num, "tensor larger than the 2^30 element cap");
      shape.push_back(int(d));
    }
    if (fields[2].empty() || fields[3].empty())
      parse_fail(path, num, "empty tensor file name");

    prune::LayerTensors lt;
    lt.weights = read_raw_tensor(resolve(fields[2]), shape);
    lt.gradients = read_raw_tensor(resolve(fields[3]), shape);
    tensors.emplace(std::move(id), std::move(lt));
  }
  return tensors;
}

void write_tensor_manifest(
    const std::string& path,
    const std::map<std::string, prune::LayerTensors>& tensors) {
  const fs::path dir = fs::path(path).parent_path();
  std::string manifest(kTensorMagic);
  manifest += '\n';
  std::set<std::string> used;
  for (const auto& [id, lt] : tensors) {
    check_field(id, "layer id");
    if (lt.gradients.shape != lt.weights.shape)
      fail(Errc::ShapeMismatch,
           "layer '" + id + "' gradients do not match the weight shape");
    if (lt.weights.data.size() != lt.weights.element_count() ||
        lt.gradients.data.size() != lt.weights.element_count())
      fail(Errc::ShapeMismatch,
           "layer '" + id + "' data does not fill its shape");
    if (lt.weights.shape.empty())
      fail(Errc::ShapeMismatch, "layer '" + id + "' has an empty shape");

    const std::string base = sanitize_base(id);
    if (!used.insert(base).second)
      fail(Errc::InvalidArgument,
           "layer ids collide on file name '" + base + "'");
    const std::string wname = base + ".w.f32";
    const std::string gname = base + ".g.f32";
    // Raw arrays land before the manifest that references them, so a failed
    // run never leaves a manifest pointing at missing files.
    atomic_write((dir / wname).string(), encode_raw_tensor(lt.weights));
    atomic_write((dir / gname).string(), encode_raw_tensor(lt.gradients));

    manifest += id;
    manifest += '\t';
    for (size_t i = 0; i < lt.weights.shape.size(); ++i) {
      if (i) manifest += ',';
      manifest += std::to_string(lt.weights.shape[i]);
    }
    manifest += '\t';
    manifest += wname;
    manifest += '\t';
    manifest += gname;
    manifest += '\n';
  }
  atomic_write(path, manifest);
}

Image read_pfm(const std::string& path) {
  const std::string bytes = read_file(path);
  size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size() && is_ws(bytes[pos])) ++pos;
    size_t start = pos;
    while (pos < bytes.size() && !is_ws(bytes[pos])) ++pos;
    if (start == pos)
      fail(Errc::ParseError, path + ": truncated header");
    return bytes.substr(start, pos - start);
  };

  const std::string magic = next_token();
  if (magic == "PF")
    fail(Errc::ParseError, path + ": 3-channel PFM is not supported");
  if (magic != "Pf") fail(Errc::ParseError, path + ": not a PFM file");
  long long w = parse_int(next_token(), path + ": width");
  long long h = parse_int(next_token(), path + ": height");
  double scale = parse_double(next_token(), path + ": scale");
  if (w < 1 || h < 1 || w > 1 << 20 || h > 1 << 20)
    fail(Errc::ParseError, path + ": bad dimensions " + std::to_string(w) +
                               "x" + std::to_string(h));
  if (!(scale < 0.0) && !(scale > 0.0))
    fail(Errc::ParseError, path + ": scale must be a nonzero number");
  if (pos >= bytes.size() || !is_ws(bytes[pos]))
    fail(Errc::ParseError, path + ": missing header terminator");
  ++pos;

  const size_t need = size_t(w) * size_t(h) * 4;
  if (bytes.size() - pos != need)
    fail(Errc::ParseError,
         path + ": payload is " + std::to_string(bytes.size() - pos) +
             " bytes, expected " + std::to_string(need));

  Image img{int(w), int(h)};
  const bool little = scale < 0.0;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (long long y = 0; y < h; ++y) {
    const long long row = h - 1 - y;  // file rows run bottom to top
    for (long long x = 0; x < w; ++x, p += 4)
      img.at(int(x), int(row)) =
          std::bit_cast<float>(little ? load_le32(p) : load_be32(p));
  }
  return img;
}

void write_pfm(const std::string& path, const Image& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != size_t(image.width) * size_t(image.height))
    fail(Errc::InvalidArgument, "image does not fill its declared size");
  std::string out = "Pf\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n-1\n";
  out.reserve(out.size() + image.pixels.size() * 4);
  for (int y = image.height - 1; y >= 0; --y)
    for (int x = 0; x < image.width; ++x)
      store_le32(out, std::bit_cast<uint32_t>(image.at(x, y)));
  atomic_write(path, out);
}

Mask read_pgm(const std::string& path) {
  const std::string bytes = read_file(path);
  size_t pos = 0;
  // Header tokens may be separated by whitespace or '#' comment lines.
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (is_ws(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    size_t start = pos;
    while (pos < bytes.size() && !is_ws(bytes[pos])) ++pos;
    if (start == pos)
      fail(Errc::ParseError, path + ": truncated header");
    return bytes.substr(start, pos - start);
  };

  if (next_token() != "P5")
    fail(Errc::ParseError, path + ": not a binary PGM file");
  long long w = parse_int(next_token(), path + ": width");
  long long h = parse_int(next_token(), path + ": height");
  long long maxval = parse_int(next_token(), path + ": maxval");
  if (w < 1 || h < 1 || w > 1 << 20 || h > 1 << 20)
    fail(Errc::ParseError, path + ": bad dimensions " + std::to_string(w) +
                               "x" + std::to_string(h));
  if (maxval != 255)
    fail(Errc::ParseError, path + ": maxval must be 255");
  if (pos >= bytes.size() || !is_ws(bytes[pos]))
    fail(Errc::ParseError, path + ": missing header terminator");
  ++pos;

  const size_t need = size_t(w) * size_t(h);
  if (bytes.size() - pos != need)
    fail(Errc::ParseError,
         path + ": payload is " + std::to_string(bytes.size() - pos) +
             " bytes, expected " + std::to_string(need));

  Mask mask{int(w), int(h)};
  for (size_t i = 0; i < need; ++i)
    mask.bits[i] = bytes[pos + i] != 0 ? 1 : 0;
  return mask;
}

void write_pgm(const std::string& path, const Mask& mask) {
  if (mask.width < 1 || mask.height < 1 ||
      mask.bits.size() != size_t(mask.width) * size_t(mask.height))
    fail(Errc::InvalidArgument, "mask does not fill its declared size");
  std::string out = "P5\n" + std::to_string(mask.width) + " " +
                    std::to_string(mask.height) + "\n255\n";
  out.reserve(out.size() + mask.bits.size());
  for (uint8_t b : mask.bits) out.push_back(b ? char(255) : char(0));
  atomic_write(path, out);
}

label::DisparityMap read_disparity(const std::string& path) {
  label::DisparityMap disp;
  disp.values = read_pfm(path);
  disp.valid = Mask(disp.values.width, disp.values.height);
  for (size_t i = 0; i < disp.values.pixels.size(); ++i) {
    float v = disp.values.pixels[i];
    disp.valid.bits[i] = std::isfinite(v) && v > 0.0f ? 1 : 0;
  }
  return disp;
}

label::CameraRig read_rig(const std::string& path) {
  auto kv = read_key_values(path);
  const char* keys[] = {"fx", "fy", "cx", "cy", "baseline"};
  for (const auto& [key, value] : kv) {
    if (std::find_if(std::begin(keys), std::end(keys), [&](const char* k) {
          return key == k;
        }) == std::end(keys))
      fail(Errc::ParseError, path + ": unknown rig key '" + key + "'");
  }
  double values[5];
  for (int i = 0; i < 5; ++i) {
    auto it = kv.find(keys[i]);
    if (it == kv.end())
      fail(Errc::ParseError,
           path + ": missing rig key '" + std::string(keys[i]) + "'");
    values[i] = parse_double(it->second, path + ": " + keys[i]);
  }
  label::CameraRig rig{values[0], values[1], values[2], values[3], values[4]};
  label::validate_rig(rig);
  return rig;
}

void write_rig(const std::string& path, const label::CameraRig& rig) {
  label::validate_rig(rig);
  std::string out;
  out += "fx=" + format_shortest(rig.fx) + '\n';
  out += "fy=" + format_shortest(rig.fy) + '\n';
  out += "cx=" + format_shortest(rig.cx) + '\n';
  out += "cy=" + format_shortest(rig.cy) + '\n';
  out += "baseline=" + format_shortest(rig.baseline) + '\n';
  atomic_write(path, out);
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  const std::string bytes = read_file(path);
  std::map<std::string, std::string> kv;
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
      s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
      s.remove_suffix(1);
    return s;
  };
  for (const auto& [num, text] : split_lines(bytes)) {
    std::string_view line = trim(text);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      parse_fail(path, num, "expected 'key=value'");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) parse_fail(path, num, "empty key");
    if (!kv.emplace(key, std::string(trim(line.substr(eq + 1)))).second)
      parse_fail(path, num, "duplicate key '" + key + "'");
  }
  return kv;
}

std::vector<std::string> read_manifest(const std::string& path) {
  const std::string bytes = read_file(path);
  std::vector<std::string> dirs;
  for (const auto& [num, text] : split_lines(bytes)) {
    if (text.empty() || text[0] == '#') continue;
    dirs.emplace_back(text);
  }
  return dirs;
}

std::vector<VerdictRow> read_verdict_report(const std::string& path) {
  const std::string bytes = read_file(path);
  const auto lines = split_lines(bytes);
  if (lines.empty() || lines[0].text != kVerdictMagic)
    parse_fail(path, 1,
               "expected '" + std::string(kVerdictMagic) + "' header line");

  std::vector<VerdictRow> rows;
  bool have_footer = false;
  long long accepted = 0, samples = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto& [num, text] = lines[i];
    if (text.empty()) continue;
    if (text[0] == '#') {
      if (!text.starts_with("#accepted=")) continue;
      if (have_footer) parse_fail(path, num, "second footer line");
      auto tokens = split(text, ' ');
      if (tokens.size() != 2 || !tokens[1].starts_with("#samples="))
        parse_fail(path, num, "footer must be '#accepted=<n> #samples=<m>'");
      accepted = parse_int(tokens[0].substr(10), at_line(path, num) + ": accepted");
      samples = parse_int(tokens[1].substr(9), at_line(path, num) + ": samples");
      have_footer = true;
      continue;
    }
    if (have_footer) parse_fail(path, num, "row after the footer");
    auto fields = split(text, '\t');
    VerdictRow row;
    if (fields.size() == 3 && fields[1] == "error") {
      row.sample_id = std::string(fields[0]);
      row.ok = false;
      row.error = std::string(fields[2]);
      if (row.sample_id.empty() || row.error.empty())
        parse_fail(path, num, "empty field in error row");
    } else if (fields.size() == 4) {
      row.sample_id = std::string(fields[0]);
      row.ok = true;
      if (fields[1] == "0")
        row.accepted = false;
      else if (fields[1] == "1")
        row.accepted = true;
      else
        parse_fail(path, num, "accepted flag must be 0 or 1");
      row.fraction = parse_double(fields[2], at_line(path, num) + ": fraction");
      row.threshold = parse_double(fields[3], at_line(path, num) + ": threshold");
      if (row.sample_id.empty()) parse_fail(path, num, "empty sample id");
    } else {
      parse_fail(path, num, "expected a 4-field verdict or 3-field error row");
    }
    rows.push_back(std::move(row));
  }
  if (!have_footer)
    fail(Errc::ParseError, path + ": missing '#accepted=...' footer");

  long long want_accepted = 0;
  for (const auto& r : rows)
    if (r.ok && r.accepted) ++want_accepted;
  if (samples != (long long)(rows.size()) || accepted != want_accepted)
    fail(Errc::ParseError, path + ": footer counts do not match the rows");
  return rows;
}

void write_verdict_report(const std::string& path,
                          const std::vector<VerdictRow>& rows) {
  std::string out(kVerdictMagic);
  out += '\n';
  long long accepted = 0;
  for (const auto& row : rows) {
    check_field(row.sample_id, "sample id");
    out += row.sample_id;
    if (row.ok) {
      out += row.accepted ? "\t1\t" : "\t0\t";
      out += format_shortest(row.fraction);
      out += '\t';
      out += format_shortest(row.threshold);
      if (row.accepted) ++accepted;
    } else {
      check_field(row.error, "error code");
      out += "\terror\t";
      out += row.error;
    }
    out += '\n';
  }
  out += "#accepted=" + std::to_string(accepted);
  out += " #samples=" + std::to_string(rows.size());
  out += '\n';
  atomic_write(path, out);
}

namespace {

// Typed accessors over the grid file's key-value map. Every consumed key is
// recorded so leftovers can be rejected by name.
struct GridKeys {
  const std::string& path;
  std::map<std::string, std::string> kv;
  std::set<std::string> seen;

  const std::string* get(const std::string& key) {
    seen.insert(key);
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  }
  const std::string& require(const std::string& key) {
    const std::string* v = get(key);
    if (!v) fail(Errc::ParseError, path + ": missing grid key '" + key + "'");
    return *v;
  }
  long long get_int(const std::string& key, long long fallback) {
    const std::string* v = get(key);
    return v ? parse_int(*v, path + ": " + key) : fallback;
  }
  double get_double(const std::string& key, double fallback) {
    const std::string* v = get(key);
    return v ? parse_double(*v, path + ": " + key) : fallback;
  }
  bool get_flag(const std::string& key, bool fallback) {
    const std::string* v = get(key);
    if (!v) return fallback;
    if (*v == "0") return false;
    if (*v == "1") return true;
    fail(Errc::ParseError, path + ": " + key + " must be 0 or 1");
  }
  std::vector<int> int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (auto tok : split(value, ','))
      out.push_back(int(parse_int(tok, path + ": " + key)));
    return out;
  }
  void reject_unknown() {
    for (const auto& [key, value] : kv)
      if (!seen.count(key))
        fail(Errc::ParseError, path + ": unknown grid key '" + key + "'");
  }
};

candgen::Shape parse_shape(const std::string& path, const std::string& key,
                           const std::string& value) {
  auto fields = split(value, ',');
  if (fields.size() != 4)
    fail(Errc::ParseError, path + ": " + key + " must be 'c,d,h,w'");
  int v[4];
  for (int i = 0; i < 4; ++i) {
    v[i] = int(parse_int(fields[size_t(i)], path + ": " + key));
    if (v[i] < 1)
      fail(Errc::ParseError, path + ": " + key + " has a non-positive entry");
  }
  return candgen::Shape{v[0], v[1], v[2], v[3]};
}

}  // namespace

GenerationSpec read_grid_file(const std::string& path) {
  GridKeys keys{path, read_key_values(path), {}};
  GenerationSpec spec;

  for (auto tok : split(keys.require("kinds"), ',')) {
    try {
      spec.grid.kinds.push_back(candgen::parse_kind(tok));
    } catch (const Error& e) {
      fail(Errc::ParseError, path + ": " + inner_message(e));
    }
  }
  for (auto tok : split(keys.require("channel_multipliers"), ','))
    spec.grid.channel_multipliers.push_back(
        parse_double(tok, path + ": channel_multipliers"));
  spec.grid.kernel_sizes = keys.int_list("kernel_sizes",
                                         keys.require("kernel_sizes"));
  spec.grid.max_layers = int(keys.get_int("max_layers", 1));
  if (const std::string* v = keys.get("heads"))
    spec.grid.heads = keys.int_list("heads", *v);
  if (const std::string* v = keys.get("ffn_dims"))
    spec.grid.ffn_dims = keys.int_list("ffn_dims", *v);
  if (const std::string* v = keys.get("token_divisors")) {
    auto divisors = keys.int_list("token_divisors", *v);
    if (divisors.size() != 3)
      fail(Errc::ParseError, path + ": token_divisors must hold 3 entries");
    for (int i = 0; i < 3; ++i) {
      if (divisors[size_t(i)] < 1)
        fail(Errc::ParseError, path + ": token_divisors must be positive");
      spec.grid.token_divisors[size_t(i)] = divisors[size_t(i)];
    }
  }

  long long count = keys.get_int("teacher_count", 0);
  if (count < 1 || count > 4096)
    fail(Errc::ParseError, path + ": teacher_count must lie in [1, 4096]");
  candgen::LayerKind teacher_kind;
  try {
    teacher_kind = candgen::parse_kind(keys.require("teacher_kind"));
  } catch (const Error& e) {
    fail(Errc::ParseError, path + ": " + inner_message(e));
  }
  candgen::Shape in_shape =
      parse_shape(path, "teacher_in_shape", keys.require("teacher_in_shape"));
  candgen::Shape out_shape = in_shape;
  if (const std::string* v = keys.get("teacher_out_shape"))
    out_shape = parse_shape(path, "teacher_out_shape", *v);
  int mid = int(keys.get_int("teacher_mid", out_shape.c));
  int layers = int(keys.get_int("teacher_layers", 1));
  int kernel = int(keys.get_int("teacher_kernel", 3));
  int heads = int(keys.get_int("teacher_heads", 0));
  int ffn = int(keys.get_int("teacher_ffn_dim", 0));

  spec.cost.flops_per_ms = keys.get_double("flops_per_ms", spec.cost.flops_per_ms);
  spec.cost.memory_bandwidth_penalty =
      keys.get_double("bandwidth_penalty", spec.cost.memory_bandwidth_penalty);
  spec.metric.scale = keys.get_double("dm_scale", spec.metric.scale);
  spec.metric.noise = keys.get_double("dm_noise", spec.metric.noise);
  spec.limit = int(keys.get_int("limit", spec.limit));
  if (spec.limit < 1)
    fail(Errc::ParseError, path + ": limit must be positive");
  spec.include_identity = keys.get_flag("include_identity", false);
  if (const std::string* v = keys.get("metric_name")) spec.metric_name = *v;
  keys.reject_unknown();

  for (int k = 1; k <= int(count); ++k)
    spec.teachers.push_back(candgen::make_uniform_block(
        k, teacher_kind, in_shape, out_shape, mid, layers, kernel, heads, ffn,
        spec.grid.token_divisors));
  return spec;
}

}  // namespace dnc::io
