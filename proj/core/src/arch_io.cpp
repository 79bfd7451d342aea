// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/arch_io.hpp"

#include <fstream>
#include "json.hpp"
#include <sstream>

#include "tissuenet/error.hpp"

namespace tissuenet {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string_view act_name(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

ordered_json unit_json(const UnitSpec& u) {
  ordered_json j;
  j["kind"] = u.kind == UnitKind::conv ? "conv" : "dense";
  j["c_in"] = u.c_in;
  j["c_h"] = u.c_h;
  j["c_out"] = u.c_out;
  if (u.kind == UnitKind::conv) {
    j["kernel"] = u.kernel;
    j["stride"] = u.stride;
    j["padding"] = u.padding;
  }
  return j;
}

ordered_json conv_json(const ConvSpec& c) {
  ordered_json j;
  j["out"] = c.c_out;
  j["kernel"] = c.geom.kernel;
  j["stride"] = c.geom.stride;
  j["padding"] = c.geom.padding;
  j["groups"] = c.geom.groups;
  j["activation"] = act_name(c.act);
  return j;
}

ordered_json layers_json(const std::vector<LayerSpec>& layers);

ordered_json layer_json(const LayerSpec& l) {
  ordered_json j;
  j["name"] = l.name;
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, ConvSpec>) {
          j["type"] = "conv";
          const ordered_json fields = conv_json(b);
          for (const auto& [k, v] : fields.items()) j[k] = v;
        } else if constexpr (std::is_same_v<T, StackedLayerSpec>) {
          j["type"] = "stacked";
          // Runs of identical units are written once with a count.
          ordered_json runs = ordered_json::array();
          for (std::size_t i = 0; i < b.units.size();) {
            std::size_t k = i;
            while (k < b.units.size() && b.units[k] == b.units[i]) ++k;
            ordered_json r;
            r["count"] = k - i;
            r["unit"] = unit_json(b.units[i]);
            runs.push_back(std::move(r));
            i = k;
          }
          j["units"] = std::move(runs);
        } else if constexpr (std::is_same_v<T, DenseSpec>) {
          j["type"] = "dense";
          j["out"] = b.out;
          j["activation"] = act_name(b.act);
        } else if constexpr (std::is_same_v<T, MaxPoolSpec>) {
          j["type"] = "maxpool";
          j["window"] = b.window;
          j["stride"] = b.stride;
        } else if constexpr (std::is_same_v<T, GlobalAvgPoolSpec>) {
          j["type"] = "gap";
        } else if constexpr (std::is_same_v<T, FlattenSpec>) {
          j["type"] = "flatten";
        } else {
          j["type"] = "residual";
          j["main"] = layers_json(b.main);
          if (b.shortcut) j["shortcut"] = conv_json(*b.shortcut);
        }
      },
      l.body);
  return j;
}

ordered_json layers_json(const std::vector<LayerSpec>& layers) {
  ordered_json arr = ordered_json::array();
  for (const LayerSpec& l : layers) arr.push_back(layer_json(l));
  return arr;
}

// Reader that tracks the JSON path for diagnostics.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCategory::parse, "field " + (path_.empty() ? std::string("<root>") : path_) + ": " + what);
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key) && !j_[key].is_null(); }

  Node at(const char* key) const {
    if (!j_.is_object()) error("expected an object");
    if (!j_.contains(key)) fail(ErrorCategory::parse, "field " + child(key) + ": missing");
    return Node(j_[key], child(key));
  }

  Node at(std::size_t i) const { return Node(j_[i], path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!j_.is_array()) error("expected an array");
    return j_.size();
  }

  std::size_t count(bool allow_zero = false) const {
    if (!j_.is_number_integer() || j_.get<long long>() < 0) error("expected a non-negative integer");
    const auto v = j_.get<std::size_t>();
    if (v == 0 && !allow_zero) error("must be >= 1");
    return v;
  }

  std::uint64_t u64() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long long>() >= 0)) {
      error("expected a non-negative integer");
    }
    return j_.get<std::uint64_t>();
  }

  std::string str() const {
    if (!j_.is_string()) error("expected a string");
    return j_.get<std::string>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) error("expected true or false");
    return j_.get<bool>();
  }

  double real() const {
    if (!j_.is_number()) error("expected a number");
    return j_.get<double>();
  }

  std::size_t count_or(const char* key, std::size_t fallback, bool allow_zero = false) const {
    return has(key) ? at(key).count(allow_zero) : fallback;
  }

  const std::string& path() const { return path_; }

 private:
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
};

Activation parse_act(const Node& n, const char* key, Activation fallback) {
  if (!n.has(key)) return fallback;
  const std::string s = n.at(key).str();
  if (s == "relu") return Activation::relu;
  if (s == "identity" || s == "linear") return Activation::identity;
  n.at(key).error("unknown activation '" + s + "'");
}

UnitSpec parse_unit(const Node& n) {
  UnitSpec u;
  const std::string kind = n.has("kind") ? n.at("kind").str() : "conv";
  if (kind == "conv") {
    u.kind = UnitKind::conv;
  } else if (kind == "dense") {
    u.kind = UnitKind::dense;
  } else {
    n.at("kind").error("unknown unit kind '" + kind + "'");
  }
  u.c_in = n.at("c_in").count();
  u.c_h = n.at("c_h").count();
  u.c_out = n.at("c_out").count();
  u.kernel = n.count_or("kernel", u.kind == UnitKind::conv ? 3 : 1);
  u.stride = n.count_or("stride", 1);
  u.padding = n.count_or("padding", u.kind == UnitKind::conv ? (u.kernel - 1) / 2 : 0, true);
  return u;
}

ConvSpec parse_conv(const Node& n, Activation fallback) {
  ConvSpec c;
  c.c_out = n.at("out").count();
  c.geom.kernel = n.at("kernel").count();
  c.geom.stride = n.count_or("stride", 1);
  c.geom.padding = n.count_or("padding", 0, true);
  c.geom.groups = n.count_or("groups", 1);
  c.act = parse_act(n, "activation", fallback);
  return c;
}

std::vector<LayerSpec> parse_layers(const Node& n);

LayerSpec parse_layer(const Node& n) {
  LayerSpec l;
  l.name = n.at("name").str();
  const std::string type = n.at("type").str();
  if (type == "conv") {
    l.body = parse_conv(n, Activation::relu);
  } else if (type == "stacked") {
    StackedLayerSpec s;
    const Node runs = n.at("units");
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const Node r = runs.at(i);
      if (r.has("unit")) {
        const std::size_t count = r.count_or("count", 1);
        const UnitSpec u = parse_unit(r.at("unit"));
        s.units.insert(s.units.end(), count, u);
      } else {
        s.units.push_back(parse_unit(r));
      }
    }
    if (s.units.empty()) n.at("units").error("stacked layer needs at least one unit");
    l.body = std::move(s);
  } else if (type == "dense") {
    l.body = DenseSpec{n.at("out").count(), parse_act(n, "activation", Activation::relu)};
  } else if (type == "maxpool") {
    l.body = MaxPoolSpec{n.count_or("window", 2), n.count_or("stride", 2)};
  } else if (type == "gap") {
    l.body = GlobalAvgPoolSpec{};
  } else if (type == "flatten") {
    l.body = FlattenSpec{};
  } else if (type == "residual") {
    ResidualSpec r;
    r.main = parse_layers(n.at("main"));
    if (n.has("shortcut")) r.shortcut = parse_conv(n.at("shortcut"), Activation::identity);
    l.body = std::move(r);
  } else {
    n.at("type").error("unknown layer type '" + type + "'");
  }
  return l;
}

std::vector<LayerSpec> parse_layers(const Node& n) {
  std::vector<LayerSpec> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(parse_layer(n.at(i)));
  return out;
}

Shape parse_shape(const Node& n) {
  Shape s;
  for (std::size_t i = 0; i < n.size(); ++i) s.push_back(n.at(i).count());
  if (s.empty()) n.error("shape must not be empty");
  return s;
}

std::optional<HybridPolicy> parse_hybrid(const Node& root) {
  if (!root.has("hybrid")) return std::nullopt;
  const Node h = root.at("hybrid");
  HybridPolicy p;
  p.seed = h.has("seed") ? h.at("seed").u64() : 0;
  const Node pool = h.at("pool");
  for (std::size_t i = 0; i < pool.size(); ++i) p.pool.push_back(parse_unit(pool.at(i)));
  if (p.pool.empty()) h.at("pool").error("hybrid pool must not be empty");
  return p;
}

ArchSpec expand_builder(const Node& root) {
  const Node b = root.at("builder");
  const std::string type = b.at("type").str();
  const std::uint64_t seed = root.has("seed") ? root.at("seed").u64() : 0;
  ArchSpec a;
  if (type == "mlp" || type == "mlp-tissuenet") {
    std::vector<std::size_t> widths;
    const Node w = b.at("widths");
    for (std::size_t i = 0; i < w.size(); ++i) widths.push_back(w.at(i).count());
    MlpOptions opt;
    opt.seed = seed;
    if (root.has("input_shape")) opt.input_shape = parse_shape(root.at("input_shape"));
    if (type == "mlp") {
      a = build_plain_mlp(widths, opt);
    } else {
      UnitSpec u = parse_unit(b.at("unit"));
      u.kind = UnitKind::dense;
      a = build_mlp_style(widths, u, opt);
    }
  } else if (type == "vgg" || type == "resnet" || type == "lenet") {
    CnnOptions opt;
    opt.seed = seed;
    opt.c_h = b.count_or("c_h", opt.c_h);
    opt.c_in = b.count_or("c_in", opt.c_in);
    opt.c_out = b.count_or("c_out", opt.c_out);
    opt.classes = b.count_or("classes", opt.classes);
    if (b.has("strategy")) {
      try {
        opt.strategy = replacement_from_string(b.at("strategy").str());
      } catch (const Error& e) {
        b.at("strategy").error(e.detail());
      }
    }
    if (root.has("input_shape")) {
      opt.input_shape = parse_shape(root.at("input_shape"));
    } else if (type == "lenet") {
      opt.input_shape = {1, 28, 28};
    }
    opt.hybrid = parse_hybrid(root);
    if (type == "vgg") {
      a = build_vgg_style(b.at("base").str(), opt);
    } else if (type == "resnet") {
      a = build_resnet_style(b.at("base").str(), opt);
    } else {
      a = build_lenet_style(opt);
    }
  } else {
    b.at("type").error("unknown builder '" + type + "'");
  }
  if (root.has("name")) a.name = root.at("name").str();
  if (root.has("bias")) a.bias = root.at("bias").boolean();
  return a;
}

}  // namespace

std::string arch_to_json(const ArchSpec& arch) {
  ordered_json j;
  j["format"] = "tissuenet-arch/1";
  j["name"] = arch.name;
  j["input_shape"] = arch.input_shape;
  j["replacement"] = to_string(arch.replacement);
  j["seed"] = arch.seed;
  j["bias"] = arch.bias;
  if (arch.hybrid) {
    ordered_json h;
    h["seed"] = arch.hybrid->seed;
    h["pool"] = ordered_json::array();
    for (const UnitSpec& u : arch.hybrid->pool) h["pool"].push_back(unit_json(u));
    j["hybrid"] = std::move(h);
  }
  j["layers"] = layers_json(arch.layers);
  return j.dump(2) + "\n";
}

ArchSpec arch_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCategory::parse, "line " + std::to_string(line) + " column " + std::to_string(col) +
                                   ": malformed JSON");
  }
  const Node root(j, "");
  if (!j.is_object()) root.error("expected an object");
  if (root.has("builder")) return expand_builder(root);

  ArchSpec a;
  a.name = root.has("name") ? root.at("name").str() : "unnamed";
  a.input_shape = parse_shape(root.at("input_shape"));
  if (root.has("replacement")) {
    try {
      a.replacement = replacement_from_string(root.at("replacement").str());
    } catch (const Error& e) {
      root.at("replacement").error(e.detail());
    }
  }
  a.seed = root.has("seed") ? root.at("seed").u64() : 0;
  a.bias = root.has("bias") ? root.at("bias").boolean() : true;
  a.hybrid = parse_hybrid(root);
  a.layers = parse_layers(root.at("layers"));
  return a;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ArchSpec load_arch(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return arch_from_json(text);
  } catch (const Error& e) {
    throw Error(e.category(), path.string() + ": " + e.detail());
  }
}

void save_arch(const ArchSpec& arch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::io, "cannot write '" + path.string() + "'");
  out << arch_to_json(arch);
  if (!out) fail(ErrorCategory::io, "write to '" + path.string() + "' failed");
}

}  // namespace tissuenet
