// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "polaron/engine.hpp"

namespace polaron {

int ConvGeometry::out_h() const { return (in_h + 2 * padding - kernel) / stride + 1; }
int ConvGeometry::out_w() const { return (in_w + 2 * padding - kernel) / stride + 1; }

std::string layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::Activation: return "activation";
    case LayerKind::Flatten: return "flatten";
  }
  return "dense";
}

std::size_t LayerSpec::fan_in() const {
  if (kind == LayerKind::Dense) return in_features;
  if (kind == LayerKind::Conv2D) return static_cast<std::size_t>(conv.kernel_volume());
  return 0;
}

LayerSpec dense_layer(std::string id, std::size_t in, std::size_t out, ActivationKind act) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = LayerKind::Dense;
  l.in_features = in;
  l.out_features = out;
  l.activation = act;
  return l;
}

LayerSpec conv_layer(std::string id, const ConvGeometry& g, ActivationKind act) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = LayerKind::Conv2D;
  l.conv = g;
  l.in_features = static_cast<std::size_t>(g.in_channels * g.in_h * g.in_w);
  l.out_features = static_cast<std::size_t>(std::max(0, g.out_channels * g.out_h() * g.out_w()));
  l.activation = act;
  return l;
}

LayerSpec flatten_layer(std::string id, std::size_t features) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = LayerKind::Flatten;
  l.in_features = l.out_features = features;
  return l;
}

LayerSpec activation_layer(std::string id, std::size_t features, ActivationKind act) {
  LayerSpec l = flatten_layer(std::move(id), features);
  l.kind = LayerKind::Activation;
  l.activation = act;
  return l;
}

void ModelGraph::validate() const {
  if (layers.empty()) throw ConfigError("model has no layers");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.id.empty() || l.id.find_first_of(" \t\n=") != std::string::npos)
      throw ConfigError("invalid layer id '" + l.id + "'");
    if (!ids.insert(l.id).second) throw ConfigError("duplicate layer id '" + l.id + "'");
    if (l.in_features == 0 || l.out_features == 0) throw ConfigError("layer '" + l.id + "' has empty dims");
    if (i > 0 && layers[i - 1].out_features != l.in_features)
      throw ConfigError("layer '" + l.id + "' expects " + std::to_string(l.in_features) + " inputs but '" +
                        layers[i - 1].id + "' produces " + std::to_string(layers[i - 1].out_features));
    if (!l.precision.empty()) parse_format(l.precision);
    switch (l.kind) {
      case LayerKind::Flatten:
      case LayerKind::Activation:
        if (l.in_features != l.out_features) throw ConfigError("layer '" + l.id + "' must preserve size");
        break;
      case LayerKind::Conv2D: {
        const ConvGeometry& g = l.conv;
        if (g.in_channels < 1 || g.out_channels < 1 || g.kernel < 1 || g.stride < 1 || g.padding < 0 ||
            g.out_h() < 1 || g.out_w() < 1)
          throw ConfigError("layer '" + l.id + "' has invalid convolution geometry");
        if (l.in_features != static_cast<std::size_t>(g.in_channels * g.in_h * g.in_w) ||
            l.out_features != static_cast<std::size_t>(g.out_channels * g.out_h() * g.out_w()))
          throw ConfigError("layer '" + l.id + "' dims disagree with its geometry");
        [[fallthrough]];
      }
      case LayerKind::Dense: {
        const std::size_t rows =
            l.kind == LayerKind::Dense ? l.out_features : static_cast<std::size_t>(l.conv.out_channels);
        auto w = weights.find(l.id);
        auto b = biases.find(l.id);
        if (w == weights.end() || b == biases.end()) throw ConfigError("layer '" + l.id + "' has no parameters");
        if (w->second.shape() != std::vector<std::size_t>{rows, l.fan_in()})
          throw ConfigError("layer '" + l.id + "' weight tensor has the wrong shape");
        if (b->second.shape() != std::vector<std::size_t>{rows})
          throw ConfigError("layer '" + l.id + "' bias tensor has the wrong shape");
        break;
      }
    }
  }
}

std::size_t ModelGraph::input_size() const { return layers.at(0).in_features; }
std::size_t ModelGraph::output_size() const { return layers.back().out_features; }

std::vector<std::string> ModelGraph::weight_layer_ids() const {
  std::vector<std::string> ids;
  for (const auto& l : layers)
    if (l.has_weights()) ids.push_back(l.id);
  return ids;
}

const LayerSpec& ModelGraph::layer(const std::string& id) const {
  for (const auto& l : layers)
    if (l.id == id) return l;
  throw ConfigError("model has no layer '" + id + "'");
}

void init_weights(ModelGraph& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& l : m.layers) {
    if (!l.has_weights()) continue;
    const std::size_t rows =
        l.kind == LayerKind::Dense ? l.out_features : static_cast<std::size_t>(l.conv.out_channels);
    const double limit = std::sqrt(6.0 / static_cast<double>(l.fan_in()));
    std::vector<double> w(rows * l.fan_in());
    for (auto& v : w) v = (2.0 * static_cast<double>(rng() >> 11) * 0x1p-53 - 1.0) * limit;
    m.weights[l.id] = Tensor({rows, l.fan_in()}, std::move(w));
    m.biases[l.id] = Tensor::zeros({rows});
  }
}

ModelGraph make_mlp(const std::vector<std::size_t>& sizes, ActivationKind hidden, ActivationKind output,
                    std::uint64_t seed) {
  if (sizes.size() < 2) throw std::invalid_argument("an MLP needs at least two sizes");
  ModelGraph m;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const bool last = i + 2 == sizes.size();
    m.layers.push_back(dense_layer("fc" + std::to_string(i + 1), sizes[i], sizes[i + 1], last ? output : hidden));
  }
  init_weights(m, seed);
  m.validate();
  return m;
}

void apply_plan(ModelGraph& m, const QuantPlan& plan) {
  for (auto& l : m.layers)
    if (l.has_weights()) l.precision = plan.find(l.id).format;
}

std::string serialize_manifest(const ModelGraph& m) {
  std::ostringstream os;
  os << "# polaron model v1\n";
  for (const auto& l : m.layers) {
    os << "layer " << l.id << " kind=" << layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::Dense: os << " in=" << l.in_features << " out=" << l.out_features; break;
      case LayerKind::Conv2D:
        os << " in_ch=" << l.conv.in_channels << " in_h=" << l.conv.in_h << " in_w=" << l.conv.in_w
           << " out_ch=" << l.conv.out_channels << " kernel=" << l.conv.kernel << " stride=" << l.conv.stride
           << " pad=" << l.conv.padding;
        break;
      case LayerKind::Activation:
      case LayerKind::Flatten: os << " features=" << l.in_features; break;
    }
    if (l.kind != LayerKind::Flatten) os << " act=" << activation_name(l.activation);
    if (l.has_weights()) os << " precision=" << (l.precision.empty() ? "-" : l.precision);
    os << "\n";
  }
  return os.str();
}

namespace {

std::size_t to_size(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size() || x < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("manifest line " + std::to_string(line) + ": bad value for " + key + ": '" + v + "'");
  }
}

}  // namespace

ModelGraph parse_manifest(const std::string& text) {
  ModelGraph m;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.empty() || raw[0] == '#') continue;
    std::istringstream ls(raw);
    std::string word, id;
    ls >> word >> id;
    if (word != "layer" || id.empty())
      throw ConfigError("manifest line " + std::to_string(line_no) + ": expected 'layer <id> ...'");
    std::map<std::string, std::string> kv;
    while (ls >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos || !kv.emplace(word.substr(0, eq), word.substr(eq + 1)).second)
        throw ConfigError("manifest line " + std::to_string(line_no) + ": bad field '" + word + "'");
    }
    auto take = [&](const std::string& key) {
      auto it = kv.find(key);
      if (it == kv.end())
        throw ConfigError("manifest line " + std::to_string(line_no) + ": missing '" + key + "'");
      std::string v = it->second;
      kv.erase(it);
      return v;
    };
    auto num = [&](const std::string& key) { return to_size(take(key), key, line_no); };
    const std::string kind = take("kind");
    LayerSpec l;
    if (kind == "dense") {
      const std::size_t a = num("in"), b = num("out");
      l = dense_layer(id, a, b, parse_activation(take("act")));
    } else if (kind == "conv2d") {
      ConvGeometry g;
      g.in_channels = static_cast<int>(num("in_ch"));
      g.in_h = static_cast<int>(num("in_h"));
      g.in_w = static_cast<int>(num("in_w"));
      g.out_channels = static_cast<int>(num("out_ch"));
      g.kernel = static_cast<int>(num("kernel"));
      g.stride = static_cast<int>(num("stride"));
      g.padding = static_cast<int>(num("pad"));
      l = conv_layer(id, g, parse_activation(take("act")));
    } else if (kind == "flatten") {
      l = flatten_layer(id, num("features"));
    } else if (kind == "activation") {
      const std::size_t f = num("features");
      l = activation_layer(id, f, parse_activation(take("act")));
    } else {
      throw ConfigError("manifest line " + std::to_string(line_no) + ": unknown kind '" + kind + "'");
    }
    if (l.has_weights()) {
      const std::string p = take("precision");
      l.precision = p == "-" ? "" : p;
    }
    if (!kv.empty())
      throw ConfigError("manifest line " + std::to_string(line_no) + ": unknown field '" + kv.begin()->first + "'");
    m.layers.push_back(l);
  }
  return m;
}

void save_model(const std::filesystem::path& dir, const ModelGraph& m) {
  m.validate();
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "model.txt");
  if (!f) throw ConfigError("cannot write " + (dir / "model.txt").string());
  f << serialize_manifest(m);
  for (const auto& id : m.weight_layer_ids()) {
    write_tensor(dir / (id + ".weights.plrn"), m.weights.at(id));
    write_tensor(dir / (id + ".bias.plrn"), m.biases.at(id));
  }
}

ModelGraph load_model(const std::filesystem::path& dir) {
  std::ifstream f(dir / "model.txt");
  if (!f) throw ConfigError("cannot read " + (dir / "model.txt").string());
  std::stringstream ss;
  ss << f.rdbuf();
  ModelGraph m = parse_manifest(ss.str());
  for (const auto& id : m.weight_layer_ids()) {
    m.weights[id] = read_tensor(dir / (id + ".weights.plrn"));
    m.biases[id] = read_tensor(dir / (id + ".bias.plrn"));
  }
  m.validate();
  return m;
}

}  // namespace polaron
