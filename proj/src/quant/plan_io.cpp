// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "polaron/quantizer.hpp"

namespace polaron {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

double parse_double(const std::string& s, const std::string& key, int line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ConfigError("plan line " + std::to_string(line) + ": bad number for " + key);
  return v;
}

}  // namespace

std::string serialize_plan(const QuantPlan& plan) {
  std::ostringstream out;
  out << "# polaron quant plan v1\n";
  for (const auto& l : plan.layers) {
    out << "layer " << l.layer_id << " format=" << l.format << " n=" << l.n
        << " w_l=" << format_double(l.weights.w_l) << " w_h=" << format_double(l.weights.w_h)
        << " scale_k=" << format_double(l.weights.scale_k) << " alpha=" << format_double(l.act.alpha)
        << " act=" << act_quant_name(l.act_mode) << "\n";
  }
  return out.str();
}

QuantPlan parse_plan(const std::string& text) {
  QuantPlan plan;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word != "layer") throw ConfigError("plan line " + std::to_string(lineno) + ": expected 'layer'");
    LayerPlan l;
    if (!(ls >> l.layer_id)) throw ConfigError("plan line " + std::to_string(lineno) + ": missing layer id");
    if (!seen.insert(l.layer_id).second)
      throw ConfigError("plan lists layer '" + l.layer_id + "' twice");
    std::set<std::string> keys;
    while (ls >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos) throw ConfigError("plan line " + std::to_string(lineno) + ": expected key=value");
      const std::string key = word.substr(0, eq);
      const std::string val = word.substr(eq + 1);
      keys.insert(key);
      if (key == "format") {
        parse_format(val);
        l.format = val;
      } else if (key == "n") {
        l.n = static_cast<int>(parse_double(val, key, lineno));
      } else if (key == "w_l") {
        l.weights.w_l = parse_double(val, key, lineno);
      } else if (key == "w_h") {
        l.weights.w_h = parse_double(val, key, lineno);
      } else if (key == "scale_k") {
        l.weights.scale_k = parse_double(val, key, lineno);
      } else if (key == "alpha") {
        l.act.alpha = parse_double(val, key, lineno);
      } else if (key == "act") {
        if (val == "pact") l.act_mode = ActQuant::Pact;
        else if (val == "sym") l.act_mode = ActQuant::Symmetric;
        else throw ConfigError("plan line " + std::to_string(lineno) + ": act must be pact or sym");
      } else {
        throw ConfigError("plan line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
    }
    for (const char* k : {"format", "n", "w_l", "w_h", "scale_k", "alpha", "act"})
      if (!keys.count(k)) throw ConfigError("plan line " + std::to_string(lineno) + ": missing " + k);
    l.weights.n = l.n;
    l.act.n = l.n;
    l.weights.validate();
    l.act.validate();
    plan.layers.push_back(l);
  }
  return plan;
}

void write_plan(const std::filesystem::path& path, const QuantPlan& plan) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write plan " + path.string());
  f << serialize_plan(plan);
}

QuantPlan read_plan(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open plan " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_plan(ss.str());
}

}  // namespace polaron
