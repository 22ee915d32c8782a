// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

// polaron: codecs, oracle verification, MAC runs, quantization planning and
// layer-adaptive inference/training from the command line.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "polaron/engine.hpp"
#include "polaron/formats.hpp"
#include "polaron/mac_engine.hpp"
#include "polaron/quantizer.hpp"
#include "suites.hpp"

using namespace polaron;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitUsage = 2;

std::uint32_t parse_bits(const std::string& text, const FormatDescriptor& f) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(text, &pos, 0);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty() || v > f.mask())
    throw ConfigError("'" + text + "' is not a " + std::to_string(f.total_bits) + "-bit pattern");
  return static_cast<std::uint32_t>(v);
}

double parse_value(const std::string& text) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty()) throw ConfigError("'" + text + "' is not a number");
  return v;
}

std::string value_class(const Decoded& d) {
  if (d.is_nan()) return "nan";
  if (d.is_inf()) return "inf";
  return d.value.is_zero() ? "zero" : "finite";
}

// ---- fmt --------------------------------------------------------------------

struct FmtArgs {
  std::string format;
  std::string bits;
  std::string value;
  bool table = false;
};

int cmd_fmt(const FmtArgs& a) {
  const FormatDescriptor f = parse_format(a.format);
  if (a.table) {
    if (f.total_bits > 8) throw ConfigError("--table is available for 8-bit formats only");
    std::cout << conformance_csv(f);
    return kExitOk;
  }
  if (a.bits.empty() == a.value.empty()) throw ConfigError("give exactly one of --bits or --value");
  EncodedScalar s;
  bool inexact = false;
  if (!a.bits.empty()) {
    s = EncodedScalar(parse_bits(a.bits, f), f);
  } else {
    const double x = parse_value(a.value);
    s = encode(x, f);
    const Decoded back = decode(s);
    inexact = !(back.to_double() == x || (std::isnan(x) && back.is_nan()));
  }
  const Decoded d = decode(s);
  const UnpackedOperand u = unpack(s);
  std::cout << "format=" << f.name() << "\n"
            << "bits=" << hex_bits(s) << "\n"
            << "class=" << value_class(d) << "\n"
            << "value=" << (d.is_finite() ? exact_decimal(d.value) : (d.is_nan() ? "nan" : (d.value.negative ? "-inf" : "inf")))
            << "\n";
  if (!a.value.empty()) std::cout << "inexact=" << (inexact ? 1 : 0) << "\n";
  if (d.is_finite() && !d.value.is_zero()) {
    std::cout << "sign=" << (u.negative ? 1 : 0) << " scale=" << u.scale << " significand=0x" << std::hex
              << std::uppercase << u.significand << std::dec << " sig_width=" << u.sig_width
              << " subnormal=" << (u.is_subnormal ? 1 : 0) << "\n";
  }
  return kExitOk;
}

// ---- verify -----------------------------------------------------------------

struct VerifyArgs {
  std::string suite;
  std::optional<std::int64_t> trials;
  std::uint64_t seed = 1;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<suites::SuiteReport> reports;
  auto trials = [&](std::int64_t fallback) { return a.trials.value_or(fallback); };
  const bool all = a.suite == "all";
  if (all || a.suite == "codec-roundtrip") {
    std::vector<FormatDescriptor> fs(all_default_formats().begin(), all_default_formats().end());
    reports.push_back(suites::codec_roundtrip(fs));
  }
  if (all || a.suite == "throughput") reports.push_back(suites::throughput(4096, a.seed));
  if (all || a.suite == "multiplier") reports.push_back(suites::multiplier(trials(100000), a.seed));
  if (all || a.suite == "dot-exact") reports.push_back(suites::dot_exact(trials(1000), a.seed));
  if (all || a.suite == "posit8-pairs") reports.push_back(suites::posit8_pairs(trials(100000), a.seed));
  if (all || a.suite == "zero-skip") reports.push_back(suites::zero_skip(trials(1000), a.seed));
  if (all || a.suite == "permutation") reports.push_back(suites::permutation(trials(1000), a.seed));
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << suites::format_report(r);
    ok = ok && r.passed();
  }
  return ok ? kExitOk : kExitVerify;
}

// ---- mac --------------------------------------------------------------------

struct MacArgs {
  std::string vectors;
  std::string accumulation = "exact";
  bool no_zero_skip = false;
  bool trace = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// Rows: mode,a_hex,b_hex,expect_hex where a_hex/b_hex are ';'-separated lane
// patterns and expect_hex may be empty.
int cmd_mac(const MacArgs& a) {
  std::ifstream in(a.vectors);
  if (!in) throw ConfigError("cannot read " + a.vectors);
  const Accumulation acc = parse_accumulation(a.accumulation);
  std::string line;
  int line_no = 0, row = 0, mismatches = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line.rfind("mode,", 0) == 0) continue;
    const auto cols = split(line, ',');
    auto bad = [&](const std::string& why) {
      return ConfigError(a.vectors + ":" + std::to_string(line_no) + ": " + why);
    };
    if (cols.size() != 3 && cols.size() != 4) throw bad("expected mode,a_hex,b_hex,expect_hex");
    FormatDescriptor f;
    std::vector<EncodedScalar> va, vb;
    std::optional<EncodedScalar> expect;
    try {
      f = parse_format(trim(cols[0]));
      for (const auto& t : split(trim(cols[1]), ';')) va.emplace_back(parse_bits(trim(t), f), f);
      for (const auto& t : split(trim(cols[2]), ';')) vb.emplace_back(parse_bits(trim(t), f), f);
      if (cols.size() == 4 && !trim(cols[3]).empty()) expect = EncodedScalar(parse_bits(trim(cols[3]), f), f);
    } catch (const ConfigError& e) {
      throw bad(e.what());
    }
    if (va.size() != vb.size()) throw bad("operand vectors differ in length");
    const MacConfig cfg = MacConfig::make(f, acc, !a.no_zero_skip);
    cfg.validate();
    PipelineTrace trace;
    const DotResult r = dot_product(va, vb, cfg, a.trace ? &trace : nullptr);
    const bool pass = !expect || *expect == r.result;
    if (!pass) ++mismatches;
    std::cout << "row=" << row++ << " mode=" << f.name() << " result=" << hex_bits(r.result)
              << " cycles=" << r.stats.cycles << " vector_ops=" << r.stats.vector_ops
              << " mac_ops=" << r.stats.mac_ops << " skipped_lanes=" << r.stats.skipped_lanes
              << " utilization=" << format_double(r.stats.lane_utilization)
              << " check=" << (expect ? (pass ? "pass" : "FAIL expected " + hex_bits(*expect)) : "-") << "\n";
    for (const auto& t : trace.lines) std::cout << "  " << t << "\n";
  }
  return mismatches == 0 ? kExitOk : kExitVerify;
}

// ---- quantize ---------------------------------------------------------------

struct QuantizeArgs {
  std::string model;
  std::string calib_inputs;
  std::string calib_labels;
  std::string out;
  double p_low = 30.0;
  double p_high = 85.0;
  bool no_floor_first = false;
  bool no_floor_last = false;
  bool compat_symmetric = false;
  std::string act = "pact";
  std::vector<int> widths;
  std::uint64_t seed = 1;
};

Batch load_batch(const std::string& inputs, const std::string& labels) {
  if (inputs.empty() || labels.empty()) throw ConfigError("calibration inputs and labels are required");
  const Tensor x = read_tensor(inputs);
  const Tensor y = read_tensor(labels);
  if (x.rank() != 2) throw ConfigError(inputs + " must be [batch, features]");
  Batch b{x, {}};
  for (double v : y.data()) b.labels.push_back(static_cast<int>(v));
  if (b.labels.size() != x.shape()[0]) throw ConfigError("label count does not match " + inputs);
  return b;
}

ActQuant parse_act(const std::string& s) {
  if (s == "pact") return ActQuant::Pact;
  if (s == "sym") return ActQuant::Symmetric;
  throw ConfigError("unknown activation quantizer '" + s + "'; expected pact or sym");
}

int cmd_quantize(const QuantizeArgs& a) {
  const ModelGraph m = load_model(a.model);
  const Batch calib = load_batch(a.calib_inputs, a.calib_labels);
  PlanBuildConfig cfg;
  cfg.policy.p_low = a.p_low;
  cfg.policy.p_high = a.p_high;
  cfg.policy.floor_first = !a.no_floor_first;
  cfg.policy.floor_last = !a.no_floor_last;
  if (a.compat_symmetric) cfg.thresholds.mode = ThresholdMode::Symmetric;
  cfg.act_mode = parse_act(a.act);
  const auto sens = model_sensitivities(m, calib, cfg.thresholds);
  const QuantPlan plan = a.widths.empty() ? build_plan(m, calib, cfg) : fixed_width_plan(m, calib, a.widths, cfg);
  for (std::size_t i = 0; i < sens.size(); ++i) {
    std::cout << "layer=" << sens[i].layer_id << " s_sc8=" << format_double(sens[i].s_sc8)
              << " s_sc4=" << format_double(sens[i].s_sc4) << " s=" << format_double(sens[i].s_l)
              << " n=" << plan.layers[i].n << "\n";
  }
  if (!a.out.empty()) write_plan(a.out, plan);
  else std::cout << serialize_plan(plan);
  return kExitOk;
}

// ---- run --------------------------------------------------------------------

struct RunArgs {
  std::string model;
  std::string plan;
  std::string input;
  std::string labels;
  std::string output;
  std::string stats;
  std::string accumulation = "exact";
  std::string readout = "exact";
  bool no_zero_skip = false;
  bool train = false;
  std::string train_inputs;
  std::string train_labels;
  int epochs = 5;
  double lr = 0.02;
  double alpha_lr = 0.01;
  std::size_t batch = 32;
  std::uint64_t seed = 1;
  std::string save_model;
  std::string save_plan;
  std::string digits;
};

EngineConfig engine_config(const RunArgs& a) {
  EngineConfig cfg;
  cfg.accumulation = parse_accumulation(a.accumulation);
  cfg.zero_skip = !a.no_zero_skip;
  if (a.readout == "exact") cfg.readout = Readout::Exact;
  else if (a.readout == "format") cfg.readout = Readout::Format;
  else throw ConfigError("unknown readout '" + a.readout + "'; expected exact or format");
  return cfg;
}

void report_inference(const InferenceResult& r, const RunArgs& a, const std::vector<int>* labels) {
  if (!a.output.empty()) write_tensor(a.output, r.output);
  if (!a.stats.empty()) write_stats(a.stats, r.stats);
  std::cout << format_stats(r.stats);
  if (labels) std::cout << "accuracy=" << format_double(accuracy(r.output, *labels)) << "\n";
}

// End-to-end desk-scale demo on the 14x14 digits: float baseline, sensitivity
// plan, quantization-aware fine-tuning, engine inference.
int run_digits_demo(const RunArgs& a, const EngineConfig& cfg) {
  const Dataset d = load_digits(a.digits);
  const DataSplit s = split_dataset(d, 360, a.seed);
  ModelGraph m = make_mlp({196, 64, 32, 32, 10}, ActivationKind::ReLU, ActivationKind::None, a.seed);
  FitConfig base;
  base.epochs = 30;
  base.batch_size = a.batch;
  base.seed = a.seed;
  base.hyper.learning_rate = 0.05;
  fit(m, s.train, nullptr, base);
  const double base_acc = accuracy(forward_reference(m, s.test.images()), s.test.labels());

  std::vector<std::size_t> first(256);
  for (std::size_t i = 0; i < first.size(); ++i) first[i] = i;
  PlanBuildConfig pc;
  QuantPlan plan = build_plan(m, s.train.batch(first), pc);
  FitConfig qat = base;
  qat.epochs = a.epochs;
  qat.hyper.learning_rate = a.lr;
  qat.hyper.alpha_learning_rate = a.alpha_lr;
  fit(m, s.train, &plan, qat);
  apply_plan(m, plan);
  const InferenceResult r = run_inference(m, s.test.images(), plan, cfg);
  std::cout << "baseline_accuracy=" << format_double(base_acc) << "\n";
  for (const auto& l : plan.layers) std::cout << "plan layer=" << l.layer_id << " format=" << l.format << "\n";
  report_inference(r, a, &s.test.labels());
  if (!a.save_model.empty()) save_model(a.save_model, m);
  if (!a.save_plan.empty()) write_plan(a.save_plan, plan);
  return kExitOk;
}

int cmd_run(const RunArgs& a) {
  const EngineConfig cfg = engine_config(a);
  if (!a.digits.empty()) return run_digits_demo(a, cfg);
  if (a.model.empty() || a.plan.empty()) throw ConfigError("--model and --plan are required");
  ModelGraph m = load_model(a.model);
  QuantPlan plan = read_plan(a.plan);
  for (const auto& id : m.weight_layer_ids()) plan.find(id);
  if (a.train) {
    FitConfig fc;
    fc.epochs = a.epochs;
    fc.batch_size = a.batch;
    fc.seed = a.seed;
    fc.hyper.learning_rate = a.lr;
    fc.hyper.alpha_learning_rate = a.alpha_lr;
    const Batch tb = load_batch(a.train_inputs, a.train_labels);
    const auto losses = fit(m, Dataset(tb.inputs, tb.labels), &plan, fc);
    for (std::size_t e = 0; e < losses.size(); ++e)
      std::cout << "epoch=" << e << " loss=" << format_double(losses[e]) << "\n";
    apply_plan(m, plan);
    if (!a.save_model.empty()) save_model(a.save_model, m);
    if (!a.save_plan.empty()) write_plan(a.save_plan, plan);
  }
  if (a.input.empty()) {
    if (!a.train) throw ConfigError("--input is required for inference");
    return kExitOk;
  }
  const Tensor x = read_tensor(a.input);
  std::vector<int> labels;
  if (!a.labels.empty())
    for (double v : read_tensor(a.labels).data()) labels.push_back(static_cast<int>(v));
  const InferenceResult r = run_inference(m, x, plan, cfg);
  report_inference(r, a, a.labels.empty() ? nullptr : &labels);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polaron: trans-precision MAC emulator and layer-adaptive quantization"};
  app.require_subcommand(1);

  FmtArgs fmt;
  auto* c_fmt = app.add_subcommand("fmt", "Encode, decode and unpack one scalar");
  c_fmt->add_option("--format", fmt.format, "Format name, e.g. posit8, fp8e4m3, fxp8:f4")->required();
  c_fmt->add_option("--bits", fmt.bits, "Bit pattern (0x.. or decimal)");
  c_fmt->add_option("--value", fmt.value, "Real value, rounded to nearest even");
  c_fmt->add_flag("--table", fmt.table, "Dump the conformance CSV of an 8-bit format");

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "Run oracle-equivalence suites");
  c_ver->add_option("--suite", ver.suite, "Suite to run")
      ->required()
      ->check(CLI::IsMember({"codec-roundtrip", "throughput", "multiplier", "dot-exact", "posit8-pairs",
                             "zero-skip", "permutation", "all"}));
  c_ver->add_option("--trials", ver.trials, "Random trials (per mode where applicable)")->check(CLI::PositiveNumber);
  c_ver->add_option("--seed", ver.seed, "Random seed");

  MacArgs mac;
  auto* c_mac = app.add_subcommand("mac", "Run dot products from a CSV vector file");
  c_mac->add_option("--vectors", mac.vectors, "CSV rows: mode,a_hex,b_hex,expect_hex")->required();
  c_mac->add_option("--accumulation", mac.accumulation, "exact or align");
  c_mac->add_flag("--no-zero-skip", mac.no_zero_skip, "Issue zero lanes as work");
  c_mac->add_flag("--trace", mac.trace, "Print the per-cycle stage trace");

  QuantizeArgs q;
  auto* c_q = app.add_subcommand("quantize", "Compute sensitivities and emit a precision plan");
  c_q->add_option("--model", q.model, "Model directory")->required();
  c_q->add_option("--calib-inputs", q.calib_inputs, "Calibration inputs (PLRN [batch, features])");
  c_q->add_option("--calib-labels", q.calib_labels, "Calibration labels (PLRN [batch])");
  c_q->add_option("--out", q.out, "Plan file to write (stdout when omitted)");
  c_q->add_option("--p-low", q.p_low, "Percentile below which layers get 4 bits");
  c_q->add_option("--p-high", q.p_high, "Percentile above which layers get 16 bits");
  c_q->add_flag("--no-floor-first", q.no_floor_first, "Let the first layer drop below 8 bits");
  c_q->add_flag("--no-floor-last", q.no_floor_last, "Let the last layer drop below 8 bits");
  c_q->add_flag("--compat-symmetric", q.compat_symmetric, "Fixed thresholds W_l=-1, W_h=1");
  c_q->add_option("--act", q.act, "Activation quantizer: pact or sym");
  c_q->add_option("--widths", q.widths, "Explicit bit-width per weight layer")->delimiter(',');
  c_q->add_option("--seed", q.seed, "Random seed");

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Layer-adaptive inference, training, or the digits demo");
  c_run->add_option("--model", run.model, "Model directory");
  c_run->add_option("--plan", run.plan, "Plan file");
  c_run->add_option("--input", run.input, "Input tensor (PLRN)");
  c_run->add_option("--labels", run.labels, "Labels for accuracy (PLRN)");
  c_run->add_option("--output", run.output, "Output tensor to write (PLRN)");
  c_run->add_option("--stats", run.stats, "Stats file to write");
  c_run->add_option("--accumulation", run.accumulation, "exact or align (float/posit layers)");
  c_run->add_option("--readout", run.readout, "exact or format");
  c_run->add_flag("--no-zero-skip", run.no_zero_skip, "Issue zero lanes as work");
  c_run->add_flag("--train", run.train, "Quantization-aware training before inference");
  c_run->add_option("--train-inputs", run.train_inputs, "Training inputs (PLRN)");
  c_run->add_option("--train-labels", run.train_labels, "Training labels (PLRN)");
  c_run->add_option("--epochs", run.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  c_run->add_option("--lr", run.lr, "Learning rate");
  c_run->add_option("--alpha-lr", run.alpha_lr, "Learning rate of the PACT clip levels");
  c_run->add_option("--batch", run.batch, "Minibatch size")->check(CLI::PositiveNumber);
  c_run->add_option("--seed", run.seed, "Random seed");
  c_run->add_option("--save-model", run.save_model, "Directory for the trained model");
  c_run->add_option("--save-plan", run.save_plan, "File for the trained plan");
  c_run->add_option("--digits", run.digits, "Run the digits demo from this data directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (c_fmt->parsed()) return cmd_fmt(fmt);
    if (c_ver->parsed()) return cmd_verify(ver);
    if (c_mac->parsed()) return cmd_mac(mac);
    if (c_q->parsed()) return cmd_quantize(q);
    if (c_run->parsed()) return cmd_run(run);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
