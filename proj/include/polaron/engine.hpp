// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "polaron/mac_engine.hpp"
#include "polaron/quantizer.hpp"

namespace polaron {

// ---- Activation unit -------------------------------------------------------

inline constexpr int kCordicIterations = 16;
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

/// Hyperbolic CORDIC in rotation mode: cosh(t) and sinh(t) for |t| <= 1.1.
/// Shift sequence 1, 2, 3, 4, 4, 5, ... with 13 repeated as well.
struct CoshSinh {
  double cosh = 1.0;
  double sinh = 0.0;
};
CoshSinh cordic_cosh_sinh(double t, int iterations = kCordicIterations);

/// e^x = 2^q * (cosh r + sinh r) with x = q ln2 + r.
double cordic_exp(double x, int iterations = kCordicIterations);
/// Saturates to +-1 for |x| > 8.
double cordic_tanh(double x, int iterations = kCordicIterations);
/// 0.5 (1 + tanh(x/2)); saturates to 0/1 for |x| > 16.
double cordic_sigmoid(double x, int iterations = kCordicIterations);

enum class ActivationKind { None, ReLU, Sigmoid, Tanh, Swish, GELU, SeLU, SoftMax };

std::string activation_name(ActivationKind a);
ActivationKind parse_activation(std::string_view text);

enum class ActivationImpl { Cordic, Exact };

struct ActivationParams {
  ActivationImpl impl = ActivationImpl::Cordic;
  int iterations = kCordicIterations;
};

/// Elementwise except SoftMax, which normalizes over the whole span.
std::vector<double> activation_apply(ActivationKind kind, std::span<const double> x,
                                     const ActivationParams& p = {});
Tensor activation_apply(ActivationKind kind, const Tensor& x, const ActivationParams& p = {});

/// Exact derivative at z; SoftMax is only supported as the output layer and
/// is folded into the loss gradient.
double activation_derivative(ActivationKind kind, double z);

// ---- Model graph -----------------------------------------------------------

enum class LayerKind { Dense, Conv2D, Activation, Flatten };

std::string layer_kind_name(LayerKind k);

/// Square kernel, symmetric zero padding, CHW layout.
struct ConvGeometry {
  int in_channels = 1;
  int in_h = 1;
  int in_w = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;

  int out_h() const;
  int out_w() const;
  int kernel_volume() const { return in_channels * kernel * kernel; }
  bool operator==(const ConvGeometry&) const = default;
};

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::Dense;
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  ConvGeometry conv;
  ActivationKind activation = ActivationKind::None;
  /// Lane format from the plan; empty until a plan is applied.
  std::string precision;

  bool has_weights() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2D; }
  /// Dot-product length per output element.
  std::size_t fan_in() const;
  bool operator==(const LayerSpec&) const = default;
};

LayerSpec dense_layer(std::string id, std::size_t in, std::size_t out, ActivationKind act);
LayerSpec conv_layer(std::string id, const ConvGeometry& g, ActivationKind act);
LayerSpec flatten_layer(std::string id, std::size_t features);
LayerSpec activation_layer(std::string id, std::size_t features, ActivationKind act);

struct ModelGraph {
  std::vector<LayerSpec> layers;
  /// Dense: [out, in]. Conv2D: [out_channels, kernel_volume].
  std::map<std::string, Tensor> weights;
  /// One per output neuron (Dense) or output channel (Conv2D).
  std::map<std::string, Tensor> biases;

  /// Throws ConfigError on inconsistent dims, duplicate ids or missing tensors.
  void validate() const;
  std::size_t input_size() const;
  std::size_t output_size() const;
  std::vector<std::string> weight_layer_ids() const;
  const LayerSpec& layer(const std::string& id) const;
};

/// Dense chain sizes[0] -> ... -> sizes.back() with He-uniform weights and zero biases.
ModelGraph make_mlp(const std::vector<std::size_t>& sizes, ActivationKind hidden, ActivationKind output,
                    std::uint64_t seed);
void init_weights(ModelGraph& m, std::uint64_t seed);
/// Copies plan formats into LayerSpec::precision.
void apply_plan(ModelGraph& m, const QuantPlan& plan);

/// model.txt manifest plus <id>.weights.plrn / <id>.bias.plrn.
void save_model(const std::filesystem::path& dir, const ModelGraph& m);
ModelGraph load_model(const std::filesystem::path& dir);
std::string serialize_manifest(const ModelGraph& m);
ModelGraph parse_manifest(const std::string& text);

// ---- Memory model ----------------------------------------------------------

struct MemoryModel {
  int banks = 8;
  int ports_per_bank = 1;
  std::int64_t accesses = 0;
  std::int64_t conflicts = 0;
  std::int64_t current_cycle = -1;
  std::vector<int> bank_load;
};

/// Records the accesses of one modeled cycle; returns the conflicts they add.
/// Repeated calls with the same cycle accumulate onto that cycle.
std::int64_t memory_access(MemoryModel& mem, std::span<const std::uint64_t> addresses, std::int64_t cycle);

// ---- Execution -------------------------------------------------------------

/// Exact hands the wide accumulator to the dequantizer unrounded; Format
/// first rounds it into the lane format like the hardware output stage.
enum class Readout { Exact, Format };

struct EngineConfig {
  /// Applied to float and posit layers; FxP layers always accumulate exactly.
  Accumulation accumulation = Accumulation::ExactWide;
  bool zero_skip = true;
  Readout readout = Readout::Exact;
  ActivationParams activation;
  int memory_banks = 8;
  int ports_per_bank = 1;
};

struct LayerStats {
  std::string layer_id;
  std::string format;
  PipelineStats pipeline;
  /// Logical multiply-accumulates (sum of dot lengths).
  std::int64_t macs = 0;
  std::int64_t conflicts = 0;
  bool operator==(const LayerStats&) const = default;
};

struct ExecStats {
  std::vector<LayerStats> layers;
  std::int64_t total_cycles = 0;
  std::int64_t total_macs = 0;
  std::int64_t total_vector_ops = 0;
  std::int64_t total_lane_ops = 0;
  /// Lane-weighted: sum of mac_ops over sum of vector_ops * lanes.
  double utilization = 0.0;
  std::int64_t conflicts = 0;

  void add(const LayerStats& l);
  bool operator==(const ExecStats&) const = default;
};

/// Stable key order; one "layer" line per weight layer.
std::string format_stats(const ExecStats& s);
void write_stats(const std::filesystem::path& path, const ExecStats& s);

struct InferenceResult {
  /// [batch, out] for rank-2 input, [out] for rank-1.
  Tensor output;
  ExecStats stats;
};

/// Every Dense/Conv2D dot product runs through the MAC engine in the layer's
/// plan format. Integer-code FxP plans quantize weights with the adaptive
/// quantizer and activations with PACT (or the symmetric clip), accumulate
/// the centered codes exactly and undo the affine maps in double. Other
/// formats encode clipped activations and weights directly.
InferenceResult run_inference(const ModelGraph& m, const Tensor& input, const QuantPlan& plan,
                              const EngineConfig& cfg = {});

/// Same numbers as run_inference without the datapath emulation: integer-code
/// layers use int64 sums, other formats still go through the engine.
Tensor forward_simulated(const ModelGraph& m, const Tensor& input, const QuantPlan& plan,
                         const EngineConfig& cfg = {});

/// Unquantized 64-bit forward pass.
Tensor forward_reference(const ModelGraph& m, const Tensor& input,
                         const ActivationParams& act = {ActivationImpl::Exact, kCordicIterations});

/// True when the plan entry is carried as n-bit integer codes.
bool is_integer_code_layer(const LayerPlan& lp);

// ---- Training --------------------------------------------------------------

struct Batch {
  Tensor inputs;  // [batch, features]
  std::vector<int> labels;
};

struct TrainHyper {
  double learning_rate = 0.05;
  double alpha_learning_rate = 0.01;
  /// L2 pull on every PACT alpha.
  double alpha_decay = 0.0;
  ThresholdConfig thresholds;
  ActivationParams activation;
};

struct Gradients {
  std::map<std::string, Tensor> weights;
  std::map<std::string, Tensor> biases;
  std::map<std::string, double> alpha;
  /// Mean cross entropy of the batch.
  double loss = 0.0;
};

/// Mean cross-entropy gradients. With a plan the forward pass is quantized
/// and the backward pass uses straight-through weights and PACT gradients;
/// without one it is the plain 64-bit network. The last layer's activation
/// must be None or SoftMax.
Gradients compute_gradients(const ModelGraph& m, const Batch& batch, const QuantPlan* plan,
                            const TrainHyper& hyper);

/// One SGD step on the 64-bit master weights (and alphas); weight quantizer
/// params in the plan are refit to the updated weights. Returns the pre-step loss.
double train_step(ModelGraph& m, const Batch& batch, QuantPlan* plan, const TrainHyper& hyper);

void refit_plan_weights(QuantPlan& plan, const ModelGraph& m, const ThresholdConfig& cfg);

struct FitConfig {
  int epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  TrainHyper hyper;
};

class Dataset;

/// Shuffled minibatch SGD; returns the mean loss of each epoch.
std::vector<double> fit(ModelGraph& m, const Dataset& data, QuantPlan* plan, const FitConfig& cfg);

// ---- Planning --------------------------------------------------------------

struct PlanBuildConfig {
  PolicyConfig policy;
  ThresholdConfig thresholds;
  ActQuant act_mode = ActQuant::Pact;
  /// Alpha starts at this percentile of the layer's calibration inputs.
  double alpha_percentile = 99.9;
};

/// Per weight layer, in graph order, from reference gradients on the batch.
/// The current quantizer is the 4-bit fit.
std::vector<LayerSensitivity> model_sensitivities(const ModelGraph& m, const Batch& calib,
                                                  const ThresholdConfig& thresholds);

/// Sensitivity-driven bit-widths, then calibrated quantizer params.
QuantPlan build_plan(const ModelGraph& m, const Batch& calib, const PlanBuildConfig& cfg);

/// Explicit bit-width per weight layer, then calibrated quantizer params.
QuantPlan fixed_width_plan(const ModelGraph& m, const Batch& calib, const std::vector<int>& widths,
                           const PlanBuildConfig& cfg);

/// Refits weight params and sets alphas from the calibration activations.
void calibrate_plan(QuantPlan& plan, const ModelGraph& m, const Batch& calib, const PlanBuildConfig& cfg);

// ---- Data ------------------------------------------------------------------

class Dataset {
 public:
  Dataset() = default;
  Dataset(Tensor images, std::vector<int> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t features() const { return images_.shape().at(1); }
  const Tensor& images() const { return images_; }
  const std::vector<int>& labels() const { return labels_; }
  Batch batch(std::span<const std::size_t> indices) const;
  Batch all() const;

 private:
  Tensor images_;
  std::vector<int> labels_;
};

/// Half-pixel-centred bilinear resize of a square image.
std::vector<double> upsample_bilinear(std::span<const double> image, int src_side, int dst_side);

/// 8x8 digits (0..16) from digits_images.plrn / digits_labels.plrn, resized
/// to side x side and scaled into [0, 1].
Dataset load_digits(const std::filesystem::path& dir, int side = 14);

struct DataSplit {
  Dataset train;
  Dataset test;
};

DataSplit split_dataset(const Dataset& d, std::size_t test_count, std::uint64_t seed);

/// Fisher-Yates driven by mt19937_64, identical on every platform.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

/// Fraction of rows whose argmax (first on ties) equals the label.
double accuracy(const Tensor& outputs, const std::vector<int>& labels);

}  // namespace polaron
