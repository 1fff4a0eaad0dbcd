#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqa/embedding_io.hpp"

namespace sqa {

inline constexpr double kPoolingVarianceEpsilon = 1e-10;

/// Per-dimension frame mean followed by per-dimension population standard
/// deviation, 2*D values in total.
struct PooledVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> mean() const { return std::span<const double>(values).first(values.size() / 2); }
  std::span<const double> stddev() const { return std::span<const double>(values).last(values.size() / 2); }
};

// std_d = sqrt(var_d + kPoolingVarianceEpsilon), population variance.
PooledVector statistic_pooling(const EmbeddingMatrix& matrix);

enum class Activation : std::uint8_t {
  kLinear = 0,
  kLeakyRelu = 1,
};

inline constexpr double kLeakySlope = 0.01;

std::string_view activation_name(Activation activation);
Activation parse_activation(std::string_view name);

inline constexpr std::size_t kTensorCount = 6;
inline constexpr std::array<std::string_view, kTensorCount> kTensorNames = {
    "layer1.weight", "layer1.bias", "layer2.weight", "layer2.bias", "output.weight", "output.bias"};

/// Parameter tensors of the head in declaration order. Weight matrices are
/// row-major with one row per output unit. Also used for gradients and
/// optimizer moments, which share the same shapes.
struct HeadParameters {
  std::vector<double> w1;     // hidden x input
  std::vector<double> b1;     // hidden
  std::vector<double> w2;     // hidden x hidden
  std::vector<double> b2;     // hidden
  std::vector<double> w_out;  // 1 x hidden
  std::vector<double> b_out;  // 1

  static HeadParameters zeros(std::size_t input_dim, std::size_t hidden);

  std::array<std::span<double>, kTensorCount> tensors();
  std::array<std::span<const double>, kTensorCount> tensors() const;
  std::size_t count() const;
  bool same_shape(const HeadParameters& other) const;

  bool operator==(const HeadParameters&) const = default;
};

using Gradients = HeadParameters;

/// Pooled input (2D) -> H -> H -> 1 regression MLP.
struct RegressionHead {
  std::size_t input_dim = 0;  // 2 * embedding dim
  std::size_t hidden = 0;
  Activation activation = Activation::kLeakyRelu;
  HeadParameters params;
  // Bumped by every optimizer step; forward caches record it.
  std::uint64_t revision = 0;

  std::size_t embedding_dim() const noexcept { return input_dim / 2; }
};

// Uniform(+-sqrt(6 / fan_in)) weights, zero biases.
RegressionHead init_head(std::size_t input_dim, std::size_t hidden, std::uint64_t seed,
                         Activation activation = Activation::kLeakyRelu);

struct ForwardCache {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::uint64_t revision = 0;
  std::vector<double> input;
  std::vector<double> z1, a1;  // layer 1 pre/post activation
  std::vector<double> z2, a2;  // layer 2 pre/post activation
  double score = 0.0;
};

struct ForwardResult {
  double score = 0.0;
  ForwardCache cache;
};

ForwardResult forward(const RegressionHead& head, const PooledVector& x);
// Same value as forward().score without keeping the cache.
double score(const RegressionHead& head, const PooledVector& x);

inline double mse_loss(double predicted, double target) {
  const double diff = predicted - target;
  return diff * diff;
}

// Gradients of mse_loss(forward(x), target) w.r.t. every parameter.
Gradients backward(const RegressionHead& head, const ForwardCache& cache, double target);
// Writes scale * gradients into `out`, reusing its storage.
void backward_into(const RegressionHead& head, const ForwardCache& cache, double target, double scale,
                   Gradients& out);
// Adds scale * gradients into `into`.
void accumulate_backward(const RegressionHead& head, const ForwardCache& cache, double target,
                         double scale, Gradients& into);

enum class OptimizerKind : std::uint8_t { kAdam, kSgd };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  HeadParameters first_moment;
  HeadParameters second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_head(const RegressionHead& head, OptimizerKind kind = OptimizerKind::kAdam);
};

void optimizer_step(RegressionHead& head, const Gradients& grads, OptimizerState& state,
                    double learning_rate);

enum class ModelSelection : std::uint8_t { kBestValidation, kLastEpoch };

std::string_view model_selection_name(ModelSelection selection);
ModelSelection parse_model_selection(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 1;
  double learning_rate = 7e-6;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  ModelSelection model_selection = ModelSelection::kBestValidation;
  bool clamp_predictions = false;
  std::size_t hidden = 1024;
  Activation activation = Activation::kLeakyRelu;

  void validate() const;
};

struct TrainingSample {
  PooledVector x;
  double target = 0.0;
};

struct EpochLoss {
  double train_mse = 0.0;
  double valid_mse = 0.0;  // NaN when there is no validation set
};

struct LossCurve {
  std::vector<EpochLoss> epochs;
};

struct TrainResult {
  RegressionHead head;
  LossCurve curve;
  // 1-based epoch whose parameters were returned; 0 means the initial head.
  std::size_t selected_epoch = 0;
};

// The output bias starts at the mean training target. Batch size 1 is the
// supported protocol; larger batches average the per-sample gradients
// before each step.
TrainResult train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> valid_set,
                  const TrainConfig& config);

double mean_squared_error(const RegressionHead& head, std::span<const TrainingSample> samples);

double predict_pooled(const RegressionHead& head, const PooledVector& x, bool clamp);
double predict(const RegressionHead& head, const EmbeddingMatrix& matrix, bool clamp);

struct TensorCheck {
  std::string_view name;
  std::size_t count = 0;
  double max_relative_error = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  std::vector<TensorCheck> tensors;
};

// Central differences on every parameter; relative error is
// |g - g_num| / max(1, |g|, |g_num|).
GradCheckReport grad_check(const RegressionHead& head, const PooledVector& x, double target,
                           double step = 1e-4);

// Model file, little-endian: "SGH1", u32 version, u32 embedding dim D,
// u32 hidden H, u8 activation tag, then the tensors of HeadParameters in
// declaration order as f32. Parameters are stored as f32, so a head read
// back from disk re-encodes to identical bytes.
inline constexpr std::uint32_t kModelVersion = 1;

std::vector<std::uint8_t> encode_head(const RegressionHead& head);
RegressionHead decode_head(std::span<const std::uint8_t> bytes);
void save_head(const RegressionHead& head, const std::filesystem::path& path);
RegressionHead load_head(const std::filesystem::path& path);

}  // namespace sqa
