#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "byte_io.hpp"
#include "sqa/errors.hpp"
#include "sqa/pooling_regressor.hpp"
#include "sqa/rng.hpp"

namespace sqa {

std::string_view activation_name(Activation activation) {
  switch (activation) {
    case Activation::kLinear:
      return "linear";
    case Activation::kLeakyRelu:
      return "leaky_relu";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

HeadParameters HeadParameters::zeros(std::size_t input_dim, std::size_t hidden) {
  HeadParameters p;
  p.w1.assign(hidden * input_dim, 0.0);
  p.b1.assign(hidden, 0.0);
  p.w2.assign(hidden * hidden, 0.0);
  p.b2.assign(hidden, 0.0);
  p.w_out.assign(hidden, 0.0);
  p.b_out.assign(1, 0.0);
  return p;
}

std::array<std::span<double>, kTensorCount> HeadParameters::tensors() { return {w1, b1, w2, b2, w_out, b_out}; }

std::array<std::span<const double>, kTensorCount> HeadParameters::tensors() const {
  return {w1, b1, w2, b2, w_out, b_out};
}

std::size_t HeadParameters::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

bool HeadParameters::same_shape(const HeadParameters& other) const {
  const auto mine = tensors();
  const auto theirs = other.tensors();
  for (std::size_t i = 0; i < kTensorCount; ++i) {
    if (mine[i].size() != theirs[i].size()) return false;
  }
  return true;
}

RegressionHead init_head(std::size_t input_dim, std::size_t hidden, std::uint64_t seed, Activation activation) {
  if (input_dim == 0 || hidden == 0) throw std::invalid_argument("head dimensions must be >= 1");
  RegressionHead head;
  head.input_dim = input_dim;
  head.hidden = hidden;
  head.activation = activation;
  head.params = HeadParameters::zeros(input_dim, hidden);

  Rng rng(seed);
  auto fill = [&rng](std::vector<double>& weights, std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& w : weights) w = rng.uniform(-limit, limit);
  };
  fill(head.params.w1, input_dim);
  fill(head.params.w2, hidden);
  fill(head.params.w_out, hidden);
  return head;
}

namespace {

inline double activate(Activation activation, double z) {
  if (activation == Activation::kLeakyRelu && z < 0.0) return kLeakySlope * z;
  return z;
}

inline double activate_grad(Activation activation, double z) {
  if (activation == Activation::kLeakyRelu && z <= 0.0) return kLeakySlope;
  return 1.0;
}

// out[r] = bias[r] + sum_c weights[r, c] * in[c]
void affine(std::span<const double> weights, std::span<const double> bias, std::span<const double> in,
            std::span<double> out) {
  const std::size_t cols = in.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double* row = weights.data() + r * cols;
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sum += row[c] * in[c];
    out[r] = bias[r] + sum;
  }
}

void check_input(const RegressionHead& head, const PooledVector& x) {
  if (x.size() != head.input_dim) {
    throw DataError("shape mismatch: head expects input of " + std::to_string(head.input_dim) + ", got " +
                    std::to_string(x.size()));
  }
}

// accumulate=false overwrites `into` instead of adding.
void backprop(const RegressionHead& head, const ForwardCache& cache, double target, double scale, Gradients& into,
              bool accumulate) {
  if (cache.input_dim != head.input_dim || cache.hidden != head.hidden || cache.revision != head.revision ||
      cache.input.size() != head.input_dim) {
    throw std::logic_error("stale or mismatched forward cache");
  }
  if (!into.same_shape(head.params)) throw std::invalid_argument("gradient shape mismatch");

  const std::size_t in_dim = head.input_dim;
  const std::size_t hidden = head.hidden;
  const auto& p = head.params;
  const double g = scale * 2.0 * (cache.score - target);

  auto put = [accumulate](double& slot, double value) { slot = accumulate ? slot + value : value; };

  put(into.b_out[0], g);
  std::vector<double> delta2(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    put(into.w_out[j], g * cache.a2[j]);
    delta2[j] = g * p.w_out[j] * activate_grad(head.activation, cache.z2[j]);
  }

  std::vector<double> delta1(hidden, 0.0);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double d = delta2[j];
    put(into.b2[j], d);
    double* grad_row = into.w2.data() + j * hidden;
    const double* weight_row = p.w2.data() + j * hidden;
    if (accumulate) {
      for (std::size_t i = 0; i < hidden; ++i) grad_row[i] += d * cache.a1[i];
    } else {
      for (std::size_t i = 0; i < hidden; ++i) grad_row[i] = d * cache.a1[i];
    }
    for (std::size_t i = 0; i < hidden; ++i) delta1[i] += weight_row[i] * d;
  }

  for (std::size_t i = 0; i < hidden; ++i) {
    const double d = delta1[i] * activate_grad(head.activation, cache.z1[i]);
    put(into.b1[i], d);
    double* grad_row = into.w1.data() + i * in_dim;
    if (accumulate) {
      for (std::size_t k = 0; k < in_dim; ++k) grad_row[k] += d * cache.input[k];
    } else {
      for (std::size_t k = 0; k < in_dim; ++k) grad_row[k] = d * cache.input[k];
    }
  }
}

}  // namespace

ForwardResult forward(const RegressionHead& head, const PooledVector& x) {
  check_input(head, x);
  ForwardResult result;
  auto& c = result.cache;
  c.input_dim = head.input_dim;
  c.hidden = head.hidden;
  c.revision = head.revision;
  c.input = x.values;
  c.z1.resize(head.hidden);
  c.a1.resize(head.hidden);
  c.z2.resize(head.hidden);
  c.a2.resize(head.hidden);

  affine(head.params.w1, head.params.b1, c.input, c.z1);
  for (std::size_t i = 0; i < head.hidden; ++i) c.a1[i] = activate(head.activation, c.z1[i]);
  affine(head.params.w2, head.params.b2, c.a1, c.z2);
  for (std::size_t i = 0; i < head.hidden; ++i) c.a2[i] = activate(head.activation, c.z2[i]);

  double out = head.params.b_out[0];
  for (std::size_t i = 0; i < head.hidden; ++i) out += head.params.w_out[i] * c.a2[i];
  c.score = out;
  result.score = out;
  return result;
}

double score(const RegressionHead& head, const PooledVector& x) { return forward(head, x).score; }

Gradients backward(const RegressionHead& head, const ForwardCache& cache, double target) {
  Gradients grads = HeadParameters::zeros(head.input_dim, head.hidden);
  backprop(head, cache, target, 1.0, grads, false);
  return grads;
}

void backward_into(const RegressionHead& head, const ForwardCache& cache, double target, double scale,
                   Gradients& out) {
  backprop(head, cache, target, scale, out, false);
}

void accumulate_backward(const RegressionHead& head, const ForwardCache& cache, double target, double scale,
                         Gradients& into) {
  backprop(head, cache, target, scale, into, true);
}

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

OptimizerState OptimizerState::for_head(const RegressionHead& head, OptimizerKind kind) {
  OptimizerState state;
  state.kind = kind;
  if (kind == OptimizerKind::kAdam) {
    state.first_moment = HeadParameters::zeros(head.input_dim, head.hidden);
    state.second_moment = HeadParameters::zeros(head.input_dim, head.hidden);
  }
  return state;
}

void optimizer_step(RegressionHead& head, const Gradients& grads, OptimizerState& state, double learning_rate) {
  if (!grads.same_shape(head.params)) throw std::invalid_argument("gradient shape mismatch");
  ++state.step;
  ++head.revision;
  auto params = head.params.tensors();
  const auto g = grads.tensors();

  if (state.kind == OptimizerKind::kSgd) {
    for (std::size_t t = 0; t < kTensorCount; ++t) {
      for (std::size_t i = 0; i < params[t].size(); ++i) params[t][i] -= learning_rate * g[t][i];
    }
    return;
  }

  if (!state.first_moment.same_shape(head.params) || !state.second_moment.same_shape(head.params)) {
    throw std::invalid_argument("optimizer state shape mismatch");
  }
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  const double step = static_cast<double>(state.step);
  const double m_correction = 1.0 - std::pow(state.beta1, step);
  const double v_correction = 1.0 - std::pow(state.beta2, step);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double eps = state.epsilon;
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    double* p = params[t].data();
    double* mt = m[t].data();
    double* vt = v[t].data();
    const double* gt = g[t].data();
    const std::size_t n = params[t].size();
    for (std::size_t i = 0; i < n; ++i) {
      mt[i] = b1 * mt[i] + (1.0 - b1) * gt[i];
      vt[i] = b2 * vt[i] + (1.0 - b2) * gt[i] * gt[i];
      const double m_hat = mt[i] / m_correction;
      const double v_hat = vt[i] / v_correction;
      p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

GradCheckReport grad_check(const RegressionHead& head, const PooledVector& x, double target, double step) {
  const auto analytic = backward(head, forward(head, x).cache, target);
  RegressionHead probe = head;
  auto probe_tensors = probe.params.tensors();
  const auto grad_tensors = analytic.tensors();

  GradCheckReport report;
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    TensorCheck check{kTensorNames[t], probe_tensors[t].size(), 0.0};
    for (std::size_t i = 0; i < probe_tensors[t].size(); ++i) {
      double& slot = probe_tensors[t][i];
      const double original = slot;
      slot = original + step;
      const double loss_plus = mse_loss(score(probe, x), target);
      slot = original - step;
      const double loss_minus = mse_loss(score(probe, x), target);
      slot = original;
      const double numeric = (loss_plus - loss_minus) / (2.0 * step);
      const double exact = grad_tensors[t][i];
      const double denom = std::max({1.0, std::abs(exact), std::abs(numeric)});
      check.max_relative_error = std::max(check.max_relative_error, std::abs(exact - numeric) / denom);
    }
    report.parameters_checked += check.count;
    report.max_relative_error = std::max(report.max_relative_error, check.max_relative_error);
    report.tensors.push_back(check);
  }
  return report;
}

namespace {
constexpr std::string_view kModelMagic = "SGH1";
constexpr std::size_t kModelHeaderBytes = 4 + 4 + 4 + 4 + 1;
}  // namespace

std::vector<std::uint8_t> encode_head(const RegressionHead& head) {
  detail::ByteWriter out;
  out.reserve(kModelHeaderBytes + head.params.count() * 4);
  out.tag(kModelMagic);
  out.u32(kModelVersion);
  out.u32(static_cast<std::uint32_t>(head.embedding_dim()));
  out.u32(static_cast<std::uint32_t>(head.hidden));
  out.u8(static_cast<std::uint8_t>(head.activation));
  for (const auto& tensor : head.params.tensors()) {
    for (double v : tensor) {
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) throw FormatError(FormatError::Kind::kNonFinite, "non-finite parameter");
      out.f32(f);
    }
  }
  return out.take();
}

RegressionHead decode_head(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  if (bytes.size() < 4 || !in.tag_equals(kModelMagic)) throw FormatError(FormatError::Kind::kBadMagic, "bad magic");
  if (bytes.size() < kModelHeaderBytes) throw FormatError(FormatError::Kind::kTruncated, "truncated header");
  in.skip(4);
  const std::uint32_t version = in.u32();
  if (version != kModelVersion) {
    throw FormatError(FormatError::Kind::kUnsupportedVersion, "unsupported version " + std::to_string(version));
  }
  const std::uint32_t dim = in.u32();
  const std::uint32_t hidden = in.u32();
  const std::uint8_t tag = in.u8();
  if (dim == 0 || hidden == 0) throw FormatError(FormatError::Kind::kEmptyDims, "empty dimensions");
  if (tag > static_cast<std::uint8_t>(Activation::kLeakyRelu)) {
    throw FormatError(FormatError::Kind::kBadHeader, "unknown activation tag " + std::to_string(tag));
  }

  RegressionHead head;
  head.input_dim = 2 * std::size_t{dim};
  head.hidden = hidden;
  head.activation = static_cast<Activation>(tag);
  head.params = HeadParameters::zeros(head.input_dim, head.hidden);
  const std::uint64_t expected = kModelHeaderBytes + std::uint64_t{head.params.count()} * 4;
  if (bytes.size() < expected) throw FormatError(FormatError::Kind::kTruncated, "truncated payload");
  if (bytes.size() > expected) throw FormatError(FormatError::Kind::kTrailingData, "trailing data after payload");
  for (auto tensor : head.params.tensors()) {
    for (double& v : tensor) {
      const float f = in.f32();
      if (!std::isfinite(f)) throw FormatError(FormatError::Kind::kNonFinite, "non-finite value");
      v = f;
    }
  }
  return head;
}

void save_head(const RegressionHead& head, const std::filesystem::path& path) {
  detail::write_binary_file(path, encode_head(head));
}

RegressionHead load_head(const std::filesystem::path& path) { return decode_head(detail::read_binary_file(path)); }

}  // namespace sqa
