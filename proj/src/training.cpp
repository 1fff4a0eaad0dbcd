#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sqa/errors.hpp"
#include "sqa/pooling_regressor.hpp"
#include "sqa/rng.hpp"

namespace sqa {

std::string_view model_selection_name(ModelSelection selection) {
  return selection == ModelSelection::kBestValidation ? "best_valid" : "last_epoch";
}

ModelSelection parse_model_selection(std::string_view name) {
  if (name == "best_valid") return ModelSelection::kBestValidation;
  if (name == "last_epoch") return ModelSelection::kLastEpoch;
  throw std::invalid_argument("unknown model selection: " + std::string(name));
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
}

double mean_squared_error(const RegressionHead& head, std::span<const TrainingSample> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const auto& s : samples) total += mse_loss(score(head, s.x), s.target);
  return total / static_cast<double>(samples.size());
}

namespace {

void check_samples(std::span<const TrainingSample> samples, std::size_t input_dim, const char* which) {
  for (const auto& s : samples) {
    if (s.x.size() != input_dim) throw DataError(std::string(which) + " set: inconsistent input dimension");
    if (!(s.target >= 0.0 && s.target <= 10.0)) {
      throw DataError(std::string(which) + " set: target outside [0,10]");
    }
  }
}

}  // namespace

TrainResult train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> valid_set,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("empty train set");
  const std::size_t input_dim = train_set.front().x.size();
  check_samples(train_set, input_dim, "train");
  check_samples(valid_set, input_dim, "valid");

  TrainResult result;
  RegressionHead head = init_head(input_dim, config.hidden, derive_seed(config.seed, 0), config.activation);
  // start the output at the mean training target
  double mean_target = 0.0;
  for (const auto& s : train_set) mean_target += s.target;
  head.params.b_out[0] = mean_target / static_cast<double>(train_set.size());
  if (config.epochs == 0) {
    result.head = std::move(head);
    return result;
  }

  Rng order_rng(derive_seed(config.seed, 1));
  OptimizerState state = OptimizerState::for_head(head, config.optimizer);
  Gradients grads = HeadParameters::zeros(input_dim, config.hidden);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const bool select_best = config.model_selection == ModelSelection::kBestValidation && !valid_set.empty();
  RegressionHead best;
  double best_valid = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t b = start; b < stop; ++b) {
        const auto& sample = train_set[order[b]];
        const auto fwd = forward(head, sample.x);
        const double loss = mse_loss(fwd.score, sample.target);
        if (!std::isfinite(loss)) {
          throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                                   std::to_string(order[b]) + " (prediction " + std::to_string(fwd.score) + ")");
        }
        loss_sum += loss;
        if (b == start) {
          backward_into(head, fwd.cache, sample.target, scale, grads);
        } else {
          accumulate_backward(head, fwd.cache, sample.target, scale, grads);
        }
      }
      optimizer_step(head, grads, state, config.learning_rate);
    }

    EpochLoss entry;
    entry.train_mse = loss_sum / static_cast<double>(train_set.size());
    entry.valid_mse = mean_squared_error(head, valid_set);
    result.curve.epochs.push_back(entry);
    if (select_best && entry.valid_mse < best_valid) {
      best_valid = entry.valid_mse;
      best = head;
      result.selected_epoch = epoch;
    }
  }

  if (select_best) {
    result.head = std::move(best);
  } else {
    result.head = std::move(head);
    result.selected_epoch = config.epochs;
  }
  return result;
}

double predict_pooled(const RegressionHead& head, const PooledVector& x, bool clamp) {
  const double raw = score(head, x);
  return clamp ? std::clamp(raw, 0.0, 10.0) : raw;
}

double predict(const RegressionHead& head, const EmbeddingMatrix& matrix, bool clamp) {
  if (2 * matrix.dim() != head.input_dim) {
    throw DataError("dim mismatch: head expects D=" + std::to_string(head.embedding_dim()) + ", got " +
                    std::to_string(matrix.dim()));
  }
  return predict_pooled(head, statistic_pooling(matrix), clamp);
}

}  // namespace sqa
