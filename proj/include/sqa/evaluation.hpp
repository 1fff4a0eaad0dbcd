#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sqa {

struct ScorePair {
  std::string speaker_id;
  double predicted = 0.0;
  double target = 0.0;
};

double mse(std::span<const ScorePair> pairs);

// Ranks starting at 1; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Up to this many samples the p-value comes from full permutation
/// enumeration, above it from the two-sided t approximation.
inline constexpr std::size_t kExactPermutationMaxN = 9;

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  bool exact = false;
};

// Throws std::invalid_argument for n < 3 or size mismatch, DegenerateRanks
// when either side is constant.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);
// x = predicted, y = target.
SpearmanResult spearman(std::span<const ScorePair> pairs);

class DegenerateRanks : public std::invalid_argument {
 public:
  DegenerateRanks() : std::invalid_argument("degenerate ranks") {}
};

struct RegressionLine {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of predicted on target (target on the x axis).
RegressionLine fit_regression_line(std::span<const ScorePair> pairs);

struct FoldAggregate {
  std::vector<double> fold_mse;
  double mean = 0.0;
  double std = 0.0;  // population

  // "0.73 ± 0.18"
  std::string render(int decimals = 2) const;
};

FoldAggregate aggregate_folds(std::span<const double> mses);

struct EvalReport {
  std::size_t n = 0;
  double mse = 0.0;
  double rmse = 0.0;
  double spearman_rho = 0.0;
  double p_value = 1.0;
  bool p_exact = false;
  // Constant predictions or targets: rho reported as 0 with p = 1.
  bool rank_degenerate = false;
  double regression_slope = 0.0;
  double regression_intercept = 0.0;
};

EvalReport evaluate(std::span<const ScorePair> pairs);

std::string summary_json(const EvalReport& report);

// Writes summary.json, scatter.csv and lines.csv into `dir`.
void emit_report(const EvalReport& report, std::span<const ScorePair> pairs,
                 const std::filesystem::path& dir);

}  // namespace sqa
