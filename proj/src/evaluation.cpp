#include "sqa/evaluation.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "text_util.hpp"

namespace sqa {

double mse(std::span<const ScorePair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("mse of empty input");
  double total = 0.0;
  for (const auto& p : pairs) {
    const double diff = p.predicted - p.target;
    total += diff * diff;
  }
  return total / static_cast<double>(pairs.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank mean((i+1)..j).
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

namespace {

// Centers in place and returns the sum of squares.
double center(std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double& x : v) {
    x -= mean;
    ss += x * x;
  }
  return ss;
}

// Permutations whose |rho| is within this of the observed |rho| count as
// "at least as extreme"; absorbs rounding between equal rank sums.
constexpr double kPermutationTolerance = 1e-12;

double exact_permutation_p(const std::vector<double>& rx, const std::vector<double>& ry, double denom, double rho) {
  const std::size_t n = rx.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const double threshold = std::abs(rho) - kPermutationTolerance;
  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
  do {
    double cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) cross += rx[i] * ry[perm[i]];
    if (std::abs(cross / denom) >= threshold) ++extreme;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

double t_approximation_p(double rho, std::size_t n) {
  if (std::abs(rho) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(dof / (1.0 - rho * rho));
  const boost::math::students_t_distribution<double> dist(dof);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

}  // namespace

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: size mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("spearman needs n >= 3");

  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const double sxx = center(rx);
  const double syy = center(ry);
  if (sxx <= 0.0 || syy <= 0.0) throw DegenerateRanks();
  const double denom = std::sqrt(sxx * syy);

  double cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) cross += rx[i] * ry[i];

  SpearmanResult result;
  result.rho = std::clamp(cross / denom, -1.0, 1.0);
  if (n <= kExactPermutationMaxN) {
    result.exact = true;
    result.p_value = exact_permutation_p(rx, ry, denom, result.rho);
  } else {
    result.p_value = t_approximation_p(result.rho, n);
  }
  return result;
}

SpearmanResult spearman(std::span<const ScorePair> pairs) {
  std::vector<double> predicted;
  std::vector<double> target;
  predicted.reserve(pairs.size());
  target.reserve(pairs.size());
  for (const auto& p : pairs) {
    predicted.push_back(p.predicted);
    target.push_back(p.target);
  }
  return spearman(predicted, target);
}

RegressionLine fit_regression_line(std::span<const ScorePair> pairs) {
  if (pairs.size() < 2) throw std::invalid_argument("regression line needs n >= 2");
  const double n = static_cast<double>(pairs.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& p : pairs) {
    mean_x += p.target;
    mean_y += p.predicted;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : pairs) {
    const double dx = p.target - mean_x;
    sxx += dx * dx;
    sxy += dx * (p.predicted - mean_y);
  }
  if (sxx <= 0.0) throw std::invalid_argument("zero target variance");
  RegressionLine line;
  line.slope = sxy / sxx;
  line.intercept = mean_y - line.slope * mean_x;
  return line;
}

std::string FoldAggregate::render(int decimals) const {
  return detail::format_fixed(mean, decimals) + " ± " + detail::format_fixed(std, decimals);
}

FoldAggregate aggregate_folds(std::span<const double> mses) {
  if (mses.empty()) throw std::invalid_argument("aggregate of empty fold list");
  FoldAggregate agg;
  agg.fold_mse.assign(mses.begin(), mses.end());
  const double n = static_cast<double>(mses.size());
  agg.mean = std::accumulate(mses.begin(), mses.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : mses) ss += (v - agg.mean) * (v - agg.mean);
  agg.std = std::sqrt(ss / n);
  return agg;
}

EvalReport evaluate(std::span<const ScorePair> pairs) {
  EvalReport report;
  report.n = pairs.size();
  report.mse = mse(pairs);
  report.rmse = std::sqrt(report.mse);
  try {
    const auto s = spearman(pairs);
    report.spearman_rho = s.rho;
    report.p_value = s.p_value;
    report.p_exact = s.exact;
  } catch (const DegenerateRanks&) {
    report.rank_degenerate = true;
    report.spearman_rho = 0.0;
    report.p_value = 1.0;
  }
  const auto line = fit_regression_line(pairs);
  report.regression_slope = line.slope;
  report.regression_intercept = line.intercept;
  return report;
}

std::string summary_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["n"] = report.n;
  j["mse"] = report.mse;
  j["rmse"] = report.rmse;
  j["spearman_rho"] = report.spearman_rho;
  j["p_value"] = report.p_value;
  j["p_exact"] = report.p_exact;
  j["rank_degenerate"] = report.rank_degenerate;
  j["slope"] = report.regression_slope;
  j["intercept"] = report.regression_intercept;
  return j.dump(2) + "\n";
}

void emit_report(const EvalReport& report, std::span<const ScorePair> pairs, const std::filesystem::path& dir) {
  using detail::format_double;
  std::filesystem::create_directories(dir);
  detail::write_text_file(dir / "summary.json", summary_json(report));

  std::string scatter = "speaker_id,target,predicted\n";
  for (const auto& p : pairs) {
    scatter += detail::csv_escape(p.speaker_id) + "," + format_double(p.target) + "," + format_double(p.predicted) + "\n";
  }
  detail::write_text_file(dir / "scatter.csv", scatter);

  const double a = report.regression_slope;
  const double b = report.regression_intercept;
  std::string lines = "line,x,y\n";
  lines += "identity,0,0\nidentity,10,10\n";
  lines += "regression,0," + format_double(b) + "\n";
  lines += "regression,10," + format_double(10.0 * a + b) + "\n";
  detail::write_text_file(dir / "lines.csv", lines);
}

}  // namespace sqa
