// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include "sqa/errors.hpp"
#include "sqa/experiments.hpp"
#include "sqa/synthcorpus.hpp"
#include "test_support.hpp"

namespace sqa {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

// 1: analytic gradients against central differences taken here, outside the
// library's own checker. Relative error is |g - n| / max(1, |g|, |n|); the
// strict ratio |g - n| / max(|g|, |n|) is also required for every gradient
// of magnitude >= 1e-3. Below that the difference quotient itself is
// limited by rounding (about 1e-10 absolute at step 1e-4).
Outcome gradient_correctness() {
  const auto start = Clock::now();
  const double h = 1e-4;
  double worst = 0.0, worst_strict = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(derive_seed(77, seed));
    auto head = init_head(8, 8, seed);
    for (auto t : head.params.tensors()) {
      for (auto& v : t) v += 0.1 * rng.normal();
    }
    PooledVector x;
    for (int i = 0; i < 8; ++i) x.values.push_back(rng.normal());
    const double target = 10.0 * rng.uniform();
    const auto grads = backward(head, forward(head, x).cache, target);

    auto probe = head;
    auto params = probe.params.tensors();
    const auto analytic = grads.tensors();
    for (std::size_t t = 0; t < kTensorCount; ++t) {
      for (std::size_t i = 0; i < params[t].size(); ++i) {
        const double orig = params[t][i];
        params[t][i] = orig + h;
        const double up = mse_loss(score(probe, x), target);
        params[t][i] = orig - h;
        const double down = mse_loss(score(probe, x), target);
        params[t][i] = orig;
        const double numeric = (up - down) / (2 * h);
        const double diff = std::abs(analytic[t][i] - numeric);
        const double scale = std::max(std::abs(analytic[t][i]), std::abs(numeric));
        worst = std::max(worst, diff / std::max(1.0, scale));
        if (scale >= 1e-3) worst_strict = std::max(worst_strict, diff / scale);
        ++checked;
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && worst_strict < 1e-4 && elapsed < 60.0,
          fmt("8 seeds, D=4 H=8, %.0f params, max rel err %.2e, strict on |g| >= 1e-3 %.2e (< 1e-4), %.2f s",
              static_cast<double>(checked), worst, worst_strict, elapsed)};
}

std::vector<double> two_pass_pool(const EmbeddingMatrix& m) {
  const std::size_t T = m.frames(), D = m.dim();
  std::vector<double> out(2 * D);
  for (std::size_t d = 0; d < D; ++d) {
    double sum = 0;
    for (std::size_t t = 0; t < T; ++t) sum += m.frame(t)[d];
    const double mean = sum / static_cast<double>(T);
    double sq = 0;
    for (std::size_t t = 0; t < T; ++t) sq += (m.frame(t)[d] - mean) * (m.frame(t)[d] - mean);
    out[d] = mean;
    out[D + d] = std::sqrt(sq / static_cast<double>(T) + kPoolingVarianceEpsilon);
  }
  return out;
}

// 2
Outcome pooling_oracle() {
  Rng rng(2);
  double worst = 0.0, worst_perm = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t T = 1 + rng.below(1000), D = 1 + rng.below(64);
    const double offset = 5.0 * rng.normal(), scale = 0.1 + 3.0 * rng.uniform();
    std::vector<float> data(T * D);
    for (auto& v : data) v = static_cast<float>(offset + scale * rng.normal());
    const EmbeddingMatrix m(T, D, data);
    const auto got = statistic_pooling(m).values;
    const auto want = two_pass_pool(m);
    for (std::size_t k = 0; k < got.size(); ++k) worst = std::max(worst, std::abs(got[k] - want[k]));

    std::vector<std::size_t> order(T);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<float> shuffled;
    shuffled.reserve(data.size());
    for (auto t : order) shuffled.insert(shuffled.end(), m.frame(t).begin(), m.frame(t).end());
    const auto perm = statistic_pooling(EmbeddingMatrix(T, D, shuffled)).values;
    for (std::size_t k = 0; k < got.size(); ++k) worst_perm = std::max(worst_perm, std::abs(got[k] - perm[k]));
  }
  return {worst <= 1e-6 && worst_perm <= 1e-6,
          fmt("100 matrices up to 1000x64, max |diff| vs two-pass %.2e, under frame permutation %.2e (<= 1e-6)",
              worst, worst_perm)};
}

std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double rank_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(counting_ranks(x), counting_ranks(y));
}

// Recursive enumeration of all orderings of y.
double enumerated_p(const std::vector<double>& x, std::vector<double> y) {
  const double observed = std::abs(rank_pearson(x, y));
  std::size_t extreme = 0, total = 0;
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == y.size()) {
      ++total;
      if (std::abs(rank_pearson(x, y)) >= observed - 1e-12) ++extreme;
      return;
    }
    for (std::size_t i = k; i < y.size(); ++i) {
      std::swap(y[k], y[i]);
      rec(k + 1);
      std::swap(y[k], y[i]);
    }
  };
  rec(0);
  return static_cast<double>(extreme) / static_cast<double>(total);
}

std::vector<double> draw(Rng& rng, std::size_t n, bool ties) {
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? static_cast<double>(rng.below(5)) : rng.normal();
  return v;
}

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
}

// 3
Outcome spearman_oracle() {
  Rng rng(3);
  double worst = 0.0;
  int instances = 0, tied = 0;
  while (instances < 200) {
    const std::size_t n = 3 + rng.below(48);
    const bool ties = instances % 2 == 0;
    const auto x = draw(rng, n, ties), y = draw(rng, n, instances % 3 == 0);
    if (is_constant(x) || is_constant(y)) continue;
    worst = std::max(worst, std::abs(spearman(x, y).rho - rank_pearson(x, y)));
    tied += ties;
    ++instances;
  }
  int exact_checked = 0, exact_mismatch = 0;
  while (exact_checked < 60) {
    const std::size_t n = 3 + rng.below(5);
    const auto x = draw(rng, n, exact_checked % 2 == 0), y = draw(rng, n, exact_checked % 3 == 0);
    if (is_constant(x) || is_constant(y)) continue;
    const auto r = spearman(x, y);
    if (!r.exact || r.p_value != enumerated_p(x, y)) ++exact_mismatch;
    ++exact_checked;
  }
  return {worst <= 1e-12 && exact_mismatch == 0,
          fmt("200 instances (%.0f with ties), max |rho diff| %.2e (<= 1e-12); exact p mismatches %.0f of %.0f (n <= 7)",
              tied, worst, exact_mismatch, exact_checked)};
}

// 4
Outcome fold_protocol() {
  std::vector<std::string> speakers;
  for (int i = 0; i < 105; ++i) speakers.push_back("spk" + std::to_string(i));
  const auto folds = kfold_split(speakers, 10, 0);
  bool ok = folds.size() == 10;
  std::size_t min_valid = 1000, max_valid = 0, min_train = 1000, max_train = 0;
  std::multiset<std::string> valid_union;
  for (const auto& f : folds) {
    min_valid = std::min(min_valid, f.valid_speakers.size());
    max_valid = std::max(max_valid, f.valid_speakers.size());
    min_train = std::min(min_train, f.train_speakers.size());
    max_train = std::max(max_train, f.train_speakers.size());
    valid_union.insert(f.valid_speakers.begin(), f.valid_speakers.end());
    std::set<std::string> train_set(f.train_speakers.begin(), f.train_speakers.end());
    for (const auto& v : f.valid_speakers) ok &= train_set.count(v) == 0;
  }
  ok &= min_valid >= 10 && max_valid <= 11 && min_train >= 94 && max_train <= 95;
  ok &= valid_union == std::multiset<std::string>(speakers.begin(), speakers.end());

  bool overlap_rejected = false;
  std::vector<PooledUtterance> train{{"a", "a_u0", {}, PooledVector{{1.0, 1.0}}, 5.0},
                                     {"b", "b_u0", {}, PooledVector{{1.0, 1.0}}, 5.0}};
  std::vector<PooledUtterance> test{{"b", "b_t", {}, PooledVector{{1.0, 1.0}}, 5.0}};
  try {
    check_disjoint_speakers(train, test);
  } catch (const DataError&) {
    overlap_rejected = true;
  }
  ok &= overlap_rejected;
  return {ok, fmt("valid sizes %.0f-%.0f, train sizes %.0f-%.0f, disjoint & complete; shared speaker rejected: ",
                  static_cast<double>(min_valid), static_cast<double>(max_valid), static_cast<double>(min_train),
                  static_cast<double>(max_train)) +
                  (overlap_rejected ? "yes" : "no")};
}

struct SyntheticRun {
  KFoldResult result;
  double seconds = 0.0;
};

SyntheticRun synthetic_kfold(const std::filesystem::path& dir) {
  SynthConfig cfg;
  cfg.n_speakers = 105;
  cfg.dim = 64;
  cfg.seed = 0;
  cfg.label_noise_std = 0.3;
  gen_corpus(cfg, Layout::kTrain, dir / "train");
  cfg.n_speakers = 27;
  gen_corpus(cfg, Layout::kTest, dir / "test");

  const auto start = Clock::now();
  const auto train = load_pooled(load_manifest(dir / "train/manifest.csv"), Task::kIntelligibility);
  const auto test = load_pooled(load_manifest(dir / "test/manifest.csv"), Task::kIntelligibility);
  TrainConfig tc;
  tc.epochs = 20;
  tc.batch_size = 1;
  tc.seed = 0;
  KFoldOptions opts;
  opts.k = 10;
  opts.jobs = std::max(1U, std::thread::hardware_concurrency());
  SyntheticRun run;
  run.result = run_kfold(train, test, tc, opts);
  run.seconds = seconds_since(start);
  return run;
}

// 5
Outcome end_to_end(const SyntheticRun& run) {
  double min_rho = 1.0;
  for (const auto& f : run.result.folds) min_rho = std::min(min_rho, f.test_report.spearman_rho);
  const double agg = run.result.aggregate.mean;
  return {agg <= 0.5 && min_rho >= 0.9 && run.seconds < 600.0,
          "aggregate test MSE " + run.result.aggregate.render(3) +
              fmt(" (<= 0.5), min fold rho %.4f (>= 0.9), %.0f s", min_rho, run.seconds)};
}

// 6
Outcome loss_curves(const SyntheticRun& run) {
  int bad_folds = 0;
  double worst_rise = 0.0;
  for (const auto& f : run.result.folds) {
    const auto& e = f.curve.epochs;
    bool ok = e.size() >= 3;
    for (std::size_t i = 3; i < e.size(); ++i) {
      const double prev = (e[i - 3].train_mse + e[i - 2].train_mse + e[i - 1].train_mse) / 3;
      const double cur = (e[i - 2].train_mse + e[i - 1].train_mse + e[i].train_mse) / 3;
      if (cur > prev) {
        ok = false;
        worst_rise = std::max(worst_rise, cur - prev);
      }
    }
    ok &= e.back().valid_mse < e.front().valid_mse;
    bad_folds += !ok;
  }
  return {bad_folds == 0, fmt("%.0f of %.0f folds with non-increasing 3-epoch train loss and final valid < first; "
                              "largest rise %.2e",
                              static_cast<double>(run.result.folds.size() - bad_folds),
                              static_cast<double>(run.result.folds.size()), worst_rise)};
}

// 7
Outcome identity_scatter() {
  Rng rng(7);
  double worst_slope = 0.0, worst_intercept = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScorePair> pairs;
    const std::size_t n = 2 + rng.below(100);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = 10 * rng.uniform();
      pairs.push_back({"s" + std::to_string(i), t, t});
    }
    if (pairs[0].target == pairs[1].target && n == 2) continue;
    const auto line = fit_regression_line(pairs);
    worst_slope = std::max(worst_slope, std::abs(line.slope - 1.0));
    worst_intercept = std::max(worst_intercept, std::abs(line.intercept));
  }
  return {worst_slope <= 1e-9 && worst_intercept <= 1e-9,
          fmt("50 identity scatters, max |slope - 1| %.2e, max |intercept| %.2e (<= 1e-9)", worst_slope,
              worst_intercept)};
}

// 8
Outcome duration_behaviour(const RegressionHead& head, const std::filesystem::path& dir) {
  SynthConfig cfg;
  cfg.n_speakers = 24;
  cfg.dim = head.embedding_dim();
  cfg.seed = 0;
  cfg.scores = {0.0, 5.0};
  cfg.min_duration_s = 20.0;
  cfg.max_duration_s = 40.0;
  cfg.id_prefix = "deg";
  const auto corpus = gen_corpus(cfg, Layout::kTest, dir / "degraded");

  std::vector<SweepInput> degraded;
  for (const auto& r : corpus.manifest.records) {
    degraded.push_back({r.speaker_id, "degraded", read_embedding(corpus.manifest.resolve(r)), *r.intelligibility});
  }
  const std::vector<double> durations(kDefaultSweepDurations.begin(), kDefaultSweepDurations.end());
  const auto reports = duration_sweep(head, degraded, durations);
  double err_1s = 0.0, err_20s = 0.0;
  for (const auto& r : reports) {
    if (r.duration_s == 1.0) err_1s += r.abs_error;
    if (r.duration_s == 20.0) err_20s += r.abs_error;
  }
  err_1s /= static_cast<double>(degraded.size());
  err_20s /= static_cast<double>(degraded.size());

  std::vector<SweepInput> constant;
  for (std::size_t i = 0; i < 5; ++i) {
    auto profile = gen_profile(0, i, {10.0, 10.0}, cfg.dim, 0.0, "const" + std::to_string(i));
    constant.push_back({profile.speaker_id, "control", gen_utterance(profile, 20.0, kDefaultFrameRateHz, i), 10.0});
  }
  double spread = 0.0;
  for (const auto& r : duration_sweep(head, constant, durations)) {
    const auto [lo, hi] = std::minmax_element(r.segment_scores.begin(), r.segment_scores.end());
    spread = std::max(spread, *hi - *lo);
  }
  return {err_20s <= err_1s && spread < 1e-6,
          fmt("%.0f degraded speakers: mean abs error %.3f at 20 s vs %.3f at 1 s; constant-speaker spread %.2e "
              "(< 1e-6)",
              static_cast<double>(degraded.size()), err_20s, err_1s, spread)};
}

template <typename F>
bool rejects(F&& f, FormatError::Kind kind) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.kind() == kind;
  }
  return false;
}

// 9
Outcome format_round_trip(const std::filesystem::path& dir) {
  Rng rng(9);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t T = 1 + rng.below(64), D = 1 + rng.below(32);
    std::vector<float> data(T * D);
    for (auto& v : data) {
      // arbitrary finite bit patterns, not just nicely scaled normals
      std::uint32_t bits;
      float f;
      do {
        bits = static_cast<std::uint32_t>(rng.next_u64());
        std::memcpy(&f, &bits, 4);
      } while (!std::isfinite(f));
      v = f;
    }
    const EmbeddingMatrix m(T, D, data, i % 2 ? 50.0F : 100.0F);
    const auto path = dir / ("m" + std::to_string(i % 7) + ".emb");
    write_embedding(m, path);
    const auto back = read_embedding(path);
    if (std::memcmp(back.data().data(), m.data().data(), data.size() * 4) != 0 || back.frames() != T ||
        back.dim() != D || back.frame_rate_hz() != m.frame_rate_hz()) {
      ++mismatches;
    }
  }

  const auto good = encode_embedding(EmbeddingMatrix(100, 4, std::vector<float>(400, 0.5F)));
  auto corrupt = [&](auto edit) {
    auto b = good;
    edit(b);
    return b;
  };
  using K = FormatError::Kind;
  const std::vector<std::pair<std::vector<std::uint8_t>, K>> cases = {
      {corrupt([](auto& b) { b[0] = 'F'; }), K::kBadMagic},
      {corrupt([](auto& b) { b[4] = 2; }), K::kUnsupportedVersion},
      {corrupt([](auto& b) { b.resize(20 + 399 * 4); }), K::kTruncated},
      {corrupt([](auto& b) { b.resize(10); }), K::kTruncated},
      {corrupt([](auto& b) { std::fill(b.begin() + 8, b.begin() + 12, 0); }), K::kEmptyDims},
      {corrupt([](auto& b) { std::fill(b.begin() + 12, b.begin() + 16, 0); }), K::kEmptyDims},
      {corrupt([](auto& b) { b.push_back(7); }), K::kTrailingData},
      {corrupt([](auto& b) { b[23] = 0x7F, b[22] = 0xC0; }), K::kNonFinite},
  };
  int rejected = 0;
  for (const auto& [bytes, kind] : cases) rejected += rejects([&] { decode_embedding(bytes); }, kind);
  const bool missing = rejects([&] { read_embedding(dir / "absent.emb"); }, K::kIo);
  return {mismatches == 0 && rejected == static_cast<int>(cases.size()) && missing,
          fmt("1000 matrices, %.0f bit mismatches; %.0f of %.0f corrupted files rejected with the expected error class",
              mismatches, rejected, static_cast<double>(cases.size()))};
}

// 10
Outcome scale_conversion() {
  const ScaleMap map{0.0, 3.0, true};
  const double top = convert_scale(0.0, map), bottom = convert_scale(3.0, map), mid = convert_scale(0.56, map);
  const double expected = 8.0 + 2.0 / 15.0;
  return {top == 10.0 && bottom == 0.0 && std::abs(mid - expected) <= 1e-9,
          fmt("inverted [0,3]: 0 -> %.17g, 3 -> %.17g, 0.56 -> %.12f (8.1333... +- 1e-9)", top, bottom, mid)};
}

}  // namespace
}  // namespace sqa

int main() {
  using namespace sqa;
  testing::TempDir dir;
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("[%s] %2d %-24s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  auto guarded = [](auto&& f) -> Outcome {
    try {
      return f();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "gradient correctness", guarded(gradient_correctness));
  report(2, "pooling oracle", guarded(pooling_oracle));
  report(3, "spearman oracle", guarded(spearman_oracle));
  report(4, "fold protocol", guarded(fold_protocol));

  std::optional<SyntheticRun> run;
  std::string run_error;
  try {
    run = synthetic_kfold(dir.path());
  } catch (const std::exception& e) {
    run_error = std::string("exception: ") + e.what();
  }
  if (run) {
    report(5, "synthetic end-to-end", end_to_end(*run));
    report(6, "loss-curve sanity", loss_curves(*run));
  } else {
    report(5, "synthetic end-to-end", {false, run_error});
    report(6, "loss-curve sanity", {false, run_error});
  }
  report(7, "identity scatter", guarded(identity_scatter));
  if (run) {
    report(8, "duration sweep", guarded([&] { return duration_behaviour(run->result.folds.front().head, dir.path()); }));
  } else {
    report(8, "duration sweep", {false, "no trained head: " + run_error});
  }
  report(9, "format round-trip", guarded([&] { return format_round_trip(dir.path()); }));
  report(10, "scale conversion", guarded(scale_conversion));

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
