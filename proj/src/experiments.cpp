#include "sqa/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "sqa/errors.hpp"
#include "sqa/rng.hpp"
#include "text_util.hpp"

namespace sqa {

std::string_view task_name(Task task) { return task == Task::kIntelligibility ? "intelligibility" : "severity"; }

Task parse_task(std::string_view name) {
  if (name == "intelligibility") return Task::kIntelligibility;
  if (name == "severity") return Task::kSeverity;
  throw std::invalid_argument("unknown task: " + std::string(name));
}

std::optional<double> task_score(const UtteranceRecord& record, Task task) {
  return task == Task::kIntelligibility ? record.intelligibility : record.severity;
}

std::vector<PooledUtterance> load_pooled(const CorpusManifest& manifest, std::optional<Task> task) {
  std::vector<PooledUtterance> out;
  out.reserve(manifest.records.size());
  std::optional<std::size_t> dim;
  for (const auto& record : manifest.records) {
    PooledUtterance u;
    u.speaker_id = record.speaker_id;
    u.utterance_id = record.utterance_id;
    u.content_tag = record.content_tag;
    if (task) {
      u.target = task_score(record, *task);
      if (!u.target) {
        throw DataError("utterance " + record.utterance_id + " has no " + std::string(task_name(*task)) + " score");
      }
    }
    EmbeddingMatrix matrix;
    try {
      matrix = read_embedding(manifest.resolve(record));
    } catch (const FormatError& e) {
      throw FormatError(e.kind(), record.utterance_id + ": " + e.what());
    }
    if (dim && *dim != matrix.dim()) {
      throw DataError("dim mismatch: " + record.utterance_id + " has D=" + std::to_string(matrix.dim()) +
                      ", corpus has D=" + std::to_string(*dim));
    }
    dim = matrix.dim();
    u.pooled = statistic_pooling(matrix);
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<TrainingSample> to_samples(std::span<const PooledUtterance> utterances) {
  std::vector<TrainingSample> samples;
  samples.reserve(utterances.size());
  for (const auto& u : utterances) {
    if (!u.target) throw DataError("utterance " + u.utterance_id + " has no target score");
    samples.push_back({u.pooled, *u.target});
  }
  return samples;
}

std::vector<std::string> speaker_ids(std::span<const PooledUtterance> utterances) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& u : utterances) {
    if (seen.insert(u.speaker_id).second) ids.push_back(u.speaker_id);
  }
  return ids;
}

void check_disjoint_speakers(std::span<const PooledUtterance> train, std::span<const PooledUtterance> test) {
  std::set<std::string> train_ids;
  for (const auto& u : train) train_ids.insert(u.speaker_id);
  for (const auto& u : test) {
    if (train_ids.count(u.speaker_id) != 0) {
      throw DataError("test corpus shares speaker_id with training corpus: " + u.speaker_id);
    }
  }
}

std::vector<FoldSplit> kfold_split(std::vector<std::string> speakers, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  std::sort(speakers.begin(), speakers.end());
  if (std::adjacent_find(speakers.begin(), speakers.end()) != speakers.end()) {
    throw std::invalid_argument("duplicate speaker ids in fold split");
  }
  const std::size_t n = speakers.size();
  if (k > n) throw std::invalid_argument("k exceeds the number of speakers");

  Rng rng(seed);
  rng.shuffle(std::span<std::string>(speakers));

  std::vector<FoldSplit> folds(k);
  std::size_t begin = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    auto& fold = folds[f];
    fold.fold_index = f;
    for (std::size_t i = 0; i < n; ++i) {
      auto& side = (i >= begin && i < begin + size) ? fold.valid_speakers : fold.train_speakers;
      side.push_back(speakers[i]);
    }
    std::sort(fold.valid_speakers.begin(), fold.valid_speakers.end());
    std::sort(fold.train_speakers.begin(), fold.train_speakers.end());
    begin += size;
  }
  return folds;
}

std::vector<ScorePair> predict_pairs(const RegressionHead& head, std::span<const PooledUtterance> utterances,
                                     bool clamp) {
  std::vector<ScorePair> pairs;
  pairs.reserve(utterances.size());
  for (const auto& u : utterances) {
    if (!u.target) throw DataError("utterance " + u.utterance_id + " has no target score");
    pairs.push_back({u.speaker_id, predict_pooled(head, u.pooled, clamp), *u.target});
  }
  return pairs;
}

namespace {

constexpr std::uint64_t kSplitStream = 100;
constexpr std::uint64_t kFoldStreamBase = 1000;

FoldResult run_fold(const FoldSplit& split, std::span<const PooledUtterance> train_corpus,
                    std::span<const PooledUtterance> test_corpus, const TrainConfig& config) {
  const std::set<std::string> valid_ids(split.valid_speakers.begin(), split.valid_speakers.end());
  std::vector<TrainingSample> train_set;
  std::vector<TrainingSample> valid_set;
  for (const auto& u : train_corpus) {
    auto& dest = valid_ids.count(u.speaker_id) != 0 ? valid_set : train_set;
    dest.push_back({u.pooled, *u.target});
  }

  TrainConfig fold_config = config;
  fold_config.seed = derive_seed(config.seed, kFoldStreamBase + split.fold_index);
  auto trained = train(train_set, valid_set, fold_config);

  FoldResult result;
  result.split = split;
  result.curve = std::move(trained.curve);
  result.selected_epoch = trained.selected_epoch;
  result.test_pairs = predict_pairs(trained.head, test_corpus, config.clamp_predictions);
  result.test_report = evaluate(result.test_pairs);
  result.head = std::move(trained.head);
  return result;
}

}  // namespace

KFoldResult run_kfold(std::span<const PooledUtterance> train_corpus, std::span<const PooledUtterance> test_corpus,
                      const TrainConfig& config, const KFoldOptions& options) {
  config.validate();
  if (train_corpus.empty()) throw DataError("empty training corpus");
  if (test_corpus.empty()) throw DataError("empty test corpus");
  for (const auto* corpus : {&train_corpus, &test_corpus}) {
    for (const auto& u : *corpus) {
      if (!u.target) throw DataError("missing score for utterance " + u.utterance_id);
      if (u.pooled.size() != train_corpus.front().pooled.size()) {
        throw DataError("dim mismatch between corpora at utterance " + u.utterance_id);
      }
    }
  }
  check_disjoint_speakers(train_corpus, test_corpus);

  const auto splits = kfold_split(speaker_ids(train_corpus), options.k, derive_seed(config.seed, kSplitStream));

  KFoldResult result;
  result.folds.resize(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < splits.size(); f = next++) {
      try {
        result.folds[f] = run_fold(splits[f], train_corpus, test_corpus, config);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, splits.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> mses;
  for (const auto& fold : result.folds) mses.push_back(fold.test_report.mse);
  result.aggregate = aggregate_folds(mses);
  return result;
}

void write_loss_curve(const LossCurve& curve, const std::filesystem::path& path) {
  std::string csv = "epoch,train_mse,valid_mse\n";
  for (std::size_t e = 0; e < curve.epochs.size(); ++e) {
    csv += std::to_string(e + 1) + "," + detail::format_double(curve.epochs[e].train_mse) + "," +
           detail::format_double(curve.epochs[e].valid_mse) + "\n";
  }
  detail::write_text_file(path, csv);
}

void write_kfold_outputs(const KFoldResult& result, const std::filesystem::path& dir) {
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const auto& fold : result.folds) {
    const auto i = std::to_string(fold.split.fold_index);
    const auto fold_dir = dir / "folds" / ("fold_" + i);
    emit_report(fold.test_report, fold.test_pairs, fold_dir);
    save_head(fold.head, fold_dir / "model.bin");
    write_loss_curve(fold.curve, dir / ("loss_curve_" + i + ".csv"));
    folds.push_back({{"fold", fold.split.fold_index},
                     {"train_speakers", fold.split.train_speakers.size()},
                     {"valid_speakers", fold.split.valid_speakers},
                     {"selected_epoch", fold.selected_epoch},
                     {"test_mse", fold.test_report.mse},
                     {"test_spearman_rho", fold.test_report.spearman_rho},
                     {"test_p_value", fold.test_report.p_value}});
  }
  nlohmann::ordered_json agg;
  agg["k"] = result.folds.size();
  agg["fold_mse"] = result.aggregate.fold_mse;
  agg["mean"] = result.aggregate.mean;
  agg["std"] = result.aggregate.std;
  agg["rendered"] = result.aggregate.render();
  agg["folds"] = std::move(folds);
  detail::write_text_file(dir / "aggregate.json", agg.dump(2) + "\n");
}

std::size_t segment_frames(const EmbeddingMatrix& matrix, double duration_s) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw std::invalid_argument("segment duration must be > 0");
  const double frames = std::round(duration_s * static_cast<double>(matrix.frame_rate_hz()));
  if (frames < 1.0) throw std::invalid_argument("segment shorter than one frame");
  if (frames > static_cast<double>(matrix.frames())) throw DataError("audio shorter than segment");
  return static_cast<std::size_t>(frames);
}

std::vector<double> segment_predictions(const RegressionHead& head, const EmbeddingMatrix& matrix, double duration_s,
                                        bool clamp) {
  const std::size_t window = segment_frames(matrix, duration_s);
  const std::size_t count = matrix.frames() / window;
  std::vector<double> scores;
  scores.reserve(count);
  for (std::size_t s = 0; s < count; ++s) scores.push_back(predict(head, matrix.slice(s * window, window), clamp));
  return scores;
}

std::string_view nearest_group(double target, Task task) {
  std::string_view best;
  double best_distance = 0.0;
  for (const auto& anchor : kRepresentativeAnchors) {
    const double value = task == Task::kIntelligibility ? anchor.intelligibility : anchor.severity;
    const double distance = std::abs(target - value);
    if (best.empty() || distance < best_distance) {
      best = anchor.group;
      best_distance = distance;
    }
  }
  return best;
}

std::vector<std::size_t> select_representatives(std::span<const UtteranceRecord> records, Task task) {
  std::vector<std::size_t> chosen;
  for (const auto& anchor : kRepresentativeAnchors) {
    const double value = task == Task::kIntelligibility ? anchor.intelligibility : anchor.severity;
    std::optional<std::size_t> best;
    double best_distance = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto s = task_score(records[i], task);
      if (!s) continue;
      const double distance = std::abs(*s - value);
      if (!best || distance < best_distance) {
        best = i;
        best_distance = distance;
      }
    }
    if (!best) throw DataError("no record carries a " + std::string(task_name(task)) + " score");
    chosen.push_back(*best);
  }
  return chosen;
}

std::vector<SegmentReport> duration_sweep(const RegressionHead& head, std::span<const SweepInput> inputs,
                                          std::span<const double> durations) {
  std::vector<SegmentReport> reports;
  reports.reserve(inputs.size() * durations.size());
  for (const auto& input : inputs) {
    const double global = predict(head, input.matrix, false);
    for (double duration : durations) {
      SegmentReport r;
      r.speaker_id = input.speaker_id;
      r.group = input.group;
      r.duration_s = duration;
      r.segment_scores = segment_predictions(head, input.matrix, duration);
      double sum = 0.0;
      for (double s : r.segment_scores) sum += s;
      r.segment_mean = sum / static_cast<double>(r.segment_scores.size());
      r.global_prediction = global;
      r.target = input.target;
      r.abs_error = std::abs(r.segment_mean - r.target);
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::string format_duration(double duration_s) { return detail::format_double(duration_s); }

void write_duration_sweep(std::span<const SegmentReport> reports, const std::filesystem::path& path) {
  using detail::format_double;
  std::string csv = "speaker_id,group,duration_s,segment_mean,global_prediction,target,abs_error\n";
  for (const auto& r : reports) {
    csv += detail::csv_escape(r.speaker_id) + "," + detail::csv_escape(r.group) + "," + format_double(r.duration_s) +
           "," + format_double(r.segment_mean) + "," + format_double(r.global_prediction) + "," +
           format_double(r.target) + "," + format_double(r.abs_error) + "\n";
  }
  detail::write_text_file(path, csv);
}

void write_segment_scores(std::span<const double> scores, const std::filesystem::path& path) {
  std::string csv = "segment_index,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    csv += std::to_string(i) + "," + detail::format_double(scores[i]) + "\n";
  }
  detail::write_text_file(path, csv);
}

namespace {

void check_map(const ScaleMap& map) {
  if (!(map.source_max > map.source_min)) throw std::invalid_argument("scale map needs source_max > source_min");
}

}  // namespace

double convert_scale(double score, const ScaleMap& map) {
  check_map(map);
  if (!(score >= map.source_min && score <= map.source_max)) {
    throw DataError("score out of source range: " + detail::format_double(score));
  }
  const double fraction = (score - map.source_min) / (map.source_max - map.source_min);
  return map.inverted ? 10.0 * (1.0 - fraction) : 10.0 * fraction;
}

double to_source_scale(double score, const ScaleMap& map) {
  check_map(map);
  if (!(score >= 0.0 && score <= 10.0)) throw DataError("score out of range [0,10]");
  double fraction = score / 10.0;
  if (map.inverted) fraction = 1.0 - fraction;
  return map.source_min + fraction * (map.source_max - map.source_min);
}

CrossDomainResult cross_domain_eval(const RegressionHead& head, std::span<const PooledUtterance> corpus,
                                    const ScaleMap& map, bool clamp) {
  CrossDomainResult result;
  result.pairs.reserve(corpus.size());
  for (const auto& u : corpus) {
    if (!u.target) throw DataError("utterance " + u.utterance_id + " has no target score");
    result.pairs.push_back({u.speaker_id, predict_pooled(head, u.pooled, clamp), convert_scale(*u.target, map)});
  }
  result.report = evaluate(result.pairs);
  return result;
}

ConsistencyResult content_consistency(const RegressionHead& head, std::span<const PooledUtterance> corpus) {
  std::set<std::string> tags;
  for (const auto& u : corpus) {
    if (!u.content_tag) throw DataError("unpaired speaker: " + u.speaker_id + " has an utterance without content_tag");
    tags.insert(*u.content_tag);
  }
  if (tags.size() != 2) {
    throw DataError("paired corpus needs exactly two content tags, found " + std::to_string(tags.size()));
  }

  ConsistencyResult result;
  result.content_a = *tags.begin();
  result.content_b = *std::next(tags.begin());

  std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> by_speaker;
  for (const auto& u : corpus) {
    auto [it, inserted] = by_speaker.try_emplace(u.speaker_id);
    if (inserted) result.speakers.push_back(u.speaker_id);
    auto& slot = *u.content_tag == result.content_a ? it->second.first : it->second.second;
    if (slot) throw DataError("unpaired speaker: " + u.speaker_id + " has two '" + *u.content_tag + "' utterances");
    slot = predict_pooled(head, u.pooled, false);
  }
  for (const auto& id : result.speakers) {
    const auto& [a, b] = by_speaker.at(id);
    if (!a || !b) throw DataError("unpaired speaker: " + id);
    result.predictions_a.push_back(*a);
    result.predictions_b.push_back(*b);
  }
  result.correlation = spearman(result.predictions_a, result.predictions_b);
  return result;
}

}  // namespace sqa
