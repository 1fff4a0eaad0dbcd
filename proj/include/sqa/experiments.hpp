#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqa/embedding_io.hpp"
#include "sqa/evaluation.hpp"
#include "sqa/pooling_regressor.hpp"

namespace sqa {

enum class Task : std::uint8_t { kIntelligibility, kSeverity };

std::string_view task_name(Task task);
Task parse_task(std::string_view name);
std::optional<double> task_score(const UtteranceRecord& record, Task task);

/// An utterance reduced to its pooled statistics. Pooling is done once per
/// utterance since the encoder features are frozen.
struct PooledUtterance {
  std::string speaker_id;
  std::string utterance_id;
  std::optional<std::string> content_tag;
  PooledVector pooled;
  std::optional<double> target;
};

// Reads and pools every record. With a task, every record must carry that
// score (DataError otherwise). All files must share one dimension.
std::vector<PooledUtterance> load_pooled(const CorpusManifest& manifest, std::optional<Task> task);

std::vector<TrainingSample> to_samples(std::span<const PooledUtterance> utterances);

// Distinct speaker ids in first-seen order.
std::vector<std::string> speaker_ids(std::span<const PooledUtterance> utterances);

// DataError if any speaker id appears on both sides.
void check_disjoint_speakers(std::span<const PooledUtterance> train, std::span<const PooledUtterance> test);

struct FoldSplit {
  std::size_t fold_index = 0;
  std::vector<std::string> train_speakers;  // sorted
  std::vector<std::string> valid_speakers;  // sorted
};

// Seeded shuffle, then k contiguous chunks as validation sets; the first
// n % k chunks get one extra speaker.
std::vector<FoldSplit> kfold_split(std::vector<std::string> speakers, std::size_t k, std::uint64_t seed);

struct KFoldOptions {
  std::size_t k = 10;
  std::size_t jobs = 1;
};

struct FoldResult {
  FoldSplit split;
  LossCurve curve;
  std::size_t selected_epoch = 0;
  std::vector<ScorePair> test_pairs;
  EvalReport test_report;
  RegressionHead head;
};

struct KFoldResult {
  std::vector<FoldResult> folds;  // ordered by fold index
  FoldAggregate aggregate;
};

// Trains one head per fold on the fold's training speakers, selects on its
// validation speakers and evaluates on the whole fixed test corpus.
// config.seed drives both the split and the per-fold initialization.
KFoldResult run_kfold(std::span<const PooledUtterance> train_corpus, std::span<const PooledUtterance> test_corpus,
                      const TrainConfig& config, const KFoldOptions& options);

// folds/fold_<i>/{summary.json,scatter.csv,lines.csv}, loss_curve_<i>.csv,
// aggregate.json.
void write_kfold_outputs(const KFoldResult& result, const std::filesystem::path& dir);
void write_loss_curve(const LossCurve& curve, const std::filesystem::path& path);

std::vector<ScorePair> predict_pairs(const RegressionHead& head, std::span<const PooledUtterance> utterances,
                                     bool clamp);

// Window of round(duration_s * frame_rate) frames; trailing partial window
// dropped. DataError("audio shorter than segment") when no window fits.
std::size_t segment_frames(const EmbeddingMatrix& matrix, double duration_s);
std::vector<double> segment_predictions(const RegressionHead& head, const EmbeddingMatrix& matrix,
                                        double duration_s, bool clamp = false);

inline constexpr std::array<double, 5> kDefaultSweepDurations = {1.0, 2.0, 5.0, 10.0, 20.0};

struct SeverityAnchor {
  std::string_view group;
  double intelligibility;
  double severity;
};

// Perceptual scores of the severe, mild and control speakers used for the
// segment analysis.
inline constexpr std::array<SeverityAnchor, 3> kRepresentativeAnchors = {{
    {"severe", 1.5, 0.5},
    {"mild", 5.8, 5.1},
    {"control", 10.0, 10.0},
}};

// Group of the anchor nearest to `target` for the task.
std::string_view nearest_group(double target, Task task);

// Index of the record closest to each anchor (ties: first in order), in
// anchor order. Records without the task's score are skipped.
std::vector<std::size_t> select_representatives(std::span<const UtteranceRecord> records, Task task);

struct SweepInput {
  std::string speaker_id;
  std::string group;
  EmbeddingMatrix matrix;
  double target = 0.0;
};

struct SegmentReport {
  std::string speaker_id;
  std::string group;
  double duration_s = 0.0;
  std::vector<double> segment_scores;
  double segment_mean = 0.0;
  double global_prediction = 0.0;
  double target = 0.0;
  double abs_error = 0.0;  // |segment_mean - target|
};

// One report per (input, duration), input-major.
std::vector<SegmentReport> duration_sweep(const RegressionHead& head, std::span<const SweepInput> inputs,
                                          std::span<const double> durations);
void write_duration_sweep(std::span<const SegmentReport> reports, const std::filesystem::path& path);
void write_segment_scores(std::span<const double> scores, const std::filesystem::path& path);
// "2" for 2.0, "0.5" for 0.5.
std::string format_duration(double duration_s);

struct ScaleMap {
  double source_min = 0.0;
  double source_max = 10.0;
  bool inverted = false;
};

// Linear map of [source_min, source_max] onto [0, 10], reversed when inverted.
double convert_scale(double score, const ScaleMap& map);
// Inverse of convert_scale.
double to_source_scale(double score, const ScaleMap& map);

struct CrossDomainResult {
  std::vector<ScorePair> pairs;  // converted targets
  EvalReport report;
};

CrossDomainResult cross_domain_eval(const RegressionHead& head, std::span<const PooledUtterance> corpus,
                                    const ScaleMap& map, bool clamp = false);

struct ConsistencyResult {
  std::string content_a;  // lexicographically smaller tag
  std::string content_b;
  std::vector<std::string> speakers;
  std::vector<double> predictions_a;
  std::vector<double> predictions_b;
  SpearmanResult correlation;
};

// Spearman correlation between per-speaker predictions on the two texts.
// Every speaker must have exactly one utterance for each of the corpus's
// two content tags.
ConsistencyResult content_consistency(const RegressionHead& head, std::span<const PooledUtterance> corpus);

}  // namespace sqa
