#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqa/embedding_io.hpp"
#include "sqa/experiments.hpp"

namespace sqa {

// Synthetic speakers: every frame is
//
//   frame_t = signature + d * (kMeanShift * mean_axis + kModulation * s_b * modulation_axis)
//             + content_scale * c_b + noise_scale * z_t
//
// where d = (10 - true_score) / 10, b = b(t) indexes consecutive blocks of
// kBlockSeconds, s_b is a fair +1/-1 draw per block, c_b ~ N(0, I) per
// block and z_t ~ N(0, I) per frame. Degradation moves the pooled mean along
// mean_axis and inflates the pooled std along modulation_axis. Both the
// instability s_b and the content c_b only show up across several blocks, so
// a short segment carries less evidence than a whole utterance.
inline constexpr double kMeanShift = 1.5;
inline constexpr double kModulation = 1.0;
inline constexpr double kBlockSeconds = 0.5;

struct DegradationAxes {
  // Both have norm sqrt(dim), i.e. unit RMS per dimension, and are orthogonal.
  std::vector<double> mean_axis;
  std::vector<double> modulation_axis;
};

// Depends on dim only, so corpora generated with different seeds share axes.
DegradationAxes degradation_axes(std::size_t dim);

struct ScoreDistribution {
  double low = 0.0;
  double high = 10.0;
};

struct SpeakerProfile {
  std::string speaker_id;
  double true_score = 0.0;
  std::vector<double> signature;
  double degradation = 0.0;  // (10 - true_score) / 10
  double noise_scale = 0.0;
  double content_scale = 0.0;
};

inline constexpr double kDefaultSignatureScale = 0.25;
inline constexpr double kDefaultContentScale = 0.5;

inline double degradation_for(double true_score) { return (10.0 - true_score) / 10.0; }

// signature = signature_scale * N(0, I).
SpeakerProfile gen_profile(std::uint64_t seed, std::size_t speaker_index, const ScoreDistribution& scores,
                           std::size_t dim, double noise_scale, std::string speaker_id,
                           double signature_scale = kDefaultSignatureScale);

// T = round(duration_s * frame_rate). noise_seed drives s_b, c_b and z_t.
EmbeddingMatrix gen_utterance(const SpeakerProfile& profile, double duration_s, float frame_rate,
                              std::uint64_t noise_seed);

enum class Layout : std::uint8_t { kTrain, kTest, kPaired };

std::string_view layout_name(Layout layout);
Layout parse_layout(std::string_view name);

inline constexpr std::string_view kPairedContentA = "seguin";
inline constexpr std::string_view kPairedContentB = "cordonnier";

struct SynthConfig {
  std::size_t n_speakers = 105;
  std::size_t dim = 64;
  double min_duration_s = 20.0;
  double max_duration_s = 40.0;
  float frame_rate = kDefaultFrameRateHz;
  std::uint64_t seed = 0;
  double label_noise_std = 0.3;
  double noise_scale = 0.5;
  double content_scale = kDefaultContentScale;
  double signature_scale = kDefaultSignatureScale;
  ScoreDistribution scores;
  // When set, labels are written on this source scale instead of 0-10.
  std::optional<ScaleMap> label_scale;
  std::string corpus_tag = "SYNTH";
  // Defaults to "trn", "tst" or "pair" by layout.
  std::string id_prefix;

  void validate() const;
};

struct GeneratedCorpus {
  CorpusManifest manifest;
  std::vector<SpeakerProfile> profiles;
};

// Writes <out_dir>/manifest.csv and <out_dir>/emb/<utterance_id>.emb.
GeneratedCorpus gen_corpus(const SynthConfig& config, Layout layout, const std::filesystem::path& out_dir);

}  // namespace sqa
