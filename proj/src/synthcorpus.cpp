#include "sqa/synthcorpus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sqa/rng.hpp"

namespace sqa {

namespace {

constexpr std::uint64_t kAxesSeed = 0x5157A7E5ULL;

void scale_to_norm(std::vector<double>& v, double target) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x *= target / norm;
}

std::uint64_t layout_stream(Layout layout) { return 7 + static_cast<std::uint64_t>(layout); }

}  // namespace

DegradationAxes degradation_axes(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("dim must be >= 1");
  DegradationAxes axes;
  if (dim == 1) {
    axes.mean_axis = {1.0};
    axes.modulation_axis = {1.0};
    return axes;
  }
  Rng rng(derive_seed(kAxesSeed, dim));
  axes.mean_axis.resize(dim);
  axes.modulation_axis.resize(dim);
  for (double& x : axes.mean_axis) x = rng.normal();
  for (double& x : axes.modulation_axis) x = rng.normal();
  scale_to_norm(axes.mean_axis, 1.0);
  double dot = 0.0;
  for (std::size_t k = 0; k < dim; ++k) dot += axes.mean_axis[k] * axes.modulation_axis[k];
  for (std::size_t k = 0; k < dim; ++k) axes.modulation_axis[k] -= dot * axes.mean_axis[k];
  const double target = std::sqrt(static_cast<double>(dim));
  scale_to_norm(axes.mean_axis, target);
  scale_to_norm(axes.modulation_axis, target);
  return axes;
}

SpeakerProfile gen_profile(std::uint64_t seed, std::size_t speaker_index, const ScoreDistribution& scores,
                           std::size_t dim, double noise_scale, std::string speaker_id,
                           double signature_scale) {
  if (!(scores.low >= 0.0 && scores.high <= 10.0 && scores.low <= scores.high)) {
    throw std::invalid_argument("score distribution must lie within [0,10]");
  }
  Rng rng(derive_seed(seed, speaker_index));
  SpeakerProfile profile;
  profile.speaker_id = std::move(speaker_id);
  profile.true_score = rng.uniform(scores.low, scores.high);
  profile.degradation = degradation_for(profile.true_score);
  profile.noise_scale = noise_scale;
  profile.signature.resize(dim);
  for (double& x : profile.signature) x = signature_scale * rng.normal();
  return profile;
}

EmbeddingMatrix gen_utterance(const SpeakerProfile& profile, double duration_s, float frame_rate,
                              std::uint64_t noise_seed) {
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be > 0");
  if (!(frame_rate > 0.0F)) throw std::invalid_argument("frame rate must be > 0");
  const double frames_real = std::round(duration_s * static_cast<double>(frame_rate));
  if (frames_real < 1.0) throw std::invalid_argument("duration shorter than one frame");
  const auto frames = static_cast<std::size_t>(frames_real);
  const std::size_t dim = profile.signature.size();
  const auto axes = degradation_axes(dim);

  std::vector<double> base(dim);
  std::vector<double> swing(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    base[k] = profile.signature[k] + profile.degradation * kMeanShift * axes.mean_axis[k];
    swing[k] = profile.degradation * kModulation * axes.modulation_axis[k];
  }
  const auto block = static_cast<std::size_t>(
      std::max(1.0, std::round(kBlockSeconds * static_cast<double>(frame_rate))));

  Rng rng(noise_seed);
  double sign = 1.0;
  std::vector<double> content(dim, 0.0);
  std::vector<float> data(frames * dim);
  for (std::size_t t = 0; t < frames; ++t) {
    if (t % block == 0) {
      sign = rng.below(2) == 0 ? 1.0 : -1.0;
      if (profile.content_scale > 0.0) {
        for (double& c : content) c = profile.content_scale * rng.normal();
      }
    }
    for (std::size_t k = 0; k < dim; ++k) {
      double value = base[k] + sign * swing[k] + content[k];
      if (profile.noise_scale > 0.0) value += profile.noise_scale * rng.normal();
      data[t * dim + k] = static_cast<float>(value);
    }
  }
  return EmbeddingMatrix(frames, dim, std::move(data), frame_rate);
}

std::string_view layout_name(Layout layout) {
  switch (layout) {
    case Layout::kTrain:
      return "train";
    case Layout::kTest:
      return "test";
    case Layout::kPaired:
      return "paired";
  }
  return "unknown";
}

Layout parse_layout(std::string_view name) {
  if (name == "train") return Layout::kTrain;
  if (name == "test") return Layout::kTest;
  if (name == "paired") return Layout::kPaired;
  throw std::invalid_argument("unknown layout: " + std::string(name));
}

void SynthConfig::validate() const {
  if (n_speakers == 0) throw std::invalid_argument("n_speakers must be >= 1");
  if (dim == 0) throw std::invalid_argument("dim must be >= 1");
  if (!(min_duration_s > 0.0 && max_duration_s >= min_duration_s)) {
    throw std::invalid_argument("duration range must satisfy 0 < min <= max");
  }
  if (!(frame_rate > 0.0F)) throw std::invalid_argument("frame_rate must be > 0");
  if (!(label_noise_std >= 0.0)) throw std::invalid_argument("label_noise_std must be >= 0");
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("noise_scale must be >= 0");
  if (!(content_scale >= 0.0)) throw std::invalid_argument("content_scale must be >= 0");
  if (!(signature_scale >= 0.0)) throw std::invalid_argument("signature_scale must be >= 0");
  if (!(scores.low >= 0.0 && scores.high <= 10.0 && scores.low <= scores.high)) {
    throw std::invalid_argument("score range must lie within [0,10]");
  }
}

GeneratedCorpus gen_corpus(const SynthConfig& config, Layout layout, const std::filesystem::path& out_dir) {
  config.validate();
  std::string prefix = config.id_prefix;
  if (prefix.empty()) prefix = layout == Layout::kTrain ? "trn" : layout == Layout::kTest ? "tst" : "pair";

  const std::uint64_t corpus_seed = derive_seed(config.seed, layout_stream(layout));
  const std::size_t width = std::max<std::size_t>(3, std::to_string(config.n_speakers - 1).size());

  GeneratedCorpus corpus;
  corpus.manifest.root = out_dir;
  std::filesystem::create_directories(out_dir / "emb");

  for (std::size_t i = 0; i < config.n_speakers; ++i) {
    std::string index = std::to_string(i);
    index.insert(0, width - index.size(), '0');
    auto profile = gen_profile(corpus_seed, i, config.scores, config.dim, config.noise_scale, prefix + "_" + index,
                               config.signature_scale);
    profile.content_scale = config.content_scale;

    const std::uint64_t speaker_seed = derive_seed(derive_seed(corpus_seed, i), 1);
    Rng draws(speaker_seed);

    std::vector<std::string> contents;
    if (layout == Layout::kPaired) {
      contents = {std::string(kPairedContentA), std::string(kPairedContentB)};
    } else {
      contents = {std::string(kPairedContentA)};
    }

    // Perceptual labels belong to the speaker, shared by all of its utterances.
    auto label = [&](double noise) {
      double value = std::clamp(profile.true_score + config.label_noise_std * noise, 0.0, 10.0);
      if (config.label_scale) value = to_source_scale(value, *config.label_scale);
      return value;
    };
    const double intelligibility = label(draws.normal());
    const double severity = label(draws.normal());

    for (std::size_t u = 0; u < contents.size(); ++u) {
      const double duration = draws.uniform(config.min_duration_s, config.max_duration_s);
      const auto matrix = gen_utterance(profile, duration, config.frame_rate, derive_seed(speaker_seed, 10 + u));

      UtteranceRecord record;
      record.speaker_id = profile.speaker_id;
      record.utterance_id = layout == Layout::kPaired ? profile.speaker_id + "_" + contents[u] : profile.speaker_id + "_u0";
      record.path = "emb/" + record.utterance_id + ".emb";
      record.corpus_tag = config.corpus_tag;
      record.content_tag = contents[u];
      record.intelligibility = intelligibility;
      record.severity = severity;
      write_embedding(matrix, out_dir / record.path);
      corpus.manifest.records.push_back(std::move(record));
    }
    corpus.profiles.push_back(std::move(profile));
  }
  save_manifest(corpus.manifest, out_dir / "manifest.csv");
  return corpus;
}

}  // namespace sqa
