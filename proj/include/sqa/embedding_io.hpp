#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sqa {

inline constexpr float kDefaultFrameRateHz = 50.0F;

/// T x D frame embeddings of one utterance, frame-major.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws DataError if the shape is empty, data.size() != frames*dim,
  // a value is non-finite, or frame_rate_hz is not positive.
  EmbeddingMatrix(std::size_t frames, std::size_t dim, std::vector<float> data,
                  float frame_rate_hz = kDefaultFrameRateHz);

  std::size_t frames() const noexcept { return frames_; }
  std::size_t dim() const noexcept { return dim_; }
  float frame_rate_hz() const noexcept { return frame_rate_hz_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> frame(std::size_t t) const {
    return std::span<const float>(data_).subspan(t * dim_, dim_);
  }
  // Frames [first, first + count) as a new matrix with the same rate.
  EmbeddingMatrix slice(std::size_t first, std::size_t count) const;

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t frames_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  float frame_rate_hz_ = kDefaultFrameRateHz;
};

// On-disk layout, little-endian throughout:
//   0..3   "EMB1"
//   4..7   u32 version (1)
//   8..11  u32 frames
//   12..15 u32 dim
//   16..19 f32 frame rate (Hz)
//   20..   frames*dim f32, frame-major
inline constexpr std::size_t kEmbeddingHeaderBytes = 20;
inline constexpr std::uint32_t kEmbeddingVersion = 1;

std::vector<std::uint8_t> encode_embedding(const EmbeddingMatrix& matrix);
EmbeddingMatrix decode_embedding(std::span<const std::uint8_t> bytes);

void write_embedding(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix read_embedding(const std::filesystem::path& path);

struct EmbeddingHeader {
  std::uint32_t frames = 0;
  std::uint32_t dim = 0;
  float frame_rate_hz = 0.0F;
};

// Reads and checks only the header and the file size against it.
EmbeddingHeader read_embedding_header(const std::filesystem::path& path);

struct UtteranceRecord {
  std::string speaker_id;
  std::string utterance_id;
  std::string path;  // relative to the manifest directory
  std::optional<double> intelligibility;
  std::optional<double> severity;
  std::string corpus_tag;
  std::optional<std::string> content_tag;

  bool operator==(const UtteranceRecord&) const = default;
};

struct CorpusManifest {
  std::vector<UtteranceRecord> records;
  std::filesystem::path root;

  std::filesystem::path resolve(const UtteranceRecord& record) const { return root / record.path; }
};

inline constexpr const char* kManifestHeader =
    "speaker_id,utterance_id,path,intelligibility,severity,corpus_tag,content_tag";

CorpusManifest parse_manifest(const std::string& text, const std::filesystem::path& root);
CorpusManifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const CorpusManifest& manifest);
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

struct RecordCheck {
  std::string utterance_id;
  bool ok = true;
  std::string reason;  // empty when ok
};

struct ValidationReport {
  std::vector<RecordCheck> checks;
  std::optional<std::uint32_t> dim;  // corpus dimension, when any file was readable

  bool all_ok() const;
  std::size_t failures() const;
};

// Never throws for per-record problems; they are reported.
ValidationReport validate_corpus(const CorpusManifest& manifest);

}  // namespace sqa
