#include "sqa/embedding_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "byte_io.hpp"
#include "sqa/errors.hpp"

namespace sqa {

namespace detail {

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::kIo, "not found: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw FormatError(FormatError::Kind::kIo, "read failed: " + path.string());
  return bytes;
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::kIo, "write failed: " + path.string());
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "EMB1";

void check_shape(std::size_t frames, std::size_t dim) {
  if (frames == 0 || dim == 0) throw FormatError(FormatError::Kind::kEmptyDims, "empty dimensions (T or D = 0)");
  if (frames > std::numeric_limits<std::uint32_t>::max() || dim > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError(FormatError::Kind::kBadHeader, "dimensions exceed u32");
  }
}

void check_rate(float rate) {
  if (!std::isfinite(rate) || rate <= 0.0F) throw FormatError(FormatError::Kind::kBadHeader, "invalid frame rate");
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t frames, std::size_t dim, std::vector<float> data, float frame_rate_hz)
    : frames_(frames), dim_(dim), data_(std::move(data)), frame_rate_hz_(frame_rate_hz) {
  check_shape(frames_, dim_);
  check_rate(frame_rate_hz_);
  if (data_.size() != frames_ * dim_) throw DataError("data length does not equal T x D");
  for (float v : data_) {
    if (!std::isfinite(v)) throw FormatError(FormatError::Kind::kNonFinite, "non-finite value");
  }
}

EmbeddingMatrix EmbeddingMatrix::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > frames_) throw std::out_of_range("frame slice out of range");
  std::vector<float> part(data_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                          data_.begin() + static_cast<std::ptrdiff_t>((first + count) * dim_));
  return EmbeddingMatrix(count, dim_, std::move(part), frame_rate_hz_);
}

std::vector<std::uint8_t> encode_embedding(const EmbeddingMatrix& matrix) {
  check_shape(matrix.frames(), matrix.dim());
  for (float v : matrix.data()) {
    if (!std::isfinite(v)) throw FormatError(FormatError::Kind::kNonFinite, "non-finite value");
  }
  detail::ByteWriter out;
  out.reserve(kEmbeddingHeaderBytes + matrix.data().size() * 4);
  out.tag(kMagic);
  out.u32(kEmbeddingVersion);
  out.u32(static_cast<std::uint32_t>(matrix.frames()));
  out.u32(static_cast<std::uint32_t>(matrix.dim()));
  out.f32(matrix.frame_rate_hz());
  for (float v : matrix.data()) out.f32(v);
  return out.take();
}

namespace {

EmbeddingHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError(FormatError::Kind::kTruncated, "truncated header");
  detail::ByteReader in(bytes);
  if (!in.tag_equals(kMagic)) throw FormatError(FormatError::Kind::kBadMagic, "bad magic");
  if (bytes.size() < kEmbeddingHeaderBytes) throw FormatError(FormatError::Kind::kTruncated, "truncated header");
  in.skip(4);
  const std::uint32_t version = in.u32();
  if (version != kEmbeddingVersion) {
    throw FormatError(FormatError::Kind::kUnsupportedVersion, "unsupported version " + std::to_string(version));
  }
  EmbeddingHeader header;
  header.frames = in.u32();
  header.dim = in.u32();
  header.frame_rate_hz = in.f32();
  check_shape(header.frames, header.dim);
  check_rate(header.frame_rate_hz);
  return header;
}

void check_payload_size(const EmbeddingHeader& header, std::uint64_t total_bytes) {
  const std::uint64_t expected = kEmbeddingHeaderBytes + std::uint64_t{header.frames} * header.dim * 4;
  if (total_bytes < expected) {
    throw FormatError(FormatError::Kind::kTruncated, "truncated payload: expected " + std::to_string(expected) +
                                                         " bytes, found " + std::to_string(total_bytes));
  }
  if (total_bytes > expected) throw FormatError(FormatError::Kind::kTrailingData, "trailing data after payload");
}

}  // namespace

EmbeddingMatrix decode_embedding(std::span<const std::uint8_t> bytes) {
  const EmbeddingHeader header = decode_header(bytes);
  check_payload_size(header, bytes.size());
  detail::ByteReader in(bytes.subspan(kEmbeddingHeaderBytes));
  std::vector<float> data(std::size_t{header.frames} * header.dim);
  for (float& v : data) v = in.f32();
  return EmbeddingMatrix(header.frames, header.dim, std::move(data), header.frame_rate_hz);
}

void write_embedding(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  const auto bytes = encode_embedding(matrix);
  detail::write_binary_file(path, bytes);
}

EmbeddingMatrix read_embedding(const std::filesystem::path& path) {
  const auto bytes = detail::read_binary_file(path);
  return decode_embedding(bytes);
}

EmbeddingHeader read_embedding_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::kIo, "not found: " + path.string());
  std::vector<std::uint8_t> head(kEmbeddingHeaderBytes);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  const EmbeddingHeader header = decode_header(head);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw FormatError(FormatError::Kind::kIo, "cannot stat " + path.string());
  check_payload_size(header, size);
  return header;
}

}  // namespace sqa
