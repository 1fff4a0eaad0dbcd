#pragma once

#include <stdexcept>
#include <string>

namespace sqa {

/// Input data is malformed or violates a corpus rule (bad file, bad score,
/// duplicate key, missing label). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Embedding / model file could not be decoded.
class FormatError : public DataError {
 public:
  enum class Kind {
    kIo,
    kBadMagic,
    kUnsupportedVersion,
    kTruncated,
    kTrailingData,
    kEmptyDims,
    kBadHeader,
    kNonFinite,
  };

  FormatError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace sqa
