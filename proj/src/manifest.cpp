#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "sqa/embedding_io.hpp"
#include "sqa/errors.hpp"
#include "text_util.hpp"

namespace sqa {

namespace {

constexpr std::size_t kColumns = 7;

std::optional<double> parse_score(const std::string& field, std::size_t line_no, const char* column) {
  if (field.empty()) return std::nullopt;
  const auto value = detail::parse_double(field);
  const std::string where = "line " + std::to_string(line_no) + ", " + column;
  if (!value) throw DataError(where + ": not a number: '" + field + "'");
  if (!(*value >= 0.0 && *value <= 10.0)) throw DataError(where + ": score out of range [0,10]: " + field);
  return value;
}

std::string format_score(const std::optional<double>& score) {
  return score ? detail::format_double(*score) : std::string();
}

}  // namespace

CorpusManifest parse_manifest(const std::string& text, const std::filesystem::path& root) {
  CorpusManifest manifest;
  manifest.root = root;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  std::set<std::pair<std::string, std::string>> keys;
  std::set<std::string> utterance_ids;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!seen_header) {
      if (line != kManifestHeader) {
        const auto columns = detail::split_csv_line(line);
        for (std::string_view required : {"speaker_id", "utterance_id", "path", "intelligibility", "severity",
                                          "corpus_tag", "content_tag"}) {
          if (std::find(columns.begin(), columns.end(), required) == columns.end()) {
            throw DataError("missing required column: " + std::string(required));
          }
        }
        throw DataError(std::string("manifest header must be exactly: ") + kManifestHeader);
      }
      seen_header = true;
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string> fields;
    try {
      fields = detail::split_csv_line(line);
    } catch (const std::invalid_argument& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (fields.size() != kColumns) {
      throw DataError("line " + std::to_string(line_no) + ": expected 7 fields, found " +
                      std::to_string(fields.size()));
    }

    UtteranceRecord record;
    record.speaker_id = fields[0];
    record.utterance_id = fields[1];
    record.path = fields[2];
    record.intelligibility = parse_score(fields[3], line_no, "intelligibility");
    record.severity = parse_score(fields[4], line_no, "severity");
    record.corpus_tag = fields[5];
    if (!fields[6].empty()) record.content_tag = fields[6];

    if (record.speaker_id.empty() || record.utterance_id.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": empty speaker_id or utterance_id");
    }
    if (record.path.empty()) throw DataError("line " + std::to_string(line_no) + ": empty path");
    if (!keys.emplace(record.speaker_id, record.utterance_id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate key (" + record.speaker_id + ", " +
                      record.utterance_id + ")");
    }
    if (!utterance_ids.insert(record.utterance_id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate utterance_id " + record.utterance_id);
    }
    manifest.records.push_back(std::move(record));
  }
  if (!seen_header) throw DataError("missing required column: manifest has no header row");
  return manifest;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  return parse_manifest(text, path.parent_path());
}

std::string format_manifest(const CorpusManifest& manifest) {
  std::string out = std::string(kManifestHeader) + "\n";
  for (const auto& r : manifest.records) {
    out += detail::csv_escape(r.speaker_id) + "," + detail::csv_escape(r.utterance_id) + "," +
           detail::csv_escape(r.path) + "," + format_score(r.intelligibility) + "," + format_score(r.severity) + "," +
           detail::csv_escape(r.corpus_tag) + "," + detail::csv_escape(r.content_tag.value_or("")) + "\n";
  }
  return out;
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  detail::write_text_file(path, format_manifest(manifest));
}

bool ValidationReport::all_ok() const { return failures() == 0; }

std::size_t ValidationReport::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.ok; }));
}

ValidationReport validate_corpus(const CorpusManifest& manifest) {
  ValidationReport report;
  std::vector<std::optional<std::uint32_t>> dims;
  report.checks.reserve(manifest.records.size());
  for (const auto& record : manifest.records) {
    RecordCheck check{record.utterance_id, true, {}};
    std::optional<std::uint32_t> dim;
    const auto path = manifest.resolve(record);
    if (!std::filesystem::is_regular_file(path)) {
      check.ok = false;
      check.reason = "not found";
    } else {
      try {
        dim = read_embedding(path).dim();
      } catch (const std::exception& e) {
        check.ok = false;
        check.reason = e.what();
      }
    }
    report.checks.push_back(std::move(check));
    dims.push_back(dim);
  }

  // The corpus dimension is the most frequent one; ties go to the first seen.
  std::map<std::uint32_t, std::size_t> counts;
  std::vector<std::uint32_t> order;
  for (const auto& d : dims) {
    if (!d) continue;
    if (counts[*d]++ == 0) order.push_back(*d);
  }
  for (std::uint32_t d : order) {
    if (!report.dim || counts[d] > counts[*report.dim]) report.dim = d;
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] && *dims[i] != *report.dim) {
      report.checks[i].ok = false;
      report.checks[i].reason = "dim mismatch: " + std::to_string(*dims[i]) + " vs corpus " +
                                std::to_string(*report.dim);
    }
  }
  return report;
}

}  // namespace sqa
