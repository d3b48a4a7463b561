#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psyrig/connectors.hpp"
#include "psyrig/experiment.hpp"
#include "psyrig/postprocess.hpp"

namespace psyrig {

// One processed generation: task keys, text at each cleaning stage,
// validity, and the judgment (present iff valid).
struct ResponseRecord {
  RunTask task;
  std::string raw_text;
  std::string cleaned_text;
  std::optional<std::string> extracted_answer;
  Validity validity;
  std::optional<Judgment> judgment;
  std::int64_t generated_at_ms = 0;

  bool operator==(const ResponseRecord&) const = default;
};

// Single-line JSON encodings with fixed key order. Decoders throw DataError.
std::string encode_raw_response(const RawResponse& r);
RawResponse decode_raw_response(std::string_view line);
std::string encode_response_record(const ResponseRecord& r);
ResponseRecord decode_response_record(std::string_view line);

struct JsonlReadResult {
  std::vector<std::string> lines;  // complete, non-empty lines
  std::vector<std::string> warnings;
};

// Splits a JSONL file into lines. A final line without a terminating
// newline is an interrupted write: it is dropped with a warning when it
// does not parse as JSON.
JsonlReadResult read_jsonl_lines(const std::filesystem::path& path);

// Cuts an unterminated trailing line off the file so appends start on a
// fresh line; a trailing line that is complete JSON only gets its newline.
// Returns true when bytes were removed.
bool repair_jsonl_tail(const std::filesystem::path& path);

template <typename T>
struct Decoded {
  std::vector<T> records;
  std::vector<std::string> warnings;
};

// Throws DataError with the 1-based line number of the first malformed
// record (other than a tolerated truncated tail).
Decoded<ResponseRecord> read_response_records(const std::filesystem::path& path);
Decoded<RawResponse> read_raw_responses(const std::filesystem::path& path);

void write_response_records(const std::filesystem::path& path,
                            const std::vector<ResponseRecord>& records);

// RFC 4180 style: fields containing a comma, quote, CR or LF are quoted and
// inner quotes doubled; rows end in "\n".
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string csv_escape(std::string_view field);
std::string to_csv(const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

// Shortest round-trip decimal spelling; NaN becomes the empty string.
std::string format_number(double v);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace psyrig
