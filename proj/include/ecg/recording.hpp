#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ecg/error.hpp"
#include "ecg/session_log.hpp"
#include "ecg/types.hpp"

namespace ecg {

struct Recording {
  std::vector<RawSample> samples;  // indices contiguous from 0
  std::optional<std::vector<Annotation>> annotations;
  double sample_rate_hz = 0.0;
  std::string source;
};

enum class RecordingFormat { kCsv, kTxt, kRaw };

enum class RecordingErrorKind { kIo, kMalformedLine, kInconsistentRate, kNonContiguous, kMissingRate };

class RecordingError : public KindedError<RecordingErrorKind> {
 public:
  RecordingError(RecordingErrorKind kind, const std::string& what, std::size_t line = 0)
      : KindedError(kind, what), line_(line) {}
  /// 1-based line number for parse errors, 0 otherwise.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Format from the file extension: .csv, .txt, anything else raw.
RecordingFormat format_from_path(const std::filesystem::path& path);

/// Reads a session-logger file back into its records.
std::vector<LogRecord> load_log_records(const std::filesystem::path& path, LogFormat format);

/// Writes records in session-logger layout (header plus one line each),
/// truncating any existing file. Shared by synth output and tests.
void write_log_records(const std::filesystem::path& path, LogFormat format,
                       const std::vector<LogRecord>& records);

/// Loads samples from a logger file (beat flags become annotations) or from
/// a raw one-integer-per-line file. Raw files need sample_rate_hz; for logger
/// files a given rate is checked against the elapsed_ms spacing (5% slack).
/// An empty file yields an empty Recording.
Recording load_recording(const std::filesystem::path& path, RecordingFormat format,
                         std::optional<double> sample_rate_hz = std::nullopt);

/// LogRecords for a recording, with beat flags taken from the annotations.
std::vector<LogRecord> to_log_records(const Recording& rec, std::int64_t start_epoch_ms);

}  // namespace ecg
