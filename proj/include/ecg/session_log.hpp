#pragma once

// Session files with FAT 8.3 names, append-if-exists semantics and a fixed
// column schema:
//
//   datetime,elapsed_ms,sample_index,adc,beat
//
// CSV uses commas, TXT the same columns separated by tabs. LF line endings,
// UTC ISO-8601 datetimes.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "ecg/error.hpp"

namespace ecg {

enum class LogFormat { kCsv, kTxt };

char separator(LogFormat f) noexcept;
std::string header_line(LogFormat f);  // without the trailing LF

enum class NameErrorKind { kEmptyStem, kStemTooLong, kIllegalCharacter, kUnsupportedExtension };
using NameError = KindedError<NameErrorKind>;

class SessionFileName {
 public:
  /// Parses "stem.ext"; stems are folded to upper case, extensions to lower.
  static SessionFileName parse(std::string_view raw);

  const std::string& stem() const noexcept { return stem_; }
  const std::string& extension() const noexcept { return ext_; }
  LogFormat format() const noexcept { return ext_ == "csv" ? LogFormat::kCsv : LogFormat::kTxt; }

  /// "STEM.EXT", both upper case as on FAT media.
  std::string render() const;

  friend bool operator==(const SessionFileName&, const SessionFileName&) = default;

 private:
  SessionFileName(std::string stem, std::string ext) : stem_(std::move(stem)), ext_(std::move(ext)) {}
  std::string stem_;
  std::string ext_;
};

struct LogRecord {
  std::int64_t wall_epoch_ms = 0;  // UTC
  std::int64_t elapsed_ms = 0;
  std::uint64_t sample_index = 0;
  std::int32_t adc_value = 0;
  std::uint8_t beat_flag = 0;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

/// "2024-01-01T10:00:00Z", or with ".mmm" when the milliseconds are nonzero.
std::string format_iso8601(std::int64_t epoch_ms);
/// Inverse of format_iso8601. Returns false on malformed input.
bool parse_iso8601(std::string_view text, std::int64_t& epoch_ms);

std::string format_record(const LogRecord& rec, LogFormat f);  // without LF

class StorageError : public Error {
 public:
  StorageError(const std::string& what, std::uint64_t durable_records)
      : Error(what), durable_records_(durable_records) {}
  /// Records confirmed flushed before the failure.
  std::uint64_t durable_records() const noexcept { return durable_records_; }

 private:
  std::uint64_t durable_records_;
};

class SessionWriter {
 public:
  static constexpr std::uint64_t kFlushEvery = 250;

  /// Opens directory/NAME for appending, writing the header if the file is
  /// new or empty. Throws StorageError when the target cannot be written.
  static SessionWriter open(const SessionFileName& name, const std::filesystem::path& directory);

  /// Same, for an explicit path. Used for devices and tests.
  static SessionWriter open_path(const std::filesystem::path& path, LogFormat format);

  SessionWriter(SessionWriter&&) noexcept = default;
  SessionWriter& operator=(SessionWriter&&) noexcept = default;
  ~SessionWriter();

  /// Appends one line. Flushes every kFlushEvery records and on beat records.
  void write(const LogRecord& rec);
  void flush();
  void close();

  std::uint64_t records_written() const noexcept { return accepted_; }
  std::uint64_t records_durable() const noexcept { return durable_; }
  const std::filesystem::path& path() const noexcept { return path_; }
  LogFormat format() const noexcept { return format_; }

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const noexcept;
  };

  SessionWriter(std::unique_ptr<std::FILE, FileCloser> file, std::filesystem::path path,
                LogFormat format);
  [[noreturn]] void fail(const std::string& action);

  std::unique_ptr<std::FILE, FileCloser> file_;
  std::filesystem::path path_;
  LogFormat format_ = LogFormat::kCsv;
  std::uint64_t accepted_ = 0;
  std::uint64_t durable_ = 0;
  std::uint64_t since_flush_ = 0;
};

}  // namespace ecg
