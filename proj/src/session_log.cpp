#include "ecg/session_log.hpp"

#include <cerrno>
#include <charconv>
#include <cstring>
#include <ctime>
#include <system_error>

namespace ecg {
namespace {

bool legal_stem_char(char c) noexcept {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

char to_upper(char c) noexcept { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }
char to_lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

char separator(LogFormat f) noexcept { return f == LogFormat::kCsv ? ',' : '\t'; }

std::string header_line(LogFormat f) {
  const char sep = separator(f);
  std::string h = "datetime";
  for (const char* col : {"elapsed_ms", "sample_index", "adc", "beat"}) {
    h += sep;
    h += col;
  }
  return h;
}

SessionFileName SessionFileName::parse(std::string_view raw) {
  const auto dot = raw.rfind('.');
  if (dot == std::string_view::npos) {
    throw NameError(NameErrorKind::kUnsupportedExtension,
                    "session name '" + std::string(raw) + "' has no .csv or .txt extension");
  }
  const std::string_view stem_raw = raw.substr(0, dot);
  const std::string_view ext_raw = raw.substr(dot + 1);

  std::string ext;
  for (char c : ext_raw) ext += to_lower(c);
  if (ext != "csv" && ext != "txt") {
    throw NameError(NameErrorKind::kUnsupportedExtension,
                    "unsupported extension '." + std::string(ext_raw) + "' (use .csv or .txt)");
  }
  if (stem_raw.empty()) throw NameError(NameErrorKind::kEmptyStem, "session name has an empty stem");
  if (stem_raw.size() > 8) {
    throw NameError(NameErrorKind::kStemTooLong,
                    "stem '" + std::string(stem_raw) + "' exceeds 8 characters");
  }
  std::string stem;
  for (char c : stem_raw) {
    const char up = to_upper(c);
    if (!legal_stem_char(up)) {
      throw NameError(NameErrorKind::kIllegalCharacter,
                      "illegal character '" + std::string(1, c) + "' in stem '" +
                          std::string(stem_raw) + "'");
    }
    stem += up;
  }
  return SessionFileName(std::move(stem), std::move(ext));
}

std::string SessionFileName::render() const {
  std::string out = stem_ + ".";
  for (char c : ext_) out += to_upper(c);
  return out;
}

std::string format_iso8601(std::int64_t epoch_ms) {
  std::int64_t secs = epoch_ms / 1000;
  std::int64_t ms = epoch_ms % 1000;
  if (ms < 0) {
    ms += 1000;
    --secs;
  }
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  if (ms != 0) n += static_cast<std::size_t>(std::snprintf(buf + n, sizeof buf - n, ".%03d", static_cast<int>(ms)));
  buf[n++] = 'Z';
  return std::string(buf, n);
}

bool parse_iso8601(std::string_view text, std::int64_t& epoch_ms) {
  // YYYY-MM-DDTHH:MM:SS[.mmm]Z
  if (text.size() != 20 && text.size() != 24) return false;
  if (text.back() != 'Z' || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':')
    return false;
  int year, mon, day, hh, mm, ss, frac = 0;
  if (!parse_int(text.substr(0, 4), year) || !parse_int(text.substr(5, 2), mon) ||
      !parse_int(text.substr(8, 2), day) || !parse_int(text.substr(11, 2), hh) ||
      !parse_int(text.substr(14, 2), mm) || !parse_int(text.substr(17, 2), ss))
    return false;
  if (text.size() == 24) {
    if (text[19] != '.' || !parse_int(text.substr(20, 3), frac)) return false;
  }
  if (mon < 1 || mon > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60) return false;
  std::tm tm{};
  tm.tm_year = year - 1900;
  tm.tm_mon = mon - 1;
  tm.tm_mday = day;
  tm.tm_hour = hh;
  tm.tm_min = mm;
  tm.tm_sec = ss;
  const std::time_t t = timegm(&tm);
  epoch_ms = static_cast<std::int64_t>(t) * 1000 + frac;
  return true;
}

std::string format_record(const LogRecord& rec, LogFormat f) {
  const char sep = separator(f);
  std::string line = format_iso8601(rec.wall_epoch_ms);
  line += sep;
  line += std::to_string(rec.elapsed_ms);
  line += sep;
  line += std::to_string(rec.sample_index);
  line += sep;
  line += std::to_string(rec.adc_value);
  line += sep;
  line += rec.beat_flag ? '1' : '0';
  return line;
}

void SessionWriter::FileCloser::operator()(std::FILE* f) const noexcept {
  if (f) std::fclose(f);
}

SessionWriter::SessionWriter(std::unique_ptr<std::FILE, FileCloser> file,
                             std::filesystem::path path, LogFormat format)
    : file_(std::move(file)), path_(std::move(path)), format_(format) {}

SessionWriter::~SessionWriter() {
  if (file_) std::fflush(file_.get());
}

SessionWriter SessionWriter::open(const SessionFileName& name, const std::filesystem::path& directory) {
  std::error_code ec;
  if (!std::filesystem::is_directory(directory, ec)) {
    throw StorageError("cannot write session: '" + directory.string() + "' is not a directory", 0);
  }
  return open_path(directory / name.render(), name.format());
}

SessionWriter SessionWriter::open_path(const std::filesystem::path& path, LogFormat format) {
  std::error_code ec;
  const bool existed = std::filesystem::exists(path, ec);
  std::FILE* raw = std::fopen(path.c_str(), "ab");
  if (!raw) {
    throw StorageError("cannot open session file '" + path.string() + "': " + std::strerror(errno), 0);
  }
  std::unique_ptr<std::FILE, FileCloser> file(raw);

  // ftell on an append stream reports the end of the existing content.
  std::fseek(raw, 0, SEEK_END);
  const long size = std::ftell(raw);
  if (size <= 0) {
    const std::string header = header_line(format) + "\n";
    const bool ok = std::fwrite(header.data(), 1, header.size(), raw) == header.size() &&
                    std::fflush(raw) == 0;
    if (!ok) {
      const int err = errno;
      file.reset();
      if (!existed) std::filesystem::remove(path, ec);
      throw StorageError("cannot write session header to '" + path.string() + "': " + std::strerror(err), 0);
    }
  }
  return SessionWriter(std::move(file), path, format);
}

void SessionWriter::fail(const std::string& action) {
  const int err = errno;
  throw StorageError("storage error while " + action + " '" + path_.string() + "': " +
                         std::strerror(err) + " (" + std::to_string(durable_) +
                         " records durably written)",
                     durable_);
}

void SessionWriter::write(const LogRecord& rec) {
  if (!file_) {
    errno = EBADF;
    fail("writing to closed session");
  }
  std::string line = format_record(rec, format_);
  line += '\n';
  if (std::fwrite(line.data(), 1, line.size(), file_.get()) != line.size()) fail("writing");
  ++accepted_;
  ++since_flush_;
  if (since_flush_ >= kFlushEvery || rec.beat_flag) flush();
}

void SessionWriter::flush() {
  if (!file_) return;
  if (std::fflush(file_.get()) != 0) fail("flushing");
  durable_ = accepted_;
  since_flush_ = 0;
}

void SessionWriter::close() {
  if (!file_) return;
  flush();
  std::FILE* f = file_.release();
  if (std::fclose(f) != 0) fail("closing");
}

}  // namespace ecg
