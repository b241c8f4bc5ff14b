#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unordered_set>

#include "ecg/recording.hpp"

namespace ecg {
namespace {

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw RecordingError(RecordingErrorKind::kMalformedLine,
                       path.string() + ":" + std::to_string(line) + ": " + what, line);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RecordingError(RecordingErrorKind::kIo, "cannot read '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

RecordingFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".csv") return RecordingFormat::kCsv;
  if (ext == ".txt") return RecordingFormat::kTxt;
  return RecordingFormat::kRaw;
}

std::vector<LogRecord> load_log_records(const std::filesystem::path& path, LogFormat format) {
  const auto lines = read_lines(path);
  std::vector<LogRecord> records;
  if (lines.empty()) return records;
  if (lines.front() != header_line(format)) malformed(path, 1, "missing or unexpected header");

  const char sep = separator(format);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    if (lines[i].empty() && i + 1 == lines.size()) break;
    const auto f = split(lines[i], sep);
    if (f.size() != 5) {
      malformed(path, lineno, "expected 5 fields, got " + std::to_string(f.size()));
    }
    LogRecord r;
    if (!parse_iso8601(f[0], r.wall_epoch_ms)) malformed(path, lineno, "bad datetime '" + std::string(f[0]) + "'");
    if (!parse_int(f[1], r.elapsed_ms)) malformed(path, lineno, "bad elapsed_ms");
    if (!parse_int(f[2], r.sample_index)) malformed(path, lineno, "bad sample_index");
    if (!parse_int(f[3], r.adc_value)) malformed(path, lineno, "bad adc value");
    if (f[4] == "0") {
      r.beat_flag = 0;
    } else if (f[4] == "1") {
      r.beat_flag = 1;
    } else {
      malformed(path, lineno, "beat flag must be 0 or 1");
    }
    records.push_back(r);
  }
  return records;
}

void write_log_records(const std::filesystem::path& path, LogFormat format,
                       const std::vector<LogRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot create '" + path.string() + "'", 0);
  out << header_line(format) << '\n';
  for (const auto& r : records) out << format_record(r, format) << '\n';
  out.flush();
  if (!out) throw StorageError("write failed for '" + path.string() + "'", 0);
}

Recording load_recording(const std::filesystem::path& path, RecordingFormat format,
                         std::optional<double> sample_rate_hz) {
  Recording rec;
  rec.source = path.string();

  if (format == RecordingFormat::kRaw) {
    const auto lines = read_lines(path);
    if (lines.empty()) {
      rec.sample_rate_hz = sample_rate_hz.value_or(0.0);
      return rec;
    }
    if (!sample_rate_hz || !(*sample_rate_hz > 0.0)) {
      throw RecordingError(RecordingErrorKind::kMissingRate,
                           "raw recording '" + path.string() + "' needs a sample rate");
    }
    rec.sample_rate_hz = *sample_rate_hz;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty() && i + 1 == lines.size()) break;
      std::int32_t v = 0;
      if (!parse_int(lines[i], v)) malformed(path, i + 1, "expected one integer ADC value");
      const auto idx = rec.samples.size();
      rec.samples.push_back({idx, static_cast<double>(idx) * 1000.0 / rec.sample_rate_hz, v});
    }
    return rec;
  }

  const LogFormat lf = format == RecordingFormat::kCsv ? LogFormat::kCsv : LogFormat::kTxt;
  const auto records = load_log_records(path, lf);
  std::vector<Annotation> ann;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.sample_index != i) {
      throw RecordingError(RecordingErrorKind::kNonContiguous,
                           path.string() + ": sample_index " + std::to_string(r.sample_index) +
                               " at record " + std::to_string(i) + " (indices must run 0, 1, 2, ...)",
                           i + 2);
    }
    const double ts = static_cast<double>(r.elapsed_ms);
    rec.samples.push_back({r.sample_index, ts, r.adc_value});
    if (r.beat_flag) ann.push_back({r.sample_index, ts});
  }
  rec.annotations = std::move(ann);

  double inferred = 0.0;
  if (records.size() >= 2) {
    const double span = static_cast<double>(records.back().elapsed_ms - records.front().elapsed_ms);
    if (span > 0.0) inferred = 1000.0 * static_cast<double>(records.size() - 1) / span;
  }
  if (sample_rate_hz) {
    if (inferred > 0.0 && std::fabs(inferred - *sample_rate_hz) > 0.05 * *sample_rate_hz) {
      throw RecordingError(RecordingErrorKind::kInconsistentRate,
                           path.string() + ": timestamps imply " + std::to_string(inferred) +
                               " Hz but " + std::to_string(*sample_rate_hz) + " Hz was given");
    }
    rec.sample_rate_hz = *sample_rate_hz;
  } else {
    rec.sample_rate_hz = inferred;
  }
  return rec;
}

std::vector<LogRecord> to_log_records(const Recording& rec, std::int64_t start_epoch_ms) {
  std::unordered_set<SampleIndex> beats;
  if (rec.annotations) {
    for (const auto& a : *rec.annotations) beats.insert(a.beat_index);
  }
  std::vector<LogRecord> out;
  out.reserve(rec.samples.size());
  for (const auto& s : rec.samples) {
    const auto elapsed = static_cast<std::int64_t>(std::llround(s.timestamp_ms));
    out.push_back({start_epoch_ms + elapsed, elapsed, s.index, s.value,
                   static_cast<std::uint8_t>(beats.count(s.index) ? 1 : 0)});
  }
  return out;
}

}  // namespace ecg
