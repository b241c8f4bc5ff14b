#include "ecg/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include "json.hpp"
#include <thread>

#include "ecg/bounded_queue.hpp"
#include "ecg/savgol.hpp"
#include "ecg/validation.hpp"
#include "ecg/wire.hpp"

namespace ecg {
namespace {

class SourceError : public Error {
 public:
  using Error::Error;
};

// Session writer behind a bounded queue on its own thread, so storage
// latency never reaches the detection loop.
class LogPump {
 public:
  LogPump(SessionWriter writer, std::size_t capacity)
      : writer_(std::move(writer)), queue_(capacity), thread_([this] { drain(); }) {}

  ~LogPump() { finish(); }

  /// blocking=false is the constant-time path; overflow becomes a storage error.
  void submit(const LogRecord& rec, bool blocking) {
    if (failed()) throw StorageError(error_message(), durable());
    const bool ok = blocking ? queue_.push(rec) : queue_.try_push(rec);
    if (!ok) {
      if (failed()) throw StorageError(error_message(), durable());
      throw StorageError("session log queue overflow (capacity " + std::to_string(queue_.capacity()) + ")",
                         durable());
    }
  }

  /// Drains, flushes and closes. Throws the first storage error, if any.
  void finish() {
    if (thread_.joinable()) {
      queue_.close();
      thread_.join();
      if (!failed()) {
        try {
          writer_.close();
        } catch (const StorageError& e) {
          record_failure(e.what());
        }
      }
    }
  }

  bool failed() const {
    std::lock_guard lock(mu_);
    return !error_.empty();
  }
  std::string error_message() const {
    std::lock_guard lock(mu_);
    return error_;
  }
  std::uint64_t written() const { return writer_.records_written(); }
  std::uint64_t durable() const { return writer_.records_durable(); }
  std::uint64_t beat_flags() const { return beat_flags_; }

 private:
  void drain() {
    while (auto rec = queue_.pop()) {
      if (failed()) continue;
      try {
        writer_.write(*rec);
        beat_flags_ += rec->beat_flag;
      } catch (const StorageError& e) {
        record_failure(e.what());
      }
    }
  }

  void record_failure(const std::string& what) {
    std::lock_guard lock(mu_);
    if (error_.empty()) error_ = what;
  }

  SessionWriter writer_;
  BoundedQueue<LogRecord> queue_;
  mutable std::mutex mu_;
  std::string error_;
  std::uint64_t beat_flags_ = 0;
  std::thread thread_;
};

Recording load_source_recording(const FileSource& f) {
  try {
    return load_recording(f.path, f.format.value_or(format_from_path(f.path)), f.sample_rate_hz);
  } catch (const RecordingError& e) {
    throw SourceError(e.what());
  }
}

std::int64_t now_epoch_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::uint64_t to_wire_ms(double ms) { return ms <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(ms)); }

// Pulls samples from whichever source the config names.
class SampleFeed {
 public:
  explicit SampleFeed(const SourceSpec& spec) {
    if (const auto* f = std::get_if<FileSource>(&spec)) {
      rec_ = load_source_recording(*f);
      rate_ = rec_.sample_rate_hz;
    } else if (const auto* s = std::get_if<SynthSource>(&spec)) {
      rec_ = generate(s->spec);
      rate_ = rec_.sample_rate_hz;
    } else {
      const auto& serial = std::get<SerialSource>(spec);
      try {
        reader_.emplace(SerialLineReader::open(serial.device, serial.baud));
      } catch (const TransportError& e) {
        throw SourceError(e.what());
      }
      rate_ = serial.sample_rate_hz;
      live_ = true;
      origin_ = std::chrono::steady_clock::now();
    }
  }

  bool live() const noexcept { return live_; }
  double sample_rate_hz() const noexcept { return rate_; }
  std::uint64_t decode_errors() const noexcept { return decode_errors_; }

  std::optional<RawSample> next() {
    if (!live_) {
      if (pos_ >= rec_.samples.size()) return std::nullopt;
      return rec_.samples[pos_++];
    }
    for (;;) {
      std::optional<std::string> line;
      try {
        line = reader_->next_line();
      } catch (const TransportError& e) {
        throw SourceError(e.what());
      }
      if (!line) return std::nullopt;
      try {
        const auto frame = wire::decode_frame(*line);
        if (const auto* s = std::get_if<wire::Sample>(&frame)) {
          const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - origin_);
          return RawSample{live_index_++, elapsed.count(), static_cast<std::int32_t>(s->adc)};
        }
      } catch (const wire::WireError&) {
        ++decode_errors_;
      }
    }
  }

 private:
  Recording rec_;
  std::size_t pos_ = 0;
  std::optional<SerialLineReader> reader_;
  bool live_ = false;
  double rate_ = 0.0;
  SampleIndex live_index_ = 0;
  std::uint64_t decode_errors_ = 0;
  std::chrono::steady_clock::time_point origin_;
};

class WireOut {
 public:
  WireOut(ByteSink* sink, const RunHooks& hooks) : sink_(sink), hooks_(hooks) {}
  bool active() const noexcept { return sink_ != nullptr; }

  void send(const wire::Frame& f, std::uint64_t tick) {
    if (!sink_) return;
    const std::string bytes = wire::encode_frame(f);
    sink_->write(bytes);
    if (hooks_.on_wire_write) hooks_.on_wire_write(bytes, tick);
  }

 private:
  ByteSink* sink_;
  const RunHooks& hooks_;
};

}  // namespace

void RunConfig::validate() const {
  try {
    detector.validate();
    validate_mode(mode);
    if (const auto* s = std::get_if<SynthSource>(&source)) ecg::validate(s->spec);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!log_name && (wire.empty() || wire == "off")) {
    throw ConfigError("run needs at least one output: a session log or a wire endpoint");
  }
  if (!(train_seconds >= 0.0)) throw ConfigError("train_seconds must be >= 0");
  if (train_seconds > 0.0 && calibration) throw ConfigError("use either train_seconds or a calibration file, not both");
  if (log_queue_capacity == 0) throw ConfigError("log queue capacity must be > 0");
  if (!(log_delay_s >= 0.0)) throw ConfigError("log delay must be >= 0");
}

FeedbackMode parse_feedback_mode(std::string_view text) {
  auto number = [&](std::string_view rest) {
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(rest), &used);
      if (used != rest.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad feedback mode '" + std::string(text) + "'");
    }
  };
  FeedbackMode mode;
  if (text == "sync") {
    mode = SyncMode{};
  } else if (text.starts_with("scaled:")) {
    mode = ScaledMode{number(text.substr(7))};
  } else if (text.starts_with("delayed:")) {
    mode = DelayedMode{number(text.substr(8))};
  } else {
    throw ConfigError("feedback mode must be sync, scaled:F or delayed:MS, got '" + std::string(text) + "'");
  }
  try {
    validate_mode(mode);
  } catch (const SchedulerError& e) {
    throw ConfigError(e.what());
  }
  return mode;
}

std::string RunSummary::to_json() const {
  nlohmann::ordered_json j;
  j["beats"] = beats;
  j["samples"] = samples;
  j["duration_ms"] = duration_ms;
  j["triggers_sent"] = triggers_sent;
  j["tones"] = tones;
  j["log_records"] = log_records;
  j["log_beat_flags"] = log_beat_flags;
  j["decode_errors"] = decode_errors;
  j["max_trigger_lag_ticks"] = max_trigger_lag_ticks;
  j["trained"] = trained;
  j["threshold"] = threshold;
  j["exit_code"] = static_cast<int>(exit_code);
  j["errors"] = errors;
  return j.dump();
}

RunSummary run(const RunConfig& config, const RunHooks& hooks) {
  RunSummary summary;
  auto fail = [&](ExitCode code, const std::string& what) {
    if (summary.exit_code == ExitCode::kOk) summary.exit_code = code;
    summary.errors.push_back(what);
  };

  try {
    config.validate();
  } catch (const ConfigError& e) {
    fail(ExitCode::kConfig, e.what());
    return summary;
  }

  std::optional<SampleFeed> feed;
  try {
    feed.emplace(config.source);
  } catch (const Error& e) {
    fail(ExitCode::kSource, e.what());
    return summary;
  }

  DetectorConfig dcfg = config.detector;
  if (feed->sample_rate_hz() > 0.0) dcfg.sample_rate_hz = feed->sample_rate_hz();
  std::optional<Detector> detector;
  try {
    detector.emplace(dcfg);
  } catch (const DetectorError& e) {
    fail(ExitCode::kConfig, e.what());
    return summary;
  }

  std::optional<TrainingResult> training;
  if (config.calibration) {
    try {
      Recording cal = load_recording(*config.calibration, format_from_path(*config.calibration));
      training = detector->train(cal.samples);
      detector->reset_stream();
    } catch (const RecordingError& e) {
      fail(ExitCode::kSource, std::string("calibration: ") + e.what());
      return summary;
    } catch (const DetectorError& e) {
      fail(ExitCode::kConfig, std::string("calibration: ") + e.what());
      return summary;
    }
  }

  std::unique_ptr<LogPump> log;
  if (config.log_name) {
    try {
      log = std::make_unique<LogPump>(SessionWriter::open(*config.log_name, config.log_dir),
                                      config.log_queue_capacity);
    } catch (const StorageError& e) {
      fail(ExitCode::kStorage, e.what());
      return summary;
    }
  }

  std::unique_ptr<ByteSink> owned_sink;
  ByteSink* sink = hooks.wire_override;
  if (!sink) {
    try {
      owned_sink = open_sink(config.wire);
    } catch (const TransportError& e) {
      if (log) log->finish();
      fail(ExitCode::kWire, e.what());
      return summary;
    }
    sink = owned_sink.get();
  }
  WireOut wire(sink, hooks);

  const bool blocking_log = !feed->live() && !config.pace;
  const std::int64_t epoch =
      config.start_epoch_ms.value_or(feed->live() ? now_epoch_ms() : kDefaultReplayEpochMs);
  const auto delay_records =
      static_cast<std::size_t>(std::llround(config.log_delay_s * std::max(1.0, dcfg.sample_rate_hz)));
  const std::size_t train_samples =
      static_cast<std::size_t>(std::llround(config.train_seconds * dcfg.sample_rate_hz));

  BeatScheduler scheduler(config.mode);
  std::deque<LogRecord> held;
  std::vector<RawSample> calibration_prefix;
  std::optional<double> first_ts, last_ts;
  const auto pace_origin = std::chrono::steady_clock::now();

  auto release_log = [&](bool all) {
    while (!held.empty() && (all || held.size() > delay_records)) {
      const LogRecord rec = held.front();
      held.pop_front();
      if (log && (!config.log_beats_only || rec.beat_flag)) log->submit(rec, blocking_log);
    }
  };

  auto emit_tones = [&](double now_ms, std::uint64_t tick) {
    while (auto tone = scheduler.next_due(now_ms)) {
      ++summary.tones;
      if (config.tone_sink == ToneSink::kBell) {
        std::fputc('\a', stderr);
        std::fflush(stderr);
      } else if (config.tone_sink == ToneSink::kWire) {
        wire.send(wire::Info{"tone " + std::to_string(tone->source_beat_seq) + " " +
                             std::to_string(to_wire_ms(tone->due_at_ms))},
                  tick);
      }
    }
  };

  std::uint64_t tick = 0;
  try {
    while (auto sample = feed->next()) {
      const RawSample& x = *sample;
      if (config.pace && !feed->live()) {
        std::this_thread::sleep_until(pace_origin + std::chrono::duration<double, std::milli>(x.timestamp_ms));
      }
      if (!first_ts) first_ts = x.timestamp_ms;
      last_ts = x.timestamp_ms;
      ++summary.samples;

      if (config.stream_raw) wire.send(wire::Sample{to_wire_ms(x.timestamp_ms), static_cast<std::uint64_t>(x.value)}, tick);

      const auto elapsed = static_cast<std::int64_t>(std::llround(x.timestamp_ms));
      if (log) held.push_back({epoch + elapsed, elapsed, x.index, x.value, 0});

      if (train_samples > 0 && !training) {
        calibration_prefix.push_back(x);
        if (calibration_prefix.size() == train_samples) {
          try {
            training = detector->train(calibration_prefix);
          } catch (const DetectorError& e) {
            throw ConfigError(std::string("training: ") + e.what());
          }
          calibration_prefix.clear();
          if (training->degenerate) wire.send(wire::Info{"calibration-degenerate"}, tick);
          else wire.send(wire::Info{"trained"}, tick);
        }
      } else {
        const StepOutput out = detector->process_sample(x);
        if (out.beat) {
          const BeatEvent& beat = *out.beat;
          const std::uint64_t beat_tick = tick;
          if (hooks.on_beat) hooks.on_beat(beat, beat_tick);
          wire.send(wire::Trigger{beat.seq, to_wire_ms(beat.peak_timestamp_ms)}, tick);
          if (wire.active()) {
            ++summary.triggers_sent;
            summary.max_trigger_lag_ticks = std::max(summary.max_trigger_lag_ticks, tick - beat_tick);
          }
          ++summary.beats;
          summary.beat_events.push_back(beat);
          scheduler.on_beat(beat);

          if (log && !held.empty()) {
            const SampleIndex front = held.front().sample_index;
            const std::size_t slot = beat.peak_index >= front ? beat.peak_index - front : 0;
            held[std::min(slot, held.size() - 1)].beat_flag = 1;
          }
        }
      }
      emit_tones(x.timestamp_ms, tick);
      release_log(false);
      ++tick;
    }
    release_log(true);
  } catch (const StorageError& e) {
    fail(ExitCode::kStorage, e.what());
  } catch (const TransportError& e) {
    fail(e.kind() == TransportErrorKind::kWrite ? ExitCode::kWire : ExitCode::kSource, e.what());
  } catch (const SourceError& e) {
    fail(ExitCode::kSource, e.what());
  } catch (const ConfigError& e) {
    fail(ExitCode::kConfig, e.what());
  } catch (const DetectorError& e) {
    fail(ExitCode::kSource, e.what());
  } catch (const wire::WireError& e) {
    fail(ExitCode::kWire, e.what());
  }

  if (log) {
    // Whatever is still held back is written even after a wire or source failure.
    if (summary.exit_code != ExitCode::kStorage) {
      try {
        release_log(true);
      } catch (const StorageError& e) {
        fail(ExitCode::kStorage, e.what());
      }
    }
    log->finish();
    if (log->failed()) fail(ExitCode::kStorage, log->error_message());
    summary.log_records = log->written();
    summary.log_beat_flags = log->beat_flags();
  }

  summary.decode_errors = feed->decode_errors();
  summary.trained = detector->state().trained;
  summary.threshold = detector->state().threshold;
  if (first_ts && last_ts) summary.duration_ms = std::llround(*last_ts - *first_ts);
  return summary;
}

// --- offline subcommands ---------------------------------------------------

void synth_to_file(const SyntheticEcgSpec& spec, const std::filesystem::path& out,
                   const std::optional<std::filesystem::path>& annotations_out, std::int64_t start_epoch_ms) {
  const Recording rec = generate(spec);
  const LogFormat fmt = format_from_path(out) == RecordingFormat::kTxt ? LogFormat::kTxt : LogFormat::kCsv;
  write_log_records(out, fmt, to_log_records(rec, start_epoch_ms));
  if (annotations_out) {
    std::ofstream a(*annotations_out, std::ios::binary | std::ios::trunc);
    if (!a) throw StorageError("cannot create '" + annotations_out->string() + "'", 0);
    a << "beat_index,beat_timestamp_ms\n";
    for (const auto& ann : *rec.annotations) {
      a << ann.beat_index << ',' << std::llround(ann.beat_timestamp_ms) << '\n';
    }
    if (!a.flush()) throw StorageError("write failed for '" + annotations_out->string() + "'", 0);
  }
}

std::vector<double> load_event_times(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RecordingError(RecordingErrorKind::kIo, "cannot read '" + path.string() + "'");
  std::string first;
  std::getline(in, first);
  if (!first.empty() && first.back() == '\r') first.pop_back();

  std::vector<double> times;
  for (const LogFormat f : {LogFormat::kCsv, LogFormat::kTxt}) {
    if (first == header_line(f)) {
      for (const auto& r : load_log_records(path, f)) {
        if (r.beat_flag) times.push_back(static_cast<double>(r.elapsed_ms));
      }
      return times;
    }
  }
  if (first == "beat_index,beat_timestamp_ms") {
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto comma = line.find(',');
      try {
        if (comma == std::string::npos) throw std::invalid_argument("no comma");
        times.push_back(std::stod(line.substr(comma + 1)));
      } catch (const std::exception&) {
        throw RecordingError(RecordingErrorKind::kMalformedLine,
                             path.string() + ":" + std::to_string(lineno) + ": bad annotation line", lineno);
      }
    }
    return times;
  }

  // Otherwise a wire capture: T frames carry the detection times.
  in.clear();
  in.seekg(0);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  wire::LineDecoder dec;
  auto results = dec.feed(bytes);
  for (auto& r : dec.finish()) results.push_back(std::move(r));
  for (const auto& r : results) {
    if (!r.ok()) continue;
    if (const auto* t = std::get_if<wire::Trigger>(&r.frame)) times.push_back(static_cast<double>(t->timestamp_ms));
  }
  return times;
}

ValidateReport validate_files(const std::filesystem::path& detections, const std::filesystem::path& annotations,
                              double tol_ms) {
  const auto det = load_event_times(detections);
  const auto ann = load_event_times(annotations);
  const MatchResult m = match_times(det, ann, tol_ms);
  ValidateReport r;
  r.tp = m.tp;
  r.fp = m.fp;
  r.fn = m.fn;
  r.sensitivity = m.tp + m.fn ? sensitivity(m) : 0.0;
  r.ppv = m.tp + m.fp ? ppv(m) : 0.0;
  r.text = metrics_report_text(m, tol_ms);
  r.csv = metrics_report_csv(m, tol_ms);
  return r;
}

void plot_to_file(const std::filesystem::path& log, std::size_t window, std::size_t polyorder,
                  const std::filesystem::path& out) {
  const RecordingFormat rf = format_from_path(log);
  const LogFormat lf = rf == RecordingFormat::kTxt ? LogFormat::kTxt : LogFormat::kCsv;
  const auto records = load_log_records(log, lf);
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) values.push_back(static_cast<double>(r.adc_value));
  const auto smoothed = savitzky_golay(values, window, polyorder);

  std::ofstream o(out, std::ios::binary | std::ios::trunc);
  if (!o) throw StorageError("cannot create '" + out.string() + "'", 0);
  o << "time_ms,smoothed,beat\n";
  char buf[64];
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", smoothed[i]);
    o << records[i].elapsed_ms << ',' << buf << ',' << int{records[i].beat_flag} << '\n';
  }
  if (!o.flush()) throw StorageError("write failed for '" + out.string() + "'", 0);
}

}  // namespace ecg
