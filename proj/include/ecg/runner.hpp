#pragma once

// Host-side pipeline: ingest -> detector -> scheduler -> wire / session log,
// plus the offline subcommands behind the ecgtrig tool.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ecg/detector.hpp"
#include "ecg/error.hpp"
#include "ecg/recording.hpp"
#include "ecg/scheduler.hpp"
#include "ecg/session_log.hpp"
#include "ecg/synth.hpp"
#include "ecg/transport.hpp"

namespace ecg {

enum class ExitCode : int { kOk = 0, kConfig = 2, kSource = 3, kStorage = 4, kWire = 5 };

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct FileSource {
  std::filesystem::path path;
  std::optional<RecordingFormat> format;  // from the extension when unset
  std::optional<double> sample_rate_hz;   // required for raw files
};

struct SerialSource {
  std::string device;
  int baud = kDefaultBaud;
  double sample_rate_hz = 250.0;
};

struct SynthSource {
  SyntheticEcgSpec spec;
};

using SourceSpec = std::variant<FileSource, SerialSource, SynthSource>;

enum class ToneSink { kNone, kBell, kWire };

/// 2024-01-01T00:00:00Z; wall clock origin of replayed sessions.
inline constexpr std::int64_t kDefaultReplayEpochMs = 1704067200000;

struct RunConfig {
  SourceSpec source = SynthSource{};
  DetectorConfig detector;
  FeedbackMode mode = SyncMode{};
  ToneSink tone_sink = ToneSink::kNone;

  std::optional<SessionFileName> log_name;
  std::filesystem::path log_dir = ".";
  bool log_beats_only = false;

  std::string wire = "stdout";  // off | stdout | file:P | serial:D[@B] | tcp:H:P
  bool stream_raw = false;

  double train_seconds = 0.0;  // leading part of the source used for training
  std::optional<std::filesystem::path> calibration;  // or a separate recording

  bool pace = false;  // replay at recorded speed instead of as fast as possible
  std::optional<std::int64_t> start_epoch_ms;  // default: replay epoch, or now when live
  std::size_t log_queue_capacity = 65536;
  double log_delay_s = 2.0;  // records held back so beat flags land on the peak sample

  /// Throws ConfigError.
  void validate() const;
};

struct RunSummary {
  std::uint64_t beats = 0;
  std::uint64_t samples = 0;
  std::int64_t duration_ms = 0;
  std::uint64_t triggers_sent = 0;
  std::uint64_t tones = 0;
  std::uint64_t log_records = 0;
  std::uint64_t log_beat_flags = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t max_trigger_lag_ticks = 0;
  bool trained = false;
  double threshold = 0.0;
  ExitCode exit_code = ExitCode::kOk;
  std::vector<std::string> errors;
  std::vector<BeatEvent> beat_events;

  /// Deterministic JSON (no wall-clock fields, beat list omitted).
  std::string to_json() const;
};

struct RunHooks {
  /// Tick = ingest loop iteration, starting at 0.
  std::function<void(const BeatEvent&, std::uint64_t tick)> on_beat;
  std::function<void(std::string_view bytes, std::uint64_t tick)> on_wire_write;
  ByteSink* wire_override = nullptr;  // replaces the configured endpoint
};

/// Never throws for operational failures; they are reported through
/// exit_code and errors, with the session log flushed.
RunSummary run(const RunConfig& config, const RunHooks& hooks = {});

/// "sync", "scaled:F" or "delayed:MS".
FeedbackMode parse_feedback_mode(std::string_view text);

// --- offline subcommands ---------------------------------------------------

/// Writes the synthetic recording in session-logger layout (beat = true
/// R-peak) and, if requested, a beat_index,beat_timestamp_ms annotation file.
void synth_to_file(const SyntheticEcgSpec& spec, const std::filesystem::path& out,
                   const std::optional<std::filesystem::path>& annotations_out,
                   std::int64_t start_epoch_ms = kDefaultReplayEpochMs);

/// Detection or annotation times (ms) from a logger file's beat flags, a
/// wire capture's T frames, or an annotation CSV; detected from content.
std::vector<double> load_event_times(const std::filesystem::path& path);

struct ValidateReport {
  std::string text;
  std::string csv;
  double sensitivity = 0.0;
  double ppv = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

ValidateReport validate_files(const std::filesystem::path& detections,
                              const std::filesystem::path& annotations, double tol_ms);

/// time_ms,smoothed,beat rows for every sample of a logger file.
void plot_to_file(const std::filesystem::path& log, std::size_t window, std::size_t polyorder,
                  const std::filesystem::path& out);

}  // namespace ecg
