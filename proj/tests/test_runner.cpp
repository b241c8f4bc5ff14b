#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "ecg/bounded_queue.hpp"
#include "ecg/runner.hpp"
#include "ecg/validation.hpp"
#include "ecg/wire.hpp"
#include "test_support.hpp"

using namespace ecg;

namespace {

class MemorySink : public ByteSink {
 public:
  void write(std::string_view bytes) override { data += bytes; }
  std::string data;
};

class FailingSink : public ByteSink {
 public:
  explicit FailingSink(std::size_t ok_writes) : left_(ok_writes) {}
  void write(std::string_view) override {
    if (left_ == 0) throw TransportError(TransportErrorKind::kWrite, "peer closed");
    --left_;
  }

 private:
  std::size_t left_;
};

std::vector<wire::Frame> frames_of(const std::string& bytes) {
  wire::LineDecoder dec;
  std::vector<wire::Frame> out;
  for (auto& r : dec.feed(bytes)) {
    REQUIRE(r.ok());
    out.push_back(r.frame);
  }
  return out;
}

template <typename T>
std::size_t count_of(const std::vector<wire::Frame>& frames) {
  return std::count_if(frames.begin(), frames.end(), [](const auto& f) { return std::holds_alternative<T>(f); });
}

int sh(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string tool() { return ECGTRIG_PATH; }

RunConfig synth_run(double hr, double dur, std::uint64_t seed = 1) {
  RunConfig cfg;
  cfg.source = SynthSource{testing::clean_spec(hr, dur, seed)};
  return cfg;
}

}  // namespace

TEST_CASE("replaying a clean minute sends 70 +- 1 triggers") {
  MemorySink sink;
  RunHooks hooks;
  hooks.wire_override = &sink;
  const auto s = run(synth_run(70, 60), hooks);
  REQUIRE(s.exit_code == ExitCode::kOk);
  const auto frames = frames_of(sink.data);
  const auto triggers = count_of<wire::Trigger>(frames);
  CHECK(std::abs(double(triggers) - 70.0) <= 1.0);
  CHECK(triggers == s.beats);
  CHECK(s.triggers_sent == s.beats);
  CHECK(s.samples == 15000);
  CHECK(s.duration_ms == 59996);
  for (std::size_t i = 0, seq = 0; i < frames.size(); ++i) {
    if (const auto* t = std::get_if<wire::Trigger>(&frames[i])) CHECK(t->seq == seq++);
  }
}

TEST_CASE("beat count agrees across summary, wire and log") {
  testing::TempDir dir;
  synth_to_file(testing::clean_spec(70, 20, 2), dir / "cal.csv", std::nullopt);
  MemorySink sink;
  RunHooks hooks;
  hooks.wire_override = &sink;
  auto cfg = synth_run(85, 45, 3);
  std::get<SynthSource>(cfg.source).spec.noise_std = 10;
  cfg.calibration = dir / "cal.csv";
  cfg.log_name = SessionFileName::parse("S01.csv");
  cfg.log_dir = dir.path();
  const auto s = run(cfg, hooks);
  REQUIRE(s.exit_code == ExitCode::kOk);
  CHECK(s.trained);

  const auto records = load_log_records(dir / "S01.CSV", LogFormat::kCsv);
  std::vector<SampleIndex> flagged;
  for (const auto& r : records) {
    if (r.beat_flag) flagged.push_back(r.sample_index);
  }
  std::vector<SampleIndex> peaks;
  for (const auto& b : s.beat_events) peaks.push_back(b.peak_index);
  CHECK(records.size() == s.samples);
  CHECK(s.log_records == s.samples);
  CHECK(flagged == peaks);
  CHECK(s.log_beat_flags == s.beats);
  CHECK(count_of<wire::Trigger>(frames_of(sink.data)) == s.beats);
  CHECK(records.front().wall_epoch_ms == kDefaultReplayEpochMs);
}

TEST_CASE("run then validate against generator annotations") {
  testing::TempDir dir;
  const auto spec = testing::clean_spec(70, 60);
  synth_to_file(spec, dir / "rec.csv", dir / "ann.csv");
  auto cal = spec;
  cal.seed = 77;
  cal.duration_s = 20;
  synth_to_file(cal, dir / "cal.csv", std::nullopt);

  RunConfig cfg;
  cfg.source = FileSource{dir / "rec.csv", std::nullopt, std::nullopt};
  cfg.calibration = dir / "cal.csv";
  cfg.log_name = SessionFileName::parse("P01.csv");
  cfg.log_dir = dir.path();
  cfg.wire = "file:" + (dir / "wire.txt").string();
  const auto s = run(cfg);
  REQUIRE(s.exit_code == ExitCode::kOk);
  CHECK(s.beats == 70);

  for (const char* det : {"P01.CSV", "wire.txt"}) {
    const auto r = validate_files(dir / det, dir / "ann.csv", 75.0);
    CHECK(r.sensitivity == 1.0);
    CHECK(r.ppv == 1.0);
    const auto strict = validate_files(dir / det, dir / "ann.csv", 0.001);
    CHECK(strict.sensitivity <= r.sensitivity);
  }
  // The generator's own file carries the true beats as flags.
  CHECK(load_event_times(dir / "rec.csv") == load_event_times(dir / "ann.csv"));
}

TEST_CASE("replay is deterministic") {
  testing::TempDir a, b;
  auto once = [](const testing::TempDir& dir, std::string& wire_bytes) {
    MemorySink sink;
    RunHooks hooks;
    hooks.wire_override = &sink;
    auto cfg = synth_run(95, 30, 8);
    auto& spec = std::get<SynthSource>(cfg.source).spec;
    spec.noise_std = 15;
    spec.baseline_wander_amp = 20;
    cfg.train_seconds = 5;
    cfg.stream_raw = true;
    cfg.tone_sink = ToneSink::kWire;
    cfg.mode = ScaledMode{0.8};
    cfg.log_name = SessionFileName::parse("D.txt");
    cfg.log_dir = dir.path();
    const auto s = run(cfg, hooks);
    wire_bytes = sink.data;
    return s.to_json();
  };
  std::string wa, wb;
  const auto sa = once(a, wa);
  const auto sb = once(b, wb);
  CHECK(sa == sb);
  CHECK(wa == wb);
  CHECK(testing::read_file(a / "D.TXT") == testing::read_file(b / "D.TXT"));
  CHECK_FALSE(wa.empty());
}

TEST_CASE("trigger bytes leave in the tick of detection") {
  MemorySink sink;
  RunHooks hooks;
  hooks.wire_override = &sink;
  std::vector<std::uint64_t> beat_ticks, trigger_ticks;
  hooks.on_beat = [&](const BeatEvent&, std::uint64_t tick) { beat_ticks.push_back(tick); };
  hooks.on_wire_write = [&](std::string_view bytes, std::uint64_t tick) {
    if (bytes.starts_with("T,")) trigger_ticks.push_back(tick);
  };
  const auto s = run(synth_run(120, 30), hooks);
  REQUIRE(s.exit_code == ExitCode::kOk);
  REQUIRE_FALSE(beat_ticks.empty());
  CHECK(beat_ticks == trigger_ticks);
  CHECK(s.max_trigger_lag_ticks == 0);
}

TEST_CASE("train_seconds announces training on the wire") {
  MemorySink sink;
  RunHooks hooks;
  hooks.wire_override = &sink;
  auto cfg = synth_run(70, 30);
  cfg.train_seconds = 4;
  const auto s = run(cfg, hooks);
  REQUIRE(s.exit_code == ExitCode::kOk);
  const auto frames = frames_of(sink.data);
  REQUIRE_FALSE(frames.empty());
  CHECK(frames.front() == wire::Frame{wire::Info{"trained"}});
  CHECK(s.trained);
  // Peaks are reported up to one group delay before the sample that closed them.
  CHECK(s.beat_events.front().peak_timestamp_ms >= 4000.0 - 4.0 * double(DetectorConfig{}.group_delay()));
}

TEST_CASE("optional wire content: raw samples and tones") {
  MemorySink sink;
  RunHooks hooks;
  hooks.wire_override = &sink;
  auto cfg = synth_run(70, 20);
  cfg.stream_raw = true;
  cfg.tone_sink = ToneSink::kWire;
  cfg.mode = DelayedMode{250};
  const auto s = run(cfg, hooks);
  const auto frames = frames_of(sink.data);
  CHECK(count_of<wire::Sample>(frames) == s.samples);
  CHECK(count_of<wire::Info>(frames) == s.tones);
  CHECK(s.tones >= s.beats - 1);
}

TEST_CASE("beats-only logging") {
  testing::TempDir dir;
  auto cfg = synth_run(70, 20);
  cfg.wire = "off";
  cfg.log_name = SessionFileName::parse("B.csv");
  cfg.log_dir = dir.path();
  cfg.log_beats_only = true;
  const auto s = run(cfg);
  REQUIRE(s.exit_code == ExitCode::kOk);
  const auto records = load_log_records(dir / "B.CSV", LogFormat::kCsv);
  CHECK(records.size() == s.beats);
  for (const auto& r : records) CHECK(r.beat_flag == 1);
}

TEST_CASE("error exits") {
  testing::TempDir dir;
  {
    auto cfg = synth_run(70, 5);
    cfg.wire = "off";
    CHECK(run(cfg).exit_code == ExitCode::kConfig);
  }
  {
    auto cfg = synth_run(70, 5);
    cfg.mode = ScaledMode{0.0};
    CHECK(run(cfg).exit_code == ExitCode::kConfig);
  }
  {
    RunConfig cfg;
    cfg.source = FileSource{dir / "nope.csv", std::nullopt, std::nullopt};
    const auto s = run(cfg);
    CHECK(s.exit_code == ExitCode::kSource);
    CHECK_FALSE(s.errors.empty());
  }
  {
    testing::write_file(dir / "file", "x");
    auto cfg = synth_run(70, 5);
    cfg.log_name = SessionFileName::parse("P01.csv");
    cfg.log_dir = dir / "file";
    MemorySink sink;
    RunHooks hooks;
    hooks.wire_override = &sink;
    CHECK(run(cfg, hooks).exit_code == ExitCode::kStorage);
    CHECK(sink.data.empty());
  }
  {
    auto cfg = synth_run(70, 5);
    cfg.wire = "file:" + (dir / "no/such/dir/w.txt").string();
    CHECK(run(cfg).exit_code == ExitCode::kWire);
  }
  {
    auto cfg = synth_run(70, 5);
    cfg.wire = "carrier-pigeon";
    CHECK(run(cfg).exit_code == ExitCode::kWire);
  }
}

TEST_CASE("wire failure still leaves a flushed, parseable log") {
  testing::TempDir dir;
  FailingSink sink(5);
  RunHooks hooks;
  hooks.wire_override = &sink;
  auto cfg = synth_run(70, 30);
  cfg.log_name = SessionFileName::parse("W.csv");
  cfg.log_dir = dir.path();
  const auto s = run(cfg, hooks);
  CHECK(s.exit_code == ExitCode::kWire);
  const auto records = load_log_records(dir / "W.CSV", LogFormat::kCsv);
  CHECK(records.size() == s.samples);
  CHECK(s.samples < 7500);
  CHECK(s.log_records == records.size());
}

TEST_CASE("serial source parses S frames and counts bad lines") {
  testing::TempDir dir;
  const auto rec = generate(testing::clean_spec(70, 20));
  std::string bytes = "garbage\n";
  for (const auto& x : rec.samples) {
    bytes += wire::encode_frame(wire::Sample{static_cast<std::uint64_t>(x.timestamp_ms),
                                             static_cast<std::uint64_t>(x.value)});
    if (x.index == 1000) bytes += "S,1,\n";
  }
  testing::write_file(dir / "dev", bytes);
  MemorySink sink;
  RunHooks hooks;
  hooks.wire_override = &sink;
  RunConfig cfg;
  cfg.source = SerialSource{(dir / "dev").string(), kDefaultBaud, 250.0};
  const auto s = run(cfg, hooks);
  CHECK(s.exit_code == ExitCode::kOk);
  CHECK(s.samples == rec.samples.size());
  CHECK(s.decode_errors == 2);

  cfg.source = SerialSource{(dir / "absent").string(), kDefaultBaud, 250.0};
  CHECK(run(cfg, hooks).exit_code == ExitCode::kSource);
}

TEST_CASE("feedback mode parsing") {
  CHECK(parse_feedback_mode("sync") == FeedbackMode{SyncMode{}});
  CHECK(parse_feedback_mode("scaled:0.8") == FeedbackMode{ScaledMode{0.8}});
  CHECK(parse_feedback_mode("delayed:250") == FeedbackMode{DelayedMode{250}});
  CHECK_THROWS_AS(parse_feedback_mode("scaled:0"), ConfigError);
  CHECK_THROWS_AS(parse_feedback_mode("scaled:x"), ConfigError);
  CHECK_THROWS_AS(parse_feedback_mode("delayed:-1"), ConfigError);
  CHECK_THROWS_AS(parse_feedback_mode("faster"), ConfigError);
}

TEST_CASE("bounded queue rejects when full and drains after close") {
  BoundedQueue<int> q(2);
  CHECK(q.try_push(1));
  CHECK(q.try_push(2));
  CHECK_FALSE(q.try_push(3));
  q.close();
  CHECK(q.pop() == 1);
  CHECK(q.pop() == 2);
  CHECK_FALSE(q.pop());
  CHECK_FALSE(q.try_push(4));
}

TEST_CASE("plot output") {
  testing::TempDir dir;
  std::vector<LogRecord> flat;
  for (std::uint64_t i = 0; i < 100; ++i) flat.push_back({0, std::int64_t(i) * 4, i, 512, std::uint8_t(i == 40)});
  write_log_records(dir / "F.csv", LogFormat::kCsv, flat);
  plot_to_file(dir / "F.csv", 15, 3, dir / "plot.csv");
  std::istringstream in(testing::read_file(dir / "plot.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "time_ms,smoothed,beat");
  std::size_t rows = 0, beats = 0;
  while (std::getline(in, line)) {
    CHECK(line.find(",512.000000,") != std::string::npos);
    beats += line.ends_with(",1");
    ++rows;
  }
  CHECK(rows == 100);
  CHECK(beats == 1);
}

TEST_CASE("command line tool") {
  testing::TempDir dir;
  const std::string t = tool();
  const std::string d = dir.path().string();

  SUBCASE("synth is byte-for-byte repeatable") {
    REQUIRE(sh(t + " synth --out " + d + "/a.csv --seed 4 --noise 10 --duration 20") == 0);
    REQUIRE(sh(t + " synth --out " + d + "/b.csv --seed 4 --noise 10 --duration 20") == 0);
    CHECK(testing::read_file(dir / "a.csv") == testing::read_file(dir / "b.csv"));
    CHECK_FALSE(testing::read_file(dir / "a.csv").empty());
  }
  SUBCASE("run, validate and plot") {
    REQUIRE(sh(t + " synth --out " + d + "/rec.csv --annotations " + d + "/ann.csv") == 0);
    REQUIRE(sh(t + " synth --out " + d + "/cal.csv --seed 9 --duration 20") == 0);
    REQUIRE(sh(t + " run --input " + d + "/rec.csv --calibration " + d + "/cal.csv --log P01.csv --log-dir " + d +
               " --wire file:" + d + "/w.txt --summary " + d + "/s.json") == 0);
    REQUIRE(sh(t + " validate --detections " + d + "/P01.CSV --annotations " + d + "/ann.csv --csv " + d +
               "/m.csv") == 0);
    CHECK(testing::read_file(dir / "m.csv").find("sensitivity,1.000000\n") != std::string::npos);
    CHECK(testing::read_file(dir / "s.json").find("\"beats\":70") != std::string::npos);
    REQUIRE(sh(t + " plot --log " + d + "/P01.CSV --out " + d + "/p.csv") == 0);
    CHECK(testing::read_file(dir / "p.csv").starts_with("time_ms,smoothed,beat\n"));
  }
  SUBCASE("config file with flag precedence") {
    testing::write_file(dir / "cfg.ini", "[synth]\nduration = 12\nhr = 60\nseed = 3\n");
    REQUIRE(sh(t + " --config " + d + "/cfg.ini synth --out " + d + "/c.csv") == 0);
    CHECK(load_recording(dir / "c.csv", RecordingFormat::kCsv).samples.size() == 3000);
    REQUIRE(sh(t + " --config " + d + "/cfg.ini synth --duration 8 --out " + d + "/c2.csv") == 0);
    CHECK(load_recording(dir / "c2.csv", RecordingFormat::kCsv).samples.size() == 2000);
  }
  SUBCASE("exit codes") {
    CHECK(sh(t + " run --mode sideways") == 2);
    CHECK(sh(t + " run --wire off") == 2);
    CHECK(sh(t + " run --log participant01.csv") == 2);
    CHECK(sh(t + " run --input " + d + "/missing.csv") == 3);
    testing::write_file(dir / "plain", "x");
    CHECK(sh(t + " run --duration 5 --log P.csv --log-dir " + d + "/plain") == 4);
    CHECK(sh(t + " run --duration 5 --wire file:" + d + "/none/w.txt") == 5);
    CHECK(sh(t + " run --duration 5 --wire stdout") == 0);
    CHECK(sh(t + " bogus") == 2);
  }
}
