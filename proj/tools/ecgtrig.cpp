// ecgtrig: run the detector on a live device, a recording or a synthetic
// signal, and the offline synth / validate / plot helpers.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ecg/runner.hpp"
#include "ecg/savgol.hpp"
#include "ecg/validation.hpp"

namespace {

using ecg::ExitCode;

int code(ExitCode c) { return static_cast<int>(c); }

void add_synth_options(CLI::App& app, ecg::SyntheticEcgSpec& spec, std::vector<std::string>& bursts) {
  app.add_option("--duration", spec.duration_s, "Length in seconds")->capture_default_str();
  app.add_option("--hr", spec.mean_hr_bpm, "Mean heart rate, bpm")->capture_default_str();
  app.add_option("--jitter", spec.hr_jitter_pct, "Per-beat IBI jitter fraction")->capture_default_str();
  app.add_option("--noise", spec.noise_std, "Gaussian noise std, ADC units")->capture_default_str();
  app.add_option("--wander", spec.baseline_wander_amp, "Baseline wander amplitude, ADC units")
      ->capture_default_str();
  app.add_option("--wander-hz", spec.baseline_wander_hz, "Baseline wander frequency")->capture_default_str();
  app.add_option("--burst", bursts, "Burst artifact START_S:DURATION_S:AMPLITUDE (repeatable)");
  app.add_option("--seed", spec.seed, "RNG seed")->capture_default_str();
  app.add_option("--synth-rate", spec.sample_rate_hz, "Synthetic sample rate, Hz")->capture_default_str();
}

std::vector<ecg::BurstArtifact> parse_bursts(const std::vector<std::string>& raw) {
  std::vector<ecg::BurstArtifact> out;
  for (const auto& b : raw) {
    ecg::BurstArtifact a;
    char tail = 0;
    if (std::sscanf(b.c_str(), "%lf:%lf:%lf%c", &a.start_s, &a.duration_s, &a.amplitude, &tail) != 3) {
      throw ecg::ConfigError("bad --burst '" + b + "', expected START:DURATION:AMPLITUDE");
    }
    out.push_back(a);
  }
  return out;
}

std::optional<ecg::RecordingFormat> parse_format(const std::string& f) {
  if (f.empty()) return std::nullopt;
  if (f == "csv") return ecg::RecordingFormat::kCsv;
  if (f == "txt") return ecg::RecordingFormat::kTxt;
  if (f == "raw") return ecg::RecordingFormat::kRaw;
  throw ecg::ConfigError("--format must be csv, txt or raw");
}

}  // namespace

int main(int argc, char** argv) {
  // A closed stdout pipe must surface as a wire error, not kill the process.
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"ECG R-peak detection with trigger output"};
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.require_subcommand(1);

  // run
  ecg::RunConfig rc;
  ecg::SyntheticEcgSpec run_synth;
  std::vector<std::string> run_bursts;
  std::string input, serial, format, mode = "sync", tone = "none", log_name, summary_path, calibration;
  std::optional<double> rate;
  double serial_rate = 250.0;
  int baud = ecg::kDefaultBaud;
  std::optional<std::int64_t> start_epoch;
  auto* run = app.add_subcommand("run", "Stream samples through the detector");
  run->add_option("--input", input, "Recording to replay (csv, txt or raw)");
  run->add_option("--format", format, "Recording format when the extension is ambiguous");
  run->add_option("--rate", rate, "Sample rate of a raw recording, Hz");
  run->add_option("--serial", serial, "Serial device sending S frames");
  run->add_option("--baud", baud, "Serial baud rate")->capture_default_str();
  run->add_option("--serial-rate", serial_rate, "Nominal device sample rate, Hz")->capture_default_str();
  add_synth_options(*run, run_synth, run_bursts);
  run->add_option("--hp-length", rc.detector.hp_length, "High-pass window M")->capture_default_str();
  run->add_option("--lp-length", rc.detector.lp_length, "Envelope window N")->capture_default_str();
  run->add_option("--win-size", rc.detector.win_size, "Threshold window, samples")->capture_default_str();
  run->add_option("--alpha", rc.detector.alpha, "Threshold forgetting factor")->capture_default_str();
  run->add_option("--gamma", rc.detector.gamma, "Threshold weight")->capture_default_str();
  run->add_option("--refractory-ms", rc.detector.refractory_ms, "Refractory period")->capture_default_str();
  run->add_option("--adc-max", rc.detector.adc_max, "Largest valid sample value")->capture_default_str();
  run->add_option("--mode", mode, "Feedback mode: sync, scaled:F or delayed:MS")->capture_default_str();
  run->add_option("--tone", tone, "Tone output: none, bell or wire")->capture_default_str();
  run->add_option("--log", log_name, "Session log file name (8.3, .csv or .txt)");
  run->add_option("--log-dir", rc.log_dir, "Directory for the session log")->capture_default_str();
  run->add_flag("--log-beats-only", rc.log_beats_only, "Only log beat samples");
  run->add_option("--wire", rc.wire, "Trigger endpoint: off, stdout, file:P, serial:D[@B], tcp:H:P")
      ->capture_default_str();
  run->add_flag("--stream-raw", rc.stream_raw, "Also send every sample as an S frame");
  run->add_option("--train-seconds", rc.train_seconds, "Train the threshold on the first seconds")
      ->capture_default_str();
  run->add_option("--calibration", calibration, "Train the threshold on a separate recording");
  run->add_flag("--pace", rc.pace, "Replay at recorded speed");
  run->add_option("--start-epoch-ms", start_epoch, "Wall clock origin for log datetimes");
  run->add_option("--summary", summary_path, "Write the JSON summary here instead of stderr");

  // synth
  ecg::SyntheticEcgSpec synth_spec;
  std::vector<std::string> synth_bursts;
  std::string synth_out, synth_ann;
  std::int64_t synth_epoch = ecg::kDefaultReplayEpochMs;
  auto* synth = app.add_subcommand("synth", "Write an annotated synthetic recording");
  synth->add_option("--out", synth_out, "Output recording (.csv or .txt)")->required();
  synth->add_option("--annotations", synth_ann, "Also write beat_index,beat_timestamp_ms annotations");
  synth->add_option("--start-epoch-ms", synth_epoch, "Wall clock origin for datetimes")->capture_default_str();
  add_synth_options(*synth, synth_spec, synth_bursts);

  // validate
  std::string val_det, val_ann, val_csv;
  double tol = ecg::kDefaultMatchToleranceMs;
  auto* validate = app.add_subcommand("validate", "Score detections against annotations");
  validate->add_option("--detections", val_det, "Session log or wire capture")->required();
  validate->add_option("--annotations", val_ann, "Annotation CSV or annotated log")->required();
  validate->add_option("--tol", tol, "Match tolerance, ms")->capture_default_str();
  validate->add_option("--csv", val_csv, "Also write the CSV report here");

  // plot
  std::string plot_log, plot_out;
  std::size_t window = 15, polyorder = 3;
  auto* plot = app.add_subcommand("plot", "Smooth a session log for plotting");
  plot->add_option("--log", plot_log, "Session log")->required();
  plot->add_option("--window", window, "Savitzky-Golay window (odd)")->capture_default_str();
  plot->add_option("--polyorder", polyorder, "Savitzky-Golay polynomial order")->capture_default_str();
  plot->add_option("--out", plot_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_parse = app.exit(e);
    return rc_parse == 0 ? 0 : code(ExitCode::kConfig);
  }

  try {
    if (*run) {
      if (!input.empty() && !serial.empty()) throw ecg::ConfigError("--input and --serial are exclusive");
      if (!input.empty()) {
        rc.source = ecg::FileSource{input, parse_format(format), rate};
      } else if (!serial.empty()) {
        rc.source = ecg::SerialSource{serial, baud, serial_rate};
      } else {
        run_synth.burst_artifacts = parse_bursts(run_bursts);
        rc.source = ecg::SynthSource{run_synth};
      }
      rc.mode = ecg::parse_feedback_mode(mode);
      if (tone == "none") rc.tone_sink = ecg::ToneSink::kNone;
      else if (tone == "bell") rc.tone_sink = ecg::ToneSink::kBell;
      else if (tone == "wire") rc.tone_sink = ecg::ToneSink::kWire;
      else throw ecg::ConfigError("--tone must be none, bell or wire");
      if (!log_name.empty()) {
        try {
          rc.log_name = ecg::SessionFileName::parse(log_name);
        } catch (const ecg::Error& e) {
          throw ecg::ConfigError(e.what());
        }
      }
      if (!calibration.empty()) rc.calibration = calibration;
      rc.start_epoch_ms = start_epoch;

      const ecg::RunSummary s = ecg::run(rc);
      for (const auto& e : s.errors) std::cerr << "ecgtrig: " << e << '\n';
      if (summary_path.empty()) {
        std::cerr << s.to_json() << '\n';
      } else {
        std::ofstream(summary_path, std::ios::binary | std::ios::trunc) << s.to_json() << '\n';
      }
      return code(s.exit_code);
    }
    if (*synth) {
      synth_spec.burst_artifacts = parse_bursts(synth_bursts);
      ecg::validate(synth_spec);
      ecg::synth_to_file(synth_spec, synth_out,
                         synth_ann.empty() ? std::nullopt : std::optional<std::filesystem::path>(synth_ann),
                         synth_epoch);
      return 0;
    }
    if (*validate) {
      const auto r = ecg::validate_files(val_det, val_ann, tol);
      std::cout << r.text;
      if (!val_csv.empty()) std::ofstream(val_csv, std::ios::binary | std::ios::trunc) << r.csv;
      return 0;
    }
    if (*plot) {
      ecg::plot_to_file(plot_log, window, polyorder, plot_out);
      return 0;
    }
  } catch (const ecg::ConfigError& e) {
    std::cerr << "ecgtrig: " << e.what() << '\n';
    return code(ExitCode::kConfig);
  } catch (const ecg::StorageError& e) {
    std::cerr << "ecgtrig: " << e.what() << '\n';
    return code(ExitCode::kStorage);
  } catch (const ecg::RecordingError& e) {
    std::cerr << "ecgtrig: " << e.what() << '\n';
    return code(e.kind() == ecg::RecordingErrorKind::kIo ? ExitCode::kSource : ExitCode::kConfig);
  } catch (const ecg::Error& e) {
    std::cerr << "ecgtrig: " << e.what() << '\n';
    return code(ExitCode::kConfig);
  }
  return 0;
}
