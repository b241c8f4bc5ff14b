#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ecg/detector.hpp"
#include "ecg/synth.hpp"
#include "ecg/types.hpp"

namespace testing {

inline std::vector<ecg::RawSample> samples_from(const std::vector<int>& values, double rate_hz = 250.0) {
  std::vector<ecg::RawSample> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({i, static_cast<double>(i) * 1000.0 / rate_hz, values[i]});
  }
  return out;
}

inline ecg::SyntheticEcgSpec clean_spec(double hr_bpm, double duration_s, std::uint64_t seed = 1) {
  ecg::SyntheticEcgSpec spec;
  spec.mean_hr_bpm = hr_bpm;
  spec.duration_s = duration_s;
  spec.seed = seed;
  return spec;
}

/// Trains on a second recording of the same kind and returns a detector
/// positioned at the start of a fresh stream.
inline ecg::Detector trained_detector(const ecg::SyntheticEcgSpec& like, ecg::DetectorConfig cfg = {}) {
  ecg::SyntheticEcgSpec cal = like;
  cal.seed = like.seed + 1000;
  cal.duration_s = 20.0;
  cal.burst_artifacts.clear();
  ecg::Detector det(cfg);
  det.train(ecg::generate(cal).samples);
  det.reset_stream();
  return det;
}

inline std::vector<ecg::BeatEvent> detect_all(ecg::Detector& det, const std::vector<ecg::RawSample>& samples) {
  std::vector<ecg::BeatEvent> beats;
  for (const auto& x : samples) {
    if (auto b = det.process_sample(x).beat) beats.push_back(*b);
  }
  return beats;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ecgtest-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
