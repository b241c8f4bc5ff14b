#include "ecg/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

namespace ecg {
namespace {

void require_sorted(std::span<const double> v, const char* what) {
  if (!std::is_sorted(v.begin(), v.end())) {
    throw ValidationError(ValidationErrorKind::kUnsorted, std::string(what) + " are not sorted by time");
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

MatchResult match_times(std::span<const double> det, std::span<const double> ann, double tol_ms) {
  if (!(tol_ms > 0.0)) throw ValidationError(ValidationErrorKind::kBadTolerance, "tolerance must be > 0 ms");
  require_sorted(det, "detections");
  require_sorted(ann, "annotations");

  MatchResult m;
  std::vector<bool> used(det.size(), false);
  std::size_t lo = 0;  // first detection not earlier than a - tol
  for (std::size_t a = 0; a < ann.size(); ++a) {
    while (lo < det.size() && det[lo] < ann[a] - tol_ms) ++lo;
    std::optional<std::size_t> best;
    for (std::size_t d = lo; d < det.size() && det[d] <= ann[a] + tol_ms; ++d) {
      if (used[d]) continue;
      if (!best || std::fabs(det[d] - ann[a]) < std::fabs(det[*best] - ann[a])) best = d;
    }
    if (best) {
      used[*best] = true;
      m.matched_pairs.push_back({a, *best, ann[a], det[*best], det[*best] - ann[a]});
    }
  }
  m.tp = m.matched_pairs.size();
  m.fp = det.size() - m.tp;
  m.fn = ann.size() - m.tp;
  return m;
}

MatchResult match_beats(std::span<const BeatEvent> detections, std::span<const Annotation> annotations,
                        double tol_ms) {
  std::vector<double> det, ann;
  det.reserve(detections.size());
  ann.reserve(annotations.size());
  for (const auto& b : detections) det.push_back(b.peak_timestamp_ms);
  for (const auto& a : annotations) ann.push_back(a.beat_timestamp_ms);
  return match_times(det, ann, tol_ms);
}

double sensitivity(const MatchResult& m) {
  if (m.tp + m.fn == 0) throw ValidationError(ValidationErrorKind::kUndefinedMetric, "sensitivity undefined: no annotations");
  return static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
}

double ppv(const MatchResult& m) {
  if (m.tp + m.fp == 0) throw ValidationError(ValidationErrorKind::kUndefinedMetric, "PPV undefined: no detections");
  return static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
}

Metrics metrics(const MatchResult& m) { return {sensitivity(m), ppv(m)}; }

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

LatencyStats latency_stats(const MatchResult& m) {
  if (m.matched_pairs.empty()) throw ValidationError(ValidationErrorKind::kNoMatches, "latency statistics need at least one matched pair");
  std::vector<double> signed_d, abs_d;
  for (const auto& p : m.matched_pairs) {
    signed_d.push_back(p.delta_ms);
    abs_d.push_back(std::fabs(p.delta_ms));
  }
  std::sort(signed_d.begin(), signed_d.end());
  std::sort(abs_d.begin(), abs_d.end());
  LatencyStats s;
  s.pairs = m.matched_pairs.size();
  s.median_ms = percentile_sorted(signed_d, 0.5);
  s.median_abs_ms = percentile_sorted(abs_d, 0.5);
  s.p95_abs_ms = percentile_sorted(abs_d, 0.95);
  s.max_abs_ms = abs_d.back();
  return s;
}

std::string metrics_report_csv(const MatchResult& m, double tol_ms) {
  std::string out = "metric,value\n";
  auto row = [&](const char* k, const std::string& v) { out += std::string(k) + "," + v + "\n"; };
  row("tolerance_ms", fmt(tol_ms));
  row("tp", std::to_string(m.tp));
  row("fp", std::to_string(m.fp));
  row("fn", std::to_string(m.fn));
  row("sensitivity", m.tp + m.fn ? fmt(sensitivity(m)) : "undefined");
  row("ppv", m.tp + m.fp ? fmt(ppv(m)) : "undefined");
  if (!m.matched_pairs.empty()) {
    const auto l = latency_stats(m);
    row("latency_median_ms", fmt(l.median_ms));
    row("latency_median_abs_ms", fmt(l.median_abs_ms));
    row("latency_p95_abs_ms", fmt(l.p95_abs_ms));
    row("latency_max_abs_ms", fmt(l.max_abs_ms));
  }
  return out;
}

std::string metrics_report_text(const MatchResult& m, double tol_ms) {
  std::string out;
  out += "tolerance         " + fmt(tol_ms) + " ms\n";
  out += "true positives    " + std::to_string(m.tp) + "\n";
  out += "false positives   " + std::to_string(m.fp) + "\n";
  out += "false negatives   " + std::to_string(m.fn) + "\n";
  out += "sensitivity       " + (m.tp + m.fn ? fmt(sensitivity(m)) : std::string("undefined")) + "\n";
  out += "PPV (specificity) " + (m.tp + m.fp ? fmt(ppv(m)) : std::string("undefined")) + "\n";
  if (!m.matched_pairs.empty()) {
    const auto l = latency_stats(m);
    out += "latency median    " + fmt(l.median_ms) + " ms (|.| " + fmt(l.median_abs_ms) + ", p95 " +
           fmt(l.p95_abs_ms) + ", max " + fmt(l.max_abs_ms) + ")\n";
  }
  return out;
}

}  // namespace ecg
