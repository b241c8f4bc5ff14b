#pragma once

// Beat matching against ground truth and the derived metrics.
// "Specificity" in the beat-detection sense is reported as positive
// predictive value: there are no countable true negatives.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecg/error.hpp"
#include "ecg/types.hpp"

namespace ecg {

enum class ValidationErrorKind { kUnsorted, kBadTolerance, kUndefinedMetric, kNoMatches };
using ValidationError = KindedError<ValidationErrorKind>;

inline constexpr double kDefaultMatchToleranceMs = 75.0;

struct MatchedPair {
  std::size_t annotation = 0;  // index into the annotation sequence
  std::size_t detection = 0;   // index into the detection sequence
  double annotation_ms = 0.0;
  double detection_ms = 0.0;
  double delta_ms = 0.0;  // detection - annotation
};

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<MatchedPair> matched_pairs;
};

/// Greedy in-order one-to-one matching on times (ms). Each annotation takes
/// the nearest still-unmatched detection within +-tol_ms; ties go to the
/// earlier detection. Both inputs must be sorted ascending.
MatchResult match_times(std::span<const double> detections_ms, std::span<const double> annotations_ms,
                        double tol_ms);

MatchResult match_beats(std::span<const BeatEvent> detections, std::span<const Annotation> annotations,
                        double tol_ms = kDefaultMatchToleranceMs);

double sensitivity(const MatchResult& m);  // tp / (tp + fn)
double ppv(const MatchResult& m);          // tp / (tp + fp)

struct Metrics {
  double sensitivity = 0.0;
  double ppv = 0.0;
};

/// Both metrics; throws ValidationError(kUndefinedMetric) if either is 0/0.
Metrics metrics(const MatchResult& m);

struct LatencyStats {
  double median_ms = 0.0;  // signed
  double median_abs_ms = 0.0;
  double p95_abs_ms = 0.0;  // linear interpolation between order statistics
  double max_abs_ms = 0.0;
  std::size_t pairs = 0;
};

LatencyStats latency_stats(const MatchResult& m);

/// Percentile with linear interpolation over sorted data, q in [0, 1].
double percentile_sorted(std::span<const double> sorted, double q);

/// "metric,value" lines for the validate report.
std::string metrics_report_csv(const MatchResult& m, double tol_ms);
/// Human-readable equivalent.
std::string metrics_report_text(const MatchResult& m, double tol_ms);

}  // namespace ecg
