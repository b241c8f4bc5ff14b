#pragma once

// Newline-delimited ASCII frames for beat triggers and optional raw samples:
//
//   T,<seq>,<timestamp_ms>\n
//   S,<timestamp_ms>,<adc>\n
//   I,<text>\n
//
// Numbers are unsigned decimal. Info text has no commas or control bytes.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ecg/error.hpp"

namespace ecg::wire {

struct Trigger {
  std::uint64_t seq = 0;
  std::uint64_t timestamp_ms = 0;
  friend bool operator==(const Trigger&, const Trigger&) = default;
};

struct Sample {
  std::uint64_t timestamp_ms = 0;
  std::uint64_t adc = 0;
  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Info {
  std::string text;
  friend bool operator==(const Info&, const Info&) = default;
};

using Frame = std::variant<Trigger, Sample, Info>;

enum class WireErrorKind {
  kUnknownTag,
  kFieldCount,
  kNonNumeric,
  kMissingNewline,
  kInvalidText,
  kLineTooLong,
};

std::string_view kind_name(WireErrorKind kind) noexcept;

using WireError = KindedError<WireErrorKind>;

constexpr std::size_t kMaxLineBytes = 256;

bool valid_info_text(std::string_view text) noexcept;

/// Throws WireError(kInvalidText) for Info text with commas or control
/// bytes, kLineTooLong when the frame would exceed kMaxLineBytes.
std::string encode_frame(const Frame& f);

/// Decodes exactly one frame from a line that must end in '\n'.
Frame decode_frame(std::string_view line);

struct DecodeResult {
  // Exactly one of these is meaningful: ok() selects.
  Frame frame;
  WireErrorKind error = WireErrorKind::kUnknownTag;
  std::string message;
  bool is_frame = false;
  bool ok() const noexcept { return is_frame; }
};

/// Incremental decoder over an arbitrary byte stream. Each complete line
/// yields one result; a bad line yields one error and decoding resumes at the
/// byte after its newline. Lines longer than kMaxLineBytes are dropped whole
/// and reported once.
class LineDecoder {
 public:
  std::vector<DecodeResult> feed(std::string_view bytes);
  /// Call at end of stream; a trailing partial line is a missing-newline error.
  std::vector<DecodeResult> finish();

 private:
  void complete_line(std::vector<DecodeResult>& out);

  std::string pending_;
  bool overflowed_ = false;
};

}  // namespace ecg::wire
