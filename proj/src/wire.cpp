#include "ecg/wire.hpp"

#include <charconv>
#include <system_error>

namespace ecg::wire {
namespace {

[[noreturn]] void fail(WireErrorKind kind, const std::string& what) { throw WireError(kind, what); }

std::uint64_t parse_u64(std::string_view field) {
  std::uint64_t v = 0;
  const bool digits_only =
      !field.empty() && field.find_first_not_of("0123456789") == std::string_view::npos;
  if (digits_only) {
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec == std::errc() && ptr == field.data() + field.size()) return v;
  }
  fail(WireErrorKind::kNonNumeric, "field '" + std::string(field) + "' is not an unsigned integer");
}

std::vector<std::string_view> split_fields(std::string_view body) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = body.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(body.substr(start));
      return fields;
    }
    fields.push_back(body.substr(start, comma - start));
    start = comma + 1;
  }
}

void expect_fields(const std::vector<std::string_view>& fields, std::size_t n, char tag) {
  if (fields.size() != n) {
    fail(WireErrorKind::kFieldCount, std::string(1, tag) + " frame needs " + std::to_string(n - 1) +
                                         " fields, got " + std::to_string(fields.size() - 1));
  }
}

}  // namespace

std::string_view kind_name(WireErrorKind kind) noexcept {
  switch (kind) {
    case WireErrorKind::kUnknownTag: return "unknown_tag";
    case WireErrorKind::kFieldCount: return "field_count";
    case WireErrorKind::kNonNumeric: return "non_numeric";
    case WireErrorKind::kMissingNewline: return "missing_newline";
    case WireErrorKind::kInvalidText: return "invalid_text";
    case WireErrorKind::kLineTooLong: return "line_too_long";
  }
  return "unknown";
}

bool valid_info_text(std::string_view text) noexcept {
  for (unsigned char c : text) {
    if (c == ',' || c < 0x20 || c == 0x7f) return false;
  }
  return true;
}

std::string encode_frame(const Frame& f) {
  struct Visitor {
    std::string operator()(const Trigger& t) const {
      return "T," + std::to_string(t.seq) + "," + std::to_string(t.timestamp_ms) + "\n";
    }
    std::string operator()(const Sample& s) const {
      return "S," + std::to_string(s.timestamp_ms) + "," + std::to_string(s.adc) + "\n";
    }
    std::string operator()(const Info& i) const {
      if (!valid_info_text(i.text)) fail(WireErrorKind::kInvalidText, "info text contains a comma or control byte");
      if (i.text.size() + 3 > kMaxLineBytes) {
        fail(WireErrorKind::kLineTooLong, "info text longer than " + std::to_string(kMaxLineBytes - 3) + " bytes");
      }
      return "I," + i.text + "\n";
    }
  };
  return std::visit(Visitor{}, f);
}

Frame decode_frame(std::string_view line) {
  if (line.empty() || line.back() != '\n') fail(WireErrorKind::kMissingNewline, "line is not newline-terminated");
  const std::string_view body = line.substr(0, line.size() - 1);
  if (body.size() + 1 > kMaxLineBytes) fail(WireErrorKind::kLineTooLong, "line exceeds " + std::to_string(kMaxLineBytes) + " bytes");

  const auto fields = split_fields(body);
  const std::string_view tag = fields.front();
  if (tag == "T") {
    expect_fields(fields, 3, 'T');
    return Trigger{parse_u64(fields[1]), parse_u64(fields[2])};
  }
  if (tag == "S") {
    expect_fields(fields, 3, 'S');
    return Sample{parse_u64(fields[1]), parse_u64(fields[2])};
  }
  if (tag == "I") {
    expect_fields(fields, 2, 'I');
    if (!valid_info_text(fields[1])) fail(WireErrorKind::kInvalidText, "info text contains a control byte");
    return Info{std::string(fields[1])};
  }
  std::string shown;
  for (unsigned char c : tag.substr(0, 16)) shown += (c >= 0x20 && c < 0x7f) ? static_cast<char>(c) : '?';
  fail(WireErrorKind::kUnknownTag, "unknown frame tag '" + shown + "'");
}

void LineDecoder::complete_line(std::vector<DecodeResult>& out) {
  DecodeResult r;
  if (overflowed_) {
    r.error = WireErrorKind::kLineTooLong;
    r.message = "line exceeds " + std::to_string(kMaxLineBytes) + " bytes";
  } else {
    try {
      r.frame = decode_frame(pending_);
      r.is_frame = true;
    } catch (const WireError& e) {
      r.error = e.kind();
      r.message = e.what();
    }
  }
  out.push_back(std::move(r));
  pending_.clear();
  overflowed_ = false;
}

std::vector<DecodeResult> LineDecoder::feed(std::string_view bytes) {
  std::vector<DecodeResult> out;
  for (char c : bytes) {
    if (!overflowed_) {
      pending_ += c;
      if (pending_.size() > kMaxLineBytes && c != '\n') {
        overflowed_ = true;
        pending_.clear();
      }
    }
    if (c == '\n') {
      if (overflowed_) pending_.clear();
      complete_line(out);
    }
  }
  return out;
}

std::vector<DecodeResult> LineDecoder::finish() {
  std::vector<DecodeResult> out;
  if (pending_.empty() && !overflowed_) return out;
  DecodeResult r;
  r.error = overflowed_ ? WireErrorKind::kLineTooLong : WireErrorKind::kMissingNewline;
  r.message = overflowed_ ? "line exceeds limit" : "stream ended inside a line";
  out.push_back(std::move(r));
  pending_.clear();
  overflowed_ = false;
  return out;
}

}  // namespace ecg::wire
