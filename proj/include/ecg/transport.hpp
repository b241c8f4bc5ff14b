#pragma once

// Byte streams for the wire and for live serial ingest. Endpoint specs:
//
//   stdout | file:PATH | serial:DEVICE[@BAUD] | tcp:HOST:PORT
//
// tcp listens on HOST:PORT and accepts one consumer before returning.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "ecg/error.hpp"

namespace ecg {

enum class TransportErrorKind { kBadEndpoint, kOpen, kWrite, kRead };
using TransportError = KindedError<TransportErrorKind>;

constexpr int kDefaultBaud = 115200;

/// Owns a POSIX file descriptor.
class FileDescriptor {
 public:
  FileDescriptor() = default;
  explicit FileDescriptor(int fd, bool owned = true) : fd_(fd), owned_(owned) {}
  FileDescriptor(FileDescriptor&& o) noexcept : fd_(o.fd_), owned_(o.owned_) { o.fd_ = -1; }
  FileDescriptor& operator=(FileDescriptor&& o) noexcept;
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  ~FileDescriptor();

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }

 private:
  int fd_ = -1;
  bool owned_ = true;
};

class ByteSink {
 public:
  virtual ~ByteSink() = default;
  /// Writes all bytes or throws TransportError(kWrite).
  virtual void write(std::string_view bytes) = 0;
};

/// An open sink, or nullptr for "off".
std::unique_ptr<ByteSink> open_sink(std::string_view endpoint);

/// Reads newline-terminated lines from a serial device (or any readable
/// path) with the line configured raw at the given baud rate.
class SerialLineReader {
 public:
  static SerialLineReader open(std::string_view device, int baud = kDefaultBaud);

  /// Next line including its '\n'; nullopt at end of stream.
  std::optional<std::string> next_line();

 private:
  explicit SerialLineReader(FileDescriptor fd) : fd_(std::move(fd)) {}
  FileDescriptor fd_;
  std::string buffer_;
  bool eof_ = false;
};

/// Splits "serial:/dev/ttyACM0@9600" style specs.
struct SerialSpec {
  std::string device;
  int baud = kDefaultBaud;
};
SerialSpec parse_serial_spec(std::string_view spec);

}  // namespace ecg
