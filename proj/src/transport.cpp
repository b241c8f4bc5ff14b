#include "ecg/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <termios.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

namespace ecg {
namespace {

std::string errno_text() { return std::strerror(errno); }

speed_t baud_constant(int baud) {
  switch (baud) {
    case 9600: return B9600;
    case 19200: return B19200;
    case 38400: return B38400;
    case 57600: return B57600;
    case 115200: return B115200;
    case 230400: return B230400;
    default:
      throw TransportError(TransportErrorKind::kBadEndpoint, "unsupported baud rate " + std::to_string(baud));
  }
}

void configure_serial(int fd, int baud) {
  if (!isatty(fd)) return;  // plain files and pipes need no line setup
  termios tio{};
  if (tcgetattr(fd, &tio) != 0) {
    throw TransportError(TransportErrorKind::kOpen, "tcgetattr: " + errno_text());
  }
  cfmakeraw(&tio);
  const speed_t speed = baud_constant(baud);
  cfsetispeed(&tio, speed);
  cfsetospeed(&tio, speed);
  tio.c_cflag |= CLOCAL | CREAD;
  if (tcsetattr(fd, TCSANOW, &tio) != 0) {
    throw TransportError(TransportErrorKind::kOpen, "tcsetattr: " + errno_text());
  }
}

class FdSink final : public ByteSink {
 public:
  explicit FdSink(FileDescriptor fd) : fd_(std::move(fd)) {}
  void write(std::string_view bytes) override {
    while (!bytes.empty()) {
      const ssize_t n = ::write(fd_.get(), bytes.data(), bytes.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(TransportErrorKind::kWrite, "wire write failed: " + errno_text());
      }
      bytes.remove_prefix(static_cast<std::size_t>(n));
    }
  }

 private:
  FileDescriptor fd_;
};

FileDescriptor listen_and_accept(std::string_view host_port) {
  const auto colon = host_port.rfind(':');
  if (colon == std::string_view::npos) {
    throw TransportError(TransportErrorKind::kBadEndpoint, "tcp endpoint needs HOST:PORT");
  }
  const std::string host(host_port.substr(0, colon));
  const std::string port(host_port.substr(colon + 1));

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (const int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw TransportError(TransportErrorKind::kBadEndpoint, std::string("tcp resolve: ") + gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> guard(res, &freeaddrinfo);

  FileDescriptor server(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (!server) throw TransportError(TransportErrorKind::kOpen, "socket: " + errno_text());
  const int yes = 1;
  setsockopt(server.get(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  if (::bind(server.get(), res->ai_addr, res->ai_addrlen) != 0 || ::listen(server.get(), 1) != 0) {
    throw TransportError(TransportErrorKind::kOpen, "tcp listen on " + std::string(host_port) + ": " + errno_text());
  }
  FileDescriptor client(::accept(server.get(), nullptr, nullptr));
  if (!client) throw TransportError(TransportErrorKind::kOpen, "tcp accept: " + errno_text());
  return client;
}

}  // namespace

FileDescriptor& FileDescriptor::operator=(FileDescriptor&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0 && owned_) ::close(fd_);
    fd_ = o.fd_;
    owned_ = o.owned_;
    o.fd_ = -1;
  }
  return *this;
}

FileDescriptor::~FileDescriptor() {
  if (fd_ >= 0 && owned_) ::close(fd_);
}

SerialSpec parse_serial_spec(std::string_view spec) {
  SerialSpec out;
  const auto at = spec.rfind('@');
  out.device = std::string(spec.substr(0, at));
  if (at != std::string_view::npos) {
    const std::string_view b = spec.substr(at + 1);
    const auto [ptr, ec] = std::from_chars(b.data(), b.data() + b.size(), out.baud);
    if (ec != std::errc() || ptr != b.data() + b.size()) {
      throw TransportError(TransportErrorKind::kBadEndpoint, "bad baud rate in '" + std::string(spec) + "'");
    }
  }
  if (out.device.empty()) throw TransportError(TransportErrorKind::kBadEndpoint, "serial endpoint needs a device path");
  return out;
}

std::unique_ptr<ByteSink> open_sink(std::string_view endpoint) {
  if (endpoint == "off" || endpoint.empty()) return nullptr;
  if (endpoint == "stdout") return std::make_unique<FdSink>(FileDescriptor(STDOUT_FILENO, false));
  if (endpoint.starts_with("file:")) {
    const std::string path(endpoint.substr(5));
    FileDescriptor fd(::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
    if (!fd) throw TransportError(TransportErrorKind::kOpen, "cannot open wire file '" + path + "': " + errno_text());
    return std::make_unique<FdSink>(std::move(fd));
  }
  if (endpoint.starts_with("serial:")) {
    const SerialSpec spec = parse_serial_spec(endpoint.substr(7));
    FileDescriptor fd(::open(spec.device.c_str(), O_WRONLY | O_NOCTTY | O_CLOEXEC));
    if (!fd) throw TransportError(TransportErrorKind::kOpen, "cannot open serial '" + spec.device + "': " + errno_text());
    configure_serial(fd.get(), spec.baud);
    return std::make_unique<FdSink>(std::move(fd));
  }
  if (endpoint.starts_with("tcp:")) return std::make_unique<FdSink>(listen_and_accept(endpoint.substr(4)));
  throw TransportError(TransportErrorKind::kBadEndpoint, "unknown wire endpoint '" + std::string(endpoint) + "'");
}

SerialLineReader SerialLineReader::open(std::string_view device, int baud) {
  const std::string path(device);
  FileDescriptor fd(::open(path.c_str(), O_RDONLY | O_NOCTTY | O_CLOEXEC));
  if (!fd) throw TransportError(TransportErrorKind::kOpen, "cannot open serial source '" + path + "': " + errno_text());
  configure_serial(fd.get(), baud);
  return SerialLineReader(std::move(fd));
}

std::optional<std::string> SerialLineReader::next_line() {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl + 1);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (eof_) {
      if (buffer_.empty()) return std::nullopt;
      std::string rest = std::move(buffer_);
      buffer_.clear();
      return rest;
    }
    char chunk[512];
    const ssize_t n = ::read(fd_.get(), chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(TransportErrorKind::kRead, "serial read failed: " + errno_text());
    }
    if (n == 0) {
      eof_ = true;
      continue;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace ecg
