#pragma once

#include <stdexcept>
#include <string>

namespace ecg {

/// Base for every error raised by the library. Callers that only care about
/// "something failed" catch this; callers that branch on the cause catch the
/// kinded subclass and inspect kind().
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Kind>
class KindedError : public Error {
 public:
  KindedError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace ecg
