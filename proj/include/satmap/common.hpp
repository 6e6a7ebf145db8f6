#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace satmap {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document (DFG, architecture, mapping, DIMACS, solver output).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid graph, architecture or configuration.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A solver model or decoded mapping contradicts the independent checker.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Raised by long-running stages when the shared wall-clock budget runs out.
class TimeoutError : public Error {
 public:
  using Error::Error;
};

// Raised when an intermediate artifact would exceed a configured size ceiling.
class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

// Wall-clock budget shared across stages. A default-constructed deadline never expires.
class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  Deadline() = default;
  explicit Deadline(Clock::time_point at) : at_(at) {}

  static Deadline after(double seconds) {
    return Deadline(Clock::now() +
                    std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds)));
  }
  static Deadline never() { return Deadline(); }

  bool bounded() const { return at_.has_value(); }
  bool expired() const { return at_ && Clock::now() >= *at_; }

  double remaining_seconds() const {
    if (!at_) return 1e300;
    return std::chrono::duration<double>(*at_ - Clock::now()).count();
  }

  void check(const char* stage) const {
    if (expired()) throw TimeoutError(std::string("time budget exhausted during ") + stage);
  }

 private:
  std::optional<Clock::time_point> at_;
};

// FNV-1a, used for input fingerprints in mapping documents.
inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  // b > 0
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

inline std::int64_t pos_mod(std::int64_t a, std::int64_t b) {
  std::int64_t r = a % b;
  return r < 0 ? r + b : r;
}

}  // namespace satmap
