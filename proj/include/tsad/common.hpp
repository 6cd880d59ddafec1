#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace tsad {

// Error taxonomy. Everything user-facing derives from Error so the CLI can
// map exceptions onto its exit codes (2 = input, 3 = config).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Parse failures carry the 1-based line number of the offending row.
class ParseError : public InvalidInputError {
 public:
  ParseError(const std::string& msg, long line)
      : InvalidInputError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_ = 0;
};

class OrderingError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

class RangeError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

class ResolutionError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

// Stream stepped with a time index that is not the expected next one.
class SequencingError : public Error {
 public:
  using Error::Error;
};

// Caller bug: detector invoked with inconsistent internal logs.
class StateError : public Error {
 public:
  using Error::Error;
};

class EmptyHistoryError : public StateError {
 public:
  using StateError::StateError;
};

// splitmix64 finalizer; used to derive disjoint per-detector, per-step seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed stream layout: stream 0 = shared probation pipeline, 1/2 = detectors.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t step) {
  std::uint64_t h = mix64(base ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ mix64(stream ^ 0xbb67ae8584caa73bULL));
  h = mix64(h ^ mix64(step ^ 0x3c6ef372fe94f82bULL));
  return h;
}

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace tsad
