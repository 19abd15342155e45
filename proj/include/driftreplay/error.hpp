#pragma once

#include <stdexcept>
#include <string>

namespace driftreplay {

enum class ErrorKind {
  IdOutOfRange,
  InvalidTarget,
  EmptyBatch,
  EmptyDataset,
  ShapeMismatch,
  NotInBatch,
  KTooLarge,
  NonFiniteScore,
  EmptyIncrement,
  CapacityExceeded,
  InvalidArch,
  InvalidRating,
  HeaderMismatch,
  MalformedInput,
  SchemeUnavailable,
  UndefinedAuc,
  InvalidConfig,
  IoError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::IdOutOfRange: return "IdOutOfRange";
    case ErrorKind::InvalidTarget: return "InvalidTarget";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NotInBatch: return "NotInBatch";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::NonFiniteScore: return "NonFiniteScore";
    case ErrorKind::EmptyIncrement: return "EmptyIncrement";
    case ErrorKind::CapacityExceeded: return "CapacityExceeded";
    case ErrorKind::InvalidArch: return "InvalidArch";
    case ErrorKind::InvalidRating: return "InvalidRating";
    case ErrorKind::HeaderMismatch: return "HeaderMismatch";
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::SchemeUnavailable: return "SchemeUnavailable";
    case ErrorKind::UndefinedAuc: return "UndefinedAuc";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
  }
  return "UnknownError";
}

/// Library-wide exception. The kind is what callers dispatch on; the
/// message carries context (offending id, file, line number, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace driftreplay
