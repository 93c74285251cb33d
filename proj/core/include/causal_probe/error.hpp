#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace causal_probe {

enum class ErrorKind {
  // core / data
  WrongArity,
  NegativeMass,
  NotNormalized,
  InvalidLabel,
  InvalidSample,
  InvalidTemplate,
  DuplicateId,
  ParseError,
  ShortStratum,
  // backend
  NetworkError,
  AuthError,
  RateLimited,
  NoLogprobs,
  MalformedResponse,
  ReplayMiss,
  CacheCorrupt,
  InvalidRequest,
  // scoring
  NoLabelMass,
  ZeroMass,
  InvalidCalibration,
  InvalidSurfaceForms,
  NonFiniteObjective,
  // metrics / analysis
  EmptyInput,
  LengthMismatch,
  TooFewValues,
  ZeroVariance,
  TooFewDistributions,
  ZeroMean,
  MisalignedRecords,
  MissingCalibration,
  EmptySubset,
  UnknownIds,
  InvalidArgument,
  // perturb
  MissingSynonymTable,
  NoEligibleWords,
  // cli
  IncompleteStore,
  ManifestMismatch,
  ConfigError,
  IoError,
};

/// Coarse grouping used for process exit codes.
enum class ErrorCategory { Usage, Data, Backend };

std::string_view to_string(ErrorKind kind) noexcept;
ErrorCategory category_of(ErrorKind kind) noexcept;

/// Exit code for the CLI: 1 usage, 2 data, 3 backend.
int exit_code_for(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Backend rate limiting; carries the server's retry hint when one was given.
class RateLimitedError : public Error {
 public:
  RateLimitedError(const std::string& message, double retry_after_seconds)
      : Error(ErrorKind::RateLimited, message), retry_after_(retry_after_seconds) {}

  double retry_after_seconds() const noexcept { return retry_after_; }

 private:
  double retry_after_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

/// Same kind, message prefixed with `context`.
Error annotate(const Error& err, const std::string& context);

}  // namespace causal_probe
