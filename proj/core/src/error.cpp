#include "causal_probe/error.hpp"

namespace causal_probe {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::WrongArity: return "WrongArity";
    case ErrorKind::NegativeMass: return "NegativeMass";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::InvalidLabel: return "InvalidLabel";
    case ErrorKind::InvalidSample: return "InvalidSample";
    case ErrorKind::InvalidTemplate: return "InvalidTemplate";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ShortStratum: return "ShortStratum";
    case ErrorKind::NetworkError: return "NetworkError";
    case ErrorKind::AuthError: return "AuthError";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::NoLogprobs: return "NoLogprobs";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::ReplayMiss: return "ReplayMiss";
    case ErrorKind::CacheCorrupt: return "CacheCorrupt";
    case ErrorKind::InvalidRequest: return "InvalidRequest";
    case ErrorKind::NoLabelMass: return "NoLabelMass";
    case ErrorKind::ZeroMass: return "ZeroMass";
    case ErrorKind::InvalidCalibration: return "InvalidCalibration";
    case ErrorKind::InvalidSurfaceForms: return "InvalidSurfaceForms";
    case ErrorKind::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFewValues: return "TooFewValues";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::TooFewDistributions: return "TooFewDistributions";
    case ErrorKind::ZeroMean: return "ZeroMean";
    case ErrorKind::MisalignedRecords: return "MisalignedRecords";
    case ErrorKind::MissingCalibration: return "MissingCalibration";
    case ErrorKind::EmptySubset: return "EmptySubset";
    case ErrorKind::UnknownIds: return "UnknownIds";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingSynonymTable: return "MissingSynonymTable";
    case ErrorKind::NoEligibleWords: return "NoEligibleWords";
    case ErrorKind::IncompleteStore: return "IncompleteStore";
    case ErrorKind::ManifestMismatch: return "ManifestMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NetworkError:
    case ErrorKind::AuthError:
    case ErrorKind::RateLimited:
    case ErrorKind::NoLogprobs:
    case ErrorKind::MalformedResponse:
    case ErrorKind::ReplayMiss:
    case ErrorKind::CacheCorrupt:
      return ErrorCategory::Backend;
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
      return ErrorCategory::Usage;
    default:
      return ErrorCategory::Data;
  }
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (category_of(kind)) {
    case ErrorCategory::Usage: return 1;
    case ErrorCategory::Data: return 2;
    case ErrorCategory::Backend: return 3;
  }
  return 2;
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

Error annotate(const Error& err, const std::string& context) { return Error(err.kind(), context + ": " + err.detail()); }

}  // namespace causal_probe
