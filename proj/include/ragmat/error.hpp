#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ragmat {

// Every failure raised by the library derives from Error. kind() is a stable
// machine-readable tag (used by the CLI when it prints errors as JSON).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define RAGMAT_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

// corpus
RAGMAT_DEFINE_ERROR(MalformedXml)
RAGMAT_DEFINE_ERROR(DuplicateSectionId)

// embedder / vectorstore
RAGMAT_DEFINE_ERROR(DimMismatch)
RAGMAT_DEFINE_ERROR(ZeroNorm)
RAGMAT_DEFINE_ERROR(DuplicateChunkId)
RAGMAT_DEFINE_ERROR(IndexFormatError)

// pipeline
RAGMAT_DEFINE_ERROR(ModeContextMismatch)
RAGMAT_DEFINE_ERROR(EmptyCompletion)
RAGMAT_DEFINE_ERROR(ExperimentFailed)

// textmetrics
RAGMAT_DEFINE_ERROR(DegenerateText)

// ratings
RAGMAT_DEFINE_ERROR(UnknownConfigLabel)
RAGMAT_DEFINE_ERROR(UnknownSession)
RAGMAT_DEFINE_ERROR(UnknownItemToken)
RAGMAT_DEFINE_ERROR(ScoreOutOfRange)
RAGMAT_DEFINE_ERROR(MalformedRow)
RAGMAT_DEFINE_ERROR(DuplicateKey)

// stats
RAGMAT_DEFINE_ERROR(EmptyGroup)
RAGMAT_DEFINE_ERROR(DegenerateInput)
RAGMAT_DEFINE_ERROR(InsufficientData)
RAGMAT_DEFINE_ERROR(LabelMismatch)

// cli
RAGMAT_DEFINE_ERROR(UsageError)

#undef RAGMAT_DEFINE_ERROR

// Raised by remote clients once the retry budget is spent. status is the last
// HTTP status seen, or 0 for transport failures (timeout, refused, ...).
class EndpointError : public Error {
 public:
  EndpointError(int status, std::string body, int attempts)
      : Error("EndpointError", "endpoint error (status " + std::to_string(status) + " after " +
                                   std::to_string(attempts) + " attempts): " + body),
        status_(status),
        body_(std::move(body)),
        attempts_(attempts) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }
  int attempts() const noexcept { return attempts_; }

 private:
  int status_;
  std::string body_;
  int attempts_;
};

// Lists every invalid configuration field at once.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> fields)
      : Error("ConfigError", join(fields)), fields_(std::move(fields)) {}

  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  static std::string join(const std::vector<std::string>& fields) {
    std::string out = "invalid configuration:";
    for (const auto& f : fields) out += " " + f + ";";
    return out;
  }

  std::vector<std::string> fields_;
};

}  // namespace ragmat
