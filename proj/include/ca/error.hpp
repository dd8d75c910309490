#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ca {

enum class Errc {
  Io = 1,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  NonFiniteValue,
  BadIds,
  BadJson,
  MissingLabel,
  DegenerateInput,
  EmptyRange,
  DimTooLarge,
  KTooLarge,
  KTooLargeForLeaves,
  BadThreshold,
  LengthMismatch,
  NonSquare,
  MismatchedK,
  NoRetainedSamples,
  InvalidArgument,
  InvalidConfig,
  Internal,
};

std::string_view errc_name(Errc code) noexcept;

// All library failures are reported as ca::Error; the C API maps `code()`
// one-to-one onto ca_status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Error raised by the pipeline driver, tagged with the stage that failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), stage + ": " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace ca
