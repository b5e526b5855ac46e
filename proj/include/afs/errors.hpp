#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

// Error taxonomy shared by every module.  All failures surface as exceptions
// derived from afs::Error so callers can distinguish "bad input" (caller bug)
// from "numerics blew up mid-run" (data-dependent) from "the remote critic is
// misbehaving" (environmental) without string matching.

namespace afs {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Caller passed something structurally wrong: dimension mismatch, t outside
// [0,1], malformed config value, unknown family name, ...
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// A computation produced a non-finite value.  Carries the integration step at
// which the blow-up was detected (0-based; SIZE_MAX when not step-related).
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, std::size_t step_index)
      : Error(what), step_index_(step_index) {}
  std::size_t step_index() const noexcept { return step_index_; }

 private:
  std::size_t step_index_;
};

// Input is structurally fine but lies in a region where the requested
// operation is undefined (e.g. cosine gradient at the origin).
class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& what) : Error(what) {}
};

// A lookup into a closed table failed (unknown concept label, unknown slot).
class LookupError : public Error {
 public:
  explicit LookupError(const std::string& what) : Error(what) {}
};

// Remote critic could not be reached (connect/timeout/5xx after retries).
// retries_attempted counts attempts beyond the first.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int retries_attempted)
      : Error(what), retries_attempted_(retries_attempted) {}
  int retries_attempted() const noexcept { return retries_attempted_; }

 private:
  int retries_attempted_;
};

// Remote critic answered, but the payload violates the wire contract
// (missing field, wrong type, out-of-range value).  Carries the offending
// field name so tests and logs can point at the exact violation.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string field)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A constraint-set edit would change what the scene asks for (new targets,
// flipped half-planes); the pipeline rejects it rather than drifting.
class ConstraintViolation : public Error {
 public:
  explicit ConstraintViolation(const std::string& what) : Error(what) {}
};

// The pipeline hit a hard failure mid-generation and could not return a
// result.  Partial logs stay with the thrower's context.
class AbortedGeneration : public Error {
 public:
  explicit AbortedGeneration(const std::string& what) : Error(what) {}
};

}  // namespace afs
