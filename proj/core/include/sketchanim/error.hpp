#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace sketchanim {

// Base class for every error raised by the library. Callers that only care
// about "something went wrong" can catch this; the subclasses below carry the
// category so the CLI can map them to exit codes and messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ProjectionError : public Error {
 public:
  using Error::Error;
};

class RenderError : public Error {
 public:
  using Error::Error;
};

// Guidance provider could not be reached (network, timeout, 5xx).
class TransportError : public Error {
 public:
  using Error::Error;
};

// Guidance provider answered with something that violates the contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Thrown when guidance fails mid-run; the checkpoint (if any) holds the
/// state before the failed iteration.
class StageAborted : public Error {
 public:
  StageAborted(const std::string& what, std::filesystem::path checkpoint)
      : Error(what), checkpoint_(std::move(checkpoint)) {}
  const std::filesystem::path& checkpoint() const { return checkpoint_; }

 private:
  std::filesystem::path checkpoint_;
};

}  // namespace sketchanim
