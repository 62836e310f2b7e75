#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdmopt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed STL input. `offset` is the byte position where decoding failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class EmptyMeshError : public Error {
 public:
  using Error::Error;
};

/// Voxel grid would exceed the configured cell cap.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class CompileError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Network-level failure talking to a remote guidance provider. Retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace fdmopt
