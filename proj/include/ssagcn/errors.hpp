#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssagcn {

// Base for every error raised by the library. `code()` is a stable
// machine-readable identifier used by the CLI when reporting failures.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse_error", "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateRecord : public Error {
 public:
  explicit DuplicateRecord(const std::string& what) : Error("duplicate_record", what) {}
};

class EmptyDataset : public Error {
 public:
  explicit EmptyDataset(const std::string& what) : Error("empty_dataset", what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format_error", what) {}
};

class FileError : public Error {
 public:
  explicit FileError(const std::string& what) : Error("file_error", what) {}
};

class TransformError : public Error {
 public:
  explicit TransformError(const std::string& what) : Error("transform_error", what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape_error", what) {}
};

class NonScalarLoss : public Error {
 public:
  explicit NonScalarLoss(const std::string& what) : Error("non_scalar_loss", what) {}
};

class MissingScene : public Error {
 public:
  explicit MissingScene(const std::string& what) : Error("missing_scene", what) {}
};

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(std::size_t window_index)
      : Error("non_finite_loss",
              "non-finite loss at window " + std::to_string(window_index)),
        window_index_(window_index) {}
  std::size_t window_index() const noexcept { return window_index_; }

 private:
  std::size_t window_index_;
};

class LengthMismatch : public Error {
 public:
  explicit LengthMismatch(const std::string& what) : Error("length_mismatch", what) {}
};

class CheckpointVersionError : public Error {
 public:
  explicit CheckpointVersionError(const std::string& what)
      : Error("checkpoint_version", what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

}  // namespace ssagcn
