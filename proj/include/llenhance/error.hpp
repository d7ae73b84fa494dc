#pragma once

#include <stdexcept>
#include <string>

namespace llenhance {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition (shape mismatch, out-of-range value).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File system failure: missing input, unwritable output.
class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A file exists but its contents cannot be decoded.
class DecodeError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace llenhance
