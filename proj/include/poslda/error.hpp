// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>
#include <string>

namespace poslda {

// Base of every error the library throws. The CLI maps each subclass to a
// distinct exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable input, failed write.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (tagged corpus line without a tag, etc).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Configuration or precondition violated.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Snapshot stream is truncated, tampered with, or from another version.
class SnapshotError : public Error {
 public:
  using Error::Error;
};

// A sampling distribution or metric became undefined.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace poslda
