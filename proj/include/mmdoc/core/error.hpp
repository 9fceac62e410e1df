#pragma once

#include <stdexcept>
#include <string>

namespace mmdoc {

// Base of every error raised by the library. Subclasses let callers (mainly
// the CLI) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class ModalityError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmdoc
