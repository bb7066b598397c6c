#pragma once

#include <stdexcept>
#include <string>

namespace protoselect {

// Base for every error raised by the library. Callers that do not care about
// the category can catch this one type.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
  public:
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

  private:
    std::size_t row_;
};

class EmptyInputError : public Error {
  public:
    using Error::Error;
};

class FormatError : public Error {
  public:
    using Error::Error;
};

class ConsistencyError : public Error {
  public:
    using Error::Error;
};

class ParameterError : public Error {
  public:
    using Error::Error;
};

class InsufficientDataError : public Error {
  public:
    using Error::Error;
};

class BoundsError : public Error {
  public:
    using Error::Error;
};

class NormalizationError : public Error {
  public:
    using Error::Error;
};

class PreconditionError : public Error {
  public:
    using Error::Error;
};

class LabelError : public Error {
  public:
    using Error::Error;
};

class SizeError : public Error {
  public:
    using Error::Error;
};

}  // namespace protoselect
