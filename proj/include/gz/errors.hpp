#ifndef GZ_ERRORS_HPP
#define GZ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gz {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& expected, const std::string& msg)
      : Error(msg), position_(position), expected_(expected) {}
  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

class UnknownIdentifier : public Error {
 public:
  explicit UnknownIdentifier(const std::string& name)
      : Error("unknown identifier '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class ArityError : public Error {
 public:
  ArityError(const std::string& fn, int got, int expected)
      : Error("function '" + fn + "' takes " + std::to_string(expected) + " argument(s), got " +
              std::to_string(got)),
        got_(got), expected_(expected) {}
  int got() const { return got_; }
  int expected() const { return expected_; }

 private:
  int got_, expected_;
};

/// Evaluation outside the domain of a function (log of a negative number, division by zero, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed structure configuration.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class UnknownExample : public Error {
 public:
  using Error::Error;
};

/// Raised when [a^T; z^T] loses row rank; callers fall back to the pencil computation.
class RankError : public Error {
 public:
  using Error::Error;
};

class CFLViolation : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

}  // namespace gz

#endif
