#pragma once

#include <stdexcept>
#include <string>

namespace compsem {

enum class ErrorKind { usage, data, backend };

/// Base of every error thrown by the library. The kind selects the CLI exit code.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class UsageError : public Error {
public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class BackendError : public Error {
public:
  explicit BackendError(const std::string& what) : Error(ErrorKind::backend, what) {}
};

/// A statistic that has no value for the given input (e.g. rank correlation of a constant series).
class UndefinedStatistic : public DataError {
public:
  explicit UndefinedStatistic(const std::string& what) : DataError(what) {}
};

}  // namespace compsem
