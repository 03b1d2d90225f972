#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace verbcal {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Empty input to a metric or fitting routine.
class NoDataError : public Error {
 public:
  NoDataError() : Error("no data") {}
  explicit NoDataError(const std::string& what) : Error(what) {}
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A confidence outside [0,1] or non-finite, reported with the offending index.
class InvalidConfidence : public InvalidInput {
 public:
  InvalidConfidence(std::size_t index, double value);
  std::size_t index() const { return index_; }
  double value() const { return value_; }

 private:
  std::size_t index_;
  double value_;
};

// Labels are all correct or all incorrect, so NLL has no finite minimizer.
class DegenerateLabels : public Error {
 public:
  DegenerateLabels() : Error("degenerate labels") {}
};

// A model response that does not follow the requested format.
class ParseFailure : public Error {
 public:
  ParseFailure(const std::string& reason, std::string raw)
      : Error(reason), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class JudgeUnparseable : public Error {
 public:
  explicit JudgeUnparseable(std::string raw)
      : Error("judge response contains neither Yes nor No"), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class DatasetError : public Error {
 public:
  DatasetError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Provider errors.
class AuthError : public Error {
 public:
  explicit AuthError(std::string variable)
      : Error("missing credential: environment variable " + variable + " is not set"),
        variable_(std::move(variable)) {}
  // Credential present but rejected by the provider.
  AuthError(std::string variable, int status)
      : Error("credential in " + variable + " rejected (HTTP " + std::to_string(status) + ")"),
        variable_(std::move(variable)) {}
  const std::string& variable() const { return variable_; }

 private:
  std::string variable_;
};

class RateLimited : public Error {
 public:
  explicit RateLimited(int attempts)
      : Error("rate limited after " + std::to_string(attempts) + " attempts"), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

class ProviderError : public Error {
 public:
  ProviderError(int status, std::string body)
      : Error("provider error " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

class TimeoutError : public Error {
 public:
  explicit TimeoutError(const std::string& what) : Error("timeout: " + what) {}
};

}  // namespace verbcal
