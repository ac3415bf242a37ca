#ifndef WIDENET_ERROR_H
#define WIDENET_ERROR_H

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace widenet {

enum class ErrorCode { not_found, invalid_input, conflict, internal };

std::string_view to_string(ErrorCode code);

// Base error for everything the engine throws. The code maps one-to-one onto
// the API error shape returned by the service.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Record-level failure while reading a line-oriented input file.
class ParseError : public Error {
 public:
  ParseError(std::int64_t line, const std::string& message)
      : Error(ErrorCode::invalid_input,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_;
};

}  // namespace widenet

#endif  // WIDENET_ERROR_H
