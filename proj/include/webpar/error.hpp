#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace webpar {

enum class ErrorKind {
  empty_document,
  configuration,
  schema,
  value,
  duplicate,
  aggregation,
  baseline,
  degenerate_measurement,
  degenerate_labels,
  undefined_correlation,
  input,
  report,
  io,
  usage,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and tests)
// can tell a schema problem from a value problem without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace webpar
