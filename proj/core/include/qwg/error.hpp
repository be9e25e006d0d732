#pragma once

#include <stdexcept>
#include <string>

namespace qwg {

/// Failure category; maps onto the CLI exit codes (2 config, 3 numerical).
enum class ErrorKind { config, numerical };

/// Exception carrying the module that raised it and the offending quantity.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

inline Error config_error(std::string module, const std::string& what) {
  return Error(ErrorKind::config, std::move(module), what);
}

inline Error numerical_error(std::string module, const std::string& what) {
  return Error(ErrorKind::numerical, std::move(module), what);
}

}  // namespace qwg
