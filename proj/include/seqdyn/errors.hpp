#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace seqdyn {

// Every failure surfaced by the library derives from Error and carries a short
// machine-readable class name, which the CLI reports verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string error_class, const std::string& what)
      : std::runtime_error(what), error_class_(std::move(error_class)) {}

  const std::string& error_class() const noexcept { return error_class_; }

 private:
  std::string error_class_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error("argument", what) {}
};

/// A geometric blow-up hit a configured cap (breakpoints, fragments, preimages).
class ResourceError : public Error {
 public:
  ResourceError(const std::string& what, std::size_t cap)
      : Error("resource", what + " (cap " + std::to_string(cap) + ")"), cap_(cap) {}

  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& what) : Error("unsupported", what) {}
};

/// P_1^n 1 fell below the threshold that a division or hypothesis requires.
class MinorationError : public Error {
 public:
  explicit MinorationError(const std::string& what) : Error("minoration", what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> fields)
      : Error("validation", join(fields)), fields_(std::move(fields)) {}

  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  static std::string join(const std::vector<std::string>& fields) {
    std::string out = "invalid configuration:";
    for (const auto& f : fields) out += " [" + f + "]";
    return out;
  }

  std::vector<std::string> fields_;
};

}  // namespace seqdyn
