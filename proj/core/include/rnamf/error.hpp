#pragma once

#include <stdexcept>
#include <string>

namespace rnamf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define RNAMF_ERROR(Name, Tag)                                     \
  class Name : public Error {                                      \
   public:                                                         \
    using Error::Error;                                            \
    const char* kind() const noexcept override { return Tag; }     \
  };

RNAMF_ERROR(InvalidParameter, "invalid_parameter")
RNAMF_ERROR(ShapeError, "shape")
RNAMF_ERROR(ArgumentError, "argument")
RNAMF_ERROR(FitError, "fit")
RNAMF_ERROR(DatasetError, "dataset")
RNAMF_ERROR(UnsupportedLevel, "unsupported_level")
RNAMF_ERROR(DomainError, "domain")
RNAMF_ERROR(ParseError, "parse")
RNAMF_ERROR(StaleModelError, "stale_model")
RNAMF_ERROR(AdapterError, "adapter")

#undef RNAMF_ERROR

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double jitter)
      : Error(what), jitter_(jitter) {}
  const char* kind() const noexcept override { return "conditioning"; }
  double jitter() const noexcept { return jitter_; }

 private:
  double jitter_;
};

}  // namespace rnamf
