#pragma once

#include <stdexcept>
#include <string>

namespace hedgekit {

/// Base of every exception thrown by the library. `kind()` lets callers such as
/// the CLI map failures onto exit codes without string matching.
class Error : public std::runtime_error {
public:
  enum class Kind {
    domain,       // argument outside the mathematical domain
    bounds,       // price outside no-arbitrage bounds
    convergence,  // iterative solver did not converge
    degenerate,   // input is valid but the quantity is undefined there
    shape,        // dimension mismatch
    argument,     // invalid argument (empty batch, too few samples, ...)
    index,        // index out of range
    schema,       // missing or misnamed columns
    format,       // unparseable input
    io,           // filesystem failure
    config,       // invalid configuration
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

#define HEDGEKIT_DEFINE_ERROR(Name, KindValue)                                 \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(Kind::KindValue, what) {}   \
  };

HEDGEKIT_DEFINE_ERROR(DomainError, domain)
HEDGEKIT_DEFINE_ERROR(BoundsError, bounds)
HEDGEKIT_DEFINE_ERROR(ConvergenceError, convergence)
HEDGEKIT_DEFINE_ERROR(DegenerateInputError, degenerate)
HEDGEKIT_DEFINE_ERROR(ShapeError, shape)
HEDGEKIT_DEFINE_ERROR(ArgumentError, argument)
HEDGEKIT_DEFINE_ERROR(IndexError, index)
HEDGEKIT_DEFINE_ERROR(SchemaError, schema)
HEDGEKIT_DEFINE_ERROR(FormatError, format)
HEDGEKIT_DEFINE_ERROR(IoError, io)
HEDGEKIT_DEFINE_ERROR(ConfigError, config)

#undef HEDGEKIT_DEFINE_ERROR

}  // namespace hedgekit
