#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bridgelab {

// Error families map onto the CLI exit codes: domain errors are rejected
// inputs (degenerate T, invalid chart point), numeric errors are solver or
// consistency failures, io errors are file-system problems.
enum class ErrorKind : int { Domain = 2, Numeric = 3, Io = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string name, const std::string& what)
      : std::runtime_error(what), kind_(kind), name_(std::move(name)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }

private:
  ErrorKind kind_;
  std::string name_;
};

#define BRIDGELAB_DEFINE_ERROR(NAME, KIND)                       \
  struct NAME : Error {                                          \
    explicit NAME(const std::string& what)                       \
        : Error(ErrorKind::KIND, #NAME, what) {}                 \
  }

BRIDGELAB_DEFINE_ERROR(DomainError, Domain);
BRIDGELAB_DEFINE_ERROR(DegenerateBridgeError, Domain);
BRIDGELAB_DEFINE_ERROR(GeometryError, Numeric);
BRIDGELAB_DEFINE_ERROR(IsometryError, Numeric);
BRIDGELAB_DEFINE_ERROR(IntegralError, Numeric);
BRIDGELAB_DEFINE_ERROR(RootError, Numeric);
BRIDGELAB_DEFINE_ERROR(ELConsistencyError, Numeric);
BRIDGELAB_DEFINE_ERROR(TransportError, Numeric);
BRIDGELAB_DEFINE_ERROR(GridError, Numeric);
BRIDGELAB_DEFINE_ERROR(NegativityError, Numeric);
BRIDGELAB_DEFINE_ERROR(KernelMismatchError, Numeric);
BRIDGELAB_DEFINE_ERROR(ProjectionError, Numeric);
BRIDGELAB_DEFINE_ERROR(NearestPointError, Numeric);
BRIDGELAB_DEFINE_ERROR(IoError, Io);

#undef BRIDGELAB_DEFINE_ERROR

}  // namespace bridgelab
