#pragma once

#include <stdexcept>
#include <string>

namespace wcreg {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error
{
public:
  using Error::Error;
};

/// Invalid parameters or configuration. The CLI maps this to exit code 2.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// prox requested with nu * rho_wc >= 1, where the minimiser need not be unique.
class NonproxableError : public Error
{
public:
  using Error::Error;
};

class InnerSolveError : public Error
{
public:
  InnerSolveError(const std::string& what, double residual)
    : Error(what), residual_(residual)
  {
  }
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

class CertificateError : public Error
{
public:
  using Error::Error;
};

class UnsupportedError : public Error
{
public:
  using Error::Error;
};

/// Iterates left the bounded region the convergence theory assumes.
class DivergenceError : public Error
{
public:
  using Error::Error;
};

/// A network parameter violates a structural constraint (negative ICNN propagation weight).
class StructureError : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

} // namespace wcreg
