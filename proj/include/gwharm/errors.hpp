#pragma once

#include <stdexcept>
#include <string>

namespace gwharm {

class GwError : public std::runtime_error {
public:
  explicit GwError(const std::string& msg) : std::runtime_error(msg) {}
};

class ZeroOffspringError : public GwError {
public:
  using GwError::GwError;
};

class SubcriticalError : public GwError {
public:
  using GwError::GwError;
};

class DegenerateError : public GwError {
public:
  using GwError::GwError;
};

class NotNormalizedError : public GwError {
public:
  using GwError::GwError;
};

class ResourceLimitError : public GwError {
public:
  using GwError::GwError;
};

class DepthUnavailableError : public GwError {
public:
  using GwError::GwError;
};

class BadInitError : public GwError {
public:
  using GwError::GwError;
};

class BetaOneError : public GwError {
public:
  using GwError::GwError;
};

class DomainError : public GwError {
public:
  using GwError::GwError;
};

class RayExhaustedError : public GwError {
public:
  using GwError::GwError;
};

class StepLimitError : public GwError {
public:
  using GwError::GwError;
};

class ConfigError : public GwError {
public:
  using GwError::GwError;
};

class IoError : public GwError {
public:
  using GwError::GwError;
};

}  // namespace gwharm
