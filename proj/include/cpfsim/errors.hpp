#pragma once

#include <stdexcept>
#include <string>

namespace cpfsim {

/// Base class for every error raised by the library.
class CpfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested Hilbert-space dimension exceeds the dense-storage cap.
class CapacityError : public CpfError {
 public:
  using CpfError::CpfError;
};

class ShapeError : public CpfError {
 public:
  using CpfError::CpfError;
};

/// Eigensolver failure, non-finite entries, or a broken state invariant
/// (trace, positivity, Hermiticity).
class NumericsError : public CpfError {
 public:
  using CpfError::CpfError;
};

/// Kraus operators do not resolve the identity.
class CompletenessError : public CpfError {
 public:
  CompletenessError(const std::string& what, double residual)
      : CpfError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Measurement outcome with (numerically) zero probability; the post
/// measurement state is undefined.
class ZeroProbabilityOutcome : public CpfError {
 public:
  using CpfError::CpfError;
};

/// The conditioning outcome y never occurs, so P(.|y) is 0/0.
class DegeneratePostSelection : public CpfError {
 public:
  using CpfError::CpfError;
};

class ConfigError : public CpfError {
 public:
  using CpfError::CpfError;
};

/// Noise discretization step too coarse for the correlation time.
class StepSizeError : public CpfError {
 public:
  using CpfError::CpfError;
};

/// Dephasing rates requested at a zero of the coherence.
class SingularCoherence : public CpfError {
 public:
  using CpfError::CpfError;
};

}  // namespace cpfsim
