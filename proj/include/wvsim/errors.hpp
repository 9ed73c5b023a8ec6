#pragma once
#include <stdexcept>
#include <string>

namespace wvsim {

/// Base class for all domain errors thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// |<psi_f|psi_in>| below the orthogonality tolerance; the weak value is undefined.
class OrthogonalPostselection : public Error {
public:
  using Error::Error;
};

/// State and observable dimensions disagree.
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

/// A constructor or operation precondition was violated.
class InvalidParameter : public Error {
public:
  using Error::Error;
};

/// Postselection annihilated the profile (unnormalized mass below 1e-300).
class ZeroMass : public Error {
public:
  using Error::Error;
};

/// Coherence width too small for the closed form (gamma < 1e-6).
class DegeneratePointer : public Error {
public:
  using Error::Error;
};

/// Profile has no usable maximum (max - min below 1e-12 of max).
class FlatProfile : public Error {
public:
  using Error::Error;
};

/// |<A>| below 1e-15 um; amplification undefined.
class ZeroExpectation : public Error {
public:
  using Error::Error;
};

/// Profiles live on different grids.
class GridMismatch : public Error {
public:
  using Error::Error;
};

/// Doubling the quadrature nodes still changes the result beyond tolerance.
class QuadratureUnderResolved : public Error {
public:
  using Error::Error;
};

/// A shifted coordinate fell outside the density-matrix grid.
class InterpolationOutOfRange : public Error {
public:
  using Error::Error;
};

/// Fewer than 100 speckle realizations requested for a correlation estimate.
class InsufficientRealizations : public Error {
public:
  using Error::Error;
};

/// Gaussian width fit failed (no lobe, non-Gaussian shape, or RMSE > 0.2).
class FitDiverged : public Error {
public:
  using Error::Error;
};

/// File could not be opened or written.
class IoFailure : public Error {
public:
  using Error::Error;
};

}  // namespace wvsim
