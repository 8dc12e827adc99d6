#pragma once

#include <stdexcept>
#include <string>

namespace lbcsim {

/// Base of every structured error the library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or inconsistent input: config files, dimensions, bad brackets.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dense linear algebra failure: singular pivot, asymmetric eigensolver input,
/// non-finite derivative feeding the integrator.
class NumericsError : public Error {
public:
    using Error::Error;
};

/// Network construction/reduction failure: islanded generators, singular
/// eliminated block, zero terminal voltage.
class NetworkError : public Error {
public:
    using Error::Error;
};

/// Controller degeneracy: excitation channel with vanishing gain, reheater
/// power below the feedback floor.
class ControlError : public Error {
public:
    using Error::Error;
};

/// No equilibrium satisfies the requested operating point.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// State became non-finite during integration; carries the blow-up time.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double t) : Error(what), time(t) {}
    double time = 0.0;
};

} // namespace lbcsim
