#pragma once

#include <stdexcept>
#include <string>

namespace vtg {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A parameter or argument lies outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// ||C'(u)|| fell below the singularity tolerance.
class SingularParameterizationError : public Error {
public:
    using Error::Error;
};

/// A weight sum became non-positive during rational evaluation.
class InvalidWeightsError : public Error {
public:
    using Error::Error;
};

/// Too few (distinct) points survive preprocessing for the requested fit.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// ||S_u x S_v|| vanished at a queried surface point.
class DegenerateSurfaceError : public Error {
public:
    using Error::Error;
};

/// Newton correction produced a chord at or below the minimum-segment floor.
class StepTooShortError : public Error {
public:
    StepTooShortError(const std::string& what, double chord_mm, double floor_mm)
        : Error(what), chord(chord_mm), floor(floor_mm) {}
    double chord;  // mm
    double floor;  // mm, tau * L_i
};

/// Newton derivative vanished and a perturbed retry also stalled.
class NewtonStalledError : public Error {
public:
    using Error::Error;
};

/// Newton correction exhausted its iteration budget outside tolerance.
class NewtonNotConvergedError : public Error {
public:
    NewtonNotConvergedError(const std::string& what, double u, double chord_mm, int iters)
        : Error(what), best_u(u), best_chord(chord_mm), iterations(iters) {}
    double best_u;
    double best_chord;  // mm
    int iterations;
};

/// The curvature cap cannot be met even at the minimum step length.
class CurvatureInfeasibleError : public Error {
public:
    CurvatureInfeasibleError(const std::string& what, double lo, double hi)
        : Error(what), u_lo(lo), u_hi(hi) {}
    double u_lo;
    double u_hi;
};

/// Time integration produced a non-finite state.
class IntegrationDivergedError : public Error {
public:
    IntegrationDivergedError(const std::string& what, std::size_t at_step)
        : Error(what), step(at_step) {}
    std::size_t step;
};

/// Lexical or structural error in an input file. Column is 0 when the error
/// is not tied to a specific character.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line_no, int column_no = 0)
        : Error(what), line(line_no), column(column_no) {}
    int line;
    int column;
};

/// Invalid or unknown content in a configuration file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace vtg
