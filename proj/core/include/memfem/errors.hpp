#pragma once

#include <stdexcept>
#include <string>

namespace memfem {

// Error taxonomy. The three branches map onto process exit codes:
//   ConfigError  -> 2 (bad user input: config values, mesh spec, expressions)
//   NumericError -> 3 (a numerical invariant or solver contract failed)
//   IoError      -> 4 (filesystem / artifact format problems)
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// ---- config / input validation ----------------------------------------------

// Mesh request is structurally invalid (n < 1, malformed box, bad band width).
struct InvalidMeshSpec : ConfigError {
    using ConfigError::ConfigError;
};

// Rectangle corner does not lie on a grid line.
struct SnapError : ConfigError {
    using ConfigError::ConfigError;
};

// Geometric preconditions violated (inclusion separation, band overlap,
// band touching the outer boundary, empty conductor core).
struct GeometryError : ConfigError {
    using ConfigError::ConfigError;
};

// A coefficient map does not cover a region label present in the mesh.
struct CoefficientError : ConfigError {
    using ConfigError::ConfigError;
};

// A sampled field contains a non-finite value.
struct InvalidField : ConfigError {
    using ConfigError::ConfigError;
};

// Expression rejected at parse time or produced a non-finite value when
// evaluated. Carries the byte offset into the source text.
struct EvalError : ConfigError {
    EvalError(const std::string& msg, std::size_t byte_offset)
        : ConfigError(msg + " (byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// ---- numerical contracts ------------------------------------------------------

struct SolveReport {
    int iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;   // relative to ||b||
    bool converged = false;
};

struct SolverDiverged : NumericError {
    SolverDiverged(const std::string& msg, SolveReport r)
        : NumericError(msg), report(r) {}
    SolveReport report;
};

// Preconditioner cannot be formed (non-positive diagonal entry).
struct PreconditionerError : NumericError {
    using NumericError::NumericError;
};

// Right-hand side of a pure-Neumann surface solve is not compatible
// (component sum exceeds tolerance relative to the source norm).
struct IncompatibleSource : NumericError {
    using NumericError::NumericError;
};

// Flux-constants matrix is numerically singular.
struct SingularConstantsMatrix : NumericError {
    using NumericError::NumericError;
};

// A field handed to a flux evaluation does not solve the stated system.
struct StaleField : NumericError {
    using NumericError::NumericError;
};

// Fixed-point sweep failed to contract even at the smallest admissible window.
struct ContractionFailure : NumericError {
    using NumericError::NumericError;
};

// ---- I/O ----------------------------------------------------------------------

// Malformed mesh artifact. Carries the 1-based line number.
struct ParseError : IoError {
    ParseError(const std::string& msg, int line_number)
        : IoError(msg + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
    int line;
};

struct WriteError : IoError {
    using IoError::IoError;
};

// Exit code for the CLI given an escaped exception.
inline int exit_code_for(const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const NumericError*>(&e)) return 3;
    if (dynamic_cast<const IoError*>(&e)) return 4;
    return 3;
}

}  // namespace memfem
