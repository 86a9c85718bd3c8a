#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace superscar {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A coordinate fell outside the declared domain of a surface.
class DomainError : public Error {
public:
    DomainError(std::string coordinate, double value, const std::string& what)
        : Error(what), coordinate_(std::move(coordinate)), value_(value) {}
    const std::string& coordinate() const { return coordinate_; }
    double value() const { return value_; }

private:
    std::string coordinate_;
    double value_;
};

/// Malformed coefficient or config text.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// No bracketed radial minimum while tracing the minimum energy path.
class PathError : public Error {
public:
    PathError(double theta, const std::string& what) : Error(what), theta_(theta) {}
    double theta() const { return theta_; }

private:
    double theta_;
};

/// A precondition of an operation was violated by its caller.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Trajectory left the section budget without crossing.
class EscapeError : public Error {
public:
    using Error::Error;
};

/// A section point does not lift to a real radial momentum at this energy.
class ForbiddenError : public Error {
public:
    using Error::Error;
};

/// Newton-type iteration failed; carries the residual history.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}
    const std::vector<double>& residuals() const { return residuals_; }

private:
    std::vector<double> residuals_;
};

/// Grid cannot represent the requested field (tails outside box, etc.).
class GridError : public Error {
public:
    using Error::Error;
};

/// Field energy content outside the propagator's resolved range.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Width undefined or fit input invalid.
class DataError : public Error {
public:
    using Error::Error;
};

/// A pipeline could not collect enough samples.
class PipelineError : public Error {
public:
    using Error::Error;
};

/// Config rejected; `path` names the offending field.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// A required artifact is missing; `stage` names the stage to rerun.
class DependencyError : public Error {
public:
    DependencyError(std::string stage, const std::string& what)
        : Error(what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

} // namespace superscar
