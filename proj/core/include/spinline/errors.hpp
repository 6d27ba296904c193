#pragma once

#include <stdexcept>
#include <string>

namespace spinline {

/// Base class for all spinline errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Config file cannot be parsed or is missing required keys. Carries the
/// source location when it refers to a concrete spot in the file.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0, int column = 0)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    static std::string format(const std::string& what, int line, int column) {
        if (line <= 0) return what;
        std::string s = "line " + std::to_string(line);
        if (column > 0) s += ", col " + std::to_string(column);
        return s + ": " + what;
    }
    int line_;
    int column_;
};

/// Electrostatic model is ill-posed (e.g. energy unbounded below).
class ModelError : public Error {
public:
    using Error::Error;
};

/// An operation was called outside its domain (e.g. cascaded readout on a
/// lateral double dot).
class UsageError : public Error {
public:
    using Error::Error;
};

/// A density matrix failed its validity checks.
class StateError : public Error {
public:
    using Error::Error;
};

/// Electron loading cannot reach the requested target. Names the DQD.
class LoadingError : public Error {
public:
    using Error::Error;
};

/// Heralded initialization exhausted its retry budget.
class InitializationError : public Error {
public:
    using Error::Error;
};

/// Fitting / statistics failure (empty histogram, no fringe, divergence).
class AnalysisError : public Error {
public:
    using Error::Error;
};

/// A calibration routine found no acceptable operating point.
class CalibrationError : public Error {
public:
    using Error::Error;
};

} // namespace spinline
