#pragma once

#include <stdexcept>
#include <string>

namespace cbm {

// Error taxonomy maps onto CLI exit codes:
//   ValidationError / DomainError / ConfigError -> 1
//   ConvergenceError                            -> 2
//   IoError (incl. artifact version/integrity)  -> 3
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A spec invariant is violated (bad parameter, malformed table, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// An evaluation was requested outside its domain (r outside [0,O], ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Bad configuration input; message carries field name and, when parsed
// from text, the line number.
class ConfigError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int iterations, double final_gap)
        : Error(what), iterations(iterations), final_gap(final_gap) {}
    int iterations;
    double final_gap;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace cbm
