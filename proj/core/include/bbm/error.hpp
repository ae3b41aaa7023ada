#pragma once

#include <stdexcept>
#include <string>

namespace bbm {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

/// Thrown by Population::advance_to when a branch would push the alive count
/// past max_particles. The population is left flagged as truncated and its
/// state at the truncation instant stays readable.
class PopulationBudgetExceeded : public Error {
public:
    using Error::Error;
};

class PruningForbidden : public Error {
public:
    using Error::Error;
};

class TruncatedPopulation : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DegenerateDesign : public Error {
public:
    using Error::Error;
};

}  // namespace bbm
