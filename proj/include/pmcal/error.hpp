#pragma once

#include <stdexcept>
#include <string>

namespace pmcal {

// Base for every error the toolkit raises deliberately.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters, mismatched grids, missing columns.
class ConfigError : public Error {
public:
    using Error::Error;
};

// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Not enough rows for a statistic or fit to be defined.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class SingularDesignError : public Error {
public:
    using Error::Error;
};

}  // namespace pmcal
