#pragma once

#include <stdexcept>
#include <string>

namespace mvmae {

// Error taxonomy shared by every module. The CLI maps each family onto an
// exit code (usage 1, validation/parse/io 2, numerical 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace mvmae
