#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mda {

// Error categories. The CLI maps each category onto an exit code, so every
// library failure should be thrown as one of these.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct ParameterError : Error {
    using Error::Error;
};

struct InsufficientSamplesError : Error {
    using Error::Error;
};

struct DegenerateError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct UsageError : Error {
    using Error::Error;
};

struct DivergenceError : Error {
    DivergenceError(const std::string& what, std::size_t step)
        : Error(what), step(step) {}
    std::size_t step;
};

} // namespace mda
