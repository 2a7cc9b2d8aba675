#pragma once

#include <stdexcept>
#include <string>

namespace nrsi {

// Invalid arguments, modes, ranks, or mutually inconsistent configuration.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Dimension mismatch between tensors, matrices, or vocabularies.
struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad or empty input data.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Failure to read or write a file or stream.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nrsi
