#pragma once

#include <stdexcept>
#include <string>

namespace hybrideval {

/// Failure category. Each maps onto one CLI exit code.
enum class ErrorKind {
    Data = 2,         // pools, manifests, sizing
    Predictions = 3,  // prediction files and metric inputs
    Projection = 4,   // embeddings, projector parameters
    Report = 5,       // missing inputs, unwritable outputs
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

}  // namespace hybrideval
