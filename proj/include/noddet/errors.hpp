#pragma once

#include <stdexcept>
#include <string>

namespace noddet {

// Domain error taxonomy. Argument-contract violations use std::invalid_argument.
struct GenerationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateRoi : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyMinibatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace noddet
