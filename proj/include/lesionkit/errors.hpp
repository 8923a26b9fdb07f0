#pragma once

#include <stdexcept>
#include <string>

namespace lesionkit {

// File could not be read or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File contents are not what the reader expects (image codec, model file,
// manifest CSV).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A configuration value is outside its allowed range.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor or parameter shapes disagree.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values or a linear system that cannot be solved.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset ingestion or splitting failed.
struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A required upstream artifact (model file, manifest, image) is absent.
struct MissingArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lesionkit
