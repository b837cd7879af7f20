#pragma once

#include <stdexcept>
#include <string>

namespace audformer {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: DataError -> 2, NumericError -> 3, anything CLI-usage related -> 1.

// Shape/axis/dimension mismatches between tensors or layers.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Problems with external inputs: files, manifests, wav decoding, caches.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric divergence (NaN/Inf loss) or invalid numeric configuration.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace audformer
