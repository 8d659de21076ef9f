#pragma once

#include <stdexcept>
#include <string>

namespace uvband {

// Error taxonomy mirrored by the CLI exit codes: validation failures are
// user-fixable input problems, inconsistency means the engine detected a
// numerically impossible result (e.g. dual bound above the primal beyond
// noise), io covers file-system trouble.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct RangeError : Error {
    using Error::Error;
};

struct AlignmentError : Error {
    using Error::Error;
};

struct UnsupportedError : Error {
    using Error::Error;
};

struct InconsistencyError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace uvband
