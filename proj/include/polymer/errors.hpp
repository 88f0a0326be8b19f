#pragma once

#include <stdexcept>
#include <string>

namespace polymer {

// Error taxonomy used across the library. Every failure mode surfaced by the
// public API is one of these; anything else escaping is a bug.

struct CapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfRegion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegionTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedEvent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PreconditionViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LayoutInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InadmissibleSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateSample : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace polymer
