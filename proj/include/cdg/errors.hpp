#pragma once

#include <stdexcept>
#include <string>

namespace cdg {

// Argument errors are reported as std::invalid_argument throughout.

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file was readable but its contents are malformed.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cdg
