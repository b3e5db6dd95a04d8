#pragma once

#include <stdexcept>
#include <string>

namespace eccnet {

/// Raised when tensor dimensions do not satisfy an operation's contract.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a weight manifest or blob cannot be turned into a backbone.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace eccnet
