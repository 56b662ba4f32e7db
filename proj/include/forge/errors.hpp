#pragma once

#include <stdexcept>
#include <string>

namespace forge {

/// Base class for all recoverable errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyMask : Error {
    explicit EmptyMask(const std::string& msg = "mask has no foreground pixel") : Error(msg) {}
};

struct OutOfBounds : Error {
    explicit OutOfBounds(const std::string& msg) : Error(msg) {}
};

struct MalformedMarkup : Error {
    explicit MalformedMarkup(const std::string& msg) : Error(msg) {}
};

struct ObjectOutsideRoom : Error {
    explicit ObjectOutsideRoom(const std::string& msg) : Error(msg) {}
};

struct UnknownId : Error {
    explicit UnknownId(const std::string& msg) : Error(msg) {}
};

struct DegenerateGeometry : Error {
    explicit DegenerateGeometry(const std::string& msg) : Error(msg) {}
};

struct UnsupportedAction : Error {
    explicit UnsupportedAction(const std::string& msg) : Error(msg) {}
};

struct RejectedFailedTrajectory : Error {
    explicit RejectedFailedTrajectory(const std::string& msg = "trajectory did not succeed") : Error(msg) {}
};

struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& msg) : Error(msg) {}
};

struct NonFiniteActivation : Error {
    explicit NonFiniteActivation(const std::string& msg) : Error(msg) {}
};

struct EmptyDataset : Error {
    explicit EmptyDataset(const std::string& msg = "dataset is empty") : Error(msg) {}
};

struct UnknownKind : Error {
    explicit UnknownKind(const std::string& msg) : Error(msg) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

}  // namespace forge
