#pragma once

#include <stdexcept>
#include <string>

namespace chunkbench {

// Data/validation failures: malformed files, bad configs, broken invariants.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Remote embedding service failures (transport, HTTP status, bad payload).
class RemoteError : public Error {
public:
    explicit RemoteError(const std::string& what) : Error(what) {}
};

} // namespace chunkbench
