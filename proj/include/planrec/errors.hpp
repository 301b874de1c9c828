#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace planrec {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written, or its contents could not be decoded.
class IoError : public Error {
public:
    using Error::Error;
};

/// Bad parameter, configuration or mapping.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// No candidate explanation survives an observation.
class RecognitionError : public Error {
public:
    RecognitionError(std::size_t obs_index, const std::string& what)
        : Error(what), obs_index_(obs_index) {}

    std::size_t obs_index() const noexcept { return obs_index_; }

private:
    std::size_t obs_index_;
};

/// The brute-force enumerator refused an instance that is too large.
class GuardExceeded : public Error {
public:
    using Error::Error;
};

}  // namespace planrec
