// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace eyesynth {

/// Parameter or recipe outside its documented support. Maps to CLI exit code 1.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Missing or unreadable asset file. Carries the offending path.
class AssetError : public std::runtime_error {
public:
    AssetError(const std::string& path, const std::string& what)
        : std::runtime_error(what + ": " + path), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Malformed or unsupported file contents (PNG, RGBE, JSON schema).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Broken internal invariant, e.g. NaN radiance. Rendering aborts.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace eyesynth
