#pragma once

#include <stdexcept>
#include <string>

namespace voltcast {

// Error categories map 1:1 onto CLI exit codes (see tools/voltcast_main.cpp):
//   ConfigError -> 2, DataError -> 3, ModelError -> 4, ProviderError -> 5.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ProviderError : std::runtime_error {
    explicit ProviderError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace voltcast
