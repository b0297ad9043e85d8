#pragma once

#include <stdexcept>
#include <string>

namespace layoutkit {

// Configuration / validation problems: bad config keys, malformed corpus
// files, invariant violations in inputs. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Failures while executing a validated run (divergence, I/O mid-run,
// internal contract breaks). Maps to exit code 3.
class RuntimeError : public std::runtime_error {
public:
    explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace layoutkit
