#pragma once

#include <stdexcept>
#include <string>

namespace gradsel {

// All library failures are reported as Error with the name of the module
// that raised it, so the CLI can print a single structured line.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& message)
        : std::runtime_error(message), module_(std::move(module)) {}

    const std::string& module() const { return module_; }

private:
    std::string module_;
};

[[noreturn]] inline void fail(const std::string& module, const std::string& message) {
    throw Error(module, message);
}

}  // namespace gradsel
