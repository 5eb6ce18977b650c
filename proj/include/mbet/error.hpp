#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mbet {

/// Invalid input data: bad dimensions, violated scenario invariants, malformed files.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}

    ValidationError(std::vector<std::string> issues)
        : std::invalid_argument(join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out;
        for (const auto& s : issues) {
            if (!out.empty()) out += "\n";
            out += s;
        }
        return out;
    }

    std::vector<std::string> issues_;
};

/// A numerical routine could not deliver its accuracy contract.
class NumericsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The simulation reached a state it cannot continue from (Zeno guard, exhausted script).
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mbet
