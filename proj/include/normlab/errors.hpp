#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace normlab {

// Exception taxonomy mirrors the CLI exit-code contract:
//   2 parse failure, 3 invalid input, 4 infeasible construction,
//   5 missing artifact.

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibleConstruction : public std::runtime_error {
public:
    InfeasibleConstruction(const std::string& what, std::string violated)
        : std::runtime_error(what), violated_(std::move(violated)) {}

    // The inequality (as text) that could not be satisfied.
    const std::string& violated_inequality() const { return violated_; }

private:
    std::string violated_;
};

class MissingArtifact : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace normlab
