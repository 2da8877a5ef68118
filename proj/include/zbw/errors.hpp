#pragma once

#include <stdexcept>
#include <string>

namespace zbw {

// Base class for all library errors. The CLI maps error kinds to exit codes:
// config/usage problems exit 2, violated invariants and domain errors exit 1.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Input outside an operation's mathematical domain (non-null vector where a
// null one is required, singular decomposition, inconsistent mode, ...).
class domain_error : public error {
public:
    explicit domain_error(const std::string& what) : error(what) {}
};

// A runtime invariant check failed (rotor drifted too far, conserved
// quantity off, non-convergence of an iteration).
class invariant_error : public error {
public:
    explicit invariant_error(const std::string& what) : error(what) {}
};

// Malformed or out-of-range configuration / CLI input.
class config_error : public error {
public:
    explicit config_error(const std::string& what) : error(what) {}
};

} // namespace zbw
