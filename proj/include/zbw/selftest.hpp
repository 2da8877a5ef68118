#pragma once

// Built-in invariant suite: fast deterministic checks over every module,
// followed by the documented-discrepancy report comparing tabulated values
// against the governing formulas wherever the two disagree.

#include <iosfwd>

#include "zbw/config.hpp"

namespace zbw::io {

struct SelftestCounts {
    int passed = 0;
    int failed = 0;
    int notes = 0;  // documented discrepancies (reported, not failures)
};

SelftestCounts run_selftest(std::ostream& out, const RunConfig& cfg);

}  // namespace zbw::io
