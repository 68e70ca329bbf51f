#pragma once

#include <cstdlib>
#include <string>

#include "nnreach/errors.hpp"

namespace nnreach {

/// Numerical thresholds shared by the geometry and marching code.
/// Point evaluation of the network never uses these.
struct Tolerances {
    double zero = 1e-10;  ///< normal treated as zero below this 2-norm
    double dup = 1e-8;    ///< componentwise match for duplicate constraints
    double lp = 1e-7;     ///< redundancy / emptiness margin on LP optima
    double rank = 1e-10;  ///< relative singular value cutoff for invertibility

    /// Defaults overridden by NNREACH_EPS_ZERO, NNREACH_EPS_DUP, NNREACH_EPS_LP,
    /// NNREACH_EPS_RANK when set.
    static Tolerances from_env() {
        Tolerances t;
        read("NNREACH_EPS_ZERO", t.zero);
        read("NNREACH_EPS_DUP", t.dup);
        read("NNREACH_EPS_LP", t.lp);
        read("NNREACH_EPS_RANK", t.rank);
        return t;
    }

private:
    static void read(const char* name, double& value) {
        const char* raw = std::getenv(name);
        if (raw == nullptr || *raw == '\0') return;
        char* end = nullptr;
        double parsed = std::strtod(raw, &end);
        if (end == raw || *end != '\0' || !(parsed > 0.0))
            throw ParseError(std::string("expected a positive number, got '") + raw + "'", 0, name);
        value = parsed;
    }
};

}  // namespace nnreach
