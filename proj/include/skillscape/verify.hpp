#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "skillscape/datagen.hpp"
#include "skillscape/estimation.hpp"

namespace skillscape {

struct VerifyCheck {
    std::string param;
    double truth = 0.0;
    double estimate = 0.0;
    double error = 0.0;      // absolute, or relative when `relative`
    double tolerance = 0.0;
    bool relative = false;
    bool pass = false;
};

struct VerifyReport {
    GeneratedData data;
    EstimationResult estimates;
    std::vector<VerifyCheck> checks;

    bool all_pass() const;
};

// Generate from `spec`, estimate everything, compare with the truth:
// |lambda| <= 0.02, |gamma| <= 0.10, |gamma_agg| <= 0.05, zeta_t relative <= 5%.
VerifyReport run_verify(const GeneratorSpec& spec);

void write_verify_table(std::ostream& out, const VerifyReport& report);

}  // namespace skillscape
