#include "skillscape/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "skillscape/panel.hpp"

namespace skillscape {

bool VerifyReport::all_pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

VerifyReport run_verify(const GeneratorSpec& spec) {
    VerifyReport rep;
    rep.data = generate_panel(spec);
    rep.estimates = estimate_all(rep.data.panel, rep.data.flows);

    const auto add = [&rep](const std::string& param, double truth, double estimate, double tol, bool relative) {
        VerifyCheck c;
        c.param = param;
        c.truth = truth;
        c.estimate = estimate;
        c.error = relative ? std::abs(estimate - truth) / std::abs(truth) : std::abs(estimate - truth);
        c.tolerance = tol;
        c.relative = relative;
        c.pass = c.error <= tol;
        rep.checks.push_back(c);
    };
    add("lambda", spec.lambda, rep.estimates.lambda_hat, 0.02, false);
    add("gamma", spec.gamma_sig, rep.estimates.gamma_hat, 0.10, false);
    add("gamma_agg", spec.gamma_agg, rep.estimates.gamma_agg_hat, 0.05, false);
    for (std::size_t t = 0; t < spec.years.size(); ++t) {
        const int year = spec.years[t];
        const auto it = rep.estimates.zeta_hat.find(year);
        const double est = it == rep.estimates.zeta_hat.end() ? std::nan("") : it->second;
        add("zeta_" + std::to_string(year), spec.zeta[t], est, 0.05, true);
    }
    return rep;
}

void write_verify_table(std::ostream& out, const VerifyReport& report) {
    out << "param,truth,estimate,error,tolerance,kind,result\n";
    for (const auto& c : report.checks) {
        out << c.param << ',' << format_double(c.truth) << ',' << format_double(c.estimate) << ','
            << format_double(c.error) << ',' << format_double(c.tolerance) << ','
            << (c.relative ? "relative" : "absolute") << ',' << (c.pass ? "PASS" : "FAIL") << '\n';
    }
}

}  // namespace skillscape
