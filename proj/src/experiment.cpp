#include "skillscape/experiment.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "skillscape/errors.hpp"
#include "skillscape/panel.hpp"

namespace skillscape {

namespace {

using Eigen::Index;

void check_inputs(const Eigen::VectorXd& delta, const PhiTildeInputs& in) {
    const Index n = delta.size();
    if (in.rho_h.size() != n || in.p_n.size() != n || in.p_h.size() != n || in.amenity.size() != n) {
        throw ModelError("phi_tilde: dimension mismatch");
    }
    for (Index c = 0; c < n; ++c) {
        if (!(delta(c) >= 0.0 && delta(c) <= 1.0)) throw ModelError("phi_tilde: college fraction outside [0,1]");
        if (delta(c) == 0.0 && in.zeta > 0.0) throw ModelError("infinite penalty in linearized measure");
    }
}

}  // namespace

double equalize_skills(const Eigen::VectorXd& delta, const Eigen::VectorXd& population) {
    if (delta.size() != population.size() || delta.size() == 0) throw ModelError("equalize_skills: dimension mismatch");
    if ((population.array() <= 0.0).any()) throw ModelError("equalize_skills: populations must be positive");
    return delta.dot(population) / population.sum();
}

double phi_tilde(const Eigen::VectorXd& delta, std::size_t origin, const PhiTildeInputs& in) {
    check_inputs(delta, in);
    const auto o = static_cast<Index>(origin);
    if (o >= delta.size()) throw ModelError("phi_tilde: origin out of range");
    const double penalty = in.zeta > 0.0 ? in.zeta * std::pow(delta(o), -in.gamma_sig) : 0.0;
    double total = 0.0;
    for (Index c = 0; c < delta.size(); ++c) {
        total += in.rho_h(c) * std::pow(delta(c), in.gamma_agg) - in.lambda * in.p_n(c) - in.p_h(c) + in.amenity(c);
        if (c != o) total -= penalty;
    }
    return total;
}

CounterfactualReport redistribution_impact(const Eigen::VectorXd& delta, const Eigen::VectorXd& population,
                                           const PhiTildeInputs& in, int year) {
    CounterfactualReport rep;
    rep.year = year;
    rep.delta_bar = equalize_skills(delta, population);
    const Eigen::VectorXd equal = Eigen::VectorXd::Constant(delta.size(), rep.delta_bar);
    PhiTildeInputs no_signal = in;
    no_signal.zeta = 0.0;

    const double agglomeration = phi_tilde(equal, 0, no_signal) - phi_tilde(delta, 0, no_signal);
    for (Index o = 0; o < delta.size(); ++o) {
        const auto origin = static_cast<std::size_t>(o);
        CounterfactualRow row;
        row.origin = origin;
        row.delta_initial = delta(o);
        row.dphi_total = phi_tilde(equal, origin, in) - phi_tilde(delta, origin, in);
        row.dphi_agglomeration = agglomeration;
        row.dphi_signaling = row.dphi_total - row.dphi_agglomeration;
        rep.rows.push_back(row);
    }
    return rep;
}

void write_counterfactual(std::ostream& out, const std::vector<CounterfactualReport>& reports,
                          const std::vector<std::string>& labels) {
    out << "year,origin,delta_initial,dphi_total,dphi_agglomeration,dphi_signaling\n";
    for (const auto& rep : reports) {
        for (const auto& r : rep.rows) {
            const std::string label = r.origin < labels.size() ? labels[r.origin] : std::to_string(r.origin);
            out << rep.year << ',' << label << ',' << format_double(r.delta_initial) << ','
                << format_double(r.dphi_total) << ',' << format_double(r.dphi_agglomeration) << ','
                << format_double(r.dphi_signaling) << '\n';
        }
    }
}

}  // namespace skillscape
