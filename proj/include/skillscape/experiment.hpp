#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace skillscape {

// Inputs to the linearised market-potential measure, held fixed across the
// redistribution.
struct PhiTildeInputs {
    Eigen::VectorXd rho_h;    // rho_c * h_c
    Eigen::VectorXd p_n;
    Eigen::VectorXd p_h;
    Eigen::VectorXd amenity;
    double gamma_agg = 0.0;
    double zeta = 0.0;
    double gamma_sig = 0.0;
    double lambda = 0.0;
};

// Population-weighted mean college fraction.
double equalize_skills(const Eigen::VectorXd& delta, const Eigen::VectorXd& population);

// Phi~_{c0} = sum_c [rho_h_c delta_c^gamma_agg - zeta [c != c0] delta_{c0}^-gamma - lambda p_n_c - p_h_c + a_c].
// The signal penalty is driven by the origin's college fraction.
double phi_tilde(const Eigen::VectorXd& delta, std::size_t origin, const PhiTildeInputs& in);

struct CounterfactualRow {
    std::size_t origin = 0;
    double delta_initial = 0.0;
    double dphi_total = 0.0;
    double dphi_agglomeration = 0.0;
    double dphi_signaling = 0.0;
};

struct CounterfactualReport {
    int year = 0;
    double delta_bar = 0.0;
    std::vector<CounterfactualRow> rows;
};

// Partial-equilibrium change in Phi~ from moving every city to delta_bar; the
// agglomeration part is the same computation with zeta = 0.
CounterfactualReport redistribution_impact(const Eigen::VectorXd& delta, const Eigen::VectorXd& population,
                                           const PhiTildeInputs& in, int year);

// Rows of several reports under one header. `labels` name the origins.
void write_counterfactual(std::ostream& out, const std::vector<CounterfactualReport>& reports,
                          const std::vector<std::string>& labels);

}  // namespace skillscape
