#pragma once

#include <Eigen/Dense>

#include "skillscape/tensor.hpp"

namespace skillscape {

// Everything the Frechet choice block needs for one evaluation. Cells of
// `omega` may hold -infinity for options that can never be learned about.
struct ChoiceInputs {
    Tensor3 omega;              // effective wage, origin x major x destination
    Eigen::VectorXd p_n;        // non-tradable price by destination
    Eigen::VectorXd p_h;        // housing price by destination
    Eigen::VectorXd amenity;    // a_c
    Eigen::MatrixXd moving_cost;  // d, origin x destination
    Tensor3 taste;              // T, origin x major x destination
    double theta = 1.0;
    double lambda = 0.0;
};

struct MarketPotential {
    Eigen::VectorXd phi;
    Eigen::VectorXd log_phi;
};

// omega = mu_p - (sigma2_xi + post_var)/2 - tuition for college cells, p_n otherwise.
// Infinite posterior variance maps to -infinity.
double effective_wage(double post_mean, double sigma2_xi, double post_var, double tuition, double p_n,
                      bool is_college);

// Two-skill effective wage with the composite signal penalty:
//   rho*h*delta_dest^gamma_agg - sigma2_tilde - zeta_tilde*delta_origin^-gamma_sig*(1 + tau*[c != c0]) - tuition
struct SimplifiedWageInputs {
    double rho = 0.0;
    double h = 1.0;
    double delta_dest = 0.0;
    double gamma_agg = 0.0;
    double sigma2_tilde = 0.0;
    double zeta_tilde = 0.0;
    double gamma_sig = 0.0;
    double tau = 0.0;
    double delta_origin = 0.0;
    bool is_origin = true;
    double tuition = 0.0;
};
double simplified_effective_wage(const SimplifiedWageInputs& in);

// theta * (omega - lambda p_n - p_h + a - d) for one cell.
double utility_argument(const ChoiceInputs& in, std::size_t origin, std::size_t major, std::size_t dest);

// P(c, m | c0); each origin's slice sums to one. Throws ModelError if some
// origin has no option with finite utility.
Tensor3 choice_probabilities(const ChoiceInputs& in);

// Phi_{c0}: the denominator of choice_probabilities, in level and in logs.
MarketPotential market_potential(const ChoiceInputs& in);

// v = Xi * Phi^(1/theta).
double college_value(double phi, double theta, double xi);

// (1 - lambda) p_n + a - p_h - d for every destination.
Eigen::VectorXd unskilled_value(double lambda, const Eigen::VectorXd& p_n, const Eigen::VectorXd& amenity,
                                const Eigen::VectorXd& p_h, const Eigen::VectorXd& moving_cost_row);

}  // namespace skillscape
