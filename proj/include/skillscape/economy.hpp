#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skillscape/tensor.hpp"

namespace skillscape {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Structural parameters. Major slot 0 is "no college"; slots 1..n_majors are
// college majors, so every major axis has length n_majors + 1.
struct EconomyConfig {
    int n_cities = 0;
    int n_majors = 0;

    double lambda = 0.0;        // non-tradable expenditure share
    double theta = 0.0;         // Frechet dispersion
    std::optional<double> xi_override;  // college-value constant; default Gamma(1 - 1/theta)
    double kappa_obs = 0.0;     // wage observations per student
    double sigma2_xi = 0.0;     // wage variance
    double sigma2_xihat = 0.0;  // signal noise variance
    double gamma_sig = 0.0;     // signaling elasticity
    double zeta_tilde = 0.0;    // composite signal-cost scale
    double tau = 0.0;           // non-origin signal attenuation
    double gamma_agg = 0.0;     // agglomeration elasticity
    double gamma_h = 0.0;       // housing supply elasticity
    double kappa_h = 0.0;       // housing price scale
    double total_pop = 0.0;

    MatrixXd tuition;  // origin x major slot

    // Optional per-cell replacement for (sigma2_xi + sigma2_xihat), origin x major x destination.
    std::optional<Tensor3> signal_variance;

    int n_slots() const { return n_majors + 1; }

    // Xi used by the college-value map.
    double xi() const;

    // Total signal variance for one cell, honouring the per-cell override.
    double cell_signal_variance(int origin, int major, int dest) const;
};

struct CityPrimitives {
    VectorXd productivity;   // rho_c
    VectorXd amenity;        // a_c
    Tensor3 match_quality;   // h, origin x major x destination
    MatrixXd endowment;      // initial workers, city x major slot
    MatrixXd moving_cost;    // origin x destination
    Tensor3 taste_scale;     // T, origin x major x destination

    // Optional previous-generation data: population (cohort weights) and
    // migration matrix used for signals in one-generation mode.
    std::optional<VectorXd> population;
    std::optional<MatrixXd> migration;

    // Builds h_{c0 m c} = h_c for every origin and major.
    static Tensor3 collapsed_match_quality(const VectorXd& per_city, int n_slots);
};

struct Violation {
    std::string field;
    std::string message;
    double value = 0.0;
};

enum class CostMode { general, no_migration_costs };
enum class TasteMode { general, unit };

struct ValidationOptions {
    CostMode cost_mode = CostMode::general;
    TasteMode taste_mode = TasteMode::general;
};

std::vector<Violation> validate_config(const EconomyConfig& config, const CityPrimitives& cities,
                                       const ValidationOptions& options = {});

// Throws ConfigError listing every violation.
void ensure_valid(const EconomyConfig& config, const CityPrimitives& cities,
                  const ValidationOptions& options = {});

// Gamma(1 - 1/theta); the expectation constant of a unit Frechet maximum.
double xi_constant(double theta);

std::string describe(const std::vector<Violation>& violations);

}  // namespace skillscape
