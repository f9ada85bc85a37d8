#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skillscape/choice.hpp"
#include "skillscape/panel.hpp"
#include "skillscape/tensor.hpp"

namespace skillscape {

// Inverse CDF of F(z) = exp(-T z^-theta). Throws ModelError unless u is in (0, 1).
double frechet_sample(double taste_scale, double theta, double u);
double frechet_cdf(double z, double taste_scale, double theta);

struct AgentSimulation {
    Tensor3 counts;  // origin x major x destination
    Tensor3 shares;  // counts / agents per origin
    std::uint64_t agents_per_origin = 0;
};

// Every agent draws one Frechet shock per (major, destination) cell from its
// own substream and takes the argmax of log shock + utility argument / theta.
// Results do not depend on `threads`.
AgentSimulation simulate_agents(const ChoiceInputs& in, std::uint64_t agents_per_origin, std::uint64_t seed,
                                unsigned threads = 1);

struct NoiseSpec {
    double rent = 0.01;   // sd relative to rent
    double wage = 0.01;   // sd relative to both wage columns
    double share = 0.1;   // log sd of migration counts
};

struct GeneratorSpec {
    std::uint64_t seed = 7;
    int n_cities = 200;
    int n_majors = 1;
    double n_agents_per_city = 1e6;
    NoiseSpec noise;
    std::vector<int> years{1980, 1990, 2000};

    double lambda = 0.703;
    double gamma_sig = 0.61;
    std::vector<double> zeta{7.26, 7.59, 8.03};  // one per year
    double gamma_agg = 0.22;
    double kappa_h = 0.15;
    double gamma_h = 0.3;
    double unskilled_value = 0.0;

    double rho_h_scale = 30.0;
    double rho_h_log_sd = 0.1;
    double amenity_sd = 0.5;
    double delta_lo = 0.12;
    double delta_hi = 0.40;
    double delta_drift = 0.1;     // log college fraction growth per period
    double delta_log_sd = 0.1;    // idiosyncratic log college fraction shock per period
    double log_pop_mean = 12.0;
    double log_pop_sd = 1.0;
    double log_pop_growth = 0.1;  // per period
    double log_pop_within_sd = 0.3;
    double wage_growth = 0.05;    // log skilled wage shifter per period
};

// Throws ConfigError on an invalid spec.
void validate_generator(const GeneratorSpec& spec);

struct GeneratedData {
    std::vector<PanelObservation> panel;  // sorted by (msa, year)
    std::vector<MigrationFlow> flows;     // sorted by (year, origin, dest)
    std::map<std::string, double> truth;  // flat generating parameters
};

std::string city_label(int index, int n_cities);

GeneratedData generate_panel(const GeneratorSpec& spec);

// Writes panel.csv, migration.csv and truth.json into `dir`.
void write_generated(const std::filesystem::path& dir, const GeneratedData& data);
std::map<std::string, double> read_truth(const std::filesystem::path& path);

// dist_a' * transition * dist_b.
double occupational_similarity(const Eigen::VectorXd& dist_a, const Eigen::MatrixXd& transition,
                               const Eigen::VectorXd& dist_b);

}  // namespace skillscape
