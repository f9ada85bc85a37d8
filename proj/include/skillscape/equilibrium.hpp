#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "skillscape/choice.hpp"
#include "skillscape/economy.hpp"
#include "skillscape/tensor.hpp"

namespace skillscape {

enum class SolverMode { one_generation, steady_state };
enum class InitKind { endowment, uniform, user };

struct EquilibriumState;

struct SolverSettings {
    double damping = 0.3;
    double tol = 1e-10;
    int max_iter = 10000;
    SolverMode mode = SolverMode::steady_state;
    InitKind init = InitKind::uniform;
    bool record_trace = false;
};

struct TraceRow {
    int iteration = 0;
    double population = 0.0;
    double skill_share = 0.0;
    double agg_index = 0.0;
    double migration = 0.0;
    double max = 0.0;
};

struct Convergence {
    bool converged = false;
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    std::vector<TraceRow> trace;
};

struct EquilibriumState {
    Tensor3 wages;            // w_{c0 m c}; slot 0 holds p_n
    Tensor3 posterior_var;    // Sigma^p per college cell (+inf when unobserved)
    VectorXd p_nontradable;
    VectorXd p_housing;
    VectorXd population;
    MatrixXd skill_share;     // city x major slot
    Tensor3 choice_prob;      // P(c, m | c0)
    MatrixXd migration;       // row-stochastic
    VectorXd market_potential;
    VectorXd log_market_potential;
    VectorXd reservation_value;  // unskilled value v_{c0}
    VectorXd college_value;      // Xi * Phi^(1/theta)
    MatrixXd agg_index;          // H_{cm}
    VectorXd cohort;             // students drawn from each origin
    double unskilled_value = 0.0;
    SolverMode mode = SolverMode::steady_state;
    Convergence convergence;
};

// p_h = kappa_h * L^gamma_h
double housing_price(double population, double kappa_h, double gamma_h);

// H_{cm} = (1/L_c) * sum over residents with major m of their match quality.
// `residents` counts workers by origin x major x destination (endowed workers
// are recorded with origin == destination). Cities with L_c = 0 get H = 0.
MatrixXd agglomeration_index(const Tensor3& residents, const Tensor3& match_quality, const VectorXd& population);

// w_{c0 m c} = rho_c * h_{c0 m c} * H_{cm}^gamma_agg for college slots; slot 0 is left at zero.
Tensor3 wages_from_productivity(const VectorXd& rho, const Tensor3& match_quality, const MatrixXd& agg_index,
                                double gamma_agg);

struct NontradableClearing {
    VectorXd p_n;
    double unskilled_value = 0.0;
    Tensor3 choice_prob;
};

// Finds the common unskilled value v such that, with p_n set from the
// unskilled indifference condition (1 - lambda) p_n + a - p_h = v, the mass of
// students choosing no college equals `unskilled_target`. `in.omega` must hold
// the college effective wages; its slot 0 and `in.p_n` are overwritten.
// Throws ModelError("nontradable clearing infeasible") if no such v exists.
NontradableClearing nontradable_price(ChoiceInputs& in, const VectorXd& cohort, double unskilled_target);

EquilibriumState solve_equilibrium(const EconomyConfig& config, const CityPrimitives& cities,
                                   const SolverSettings& settings,
                                   const std::optional<EquilibriumState>& initial = std::nullopt);

struct ResidualReport {
    std::vector<std::pair<std::string, double>> entries;

    double get(const std::string& name) const;
    double max() const;
};

// Re-evaluates every equilibrium condition from the stored state without
// reusing solver intermediates.
ResidualReport clearing_residuals(const EquilibriumState& state, const EconomyConfig& config,
                                  const CityPrimitives& cities);

// Effective wages and prices of a solved state, ready for choice_probabilities
// or simulate_agents.
ChoiceInputs choice_inputs_from_state(const EquilibriumState& state, const EconomyConfig& config,
                                      const CityPrimitives& cities);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

std::string to_string(SolverMode mode);
std::string to_string(InitKind init);
SolverMode parse_solver_mode(const std::string& text);
InitKind parse_init_kind(const std::string& text);

}  // namespace skillscape
