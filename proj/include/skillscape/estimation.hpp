#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "skillscape/panel.hpp"
#include "skillscape/regression.hpp"

namespace skillscape {

struct LambdaEstimate {
    double lambda_hat = 0.0;
    double se = 0.0;
    double pvalue = 0.0;
    std::map<std::string, double> amenities;  // mean zero across MSAs
    RegressionResult fit;
};

// rent = (1 - lambda) * w_unskilled + a_msa + e with MSA fixed effects,
// clustered by MSA.
LambdaEstimate estimate_lambda(const std::vector<PanelObservation>& panel);

// Highest (top = true) or lowest k amenities, ties broken by label.
std::vector<std::pair<std::string, double>> amenity_ranking(const std::map<std::string, double>& amenities,
                                                            std::size_t k, bool top);

// Aggregate unskilled share L_0 / L.
double lambda_from_shares(double unskilled, double total);

struct ResidualInputs {
    double p_stay = 0.0;  // P(c0 | c0)
    double p_move = 0.0;  // P(c | c0)
    double w_origin = 0.0;
    double w_dest = 0.0;
    double pn_origin = 0.0;
    double pn_dest = 0.0;
    double ph_origin = 0.0;
    double ph_dest = 0.0;
    double a_origin = 0.0;
    double a_dest = 0.0;
    double lambda = 0.0;
};

// ln(P(c0|c0)/P(c|c0)) - (w_c0 - w_c) + lambda (pn_c0 - pn_c) + (ph_c0 - ph_c) - (a_c0 - a_c).
// Returns NaN when either probability is not positive.
double signaling_residual(const ResidualInputs& in);

struct SignalingObservation {
    int year = 0;
    std::string origin;
    std::string dest;
    double residual = 0.0;
    double delta_origin = 0.0;
};

struct ResidualDiagnostics {
    int pairs = 0;
    int dropped_zero_share = 0;
    int dropped_nonpositive = 0;
    int dropped_missing_panel = 0;
};

struct ResidualBuild {
    std::vector<SignalingObservation> observations;
    ResidualDiagnostics diagnostics;
};

// Forms Res for every (year, origin, dest != origin) flow. Rows are processed
// in (year, origin, dest) order.
ResidualBuild build_signaling_residuals(const std::vector<PanelObservation>& panel,
                                        const std::vector<MigrationFlow>& flows, double lambda,
                                        const std::map<std::string, double>& amenities);

struct SignalingEstimate {
    double gamma_hat = 0.0;
    double gamma_se = 0.0;
    double gamma_pvalue = 0.0;
    std::map<int, double> zeta;
    std::map<int, double> zeta_se;  // delta method
    std::map<int, double> zeta_pvalue;
    RegressionResult fit;
};

// ln Res = sum_t b_t [year = t] - gamma ln delta_origin, clustered by origin.
// Observations with Res <= 0 are ignored.
SignalingEstimate estimate_signaling(const std::vector<SignalingObservation>& observations);

struct AgglomerationEstimate {
    double gamma_agg_hat = 0.0;
    double se = 0.0;
    double pvalue = 0.0;
    FixedEffectsResult fit;
};

// ln w_skilled = FE_msa + FE_year + gamma_agg ln college_frac, clustered by MSA.
AgglomerationEstimate estimate_agglomeration(const std::vector<PanelObservation>& panel);

struct EstimationResult {
    double lambda_hat = 0.0;
    std::map<std::string, double> amenities;
    std::map<int, double> zeta_hat;
    double gamma_hat = 0.0;
    double gamma_agg_hat = 0.0;
    std::map<std::string, double> std_errors;
    std::map<std::string, double> pvalues;
    ResidualDiagnostics residuals;
    double r2_lambda = 0.0;
    double r2_signaling = 0.0;
    double r2_agglomeration = 0.0;
};

EstimationResult estimate_all(const std::vector<PanelObservation>& panel, const std::vector<MigrationFlow>& flows);

struct EstimateRow {
    std::string param;
    double estimate = 0.0;
    double se = 0.0;
    double pvalue = 0.0;
};

// lambda, gamma, gamma_agg, zeta_<year>... in that order.
std::vector<EstimateRow> estimate_table(const EstimationResult& result);
void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows);
void write_amenities(std::ostream& out, const std::map<std::string, double>& amenities);

// zeta * (d20^-gamma - d80^-gamma) * unit_scale
double dollar_impact(double zeta, double gamma_sig, double delta_p20, double delta_p80, double unit_scale);

// base_wage * ((d80 / d20)^gamma_agg - 1)
double agglomeration_dollar_impact(double gamma_agg, double delta_p20, double delta_p80, double base_wage);

// Base wage at which agglomeration_dollar_impact returns `impact`.
double implied_base_wage(double gamma_agg, double delta_p20, double delta_p80, double impact);

// Dollars per model unit in a year whose base wage is `base_wage`: scales
// with the base wage and maps `anchor_units` to `anchor_dollars` in the
// anchor year.
double unit_scale(double base_wage, double anchor_base_wage, double anchor_units, double anchor_dollars);

}  // namespace skillscape
