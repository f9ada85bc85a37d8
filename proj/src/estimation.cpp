#include "skillscape/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <tuple>

#include "skillscape/errors.hpp"

namespace skillscape {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<PanelObservation> sorted_panel(const std::vector<PanelObservation>& panel) {
    auto rows = panel;
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.msa, a.year) < std::tie(b.msa, b.year);
    });
    return rows;
}

bool has_within_variation(const VectorXd& v, const Labels& groups) {
    const MatrixXd within = demean(v, {groups});
    return within.norm() > 1e-10 * std::max(v.norm(), 1e-300);
}

}  // namespace

LambdaEstimate estimate_lambda(const std::vector<PanelObservation>& panel) {
    if (panel.empty()) throw EstimationError("estimate_lambda: empty panel");
    const auto rows = sorted_panel(panel);
    const auto n = static_cast<Index>(rows.size());
    VectorXd y(n);
    MatrixXd X(n, 1);
    Labels msa;
    msa.reserve(rows.size());
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        y(i) = r.rent;
        X(i, 0) = r.w_unskilled;
        msa.push_back(r.msa);
    }
    std::set<std::string> multi_year;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].msa == rows[i - 1].msa) multi_year.insert(rows[i].msa);
    if (multi_year.empty() || !has_within_variation(X.col(0), msa)) {
        throw EstimationError("lambda unidentified with MSA FE: no within-MSA variation over years");
    }

    const FixedEffectsResult fe = fe_ols(y, X, {"w_unskilled"}, {msa}, msa);
    LambdaEstimate out;
    out.fit = fe.fit;
    out.lambda_hat = 1.0 - fe.fit.coef(0);
    out.se = fe.fit.se(0);
    out.pvalue = out.se > 0.0 ? t_pvalue(out.lambda_hat / out.se, fe.fit.n_clusters - 1) : 0.0;
    double mean = 0.0;
    for (const auto& [label, value] : fe.effects[0]) mean += value;
    mean /= static_cast<double>(fe.effects[0].size());
    for (const auto& [label, value] : fe.effects[0]) out.amenities.emplace(label, value - mean);
    return out;
}

std::vector<std::pair<std::string, double>> amenity_ranking(const std::map<std::string, double>& amenities,
                                                            std::size_t k, bool top) {
    std::vector<std::pair<std::string, double>> v(amenities.begin(), amenities.end());
    std::stable_sort(v.begin(), v.end(), [top](const auto& a, const auto& b) {
        return top ? a.second > b.second : a.second < b.second;
    });
    if (v.size() > k) v.resize(k);
    return v;
}

double lambda_from_shares(double unskilled, double total) {
    if (!(total > 0.0)) throw EstimationError("lambda_from_shares: total must be positive");
    if (unskilled < 0.0 || unskilled > total) throw EstimationError("lambda_from_shares: unskilled outside [0, total]");
    return unskilled / total;
}

double signaling_residual(const ResidualInputs& in) {
    if (!(in.p_stay > 0.0) || !(in.p_move > 0.0)) return kNaN;
    return std::log(in.p_stay / in.p_move) - (in.w_origin - in.w_dest) + in.lambda * (in.pn_origin - in.pn_dest) +
           (in.ph_origin - in.ph_dest) - (in.a_origin - in.a_dest);
}

ResidualBuild build_signaling_residuals(const std::vector<PanelObservation>& panel,
                                        const std::vector<MigrationFlow>& flows, double lambda,
                                        const std::map<std::string, double>& amenities) {
    std::map<std::pair<std::string, int>, const PanelObservation*> lookup;
    for (const auto& r : panel) lookup.emplace(std::make_pair(r.msa, r.year), &r);

    auto sorted = flows;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return std::tie(a.year, a.origin, a.dest) < std::tie(b.year, b.origin, b.dest);
    });

    ResidualBuild out;
    std::size_t begin = 0;
    while (begin < sorted.size()) {
        std::size_t end = begin;
        double total = 0.0;
        double stay = 0.0;
        while (end < sorted.size() && sorted[end].year == sorted[begin].year &&
               sorted[end].origin == sorted[begin].origin) {
            total += sorted[end].count;
            if (sorted[end].dest == sorted[end].origin) stay += sorted[end].count;
            ++end;
        }
        const int year = sorted[begin].year;
        const std::string& origin = sorted[begin].origin;
        const auto o_row = lookup.find({origin, year});
        const auto o_amen = amenities.find(origin);
        for (std::size_t i = begin; i < end; ++i) {
            const auto& f = sorted[i];
            if (f.dest == f.origin) continue;
            ++out.diagnostics.pairs;
            const auto d_row = lookup.find({f.dest, year});
            const auto d_amen = amenities.find(f.dest);
            if (o_row == lookup.end() || d_row == lookup.end() || o_amen == amenities.end() ||
                d_amen == amenities.end()) {
                ++out.diagnostics.dropped_missing_panel;
                continue;
            }
            if (!(f.count > 0.0) || !(stay > 0.0)) {
                ++out.diagnostics.dropped_zero_share;
                continue;
            }
            const PanelObservation& o = *o_row->second;
            const PanelObservation& d = *d_row->second;
            ResidualInputs in;
            in.p_stay = stay / total;
            in.p_move = f.count / total;
            in.w_origin = o.w_skilled;
            in.w_dest = d.w_skilled;
            in.pn_origin = o.w_unskilled;
            in.pn_dest = d.w_unskilled;
            in.ph_origin = o.rent;
            in.ph_dest = d.rent;
            in.a_origin = o_amen->second;
            in.a_dest = d_amen->second;
            in.lambda = lambda;
            const double res = signaling_residual(in);
            if (!(res > 0.0)) {
                ++out.diagnostics.dropped_nonpositive;
                continue;
            }
            out.observations.push_back({year, origin, f.dest, res, o.college_frac});
        }
        begin = end;
    }
    return out;
}

SignalingEstimate estimate_signaling(const std::vector<SignalingObservation>& observations) {
    std::vector<const SignalingObservation*> usable;
    for (const auto& o : observations)
        if (o.residual > 0.0 && o.delta_origin > 0.0) usable.push_back(&o);
    if (usable.empty()) throw EstimationError("no usable observations");

    std::set<int> year_set;
    for (const auto* o : usable) year_set.insert(o->year);
    const std::vector<int> years(year_set.begin(), year_set.end());

    const auto n = static_cast<Index>(usable.size());
    const auto n_years = static_cast<Index>(years.size());
    VectorXd y(n);
    MatrixXd X = MatrixXd::Zero(n, n_years + 1);
    Labels cluster;
    cluster.reserve(usable.size());
    for (Index i = 0; i < n; ++i) {
        const auto* o = usable[static_cast<std::size_t>(i)];
        y(i) = std::log(o->residual);
        const auto t = std::lower_bound(years.begin(), years.end(), o->year) - years.begin();
        X(i, t) = 1.0;
        X(i, n_years) = std::log(o->delta_origin);
        cluster.push_back(o->origin);
    }
    std::vector<std::string> names;
    for (int year : years) names.push_back("zeta_" + std::to_string(year));
    names.push_back("ln_delta");

    SignalingEstimate out;
    out.fit = ols(y, X, names, cluster);
    out.gamma_hat = -out.fit.coef(n_years);
    out.gamma_se = out.fit.se(n_years);
    out.gamma_pvalue = out.fit.pvalue(n_years);
    for (Index t = 0; t < n_years; ++t) {
        const int year = years[static_cast<std::size_t>(t)];
        const double zeta = std::exp(out.fit.coef(t));
        out.zeta[year] = zeta;
        out.zeta_se[year] = zeta * out.fit.se(t);
        out.zeta_pvalue[year] = out.fit.pvalue(t);
    }
    return out;
}

AgglomerationEstimate estimate_agglomeration(const std::vector<PanelObservation>& panel) {
    if (panel.empty()) throw EstimationError("estimate_agglomeration: empty panel");
    const auto rows = sorted_panel(panel);
    const auto n = static_cast<Index>(rows.size());
    VectorXd y(n);
    MatrixXd X(n, 1);
    Labels msa;
    Labels year;
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        if (!(r.w_skilled > 0.0)) throw EstimationError("estimate_agglomeration: nonpositive skilled wage");
        y(i) = std::log(r.w_skilled);
        X(i, 0) = std::log(r.college_frac);
        msa.push_back(r.msa);
        year.push_back(std::to_string(r.year));
    }
    if (!has_within_variation(X.col(0), msa)) throw EstimationError("gamma_agg unidentified under MSA FE");

    AgglomerationEstimate out;
    out.fit = fe_ols(y, X, {"ln_delta"}, {msa, year}, msa);
    out.gamma_agg_hat = out.fit.fit.coef(0);
    out.se = out.fit.fit.se(0);
    out.pvalue = out.fit.fit.pvalue(0);
    return out;
}

EstimationResult estimate_all(const std::vector<PanelObservation>& panel, const std::vector<MigrationFlow>& flows) {
    EstimationResult r;
    const LambdaEstimate lam = estimate_lambda(panel);
    r.lambda_hat = lam.lambda_hat;
    r.amenities = lam.amenities;
    r.std_errors["lambda"] = lam.se;
    r.pvalues["lambda"] = lam.pvalue;
    r.r2_lambda = lam.fit.r2;

    const ResidualBuild res = build_signaling_residuals(panel, flows, lam.lambda_hat, lam.amenities);
    r.residuals = res.diagnostics;
    const SignalingEstimate sig = estimate_signaling(res.observations);
    r.gamma_hat = sig.gamma_hat;
    r.std_errors["gamma"] = sig.gamma_se;
    r.pvalues["gamma"] = sig.gamma_pvalue;
    r.zeta_hat = sig.zeta;
    for (const auto& [year, se] : sig.zeta_se) {
        r.std_errors["zeta_" + std::to_string(year)] = se;
        r.pvalues["zeta_" + std::to_string(year)] = sig.zeta_pvalue.at(year);
    }
    r.r2_signaling = sig.fit.r2;

    const AgglomerationEstimate agg = estimate_agglomeration(panel);
    r.gamma_agg_hat = agg.gamma_agg_hat;
    r.std_errors["gamma_agg"] = agg.se;
    r.pvalues["gamma_agg"] = agg.pvalue;
    r.r2_agglomeration = agg.fit.fit.r2;
    return r;
}

std::vector<EstimateRow> estimate_table(const EstimationResult& r) {
    std::vector<EstimateRow> rows;
    rows.push_back({"lambda", r.lambda_hat, r.std_errors.at("lambda"), r.pvalues.at("lambda")});
    rows.push_back({"gamma", r.gamma_hat, r.std_errors.at("gamma"), r.pvalues.at("gamma")});
    rows.push_back({"gamma_agg", r.gamma_agg_hat, r.std_errors.at("gamma_agg"), r.pvalues.at("gamma_agg")});
    for (const auto& [year, zeta] : r.zeta_hat) {
        const std::string key = "zeta_" + std::to_string(year);
        rows.push_back({key, zeta, r.std_errors.at(key), r.pvalues.at(key)});
    }
    return rows;
}

void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows) {
    out << "param,estimate,se,pvalue\n";
    for (const auto& r : rows)
        out << r.param << ',' << format_double(r.estimate) << ',' << format_double(r.se) << ','
            << format_double(r.pvalue) << '\n';
}

void write_amenities(std::ostream& out, const std::map<std::string, double>& amenities) {
    out << "msa,amenity\n";
    for (const auto& [msa, a] : amenities) out << msa << ',' << format_double(a) << '\n';
}

double dollar_impact(double zeta, double gamma_sig, double delta_p20, double delta_p80, double unit_scale) {
    if (!(delta_p20 > 0.0 && delta_p20 <= delta_p80 && delta_p80 < 1.0)) {
        throw EstimationError("dollar_impact: need 0 < delta_p20 <= delta_p80 < 1");
    }
    return zeta * (std::pow(delta_p20, -gamma_sig) - std::pow(delta_p80, -gamma_sig)) * unit_scale;
}

double agglomeration_dollar_impact(double gamma_agg, double delta_p20, double delta_p80, double base_wage) {
    if (!(delta_p20 > 0.0 && delta_p20 <= delta_p80 && delta_p80 < 1.0)) {
        throw EstimationError("agglomeration_dollar_impact: need 0 < delta_p20 <= delta_p80 < 1");
    }
    if (!(base_wage > 0.0)) throw EstimationError("agglomeration_dollar_impact: base wage must be positive");
    return base_wage * (std::pow(delta_p80 / delta_p20, gamma_agg) - 1.0);
}

double implied_base_wage(double gamma_agg, double delta_p20, double delta_p80, double impact) {
    const double factor = std::pow(delta_p80 / delta_p20, gamma_agg) - 1.0;
    if (!(factor > 0.0)) throw EstimationError("implied_base_wage: no wage response to recover from");
    return impact / factor;
}

double unit_scale(double base_wage, double anchor_base_wage, double anchor_units, double anchor_dollars) {
    if (!(base_wage > 0.0 && anchor_base_wage > 0.0 && anchor_units > 0.0)) {
        throw EstimationError("unit_scale: base wages and anchor units must be positive");
    }
    return anchor_dollars / anchor_units * (base_wage / anchor_base_wage);
}

}  // namespace skillscape
