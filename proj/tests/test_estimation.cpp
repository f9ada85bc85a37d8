#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "skillscape/datagen.hpp"
#include "skillscape/errors.hpp"
#include "skillscape/estimation.hpp"
#include "skillscape/regression.hpp"

using namespace skillscape;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Design {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    Labels cluster;
    Labels group_a;
    Labels group_b;
};

Design random_design(std::uint64_t seed, int n, int p, int clusters) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> norm(0.0, 1.0);
    Design d;
    d.X.resize(n, p);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const int g = i % clusters;
        d.cluster.push_back("g" + std::to_string(g));
        d.group_a.push_back("a" + std::to_string(g));
        d.group_b.push_back("b" + std::to_string(i % 3));
        for (int k = 0; k < p; ++k) d.X(i, k) = norm(gen) + 0.3 * g;
        d.y(i) = 1.0 + d.X.row(i).sum() + 0.5 * g + norm(gen);
    }
    return d;
}

std::vector<std::string> names_for(int p) {
    std::vector<std::string> n;
    for (int k = 0; k < p; ++k) n.push_back("x" + std::to_string(k));
    return n;
}

// Cluster-robust sandwich with CR1 scaling, assembled with explicit inverses.
Eigen::MatrixXd cr1_oracle(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Labels& cluster, int extra) {
    const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
    const Eigen::VectorXd beta = bread * X.transpose() * y;
    const Eigen::VectorXd e = y - X * beta;
    std::map<std::string, Eigen::VectorXd> scores;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        auto it = scores.try_emplace(cluster[static_cast<std::size_t>(i)], Eigen::VectorXd::Zero(X.cols())).first;
        it->second += X.row(i).transpose() * e(i);
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    for (const auto& [g, s] : scores) meat += s * s.transpose();
    const double G = static_cast<double>(scores.size());
    const double N = static_cast<double>(X.rows());
    const double K = static_cast<double>(X.cols() + extra);
    return bread * meat * bread * (G / (G - 1.0)) * ((N - 1.0) / (N - K));
}

Eigen::MatrixXd with_dummies(const Eigen::MatrixXd& X, const std::vector<Labels>& groups) {
    std::vector<std::vector<std::string>> levels;
    Eigen::Index extra = 0;
    for (std::size_t d = 0; d < groups.size(); ++d) {
        std::set<std::string> s(groups[d].begin(), groups[d].end());
        levels.emplace_back(s.begin(), s.end());
        extra += static_cast<Eigen::Index>(s.size()) - (d == 0 ? 0 : 1);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), X.cols() + extra);
    out.leftCols(X.cols()) = X;
    Eigen::Index col = X.cols();
    for (std::size_t d = 0; d < groups.size(); ++d) {
        for (std::size_t l = d == 0 ? 0 : 1; l < levels[d].size(); ++l, ++col)
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                out(i, col) = groups[d][static_cast<std::size_t>(i)] == levels[d][l] ? 1.0 : 0.0;
    }
    return out;
}

GeneratedData noiseless_panel(std::uint64_t seed = 7) {
    GeneratorSpec g;
    g.seed = seed;
    g.noise = {0.0, 0.0, 0.0};
    return generate_panel(g);
}

}  // namespace

TEST_CASE("ols on an exact line", "[regression]") {
    Eigen::MatrixXd X(6, 1);
    X << 1, 2, 3, 4, 5, 6;
    const Eigen::VectorXd y = 2.0 * X.col(0);
    const auto r = ols(y, X, {"x"}, {"a", "a", "b", "b", "c", "c"});
    CHECK_THAT(r.coefficient("x"), WithinAbs(2.0, 1e-14));
    CHECK_THAT(r.std_error("x"), WithinAbs(0.0, 1e-12));
}

TEST_CASE("ols matches the normal-equations and sandwich oracles", "[regression]") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Design d = random_design(seed, 120, 3, 12);
        Eigen::MatrixXd X(120, 4);
        X << Eigen::VectorXd::Ones(120), d.X;
        const auto r = ols(d.y, X, {"const", "x0", "x1", "x2"}, d.cluster);
        const Eigen::MatrixXd XtX_inv = (X.transpose() * X).inverse();
        const Eigen::VectorXd beta = XtX_inv * X.transpose() * d.y;
        CHECK((r.coef - beta).cwiseAbs().maxCoeff() <= 1e-10);
        const Eigen::MatrixXd V = cr1_oracle(d.y, X, d.cluster, 0);
        CHECK((r.vcov - V).cwiseAbs().maxCoeff() <= 1e-10 * V.cwiseAbs().maxCoeff());
        CHECK(r.n_clusters == 12);
        const Eigen::VectorXd e = d.y - X * beta;
        const double tss = (d.y.array() - d.y.mean()).square().sum();
        CHECK_THAT(r.r2, WithinAbs(1.0 - e.squaredNorm() / tss, 1e-12));
    }
}

TEST_CASE("singleton clusters reproduce HC1", "[regression]") {
    Design d = random_design(3, 60, 2, 60);
    Labels singles;
    for (int i = 0; i < 60; ++i) singles.push_back(std::to_string(i));
    const auto r = ols(d.y, d.X, names_for(2), singles);
    const Eigen::MatrixXd bread = (d.X.transpose() * d.X).inverse();
    const Eigen::VectorXd e = d.y - d.X * (bread * d.X.transpose() * d.y);
    const Eigen::MatrixXd meat = d.X.transpose() * e.array().square().matrix().asDiagonal() * d.X;
    const Eigen::MatrixXd hc1 = bread * meat * bread * (60.0 / 58.0);
    CHECK((r.vcov - hc1).cwiseAbs().maxCoeff() <= 1e-12 * hc1.cwiseAbs().maxCoeff());
}

TEST_CASE("ols rejects collinear designs", "[regression]") {
    Design d = random_design(2, 40, 2, 8);
    Eigen::MatrixXd X(40, 3);
    X << d.X, d.X.col(0) * 2.0;
    CHECK_THROWS_WITH(ols(d.y, X, {"a", "b", "c"}, d.cluster), ContainsSubstring("rank deficient"));
}

TEST_CASE("t_pvalue", "[regression]") {
    CHECK_THAT(t_pvalue(2.228138851986, 10), WithinAbs(0.05, 1e-9));
    CHECK_THAT(t_pvalue(0.0, 5), WithinAbs(1.0, 1e-15));
    CHECK(t_pvalue(-3.0, 7) == t_pvalue(3.0, 7));
}

TEST_CASE("demean removes group means", "[regression]") {
    Design d = random_design(4, 90, 2, 9);
    const Eigen::MatrixXd one = demean(d.X, {d.group_a});
    std::map<std::string, Eigen::RowVectorXd> sums;
    for (Eigen::Index i = 0; i < 90; ++i) {
        auto it = sums.try_emplace(d.group_a[static_cast<std::size_t>(i)], Eigen::RowVectorXd::Zero(2)).first;
        it->second += one.row(i);
    }
    for (const auto& [g, s] : sums) CHECK(s.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fe_ols matches dummy-variable regression", "[regression]") {
    Design d = random_design(5, 150, 2, 10);
    for (std::size_t dims = 1; dims <= 2; ++dims) {
        std::vector<Labels> groups{d.group_a};
        if (dims == 2) groups.push_back(d.group_b);
        const auto fe = fe_ols(d.y, d.X, names_for(2), groups, d.cluster);
        const Eigen::MatrixXd D = with_dummies(d.X, groups);
        const Eigen::VectorXd beta = (D.transpose() * D).inverse() * D.transpose() * d.y;
        const Eigen::MatrixXd V = cr1_oracle(d.y, D, d.cluster, 0);
        INFO("fixed-effect dimensions " << dims);
        for (int k = 0; k < 2; ++k) {
            CHECK_THAT(fe.fit.coef(k), WithinAbs(beta(k), 1e-9));
            CHECK_THAT(fe.fit.se(k), WithinRel(std::sqrt(V(k, k)), 1e-8));
        }
    }
}

TEST_CASE("shifting y within one group moves only that fixed effect", "[regression]") {
    Design d = random_design(6, 80, 1, 8);
    const auto base = fe_ols(d.y, d.X, {"x"}, {d.group_a}, d.cluster);
    Eigen::VectorXd y2 = d.y;
    for (Eigen::Index i = 0; i < 80; ++i)
        if (d.group_a[static_cast<std::size_t>(i)] == "a3") y2(i) += 5.0;
    const auto shifted = fe_ols(y2, d.X, {"x"}, {d.group_a}, d.cluster);
    CHECK_THAT(shifted.fit.coef(0), WithinAbs(base.fit.coef(0), 1e-10));
    for (const auto& [label, value] : base.effects[0]) {
        const double expected = label == "a3" ? value + 5.0 : value;
        CHECK_THAT(shifted.effects[0].at(label), WithinAbs(expected, 1e-9));
    }
}

TEST_CASE("fe_ols rejects a regressor absorbed by the fixed effects", "[regression]") {
    Design d = random_design(7, 60, 1, 6);
    Eigen::MatrixXd X(60, 1);
    for (Eigen::Index i = 0; i < 60; ++i) X(i, 0) = static_cast<double>(i % 6);
    CHECK_THROWS_WITH(fe_ols(d.y, X, {"x"}, {d.group_a}, d.cluster), ContainsSubstring("no variation"));
}

TEST_CASE("lambda recovery from a noiseless panel", "[estimation]") {
    const GeneratedData data = noiseless_panel();
    const LambdaEstimate est = estimate_lambda(data.panel);
    CHECK_THAT(est.lambda_hat, WithinAbs(0.703, 1e-10));

    double shift = 0.0;
    bool first = true;
    for (const auto& [msa, a] : est.amenities) {
        const double diff = a - data.truth.at("amenity_" + msa);
        if (first) shift = diff;
        first = false;
        CHECK_THAT(diff, WithinAbs(shift, 1e-8));
    }
    const auto top = amenity_ranking(est.amenities, 3, true);
    const auto bottom = amenity_ranking(est.amenities, 3, false);
    REQUIRE(top.size() == 3);
    CHECK(top[0].second >= top[1].second);
    CHECK(bottom[0].second <= bottom[1].second);
    CHECK(top[0].second >= bottom[0].second);
}

TEST_CASE("lambda recovery with rent noise", "[estimation]") {
    GeneratorSpec g;
    g.noise = {0.01, 0.0, 0.0};
    const LambdaEstimate est = estimate_lambda(generate_panel(g).panel);
    CHECK_THAT(est.lambda_hat, WithinAbs(0.703, 0.02));
}

TEST_CASE("lambda is unidentified without within-MSA variation", "[estimation]") {
    auto panel = noiseless_panel().panel;
    for (auto& r : panel) r.w_unskilled = std::hash<std::string>{}(r.msa) % 97;
    CHECK_THROWS_WITH(estimate_lambda(panel), ContainsSubstring("lambda unidentified"));
}

TEST_CASE("lambda_from_shares", "[estimation]") {
    CHECK_THAT(lambda_from_shares(70.3, 100.0), WithinAbs(0.703, 1e-15));
    CHECK_THROWS_AS(lambda_from_shares(1.0, 0.0), EstimationError);
}

TEST_CASE("signaling residual", "[estimation]") {
    ResidualInputs sym;
    sym.p_stay = sym.p_move = 0.2;
    sym.w_origin = sym.w_dest = 3.0;
    sym.lambda = 0.7;
    CHECK(signaling_residual(sym) == 0.0);

    const double zeta = 7.59, gamma = 0.61, delta = 0.21;
    ResidualInputs in;
    in.lambda = 0.703;
    in.w_origin = 40.0;
    in.w_dest = 43.0;
    in.pn_origin = 20.0;
    in.pn_dest = 22.0;
    in.ph_origin = 9.0;
    in.ph_dest = 11.5;
    in.a_origin = 0.4;
    in.a_dest = -0.3;
    const double log_ratio = (in.w_origin - in.w_dest) - in.lambda * (in.pn_origin - in.pn_dest) -
                             (in.ph_origin - in.ph_dest) + (in.a_origin - in.a_dest) + zeta * std::pow(delta, -gamma);
    in.p_move = 1e-3;
    in.p_stay = in.p_move * std::exp(log_ratio);
    CHECK_THAT(signaling_residual(in), WithinAbs(zeta * std::pow(delta, -gamma), 1e-10));

    ResidualInputs richer = in;
    richer.w_origin += 1.0;
    CHECK_THAT(signaling_residual(richer), WithinAbs(signaling_residual(in) - 1.0, 1e-12));
    ResidualInputs dest = in;
    dest.w_dest += 1.0;
    CHECK_THAT(signaling_residual(dest), WithinAbs(signaling_residual(in) + 1.0, 1e-12));

    in.p_move = 0.0;
    CHECK(std::isnan(signaling_residual(in)));
}

TEST_CASE("signaling recovery from noiseless flows", "[estimation]") {
    const GeneratedData data = noiseless_panel(3);
    const LambdaEstimate lam = estimate_lambda(data.panel);
    const ResidualBuild build = build_signaling_residuals(data.panel, data.flows, lam.lambda_hat, lam.amenities);
    CHECK(build.diagnostics.pairs == 200 * 199 * 3);
    CHECK(build.diagnostics.dropped_zero_share == 0);
    const SignalingEstimate s = estimate_signaling(build.observations);
    CHECK_THAT(s.gamma_hat, WithinAbs(0.61, 0.02));
    CHECK_THAT(s.zeta.at(1980), WithinAbs(7.26, 0.02));
    CHECK_THAT(s.zeta.at(1990), WithinAbs(7.59, 0.02));
    CHECK_THAT(s.zeta.at(2000), WithinAbs(8.03, 0.02));
}

TEST_CASE("signaling needs variation in origin college fractions", "[estimation]") {
    std::vector<SignalingObservation> obs;
    for (int year : {1980, 1990})
        for (int o = 0; o < 5; ++o)
            for (int d = 0; d < 5; ++d)
                if (o != d) obs.push_back({year, "c" + std::to_string(o), "c" + std::to_string(d), 3.0 + 0.1 * d, 0.25});
    CHECK_THROWS_WITH(estimate_signaling(obs), ContainsSubstring("rank deficient"));
}

TEST_CASE("signaling estimate stays within the reported standard error across seeds", "[estimation][slow]") {
    int covered = 0;
    const int seeds = 100;
    for (int seed = 1; seed <= seeds; ++seed) {
        GeneratorSpec g;
        g.seed = static_cast<std::uint64_t>(seed);
        g.noise = {0.0, 0.0, 0.1};
        const GeneratedData data = generate_panel(g);
        const LambdaEstimate lam = estimate_lambda(data.panel);
        const auto build = build_signaling_residuals(data.panel, data.flows, lam.lambda_hat, lam.amenities);
        const SignalingEstimate s = estimate_signaling(build.observations);
        if (std::abs(s.gamma_hat - 0.61) <= 0.09) ++covered;
    }
    CHECK(covered >= 90);
}

TEST_CASE("agglomeration recovery and year invariance", "[estimation]") {
    const GeneratedData data = noiseless_panel(4);
    const AgglomerationEstimate a = estimate_agglomeration(data.panel);
    CHECK_THAT(a.gamma_agg_hat, WithinAbs(0.22, 0.02));

    auto shifted = data.panel;
    for (auto& r : shifted) r.w_skilled *= std::exp(0.3 * (r.year - 1980) / 10.0);
    const AgglomerationEstimate b = estimate_agglomeration(shifted);
    CHECK_THAT(b.gamma_agg_hat, WithinAbs(a.gamma_agg_hat, 1e-10));

    auto frozen = data.panel;
    std::map<std::string, double> first;
    for (auto& r : frozen) r.college_frac = first.try_emplace(r.msa, r.college_frac).first->second;
    CHECK_THROWS_WITH(estimate_agglomeration(frozen), ContainsSubstring("unidentified under MSA FE"));
}

TEST_CASE("noiseless pipeline recovers every parameter", "[estimation]") {
    const GeneratedData data = noiseless_panel(5);
    const EstimationResult r = estimate_all(data.panel, data.flows);
    CHECK_THAT(r.lambda_hat, WithinAbs(data.truth.at("lambda"), 1e-8));
    CHECK_THAT(r.gamma_hat, WithinAbs(data.truth.at("gamma"), 1e-8));
    CHECK_THAT(r.gamma_agg_hat, WithinAbs(data.truth.at("gamma_agg"), 1e-8));
    for (int year : {1980, 1990, 2000})
        CHECK_THAT(r.zeta_hat.at(year), WithinAbs(data.truth.at("zeta_" + std::to_string(year)), 1e-8));

    std::ostringstream out;
    write_estimates(out, estimate_table(r));
    std::istringstream lines(out.str());
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header == "param,estimate,se,pvalue");
    CHECK(first.rfind("lambda,", 0) == 0);
}

TEST_CASE("signaling dollar impact", "[estimation]") {
    const double units = dollar_impact(7.26, 0.61, 0.16, 0.26, 1.0);
    CHECK_THAT(units, WithinAbs(7.26 * (std::pow(0.16, -0.61) - std::pow(0.26, -0.61)), 1e-12));
    CHECK_THAT(units, WithinAbs(5.69, 0.01));
    CHECK(dollar_impact(7.26, 0.61, 0.2, 0.2, 1.0) == 0.0);
    CHECK(dollar_impact(7.59, 0.61, 0.16, 0.26, 1.0) > units);
    CHECK_THAT(dollar_impact(7.26, 0.61, 0.16, 0.26, 200.0), WithinRel(200.0 * units, 1e-15));
}

TEST_CASE("agglomeration dollar impact", "[estimation]") {
    const double impact = agglomeration_dollar_impact(0.22, 0.16, 0.26, 70000.0);
    CHECK_THAT(impact, WithinAbs(70000.0 * (std::pow(0.26 / 0.16, 0.22) - 1.0), 1e-9));
    CHECK_THAT(impact, WithinRel(7900.0, 0.02));
    CHECK(agglomeration_dollar_impact(0.22, 0.2, 0.2, 70000.0) == 0.0);
    CHECK(agglomeration_dollar_impact(0.0, 0.16, 0.26, 70000.0) == 0.0);
    const double base = implied_base_wage(0.22, 0.16, 0.26, 7900.0);
    CHECK_THAT(agglomeration_dollar_impact(0.22, 0.16, 0.26, base), WithinRel(7900.0, 1e-14));
}

TEST_CASE("unit_scale anchors and scales with the base wage", "[estimation]") {
    CHECK_THAT(unit_scale(70000.0, 70000.0, 5.0, 1200.0) * 5.0, WithinRel(1200.0, 1e-15));
    CHECK_THAT(unit_scale(140000.0, 70000.0, 5.0, 1200.0), WithinRel(480.0, 1e-15));
    CHECK_THROWS_AS(unit_scale(1.0, 0.0, 1.0, 1.0), EstimationError);
}
