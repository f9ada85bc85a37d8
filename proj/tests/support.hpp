#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "skillscape/choice.hpp"
#include "skillscape/economy.hpp"
#include "skillscape/equilibrium.hpp"
#include "skillscape/tensor.hpp"

namespace skillscape::testing {

struct Fixture {
    EconomyConfig economy;
    CityPrimitives cities;
    SolverSettings solver;
};

inline Fixture random_fixture(std::uint64_t seed, int n_cities, int n_majors = 2) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> norm(0.0, 1.0);
    const int C = n_cities;
    const int S = n_majors + 1;

    Fixture f;
    EconomyConfig& e = f.economy;
    e.n_cities = C;
    e.n_majors = n_majors;
    e.lambda = 0.6 + 0.2 * unif(gen);
    e.theta = 2.0;
    e.kappa_obs = 500.0;
    e.sigma2_xi = 0.5;
    e.sigma2_xihat = 0.5;
    e.gamma_sig = 0.6;
    e.zeta_tilde = 1.0;
    e.gamma_agg = 0.2;
    e.gamma_h = 0.3;
    e.kappa_h = 0.5;
    e.total_pop = 1.0;
    e.tuition = Eigen::MatrixXd::Zero(C, S);
    e.tuition.rightCols(n_majors).setConstant(0.1);

    CityPrimitives& c = f.cities;
    c.productivity.resize(C);
    c.amenity.resize(C);
    for (int k = 0; k < C; ++k) {
        c.productivity(k) = 1.0 + 2.0 * unif(gen);
        c.amenity(k) = 0.2 * norm(gen);
    }
    c.match_quality = CityPrimitives::collapsed_match_quality(Eigen::VectorXd::Ones(C), S);
    c.endowment = Eigen::MatrixXd::Zero(C, S);
    for (int k = 0; k < C; ++k)
        for (int m = 0; m < S; ++m) c.endowment(k, m) = 0.01 / C / S * unif(gen);
    c.moving_cost = Eigen::MatrixXd::Zero(C, C);
    c.taste_scale = Tensor3(static_cast<std::size_t>(C), static_cast<std::size_t>(S), static_cast<std::size_t>(C), 1.0);

    f.solver.init = seed % 2 ? InitKind::uniform : InitKind::endowment;
    return f;
}

inline Fixture two_identical_cities() {
    Fixture f = random_fixture(1, 2);
    f.economy.lambda = 0.7;
    f.cities.productivity.setConstant(2.0);
    f.cities.amenity.setZero();
    f.cities.endowment.setZero();
    f.solver.init = InitKind::uniform;
    return f;
}

// Three cities, two majors, heterogeneous tastes and moving costs.
inline ChoiceInputs choice_fixture() {
    const std::size_t C = 3, S = 3;
    ChoiceInputs in;
    in.theta = 2.0;
    in.lambda = 0.7;
    in.omega = Tensor3(C, S, C);
    in.taste = Tensor3(C, S, C);
    in.p_n = Eigen::Vector3d(1.2, 1.0, 1.4);
    in.p_h = Eigen::Vector3d(0.3, 0.25, 0.4);
    in.amenity = Eigen::Vector3d(0.1, -0.2, 0.05);
    in.moving_cost = Eigen::Matrix3d{{0.0, 0.3, 0.5}, {0.2, 0.0, 0.4}, {0.6, 0.1, 0.0}};
    for (std::size_t o = 0; o < C; ++o)
        for (std::size_t m = 0; m < S; ++m)
            for (std::size_t d = 0; d < C; ++d) {
                in.omega(o, m, d) = m == 0 ? in.p_n(static_cast<Eigen::Index>(d))
                                           : 0.8 + 0.3 * static_cast<double>(m) + 0.15 * static_cast<double>(d) -
                                                 0.1 * static_cast<double>(o);
                in.taste(o, m, d) = 0.5 + 0.25 * static_cast<double>((o + 2 * m + d) % 4);
            }
    return in;
}

// Closed-form logit shares computed from the raw inputs.
inline double logit_oracle(const ChoiceInputs& in, std::size_t o, std::size_t m, std::size_t d) {
    const auto value = [&](std::size_t mm, std::size_t dd) {
        const auto di = static_cast<Eigen::Index>(dd);
        return in.omega(o, mm, dd) - in.lambda * in.p_n(di) - in.p_h(di) + in.amenity(di) -
               in.moving_cost(static_cast<Eigen::Index>(o), di);
    };
    double denom = 0.0;
    for (std::size_t mm = 0; mm < in.omega.dim(1); ++mm)
        for (std::size_t dd = 0; dd < in.omega.dim(2); ++dd)
            denom += in.taste(o, mm, dd) * std::exp(in.theta * value(mm, dd));
    return in.taste(o, m, d) * std::exp(in.theta * value(m, d)) / denom;
}

// Monte Carlo argmax: inverse-CDF Frechet shocks times exp(systematic utility).
inline Tensor3 monte_carlo_oracle(const ChoiceInputs& in, std::uint64_t agents, std::uint64_t seed) {
    const std::size_t C = in.omega.dim(0), S = in.omega.dim(1), D = in.omega.dim(2);
    Tensor3 shares(C, S, D);
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t o = 0; o < C; ++o) {
        for (std::uint64_t a = 0; a < agents; ++a) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t bm = 0, bd = 0;
            for (std::size_t m = 0; m < S; ++m)
                for (std::size_t d = 0; d < D; ++d) {
                    double u = unif(gen);
                    while (u <= 0.0) u = unif(gen);
                    const double z = std::pow(-std::log(u) / in.taste(o, m, d), -1.0 / in.theta);
                    const auto di = static_cast<Eigen::Index>(d);
                    const double v = in.omega(o, m, d) - in.lambda * in.p_n(di) - in.p_h(di) + in.amenity(di) -
                                     in.moving_cost(static_cast<Eigen::Index>(o), di);
                    const double util = std::log(z) + v;
                    if (util > best) {
                        best = util;
                        bm = m;
                        bd = d;
                    }
                }
            shares(o, bm, bd) += 1.0;
        }
        for (std::size_t m = 0; m < S; ++m)
            for (std::size_t d = 0; d < D; ++d) shares(o, m, d) /= static_cast<double>(agents);
    }
    return shares;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& gen, int n) {
    std::normal_distribution<double> norm(0.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = norm(gen);
    return a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace skillscape::testing
