#include "skillscape/economy.hpp"

#include <cmath>
#include <sstream>

#include "skillscape/errors.hpp"

namespace skillscape {

double xi_constant(double theta) {
    if (!(theta > 1.0)) {
        throw ModelError("xi undefined: theta must exceed 1 (got " + std::to_string(theta) + ")");
    }
    return std::tgamma(1.0 - 1.0 / theta);
}

double EconomyConfig::xi() const { return xi_override ? *xi_override : xi_constant(theta); }

double EconomyConfig::cell_signal_variance(int origin, int major, int dest) const {
    if (signal_variance) return (*signal_variance)(origin, major, dest);
    return sigma2_xi + sigma2_xihat;
}

Tensor3 CityPrimitives::collapsed_match_quality(const VectorXd& per_city, int n_slots) {
    const auto n = static_cast<std::size_t>(per_city.size());
    Tensor3 h(n, static_cast<std::size_t>(n_slots), n);
    for (std::size_t o = 0; o < n; ++o)
        for (std::size_t m = 0; m < static_cast<std::size_t>(n_slots); ++m)
            for (std::size_t c = 0; c < n; ++c) h(o, m, c) = per_city(static_cast<Eigen::Index>(c));
    return h;
}

namespace {

class Checker {
public:
    void require(bool ok, const std::string& field, const std::string& message, double value) {
        if (!ok) out_.push_back({field, message, value});
    }
    void positive(double v, const std::string& field) {
        require(std::isfinite(v) && v > 0.0, field, field + " must be positive", v);
    }
    void nonnegative(double v, const std::string& field) {
        require(std::isfinite(v) && v >= 0.0, field, field + " must be nonnegative", v);
    }
    bool shape(bool ok, const std::string& field, double got) {
        require(ok, field, field + " has wrong dimensions", got);
        return ok;
    }
    std::vector<Violation> take() { return std::move(out_); }

private:
    std::vector<Violation> out_;
};

std::string at(const std::string& field, std::initializer_list<long> idx) {
    std::ostringstream os;
    os << field;
    for (long i : idx) os << '[' << i << ']';
    return os.str();
}

}  // namespace

std::vector<Violation> validate_config(const EconomyConfig& cfg, const CityPrimitives& cities,
                                       const ValidationOptions& options) {
    Checker chk;
    chk.require(cfg.n_cities >= 1, "n_cities", "n_cities must be a positive integer", cfg.n_cities);
    chk.require(cfg.n_majors >= 1, "n_majors", "n_majors must be a positive integer", cfg.n_majors);
    chk.require(std::isfinite(cfg.lambda) && cfg.lambda >= 0.0 && cfg.lambda <= 1.0, "lambda",
                "lambda out of [0,1]", cfg.lambda);
    chk.positive(cfg.theta, "theta");
    if (cfg.xi_override) {
        chk.positive(*cfg.xi_override, "xi_const");
    } else {
        chk.require(cfg.theta > 1.0, "theta", "theta must exceed 1 when xi is computed", cfg.theta);
    }
    chk.positive(cfg.kappa_obs, "kappa_obs");
    chk.nonnegative(cfg.sigma2_xi, "sigma2_xi");
    chk.nonnegative(cfg.sigma2_xihat, "sigma2_xihat");
    if (!cfg.signal_variance) {
        chk.require(cfg.sigma2_xi + cfg.sigma2_xihat > 0.0, "sigma2_xihat", "degenerate signal variance",
                    cfg.sigma2_xi + cfg.sigma2_xihat);
    }
    chk.positive(cfg.gamma_sig, "gamma_sig");
    chk.positive(cfg.zeta_tilde, "zeta_tilde");
    chk.nonnegative(cfg.tau, "tau");
    chk.positive(cfg.gamma_agg, "gamma_agg");
    chk.positive(cfg.gamma_h, "gamma_h");
    chk.positive(cfg.kappa_h, "kappa_h");
    chk.positive(cfg.total_pop, "total_pop");

    if (cfg.n_cities < 1 || cfg.n_majors < 1) return chk.take();
    const long C = cfg.n_cities;
    const long S = cfg.n_slots();
    const auto tensor_ok = [&](const Tensor3& t) {
        return t.dim(0) == static_cast<std::size_t>(C) && t.dim(1) == static_cast<std::size_t>(S) &&
               t.dim(2) == static_cast<std::size_t>(C);
    };

    if (chk.shape(cfg.tuition.rows() == C && cfg.tuition.cols() == S, "tuition",
                  static_cast<double>(cfg.tuition.size()))) {
        for (long o = 0; o < C; ++o) {
            chk.require(cfg.tuition(o, 0) == 0.0, at("tuition", {o, 0}), "tuition for no-college must be zero",
                        cfg.tuition(o, 0));
            for (long m = 1; m < S; ++m) chk.nonnegative(cfg.tuition(o, m), at("tuition", {o, m}));
        }
    }
    if (cfg.signal_variance) {
        if (chk.shape(tensor_ok(*cfg.signal_variance), "signal_variance",
                      static_cast<double>(cfg.signal_variance->size()))) {
            for (double v : cfg.signal_variance->flat())
                chk.require(std::isfinite(v) && v > 0.0, "signal_variance", "degenerate signal variance", v);
        }
    }

    if (chk.shape(cities.productivity.size() == C, "productivity", static_cast<double>(cities.productivity.size()))) {
        for (long c = 0; c < C; ++c) chk.positive(cities.productivity(c), at("productivity", {c}));
    }
    if (chk.shape(cities.amenity.size() == C, "amenity", static_cast<double>(cities.amenity.size()))) {
        for (long c = 0; c < C; ++c)
            chk.require(std::isfinite(cities.amenity(c)), at("amenity", {c}), "amenity must be finite",
                        cities.amenity(c));
    }
    if (chk.shape(tensor_ok(cities.match_quality), "match_quality",
                  static_cast<double>(cities.match_quality.size()))) {
        for (double v : cities.match_quality.flat())
            chk.require(std::isfinite(v) && v > 0.0, "match_quality", "match_quality must be positive", v);
    }
    if (chk.shape(cities.endowment.rows() == C && cities.endowment.cols() == S, "endowment",
                  static_cast<double>(cities.endowment.size()))) {
        for (long c = 0; c < C; ++c)
            for (long m = 0; m < S; ++m) chk.nonnegative(cities.endowment(c, m), at("endowment", {c, m}));
        chk.require(cities.endowment.sum() < cfg.total_pop, "endowment",
                    "total endowment must be below total_pop", cities.endowment.sum());
    }
    if (chk.shape(cities.moving_cost.rows() == C && cities.moving_cost.cols() == C, "moving_cost",
                  static_cast<double>(cities.moving_cost.size()))) {
        for (long o = 0; o < C; ++o) {
            for (long c = 0; c < C; ++c) {
                const double d = cities.moving_cost(o, c);
                chk.nonnegative(d, at("moving_cost", {o, c}));
                if (o == c) {
                    chk.require(d == 0.0, at("moving_cost", {o, c}), "moving_cost diagonal nonzero", d);
                } else if (options.cost_mode == CostMode::no_migration_costs) {
                    chk.require(d == 0.0, at("moving_cost", {o, c}),
                                "moving_cost must be zero without migration costs", d);
                }
            }
        }
    }
    if (chk.shape(tensor_ok(cities.taste_scale), "taste_scale", static_cast<double>(cities.taste_scale.size()))) {
        for (double v : cities.taste_scale.flat()) {
            chk.require(std::isfinite(v) && v > 0.0, "taste_scale", "taste_scale must be positive", v);
            if (options.taste_mode == TasteMode::unit)
                chk.require(v == 1.0, "taste_scale", "taste_scale must be 1 in unit-taste mode", v);
        }
    }
    if (cities.population) {
        const VectorXd& pop = *cities.population;
        if (chk.shape(pop.size() == C, "population", static_cast<double>(pop.size()))) {
            for (long c = 0; c < C; ++c) chk.positive(pop(c), at("population", {c}));
        }
    }
    if (cities.migration) {
        const MatrixXd& mig = *cities.migration;
        if (chk.shape(mig.rows() == C && mig.cols() == C, "migration", static_cast<double>(mig.size()))) {
            for (long o = 0; o < C; ++o) {
                for (long c = 0; c < C; ++c) chk.nonnegative(mig(o, c), at("migration", {o, c}));
                chk.require(std::abs(mig.row(o).sum() - 1.0) <= 1e-9, at("migration", {o}),
                            "migration rows must sum to 1", mig.row(o).sum());
            }
        }
    }
    return chk.take();
}

std::string describe(const std::vector<Violation>& violations) {
    std::ostringstream os;
    for (const auto& v : violations) os << v.field << ": " << v.message << " (value " << v.value << ")\n";
    return os.str();
}

void ensure_valid(const EconomyConfig& config, const CityPrimitives& cities, const ValidationOptions& options) {
    const auto violations = validate_config(config, cities, options);
    if (!violations.empty()) throw ConfigError("invalid configuration:\n" + describe(violations));
}

}  // namespace skillscape
