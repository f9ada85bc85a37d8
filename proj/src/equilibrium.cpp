#include "skillscape/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>

#include <boost/math/tools/toms748_solve.hpp>

#include "skillscape/errors.hpp"
#include "skillscape/panel.hpp"
#include "skillscape/signal.hpp"

namespace skillscape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Idx = Eigen::Index;

double log_sum_exp(const std::vector<double>& terms) {
    double shift = -kInf;
    for (double t : terms) shift = std::max(shift, t);
    if (shift == -kInf) return -kInf;
    double total = 0.0;
    for (double t : terms) total += std::exp(t - shift);
    return shift + std::log(total);
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Block variables carried between iterations.
struct Iterate {
    VectorXd population;
    MatrixXd skill_share;
    MatrixXd agg_index;
    MatrixXd migration;
};

struct Evaluation {
    VectorXd cohort;
    VectorXd p_h;
    Tensor3 posterior_var;
    ChoiceInputs choice;
    NontradableClearing clearing;
    Iterate next;
};

class Solver {
public:
    Solver(const EconomyConfig& cfg, const CityPrimitives& cities, const SolverSettings& settings)
        : cfg_(cfg), cities_(cities), settings_(settings), C_(cfg.n_cities), S_(cfg.n_slots()) {
        endowed_total_ = cities.endowment.sum();
        mobile_total_ = cfg.total_pop - endowed_total_;
        unskilled_target_ = cfg.lambda * cfg.total_pop - cities.endowment.col(0).sum();
    }

    EquilibriumState run(const std::optional<EquilibriumState>& initial) {
        Iterate x = initial_iterate(initial);
        if (settings_.mode == SolverMode::one_generation) {
            fixed_migration_ = cities_.migration ? *cities_.migration : x.migration;
            const VectorXd base = cities_.population ? *cities_.population : x.population;
            fixed_cohort_ = base * (mobile_total_ / base.sum());
            x.migration = fixed_migration_;
        }

        Convergence conv;
        std::vector<double> trajectory;
        double best = kInf;
        for (int it = 1; it <= settings_.max_iter; ++it) {
            Evaluation ev = evaluate(x);
            const TraceRow row = distance(it, x, ev.next);
            trajectory.push_back(row.max);
            if (settings_.record_trace) conv.trace.push_back(row);
            if (!std::isfinite(row.max)) {
                throw SolverError("solver produced non-finite iterate; try smaller damping", trajectory);
            }
            if (row.max < settings_.tol) {
                conv.converged = true;
                conv.iterations = it;
                conv.residual = row.max;
                return assemble(x, std::move(ev), std::move(conv));
            }
            best = std::min(best, row.max);
            if (it > 200 && row.max > 1e6 * best) {
                throw SolverError("oscillation detected (residual grew from " + std::to_string(best) + " to " +
                                      std::to_string(row.max) + "); try smaller damping",
                                  trajectory);
            }
            blend(x, ev.next);
        }
        throw SolverError("equilibrium solver did not converge within " + std::to_string(settings_.max_iter) +
                              " iterations (last residual " + std::to_string(trajectory.back()) + ")",
                          trajectory);
    }

private:
    Iterate initial_iterate(const std::optional<EquilibriumState>& initial) const {
        Iterate x;
        if (settings_.init == InitKind::user) {
            if (!initial) throw ConfigError("solver init 'user' requires an initial state");
            x.population = initial->population;
            x.skill_share = initial->skill_share;
            x.agg_index = initial->agg_index;
            x.migration = initial->migration;
            if (x.population.size() != C_ || x.skill_share.rows() != C_ || x.skill_share.cols() != S_ ||
                x.agg_index.rows() != C_ || x.agg_index.cols() != S_ || x.migration.rows() != C_ ||
                x.migration.cols() != C_) {
                throw ConfigError("initial state dimensions do not match the configuration");
            }
            return x;
        }

        const double lam = cfg_.lambda;
        const int n_majors = cfg_.n_majors;
        x.population = VectorXd::Constant(C_, cfg_.total_pop / C_);
        x.skill_share = MatrixXd::Zero(C_, S_);
        x.skill_share.col(0).setConstant(lam);
        x.skill_share.rightCols(n_majors).setConstant((1.0 - lam) / n_majors);
        x.migration = cities_.migration ? *cities_.migration : MatrixXd::Constant(C_, C_, 1.0 / C_);

        if (settings_.init == InitKind::endowment && cities_.endowment.sum() > 0.0) {
            VectorXd weight = cities_.endowment.rowwise().sum();
            weight.array() += 1e-3 * weight.maxCoeff();
            x.population = weight * (cfg_.total_pop / weight.sum());
            for (Idx c = 0; c < C_; ++c) {
                const double skilled = cities_.endowment.row(c).tail(n_majors).sum();
                if (skilled <= 0.0) continue;
                for (Idx m = 1; m < S_; ++m)
                    x.skill_share(c, m) = (1.0 - lam) * cities_.endowment(c, m) / skilled;
            }
            if (!cities_.migration) {
                x.migration = MatrixXd::Constant(C_, C_, 0.5 / C_);
                x.migration.diagonal().array() += 0.5;
            }
        }

        x.agg_index = MatrixXd::Zero(C_, S_);
        for (Idx c = 0; c < C_; ++c)
            for (Idx m = 1; m < S_; ++m)
                x.agg_index(c, m) = x.skill_share(c, m) * cities_.match_quality(c, m, c);
        return x;
    }

    VectorXd cohort_for(const VectorXd& population) const {
        if (settings_.mode == SolverMode::one_generation) return fixed_cohort_;
        const double total = population.sum();
        if (!(total > 0.0)) throw SolverError("population vanished; try smaller damping", {});
        return population * (mobile_total_ / total);
    }

    Evaluation evaluate(const Iterate& x) const {
        Evaluation ev;
        ev.cohort = cohort_for(x.population);
        ev.p_h = VectorXd(C_);
        for (Idx c = 0; c < C_; ++c)
            ev.p_h(c) = housing_price(std::max(0.0, x.population(c)), cfg_.kappa_h, cfg_.gamma_h);

        const Tensor3 wages = wages_from_productivity(cities_.productivity, cities_.match_quality,
                                                      x.agg_index.cwiseMax(0.0), cfg_.gamma_agg);
        const MatrixXd& mig = settings_.mode == SolverMode::one_generation ? fixed_migration_ : x.migration;

        ChoiceInputs& in = ev.choice;
        in.omega = Tensor3(C_, S_, C_);
        ev.posterior_var = Tensor3(C_, S_, C_);
        for (Idx o = 0; o < C_; ++o) {
            for (Idx m = 1; m < S_; ++m) {
                const double share = std::clamp(x.skill_share(o, m), 0.0, 1.0);
                for (Idx c = 0; c < C_; ++c) {
                    const double pv = posterior_diffuse_total(
                        cfg_.cell_signal_variance(static_cast<int>(o), static_cast<int>(m), static_cast<int>(c)),
                        cfg_.kappa_obs, std::clamp(mig(o, c), 0.0, 1.0), share);
                    ev.posterior_var(o, m, c) = pv;
                    // Diffuse prior: the posterior mean is the signal mean, i.e. the model wage.
                    in.omega(o, m, c) = effective_wage(wages(o, m, c), cfg_.sigma2_xi, pv, cfg_.tuition(o, m), 0.0,
                                                       true);
                }
            }
        }
        in.p_n = VectorXd::Zero(C_);
        in.p_h = ev.p_h;
        in.amenity = cities_.amenity;
        in.moving_cost = cities_.moving_cost;
        in.taste = cities_.taste_scale;
        in.theta = cfg_.theta;
        in.lambda = cfg_.lambda;

        ev.clearing = nontradable_price(in, ev.cohort, unskilled_target_);
        ev.next = next_iterate(x, ev);
        return ev;
    }

    Iterate next_iterate(const Iterate& x, const Evaluation& ev) const {
        const Tensor3& prob = ev.clearing.choice_prob;
        const double lam = cfg_.lambda;
        Iterate n;
        n.population = VectorXd::Zero(C_);
        n.skill_share = MatrixXd::Zero(C_, S_);
        n.agg_index = MatrixXd::Zero(C_, S_);

        MatrixXd skilled = MatrixXd::Zero(C_, S_);
        MatrixXd quality = MatrixXd::Zero(C_, S_);
        for (Idx c = 0; c < C_; ++c) {
            for (Idx m = 1; m < S_; ++m) {
                double count = cities_.endowment(c, m);
                double q = cities_.endowment(c, m) * cities_.match_quality(c, m, c);
                for (Idx o = 0; o < C_; ++o) {
                    const double flow = ev.cohort(o) * prob(o, m, c);
                    count += flow;
                    q += flow * cities_.match_quality(o, m, c);
                }
                skilled(c, m) = count;
                quality(c, m) = q;
            }
        }
        for (Idx c = 0; c < C_; ++c) {
            const double college = skilled.row(c).sum();
            const double pop = college / (1.0 - lam);
            n.population(c) = pop;
            n.skill_share(c, 0) = lam;
            if (pop > 0.0) {
                for (Idx m = 1; m < S_; ++m) {
                    n.skill_share(c, m) = skilled(c, m) / pop;
                    n.agg_index(c, m) = quality(c, m) / pop;
                }
            } else {
                for (Idx m = 1; m < S_; ++m) n.skill_share(c, m) = (1.0 - lam) / cfg_.n_majors;
            }
        }

        if (settings_.mode == SolverMode::steady_state) {
            n.migration = MatrixXd::Zero(C_, C_);
            for (Idx o = 0; o < C_; ++o)
                for (Idx m = 0; m < S_; ++m)
                    for (Idx c = 0; c < C_; ++c) n.migration(o, c) += prob(o, m, c);
        } else {
            n.migration = x.migration;
        }
        return n;
    }

    TraceRow distance(int it, const Iterate& x, const Iterate& n) const {
        TraceRow row;
        row.iteration = it;
        row.population = (n.population - x.population).cwiseAbs().maxCoeff() / cfg_.total_pop;
        row.skill_share = (n.skill_share - x.skill_share).cwiseAbs().maxCoeff();
        row.agg_index = (n.agg_index - x.agg_index).cwiseAbs().maxCoeff();
        row.migration = (n.migration - x.migration).cwiseAbs().maxCoeff();
        row.max = std::max({row.population, row.skill_share, row.agg_index, row.migration});
        return row;
    }

    void blend(Iterate& x, const Iterate& n) const {
        const double a = settings_.damping;
        x.population += a * (n.population - x.population);
        x.skill_share += a * (n.skill_share - x.skill_share);
        x.agg_index += a * (n.agg_index - x.agg_index);
        x.migration += a * (n.migration - x.migration);
        x.population = x.population.cwiseMax(0.0);
    }

    EquilibriumState assemble(const Iterate& x, Evaluation ev, Convergence conv) const {
        EquilibriumState st;
        st.mode = settings_.mode;
        st.population = x.population;
        st.skill_share = x.skill_share;
        st.agg_index = x.agg_index;
        st.migration = settings_.mode == SolverMode::one_generation ? fixed_migration_ : x.migration;
        st.cohort = ev.cohort;
        st.p_housing = ev.p_h;
        st.p_nontradable = ev.clearing.p_n;
        st.unskilled_value = ev.clearing.unskilled_value;
        st.choice_prob = std::move(ev.clearing.choice_prob);
        st.posterior_var = std::move(ev.posterior_var);

        st.wages = wages_from_productivity(cities_.productivity, cities_.match_quality, x.agg_index.cwiseMax(0.0),
                                           cfg_.gamma_agg);
        for (Idx o = 0; o < C_; ++o)
            for (Idx c = 0; c < C_; ++c) st.wages(o, 0, c) = st.p_nontradable(c);

        const MarketPotential mp = market_potential(ev.choice);
        st.market_potential = mp.phi;
        st.log_market_potential = mp.log_phi;
        const double xi = cfg_.xi();
        st.college_value = VectorXd(C_);
        st.reservation_value = VectorXd(C_);
        for (Idx o = 0; o < C_; ++o) {
            st.college_value(o) = xi * std::exp(mp.log_phi(o) / cfg_.theta);
            const VectorXd values = unskilled_value(cfg_.lambda, st.p_nontradable, cities_.amenity, st.p_housing,
                                                    cities_.moving_cost.row(o).transpose());
            st.reservation_value(o) = values.maxCoeff();
        }

        const double tol = 1e-9 * cfg_.total_pop;
        for (Idx c = 0; c < C_; ++c) {
            if (cfg_.lambda * st.population(c) - cities_.endowment(c, 0) < -tol) {
                throw SolverError("nontradable clearing infeasible: endowed unskilled workers in city " +
                                      std::to_string(c) + " exceed the non-tradable workforce",
                                  {});
            }
        }
        st.convergence = std::move(conv);
        return st;
    }

    const EconomyConfig& cfg_;
    const CityPrimitives& cities_;
    SolverSettings settings_;
    Idx C_;
    Idx S_;
    double endowed_total_ = 0.0;
    double mobile_total_ = 0.0;
    double unskilled_target_ = 0.0;
    VectorXd fixed_cohort_;
    MatrixXd fixed_migration_;
};

}  // namespace

double housing_price(double population, double kappa_h, double gamma_h) {
    if (population < 0.0) throw ModelError("housing_price: negative population");
    return kappa_h * std::pow(population, gamma_h);
}

MatrixXd agglomeration_index(const Tensor3& residents, const Tensor3& match_quality, const VectorXd& population) {
    if (!residents.same_shape(match_quality) || residents.dim(0) != residents.dim(2) ||
        population.size() != static_cast<Idx>(residents.dim(2))) {
        throw ModelError("agglomeration_index: dimension mismatch");
    }
    const auto n_orig = residents.dim(0);
    const auto n_slots = residents.dim(1);
    MatrixXd H = MatrixXd::Zero(population.size(), static_cast<Idx>(n_slots));
    for (std::size_t c = 0; c < residents.dim(2); ++c) {
        const double pop = population(static_cast<Idx>(c));
        if (pop <= 0.0) continue;
        for (std::size_t m = 0; m < n_slots; ++m) {
            double total = 0.0;
            for (std::size_t o = 0; o < n_orig; ++o) total += residents(o, m, c) * match_quality(o, m, c);
            H(static_cast<Idx>(c), static_cast<Idx>(m)) = total / pop;
        }
    }
    return H;
}

Tensor3 wages_from_productivity(const VectorXd& rho, const Tensor3& match_quality, const MatrixXd& agg_index,
                                double gamma_agg) {
    const auto n = match_quality.dim(0);
    const auto slots = match_quality.dim(1);
    if (rho.size() != static_cast<Idx>(n) || agg_index.rows() != static_cast<Idx>(n) ||
        agg_index.cols() != static_cast<Idx>(slots)) {
        throw ModelError("wages_from_productivity: dimension mismatch");
    }
    Tensor3 w(n, slots, n);
    for (std::size_t o = 0; o < n; ++o) {
        for (std::size_t m = 1; m < slots; ++m) {
            for (std::size_t c = 0; c < n; ++c) {
                const double H = agg_index(static_cast<Idx>(c), static_cast<Idx>(m));
                if (H < 0.0) throw ModelError("wages_from_productivity: negative agglomeration index");
                w(o, m, c) = rho(static_cast<Idx>(c)) * match_quality(o, m, c) * std::pow(H, gamma_agg);
            }
        }
    }
    return w;
}

NontradableClearing nontradable_price(ChoiceInputs& in, const VectorXd& cohort, double unskilled_target) {
    const double lam = in.lambda;
    if (!(lam > 0.0 && lam < 1.0)) throw ModelError("nontradable_price: lambda must lie in (0,1)");
    const auto C = static_cast<Idx>(in.omega.dim(0));
    const auto S = in.omega.dim(1);
    const double theta = in.theta;
    const double total_cohort = cohort.sum();
    if (!(unskilled_target > 0.0 && unskilled_target < total_cohort)) {
        throw ModelError("nontradable clearing infeasible: unskilled target " + std::to_string(unskilled_target) +
                         " outside (0, " + std::to_string(total_cohort) + ")");
    }

    // With p_n pinned by (1 - lambda) p_n + a - p_h = v, the no-college share of
    // origin o is logistic(z_o + theta v / (1 - lambda)).
    std::vector<double> z(static_cast<std::size_t>(C));
    std::vector<double> terms;
    for (Idx o = 0; o < C; ++o) {
        terms.clear();
        for (Idx c = 0; c < C; ++c)
            terms.push_back(std::log(in.taste(o, 0, c)) - theta * in.moving_cost(o, c));
        const double log_a = log_sum_exp(terms);
        terms.clear();
        for (std::size_t m = 1; m < S; ++m) {
            for (Idx c = 0; c < C; ++c) {
                const double w = in.omega(o, m, c);
                if (w == -kInf) continue;
                terms.push_back(std::log(in.taste(o, m, c)) +
                                theta * (w - in.moving_cost(o, c) + (in.amenity(c) - in.p_h(c)) / (1.0 - lam)));
            }
        }
        const double log_b = log_sum_exp(terms);
        z[static_cast<std::size_t>(o)] = log_a - log_b;
    }

    const auto excess = [&](double x) {
        double total = 0.0;
        for (Idx o = 0; o < C; ++o) {
            const double zo = z[static_cast<std::size_t>(o)];
            total += cohort(o) * (zo == kInf ? 1.0 : logistic(zo + x));
        }
        return total - unskilled_target;
    };

    double z_lo = kInf;
    double z_hi = -kInf;
    for (double zo : z) {
        if (!std::isfinite(zo)) continue;
        z_lo = std::min(z_lo, zo);
        z_hi = std::max(z_hi, zo);
    }
    if (!std::isfinite(z_lo)) throw ModelError("nontradable clearing infeasible: no origin has a college option");

    double lo = -z_hi - 40.0;
    double hi = -z_lo + 40.0;
    double f_lo = excess(lo);
    double f_hi = excess(hi);
    for (int expand = 0; expand < 60 && f_lo > 0.0; ++expand) {
        lo -= 40.0 * (1 << std::min(expand, 20));
        f_lo = excess(lo);
    }
    for (int expand = 0; expand < 60 && f_hi < 0.0; ++expand) {
        hi += 40.0 * (1 << std::min(expand, 20));
        f_hi = excess(hi);
    }
    if (f_lo > 0.0 || f_hi < 0.0) throw ModelError("nontradable clearing infeasible: bracketing failed");

    double root = lo;
    if (f_lo == 0.0) {
        root = lo;
    } else if (f_hi == 0.0) {
        root = hi;
    } else {
        std::uintmax_t max_iter = 200;
        const auto bracket = boost::math::tools::toms748_solve(excess, lo, hi, f_lo, f_hi,
                                                               boost::math::tools::eps_tolerance<double>(52),
                                                               max_iter);
        root = 0.5 * (bracket.first + bracket.second);
    }

    NontradableClearing out;
    out.unskilled_value = root * (1.0 - lam) / theta;
    out.p_n = ((out.unskilled_value + in.p_h.array() - in.amenity.array()) / (1.0 - lam)).matrix();
    in.p_n = out.p_n;
    for (Idx o = 0; o < C; ++o)
        for (Idx c = 0; c < C; ++c) in.omega(o, 0, c) = out.p_n(c);
    out.choice_prob = choice_probabilities(in);
    return out;
}

EquilibriumState solve_equilibrium(const EconomyConfig& config, const CityPrimitives& cities,
                                   const SolverSettings& settings, const std::optional<EquilibriumState>& initial) {
    ensure_valid(config, cities);
    if (!(settings.damping > 0.0 && settings.damping <= 1.0)) throw ConfigError("damping must lie in (0,1]");
    if (!(settings.tol > 0.0)) throw ConfigError("tol must be positive");
    if (settings.max_iter < 1) throw ConfigError("max_iter must be positive");
    if (!(config.lambda > 0.0 && config.lambda < 1.0)) throw ConfigError("solver requires lambda in (0,1)");
    Solver solver(config, cities, settings);
    return solver.run(initial);
}

double ResidualReport::get(const std::string& name) const {
    for (const auto& [key, value] : entries)
        if (key == name) return value;
    throw std::out_of_range("no residual named " + name);
}

double ResidualReport::max() const {
    double m = 0.0;
    for (const auto& entry : entries) m = std::max(m, entry.second);
    return m;
}

ResidualReport clearing_residuals(const EquilibriumState& st, const EconomyConfig& cfg, const CityPrimitives& cities) {
    const Idx C = cfg.n_cities;
    const Idx S = cfg.n_slots();
    const double lam = cfg.lambda;
    const double L_total = cfg.total_pop;
    ResidualReport rep;
    const auto add = [&rep](const std::string& name, double v) { rep.entries.emplace_back(name, v); };

    // Population adding-up.
    add("population_total", std::abs(st.population.sum() - L_total));

    double housing = 0.0;
    for (Idx c = 0; c < C; ++c)
        housing = std::max(housing, std::abs(st.p_housing(c) - cfg.kappa_h * std::pow(st.population(c), cfg.gamma_h)));
    add("housing_price", housing);

    // Cohort: proportional to population in steady state.
    const double mobile = L_total - cities.endowment.sum();
    if (st.mode == SolverMode::steady_state) {
        add("cohort", (st.cohort - st.population * (mobile / L_total)).cwiseAbs().maxCoeff());
    } else {
        add("cohort", std::abs(st.cohort.sum() - mobile));
    }

    // Agglomeration index from residents, then wages.
    double agg = 0.0;
    for (Idx c = 0; c < C; ++c) {
        for (Idx m = 1; m < S; ++m) {
            double q = cities.endowment(c, m) * cities.match_quality(c, m, c);
            for (Idx o = 0; o < C; ++o) q += st.cohort(o) * st.choice_prob(o, m, c) * cities.match_quality(o, m, c);
            const double H = st.population(c) > 0.0 ? q / st.population(c) : 0.0;
            agg = std::max(agg, std::abs(H - st.agg_index(c, m)));
        }
    }
    add("agglomeration_index", agg);

    double wage = 0.0;
    for (Idx o = 0; o < C; ++o) {
        for (Idx c = 0; c < C; ++c) {
            wage = std::max(wage, std::abs(st.wages(o, 0, c) - st.p_nontradable(c)));
            for (Idx m = 1; m < S; ++m) {
                const double w = cities.productivity(c) * cities.match_quality(o, m, c) *
                                 std::pow(std::max(0.0, st.agg_index(c, m)), cfg.gamma_agg);
                wage = std::max(wage, std::abs(w - st.wages(o, m, c)));
            }
        }
    }
    add("wages", wage);

    // Beliefs, effective wages and Frechet choice shares, recomputed cell by cell.
    double belief = 0.0;
    double choice = 0.0;
    double potential = 0.0;
    for (Idx o = 0; o < C; ++o) {
        std::vector<double> log_kernel(static_cast<std::size_t>(S * C), -kInf);
        for (Idx m = 0; m < S; ++m) {
            for (Idx c = 0; c < C; ++c) {
                double omega = st.p_nontradable(c);
                if (m > 0) {
                    const double obs = cfg.kappa_obs * st.migration(o, c) * st.skill_share(o, m);
                    const double var_total = cfg.signal_variance ? (*cfg.signal_variance)(o, m, c)
                                                                 : cfg.sigma2_xi + cfg.sigma2_xihat;
                    const double pv = obs > 0.0 ? var_total / obs : kInf;
                    const double stored = st.posterior_var(o, m, c);
                    if (std::isinf(pv) || std::isinf(stored)) {
                        if (std::isinf(pv) != std::isinf(stored)) belief = kInf;
                    } else {
                        belief = std::max(belief, std::abs(pv - stored) / std::max(1.0, std::abs(pv)));
                    }
                    omega = std::isinf(pv) ? -kInf : st.wages(o, m, c) - 0.5 * (cfg.sigma2_xi + pv) - cfg.tuition(o, m);
                }
                if (omega == -kInf) continue;
                log_kernel[static_cast<std::size_t>(m * C + c)] =
                    std::log(cities.taste_scale(o, m, c)) +
                    cfg.theta * (omega - lam * st.p_nontradable(c) - st.p_housing(c) + cities.amenity(c) -
                                 cities.moving_cost(o, c));
            }
        }
        const double lse = log_sum_exp(log_kernel);
        potential = std::max(potential, std::abs(lse - st.log_market_potential(o)));
        for (Idx m = 0; m < S; ++m) {
            for (Idx c = 0; c < C; ++c) {
                const double k = log_kernel[static_cast<std::size_t>(m * C + c)];
                const double p = k == -kInf ? 0.0 : std::exp(k - lse);
                choice = std::max(choice, std::abs(p - st.choice_prob(o, m, c)));
            }
        }
    }
    add("posterior_variance", belief);
    add("choice_probabilities", choice);
    add("market_potential", potential);

    // Skilled market clearing by city and major.
    double skilled = 0.0;
    for (Idx c = 0; c < C; ++c) {
        for (Idx m = 1; m < S; ++m) {
            double inflow = cities.endowment(c, m);
            for (Idx o = 0; o < C; ++o) inflow += st.cohort(o) * st.choice_prob(o, m, c);
            skilled = std::max(skilled, std::abs(st.skill_share(c, m) * st.population(c) - inflow));
        }
    }
    add("skilled_clearing", skilled);

    // Unskilled workers are located by indifference, so only the aggregate is pinned by choices.
    double unskilled_demand = 0.0;
    double unskilled_supply = cities.endowment.col(0).sum();
    for (Idx c = 0; c < C; ++c) unskilled_demand += st.skill_share(c, 0) * st.population(c);
    for (Idx o = 0; o < C; ++o)
        for (Idx c = 0; c < C; ++c) unskilled_supply += st.cohort(o) * st.choice_prob(o, 0, c);
    add("unskilled_clearing", std::abs(unskilled_demand - unskilled_supply));

    double nontradable = 0.0;
    double rows = 0.0;
    for (Idx c = 0; c < C; ++c) {
        nontradable = std::max(nontradable, std::abs(st.skill_share(c, 0) - lam));
        rows = std::max(rows, std::abs(st.skill_share.row(c).sum() - 1.0));
    }
    add("nontradable_share", nontradable);
    add("skill_share_rows", rows);

    double lo = kInf;
    double hi = -kInf;
    for (Idx c = 0; c < C; ++c) {
        const double v = (1.0 - lam) * st.p_nontradable(c) + cities.amenity(c) - st.p_housing(c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    add("unskilled_value_spread", hi - lo);

    if (st.mode == SolverMode::steady_state) {
        double mig = 0.0;
        for (Idx o = 0; o < C; ++o) {
            for (Idx c = 0; c < C; ++c) {
                double implied = 0.0;
                for (Idx m = 0; m < S; ++m) implied += st.choice_prob(o, m, c);
                mig = std::max(mig, std::abs(implied - st.migration(o, c)));
            }
        }
        add("migration", mig);
    }
    return rep;
}

ChoiceInputs choice_inputs_from_state(const EquilibriumState& st, const EconomyConfig& cfg,
                                      const CityPrimitives& cities) {
    const auto C = static_cast<std::size_t>(cfg.n_cities);
    const auto S = static_cast<std::size_t>(cfg.n_slots());
    ChoiceInputs in;
    in.omega = Tensor3(C, S, C);
    for (std::size_t o = 0; o < C; ++o) {
        for (std::size_t c = 0; c < C; ++c) {
            const auto ci = static_cast<Idx>(c);
            in.omega(o, 0, c) = st.p_nontradable(ci);
            for (std::size_t m = 1; m < S; ++m) {
                in.omega(o, m, c) = effective_wage(st.wages(o, m, c), cfg.sigma2_xi, st.posterior_var(o, m, c),
                                                   cfg.tuition(static_cast<Idx>(o), static_cast<Idx>(m)), 0.0, true);
            }
        }
    }
    in.p_n = st.p_nontradable;
    in.p_h = st.p_housing;
    in.amenity = cities.amenity;
    in.moving_cost = cities.moving_cost;
    in.taste = cities.taste_scale;
    in.theta = cfg.theta;
    in.lambda = cfg.lambda;
    return in;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "iteration,population,skill_share,agg_index,migration,max\n";
    for (const auto& r : trace) {
        out << r.iteration << ',' << format_double(r.population) << ',' << format_double(r.skill_share) << ','
            << format_double(r.agg_index) << ',' << format_double(r.migration) << ',' << format_double(r.max) << '\n';
    }
}

std::string to_string(SolverMode mode) {
    return mode == SolverMode::steady_state ? "steady-state" : "one-generation";
}

std::string to_string(InitKind init) {
    switch (init) {
        case InitKind::endowment: return "endowment";
        case InitKind::uniform: return "uniform";
        case InitKind::user: return "user";
    }
    return "uniform";
}

SolverMode parse_solver_mode(const std::string& text) {
    if (text == "steady-state") return SolverMode::steady_state;
    if (text == "one-generation") return SolverMode::one_generation;
    throw ConfigError("unknown solver mode '" + text + "'");
}

InitKind parse_init_kind(const std::string& text) {
    if (text == "endowment") return InitKind::endowment;
    if (text == "uniform") return InitKind::uniform;
    if (text == "user") return InitKind::user;
    throw ConfigError("unknown solver init '" + text + "'");
}

}  // namespace skillscape
