#include "skillscape/choice.hpp"

#include <cmath>
#include <limits>

#include "skillscape/errors.hpp"

namespace skillscape {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shapes(const ChoiceInputs& in) {
    const auto& d = in.omega.dims();
    const auto n_cities = static_cast<Eigen::Index>(d[2]);
    if (d[0] != d[2] || !in.taste.same_shape(in.omega) || in.p_n.size() != n_cities ||
        in.p_h.size() != n_cities || in.amenity.size() != n_cities || in.moving_cost.rows() != n_cities ||
        in.moving_cost.cols() != n_cities) {
        throw ModelError("choice inputs: dimension mismatch");
    }
    if (!(in.theta > 0.0)) throw ModelError("choice inputs: theta must be positive");
}

// log T + theta * u, or -inf for unreachable cells.
double log_kernel(const ChoiceInputs& in, std::size_t o, std::size_t m, std::size_t c) {
    const double u = utility_argument(in, o, m, c);
    if (u == kNegInf) return kNegInf;
    return std::log(in.taste(o, m, c)) + u;
}

// Max log kernel for origin o, or -inf if every option is unreachable.
double row_max(const ChoiceInputs& in, std::size_t o) {
    double best = kNegInf;
    for (std::size_t m = 0; m < in.omega.dim(1); ++m)
        for (std::size_t c = 0; c < in.omega.dim(2); ++c) best = std::max(best, log_kernel(in, o, m, c));
    return best;
}

}  // namespace

double effective_wage(double post_mean, double sigma2_xi, double post_var, double tuition, double p_n,
                      bool is_college) {
    if (!is_college) return p_n;
    if (std::isinf(post_var)) return kNegInf;
    return post_mean - 0.5 * (sigma2_xi + post_var) - tuition;
}

double simplified_effective_wage(const SimplifiedWageInputs& in) {
    if (!(in.delta_origin > 0.0)) return kNegInf;
    const double mean = in.rho * in.h * std::pow(in.delta_dest, in.gamma_agg);
    const double attenuation = in.is_origin ? 1.0 : 1.0 + in.tau;
    const double penalty = in.zeta_tilde * std::pow(in.delta_origin, -in.gamma_sig) * attenuation;
    return mean - in.sigma2_tilde - penalty - in.tuition;
}

double utility_argument(const ChoiceInputs& in, std::size_t o, std::size_t m, std::size_t c) {
    const double w = in.omega(o, m, c);
    if (w == kNegInf) return kNegInf;
    const auto ci = static_cast<Eigen::Index>(c);
    return in.theta * (w - in.lambda * in.p_n(ci) - in.p_h(ci) + in.amenity(ci) -
                       in.moving_cost(static_cast<Eigen::Index>(o), ci));
}

Tensor3 choice_probabilities(const ChoiceInputs& in) {
    check_shapes(in);
    const auto& d = in.omega.dims();
    Tensor3 prob(d[0], d[1], d[2]);
    for (std::size_t o = 0; o < d[0]; ++o) {
        const double shift = row_max(in, o);
        if (shift == kNegInf || std::isnan(shift)) throw ModelError("origin has no feasible option");
        double total = 0.0;
        for (std::size_t m = 0; m < d[1]; ++m) {
            for (std::size_t c = 0; c < d[2]; ++c) {
                const double k = log_kernel(in, o, m, c);
                const double v = (k == kNegInf) ? 0.0 : std::exp(k - shift);
                prob(o, m, c) = v;
                total += v;
            }
        }
        for (std::size_t m = 0; m < d[1]; ++m)
            for (std::size_t c = 0; c < d[2]; ++c) prob(o, m, c) /= total;
    }
    return prob;
}

MarketPotential market_potential(const ChoiceInputs& in) {
    check_shapes(in);
    const auto& d = in.omega.dims();
    MarketPotential out{Eigen::VectorXd(static_cast<Eigen::Index>(d[0])),
                        Eigen::VectorXd(static_cast<Eigen::Index>(d[0]))};
    for (std::size_t o = 0; o < d[0]; ++o) {
        const double shift = row_max(in, o);
        if (shift == kNegInf || std::isnan(shift)) throw ModelError("origin has no feasible option");
        double total = 0.0;
        for (std::size_t m = 0; m < d[1]; ++m) {
            for (std::size_t c = 0; c < d[2]; ++c) {
                const double k = log_kernel(in, o, m, c);
                if (k != kNegInf) total += std::exp(k - shift);
            }
        }
        const auto oi = static_cast<Eigen::Index>(o);
        out.log_phi(oi) = shift + std::log(total);
        out.phi(oi) = std::exp(out.log_phi(oi));
    }
    return out;
}

double college_value(double phi, double theta, double xi) {
    if (!(phi > 0.0)) throw ModelError("college_value: market potential must be positive");
    return xi * std::pow(phi, 1.0 / theta);
}

Eigen::VectorXd unskilled_value(double lambda, const Eigen::VectorXd& p_n, const Eigen::VectorXd& amenity,
                                const Eigen::VectorXd& p_h, const Eigen::VectorXd& moving_cost_row) {
    if (p_n.size() != amenity.size() || p_n.size() != p_h.size() || p_n.size() != moving_cost_row.size()) {
        throw ModelError("unskilled_value: dimension mismatch");
    }
    return (1.0 - lambda) * p_n + amenity - p_h - moving_cost_row;
}

}  // namespace skillscape
