#include "skillscape/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "skillscape/errors.hpp"
#include "skillscape/rng.hpp"

namespace skillscape {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Substream namespaces for the generator.
enum Stream : std::uint64_t { city_draws = 1, period_draws = 2, observation_noise = 3, migration_noise = 4 };

std::uint64_t stream_id(Stream kind, std::uint64_t a, std::uint64_t b = 0) {
    return (static_cast<std::uint64_t>(kind) << 56) ^ (a << 24) ^ b;
}

}  // namespace

double frechet_sample(double taste_scale, double theta, double u) {
    if (!(u > 0.0 && u < 1.0)) throw ModelError("frechet_sample: u must lie in (0,1)");
    if (!(taste_scale > 0.0) || !(theta > 0.0)) throw ModelError("frechet_sample: T and theta must be positive");
    return std::pow(taste_scale / -std::log(u), 1.0 / theta);
}

double frechet_cdf(double z, double taste_scale, double theta) {
    if (!(z > 0.0)) return 0.0;
    return std::exp(-taste_scale * std::pow(z, -theta));
}

AgentSimulation simulate_agents(const ChoiceInputs& in, std::uint64_t agents_per_origin, std::uint64_t seed,
                                unsigned threads) {
    const auto& d = in.omega.dims();
    const std::size_t n_orig = d[0];
    const std::size_t n_slots = d[1];
    const std::size_t n_dest = d[2];
    if (agents_per_origin == 0) throw ModelError("simulate_agents: need at least one agent");

    // Deterministic part of each cell, divided by theta; -inf marks unreachable cells.
    Tensor3 base(n_orig, n_slots, n_dest);
    for (std::size_t o = 0; o < n_orig; ++o)
        for (std::size_t m = 0; m < n_slots; ++m)
            for (std::size_t c = 0; c < n_dest; ++c) base(o, m, c) = utility_argument(in, o, m, c) / in.theta;

    const std::uint64_t total = agents_per_origin * n_orig;
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::uint64_t>(total, 1024))));
    std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(in.omega.size(), 0));

    const auto work = [&](unsigned t) {
        auto& counts = partial[t];
        const std::uint64_t begin = total * t / threads;
        const std::uint64_t end = total * (t + 1) / threads;
        for (std::uint64_t agent = begin; agent < end; ++agent) {
            const std::size_t o = static_cast<std::size_t>(agent / agents_per_origin);
            CounterRng rng(seed, agent);
            double best = kNegInf;
            std::size_t best_cell = n_slots * n_dest;
            for (std::size_t m = 0; m < n_slots; ++m) {
                for (std::size_t c = 0; c < n_dest; ++c) {
                    const double u = rng.uniform();
                    const double b = base(o, m, c);
                    if (b == kNegInf) continue;
                    const double score = std::log(frechet_sample(in.taste(o, m, c), in.theta, u)) + b;
                    if (score > best) {
                        best = score;
                        best_cell = m * n_dest + c;
                    }
                }
            }
            if (best_cell == n_slots * n_dest) continue;
            ++counts[o * n_slots * n_dest + best_cell];
        }
    };

    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }

    AgentSimulation out;
    out.agents_per_origin = agents_per_origin;
    out.counts = Tensor3(n_orig, n_slots, n_dest);
    out.shares = Tensor3(n_orig, n_slots, n_dest);
    auto flat = out.counts.flat();
    for (const auto& p : partial)
        for (std::size_t i = 0; i < p.size(); ++i) flat[i] += static_cast<double>(p[i]);
    auto shares = out.shares.flat();
    for (std::size_t i = 0; i < flat.size(); ++i) shares[i] = flat[i] / static_cast<double>(agents_per_origin);
    return out;
}

void validate_generator(const GeneratorSpec& s) {
    const auto fail = [](const std::string& msg) { throw ConfigError("generator: " + msg); };
    if (s.n_cities < 2) fail("n_cities must be at least 2");
    if (s.n_majors != 1) fail("only the two-skill case (n_majors = 1) is generated");
    if (s.years.size() < 2) fail("need at least two years");
    if (s.zeta.size() != s.years.size()) fail("zeta needs one value per year");
    if (!std::is_sorted(s.years.begin(), s.years.end()) ||
        std::adjacent_find(s.years.begin(), s.years.end()) != s.years.end()) {
        fail("years must be strictly increasing");
    }
    if (!(s.lambda > 0.0 && s.lambda < 1.0)) fail("lambda must lie in (0,1)");
    if (!(s.gamma_sig > 0.0) || !(s.gamma_agg > 0.0) || !(s.kappa_h > 0.0) || !(s.gamma_h > 0.0)) {
        fail("elasticities and scales must be positive");
    }
    for (double z : s.zeta)
        if (!(z > 0.0)) fail("zeta must be positive");
    if (!(s.n_agents_per_city > 0.0)) fail("n_agents_per_city must be positive");
    if (s.noise.rent < 0.0 || s.noise.wage < 0.0 || s.noise.share < 0.0) fail("noise sd must be nonnegative");
    if (!(s.delta_lo > 0.0 && s.delta_lo < s.delta_hi && s.delta_hi < 1.0)) fail("need 0 < delta_lo < delta_hi < 1");
    if (!(s.rho_h_scale > 0.0)) fail("rho_h_scale must be positive");
}

std::string city_label(int index, int n_cities) {
    int width = 3;
    for (int n = n_cities - 1; n >= 1000; n /= 10) ++width;
    std::string digits = std::to_string(index);
    if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return "c" + digits;
}

GeneratedData generate_panel(const GeneratorSpec& s) {
    validate_generator(s);
    const int C = s.n_cities;
    const auto T = static_cast<int>(s.years.size());

    std::vector<std::string> labels;
    std::vector<double> rho_h(static_cast<std::size_t>(C));
    std::vector<double> amenity(static_cast<std::size_t>(C));
    std::vector<double> delta0(static_cast<std::size_t>(C));
    std::vector<double> log_pop0(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
        labels.push_back(city_label(c, C));
        CounterRng rng(s.seed, stream_id(city_draws, static_cast<std::uint64_t>(c)));
        const auto k = static_cast<std::size_t>(c);
        rho_h[k] = s.rho_h_scale * std::exp(s.rho_h_log_sd * rng.normal());
        amenity[k] = s.amenity_sd * rng.normal();
        delta0[k] = rng.uniform(s.delta_lo, s.delta_hi);
        log_pop0[k] = s.log_pop_mean + s.log_pop_sd * rng.normal();
    }

    // True city-period values, [t][c].
    std::vector<std::vector<double>> delta(T), pop(T), p_h(T), p_n(T), wage(T);
    for (int t = 0; t < T; ++t) {
        for (int c = 0; c < C; ++c) {
            const auto k = static_cast<std::size_t>(c);
            CounterRng rng(s.seed, stream_id(period_draws, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(t)));
            const double d = delta0[k] * std::exp(s.delta_drift * t + s.delta_log_sd * rng.normal());
            const double L = std::exp(log_pop0[k] + s.log_pop_growth * t + s.log_pop_within_sd * rng.normal());
            const double ph = s.kappa_h * std::pow(L, s.gamma_h);
            const double pn = (s.unskilled_value + ph - amenity[k]) / (1.0 - s.lambda);
            if (!(d > 0.0 && d < 1.0)) throw ConfigError("generator: drawn college fraction outside (0,1)");
            if (!(pn > 0.0)) throw ConfigError("generator: non-tradable price not positive; lower amenity_sd");
            delta[t].push_back(d);
            pop[t].push_back(L);
            p_h[t].push_back(ph);
            p_n[t].push_back(pn);
            wage[t].push_back(rho_h[k] * std::pow(d, s.gamma_agg) * std::exp(s.wage_growth * t));
        }
    }

    GeneratedData out;
    for (int c = 0; c < C; ++c) {
        for (int t = 0; t < T; ++t) {
            const auto k = static_cast<std::size_t>(c);
            CounterRng rng(s.seed,
                           stream_id(observation_noise, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(t)));
            PanelObservation r;
            r.msa = labels[k];
            r.year = s.years[static_cast<std::size_t>(t)];
            r.rent = p_h[t][k] * (1.0 + s.noise.rent * rng.normal());
            r.w_skilled = wage[t][k] * (1.0 + s.noise.wage * rng.normal());
            r.w_unskilled = p_n[t][k] * (1.0 + s.noise.wage * rng.normal());
            r.college_frac = delta[t][k];
            r.pop = pop[t][k];
            out.panel.push_back(r);
        }
    }

    std::vector<double> utility(static_cast<std::size_t>(C));
    for (int t = 0; t < T; ++t) {
        const double zeta = s.zeta[static_cast<std::size_t>(t)];
        for (int c = 0; c < C; ++c) {
            const auto k = static_cast<std::size_t>(c);
            utility[k] = wage[t][k] - s.lambda * p_n[t][k] - p_h[t][k] + amenity[k];
        }
        for (int o = 0; o < C; ++o) {
            const auto ko = static_cast<std::size_t>(o);
            const double penalty = zeta * std::pow(delta[t][ko], -s.gamma_sig);
            double shift = kNegInf;
            for (int c = 0; c < C; ++c)
                shift = std::max(shift, utility[static_cast<std::size_t>(c)] - (c == o ? 0.0 : penalty));
            double denom = 0.0;
            std::vector<double> kernel(static_cast<std::size_t>(C));
            for (int c = 0; c < C; ++c) {
                const auto k = static_cast<std::size_t>(c);
                kernel[k] = std::exp(utility[k] - (c == o ? 0.0 : penalty) - shift);
                denom += kernel[k];
            }
            CounterRng rng(s.seed,
                           stream_id(migration_noise, static_cast<std::uint64_t>(o), static_cast<std::uint64_t>(t)));
            for (int c = 0; c < C; ++c) {
                const auto k = static_cast<std::size_t>(c);
                const double noise = std::exp(s.noise.share * rng.normal());
                out.flows.push_back({s.years[static_cast<std::size_t>(t)], labels[ko], labels[k],
                                     s.n_agents_per_city * kernel[k] / denom * noise});
            }
        }
    }

    auto& truth = out.truth;
    truth["seed"] = static_cast<double>(s.seed);
    truth["n_cities"] = C;
    truth["lambda"] = s.lambda;
    truth["gamma"] = s.gamma_sig;
    truth["gamma_agg"] = s.gamma_agg;
    truth["kappa_h"] = s.kappa_h;
    truth["gamma_h"] = s.gamma_h;
    truth["unskilled_value"] = s.unskilled_value;
    truth["noise_rent"] = s.noise.rent;
    truth["noise_wage"] = s.noise.wage;
    truth["noise_share"] = s.noise.share;
    for (int t = 0; t < T; ++t)
        truth["zeta_" + std::to_string(s.years[static_cast<std::size_t>(t)])] = s.zeta[static_cast<std::size_t>(t)];
    for (int c = 0; c < C; ++c) {
        const auto k = static_cast<std::size_t>(c);
        truth["amenity_" + labels[k]] = amenity[k];
        truth["rho_h_" + labels[k]] = rho_h[k];
    }
    return out;
}

void write_generated(const std::filesystem::path& dir, const GeneratedData& data) {
    write_panel_file(dir / "panel.csv", data.panel);
    write_migration_file(dir / "migration.csv", data.flows);
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, value] : data.truth) j[key] = value;
    std::ofstream out(dir / "truth.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "truth.json").string());
    out << j.dump(2) << '\n';
}

std::map<std::string, double> read_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    std::map<std::string, double> out;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) throw IoError(path.string() + ": value of '" + key + "' is not a number");
        out[key] = value.get<double>();
    }
    return out;
}

double occupational_similarity(const Eigen::VectorXd& dist_a, const Eigen::MatrixXd& transition,
                               const Eigen::VectorXd& dist_b) {
    const auto n = dist_a.size();
    if (dist_b.size() != n || transition.rows() != n || transition.cols() != n) {
        throw ModelError("occupational_similarity: dimension mismatch");
    }
    const double tol = 1e-9;
    if ((dist_a.array() < 0.0).any() || (dist_b.array() < 0.0).any() || (transition.array() < 0.0).any()) {
        throw ModelError("occupational_similarity: negative entries");
    }
    if (std::abs(dist_a.sum() - 1.0) > tol || std::abs(dist_b.sum() - 1.0) > tol) {
        throw ModelError("occupational_similarity: shares must sum to one");
    }
    if (((transition.rowwise().sum().array() - 1.0).abs() > tol).any()) {
        throw ModelError("occupational_similarity: transition rows must sum to one");
    }
    return dist_a.dot(transition * dist_b);
}

}  // namespace skillscape
