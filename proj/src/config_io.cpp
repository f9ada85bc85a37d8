#include "skillscape/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skillscape/errors.hpp"

namespace skillscape {

namespace {

using nlohmann::json;
using Eigen::Index;

class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) {
        if (!has(key)) throw ConfigError(path_ + "." + key + ": missing");
        return j_.at(key);
    }

    std::string where(const std::string& key) const { return path_ + "." + key; }

    double number(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        return v.get<double>();
    }

    double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    int integer(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
        return v.get<int>();
    }

    std::string text(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ConfigError("unknown key '" + path_ + "." + item.key() + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

VectorXd to_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    VectorXd v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(where + ": expected numbers");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

MatrixXd to_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    MatrixXd m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(where + ": ragged matrix");
        m.row(static_cast<Index>(r)) = to_vector(j[r], where).transpose();
    }
    return m;
}

bool is_tensor(const json& j) { return j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array(); }

Tensor3 to_tensor(const json& j, const std::string& where) {
    if (!is_tensor(j)) throw ConfigError(where + ": expected a [origin][major][destination] array");
    const std::size_t n1 = j[0].size();
    const std::size_t n2 = j[0][0].size();
    Tensor3 t(j.size(), n1, n2);
    for (std::size_t a = 0; a < j.size(); ++a) {
        if (!j[a].is_array() || j[a].size() != n1) throw ConfigError(where + ": ragged tensor");
        for (std::size_t b = 0; b < n1; ++b) {
            if (!j[a][b].is_array() || j[a][b].size() != n2) throw ConfigError(where + ": ragged tensor");
            for (std::size_t c = 0; c < n2; ++c) {
                if (!j[a][b][c].is_number()) throw ConfigError(where + ": expected numbers");
                t(a, b, c) = j[a][b][c].get<double>();
            }
        }
    }
    return t;
}

json from_vector(const VectorXd& v) {
    json j = json::array();
    for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

json from_matrix(const MatrixXd& m) {
    json j = json::array();
    for (Index r = 0; r < m.rows(); ++r) j.push_back(from_vector(m.row(r).transpose()));
    return j;
}

json from_tensor(const Tensor3& t) {
    json j = json::array();
    for (std::size_t a = 0; a < t.dim(0); ++a) {
        json ja = json::array();
        for (std::size_t b = 0; b < t.dim(1); ++b) {
            json jb = json::array();
            for (std::size_t c = 0; c < t.dim(2); ++c) jb.push_back(t(a, b, c));
            ja.push_back(std::move(jb));
        }
        j.push_back(std::move(ja));
    }
    return j;
}

// Per-destination vector if h does not vary by origin or major.
std::optional<VectorXd> collapsible(const Tensor3& h) {
    if (h.empty() || h.dim(0) != h.dim(2)) return std::nullopt;
    VectorXd v(static_cast<Index>(h.dim(2)));
    for (std::size_t c = 0; c < h.dim(2); ++c) v(static_cast<Index>(c)) = h(0, 0, c);
    for (std::size_t o = 0; o < h.dim(0); ++o)
        for (std::size_t m = 0; m < h.dim(1); ++m)
            for (std::size_t c = 0; c < h.dim(2); ++c)
                if (h(o, m, c) != v(static_cast<Index>(c))) return std::nullopt;
    return v;
}

EconomyConfig parse_economy(const json& j) {
    Section s(j, "economy");
    EconomyConfig e;
    e.n_cities = s.integer("n_cities");
    e.n_majors = s.integer("n_majors");
    if (e.n_cities < 1 || e.n_majors < 1) throw ConfigError("economy: n_cities and n_majors must be positive");
    e.lambda = s.number("lambda");
    e.theta = s.number("theta");
    if (s.has("xi_const")) e.xi_override = s.number("xi_const");
    e.kappa_obs = s.number("kappa_obs");
    e.sigma2_xi = s.number("sigma2_xi");
    e.sigma2_xihat = s.number("sigma2_xihat");
    e.gamma_sig = s.number("gamma_sig");
    e.zeta_tilde = s.number("zeta_tilde");
    e.tau = s.number_or("tau", 0.0);
    e.gamma_agg = s.number("gamma_agg");
    e.gamma_h = s.number("gamma_h");
    e.kappa_h = s.number("kappa_h");
    e.total_pop = s.number("total_pop");
    e.tuition = s.has("tuition") ? to_matrix(s.at("tuition"), s.where("tuition"))
                                 : MatrixXd::Zero(e.n_cities, e.n_slots());
    if (s.has("signal_variance")) e.signal_variance = to_tensor(s.at("signal_variance"), s.where("signal_variance"));
    s.finish();
    return e;
}

CityPrimitives parse_cities(const json& j, const EconomyConfig* economy, std::vector<std::string>& labels) {
    Section s(j, "cities");
    CityPrimitives c;
    c.productivity = to_vector(s.at("productivity"), s.where("productivity"));
    const auto n = static_cast<int>(c.productivity.size());
    const int slots = economy ? economy->n_slots() : 2;
    c.amenity = to_vector(s.at("amenity"), s.where("amenity"));
    const json& h = s.at("match_quality");
    c.match_quality = is_tensor(h) ? to_tensor(h, s.where("match_quality"))
                                   : CityPrimitives::collapsed_match_quality(to_vector(h, s.where("match_quality")), slots);
    c.endowment = s.has("endowment") ? to_matrix(s.at("endowment"), s.where("endowment")) : MatrixXd::Zero(n, slots);
    c.moving_cost = s.has("moving_cost") ? to_matrix(s.at("moving_cost"), s.where("moving_cost")) : MatrixXd::Zero(n, n);
    c.taste_scale = s.has("taste_scale") ? to_tensor(s.at("taste_scale"), s.where("taste_scale"))
                                         : Tensor3(static_cast<std::size_t>(n), static_cast<std::size_t>(slots),
                                                   static_cast<std::size_t>(n), 1.0);
    if (s.has("population")) c.population = to_vector(s.at("population"), s.where("population"));
    if (s.has("migration")) c.migration = to_matrix(s.at("migration"), s.where("migration"));
    if (s.has("labels")) {
        const json& l = s.at("labels");
        if (!l.is_array()) throw ConfigError("cities.labels: expected an array of strings");
        for (const auto& item : l) {
            if (!item.is_string()) throw ConfigError("cities.labels: expected an array of strings");
            labels.push_back(item.get<std::string>());
        }
        if (static_cast<int>(labels.size()) != n) throw ConfigError("cities.labels: one label per city required");
    }
    s.finish();
    return c;
}

SolverSettings parse_solver(const json& j) {
    Section s(j, "solver");
    SolverSettings out;
    out.damping = s.number_or("damping", out.damping);
    out.tol = s.number_or("tol", out.tol);
    if (s.has("max_iter")) out.max_iter = s.integer("max_iter");
    if (s.has("mode")) out.mode = parse_solver_mode(s.text("mode"));
    if (s.has("init")) out.init = parse_init_kind(s.text("init"));
    s.finish();
    return out;
}

GeneratorSpec parse_generator(const json& j) {
    Section s(j, "estimation.generator");
    GeneratorSpec g;
    if (s.has("seed")) {
        const json& v = s.at("seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ConfigError("estimation.generator.seed: expected a nonnegative integer");
        }
        g.seed = v.get<std::uint64_t>();
    }
    if (s.has("n_cities")) g.n_cities = s.integer("n_cities");
    if (s.has("n_majors")) g.n_majors = s.integer("n_majors");
    g.n_agents_per_city = s.number_or("n_agents_per_city", g.n_agents_per_city);
    if (s.has("noise")) {
        Section n(s.at("noise"), "estimation.generator.noise");
        g.noise.rent = n.number_or("rent", g.noise.rent);
        g.noise.wage = n.number_or("wage", g.noise.wage);
        g.noise.share = n.number_or("share", g.noise.share);
        n.finish();
    }
    if (s.has("years")) {
        g.years.clear();
        for (const auto& y : s.at("years")) {
            if (!y.is_number_integer()) throw ConfigError("estimation.generator.years: expected integers");
            g.years.push_back(y.get<int>());
        }
    }
    if (s.has("zeta")) {
        const VectorXd z = to_vector(s.at("zeta"), s.where("zeta"));
        g.zeta.assign(z.data(), z.data() + z.size());
    }
    g.lambda = s.number_or("lambda", g.lambda);
    g.gamma_sig = s.number_or("gamma_sig", g.gamma_sig);
    g.gamma_agg = s.number_or("gamma_agg", g.gamma_agg);
    g.kappa_h = s.number_or("kappa_h", g.kappa_h);
    g.gamma_h = s.number_or("gamma_h", g.gamma_h);
    g.unskilled_value = s.number_or("unskilled_value", g.unskilled_value);
    g.rho_h_scale = s.number_or("rho_h_scale", g.rho_h_scale);
    g.rho_h_log_sd = s.number_or("rho_h_log_sd", g.rho_h_log_sd);
    g.amenity_sd = s.number_or("amenity_sd", g.amenity_sd);
    g.delta_lo = s.number_or("delta_lo", g.delta_lo);
    g.delta_hi = s.number_or("delta_hi", g.delta_hi);
    g.delta_drift = s.number_or("delta_drift", g.delta_drift);
    g.delta_log_sd = s.number_or("delta_log_sd", g.delta_log_sd);
    g.log_pop_mean = s.number_or("log_pop_mean", g.log_pop_mean);
    g.log_pop_sd = s.number_or("log_pop_sd", g.log_pop_sd);
    g.log_pop_growth = s.number_or("log_pop_growth", g.log_pop_growth);
    g.log_pop_within_sd = s.number_or("log_pop_within_sd", g.log_pop_within_sd);
    g.wage_growth = s.number_or("wage_growth", g.wage_growth);
    s.finish();
    validate_generator(g);
    return g;
}

json economy_json(const EconomyConfig& e) {
    json j;
    j["n_cities"] = e.n_cities;
    j["n_majors"] = e.n_majors;
    j["lambda"] = e.lambda;
    j["theta"] = e.theta;
    if (e.xi_override) j["xi_const"] = *e.xi_override;
    j["kappa_obs"] = e.kappa_obs;
    j["sigma2_xi"] = e.sigma2_xi;
    j["sigma2_xihat"] = e.sigma2_xihat;
    j["gamma_sig"] = e.gamma_sig;
    j["zeta_tilde"] = e.zeta_tilde;
    j["tau"] = e.tau;
    j["gamma_agg"] = e.gamma_agg;
    j["gamma_h"] = e.gamma_h;
    j["kappa_h"] = e.kappa_h;
    j["total_pop"] = e.total_pop;
    j["tuition"] = from_matrix(e.tuition);
    if (e.signal_variance) j["signal_variance"] = from_tensor(*e.signal_variance);
    return j;
}

json cities_json(const CityPrimitives& c, const std::vector<std::string>& labels) {
    json j;
    j["productivity"] = from_vector(c.productivity);
    j["amenity"] = from_vector(c.amenity);
    if (const auto v = collapsible(c.match_quality)) {
        j["match_quality"] = from_vector(*v);
    } else {
        j["match_quality"] = from_tensor(c.match_quality);
    }
    j["endowment"] = from_matrix(c.endowment);
    j["moving_cost"] = from_matrix(c.moving_cost);
    j["taste_scale"] = from_tensor(c.taste_scale);
    if (c.population) j["population"] = from_vector(*c.population);
    if (c.migration) j["migration"] = from_matrix(*c.migration);
    if (!labels.empty()) j["labels"] = labels;
    return j;
}

json solver_json(const SolverSettings& s) {
    json j;
    j["damping"] = s.damping;
    j["tol"] = s.tol;
    j["max_iter"] = s.max_iter;
    j["mode"] = to_string(s.mode);
    j["init"] = to_string(s.init);
    return j;
}

json generator_json(const GeneratorSpec& g) {
    json j;
    j["seed"] = g.seed;
    j["n_cities"] = g.n_cities;
    j["n_majors"] = g.n_majors;
    j["n_agents_per_city"] = g.n_agents_per_city;
    j["noise"] = {{"rent", g.noise.rent}, {"wage", g.noise.wage}, {"share", g.noise.share}};
    j["years"] = g.years;
    j["zeta"] = g.zeta;
    j["lambda"] = g.lambda;
    j["gamma_sig"] = g.gamma_sig;
    j["gamma_agg"] = g.gamma_agg;
    j["kappa_h"] = g.kappa_h;
    j["gamma_h"] = g.gamma_h;
    j["unskilled_value"] = g.unskilled_value;
    j["rho_h_scale"] = g.rho_h_scale;
    j["rho_h_log_sd"] = g.rho_h_log_sd;
    j["amenity_sd"] = g.amenity_sd;
    j["delta_lo"] = g.delta_lo;
    j["delta_hi"] = g.delta_hi;
    j["delta_drift"] = g.delta_drift;
    j["delta_log_sd"] = g.delta_log_sd;
    j["log_pop_mean"] = g.log_pop_mean;
    j["log_pop_sd"] = g.log_pop_sd;
    j["log_pop_growth"] = g.log_pop_growth;
    j["log_pop_within_sd"] = g.log_pop_within_sd;
    j["wage_growth"] = g.wage_growth;
    return j;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");

    RunConfig cfg;
    for (const auto& item : root.items()) {
        const std::string& key = item.key();
        if (key != "economy" && key != "cities" && key != "solver" && key != "estimation") {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    try {
        if (root.contains("economy")) cfg.economy = parse_economy(root["economy"]);
        if (root.contains("cities")) {
            cfg.cities = parse_cities(root["cities"], cfg.economy ? &*cfg.economy : nullptr, cfg.city_labels);
        }
        if (root.contains("solver")) cfg.solver = parse_solver(root["solver"]);
        if (root.contains("estimation")) {
            Section s(root["estimation"], "estimation");
            if (s.has("generator")) cfg.generator = parse_generator(s.at("generator"));
            s.finish();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    if (cfg.cities && !cfg.economy) throw ConfigError("cities section requires an economy section");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& config) {
    json root = json::object();
    if (config.economy) root["economy"] = economy_json(*config.economy);
    if (config.cities) root["cities"] = cities_json(*config.cities, config.city_labels);
    root["solver"] = solver_json(config.solver);
    if (config.generator) root["estimation"] = {{"generator", generator_json(*config.generator)}};
    return root.dump(2) + "\n";
}

std::vector<std::string> resolve_labels(const RunConfig& config, int n) {
    if (static_cast<int>(config.city_labels.size()) == n) return config.city_labels;
    std::vector<std::string> out;
    for (int c = 0; c < n; ++c) out.push_back(city_label(c, n));
    return out;
}

std::string dump_state_json(const EquilibriumState& st, const std::vector<std::string>& labels) {
    json j;
    j["labels"] = labels;
    j["mode"] = to_string(st.mode);
    j["population"] = from_vector(st.population);
    j["skill_share"] = from_matrix(st.skill_share);
    j["p_nontradable"] = from_vector(st.p_nontradable);
    j["p_housing"] = from_vector(st.p_housing);
    j["wages"] = from_tensor(st.wages);
    j["choice_prob"] = from_tensor(st.choice_prob);
    j["migration"] = from_matrix(st.migration);
    j["log_market_potential"] = from_vector(st.log_market_potential);
    j["reservation_value"] = from_vector(st.reservation_value);
    j["college_value"] = from_vector(st.college_value);
    j["agg_index"] = from_matrix(st.agg_index);
    j["cohort"] = from_vector(st.cohort);
    j["unskilled_value"] = st.unskilled_value;
    j["convergence"] = {{"converged", st.convergence.converged},
                        {"iterations", st.convergence.iterations},
                        {"residual", st.convergence.residual}};
    return j.dump(2) + "\n";
}

}  // namespace skillscape
