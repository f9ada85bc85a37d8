#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "skillscape/config_io.hpp"
#include "skillscape/datagen.hpp"
#include "skillscape/equilibrium.hpp"
#include "skillscape/errors.hpp"
#include "skillscape/estimation.hpp"
#include "skillscape/experiment.hpp"
#include "skillscape/signal.hpp"
#include "skillscape/verify.hpp"

namespace py = pybind11;
using namespace skillscape;

namespace {

py::array_t<double> to_numpy(const Tensor3& t) {
    py::array_t<double> out({t.dim(0), t.dim(1), t.dim(2)});
    std::copy(t.flat().begin(), t.flat().end(), out.mutable_data());
    return out;
}

py::dict state_dict(const EquilibriumState& st) {
    py::dict d;
    d["population"] = st.population;
    d["skill_share"] = st.skill_share;
    d["p_nontradable"] = st.p_nontradable;
    d["p_housing"] = st.p_housing;
    d["choice_prob"] = to_numpy(st.choice_prob);
    d["migration"] = st.migration;
    d["log_market_potential"] = st.log_market_potential;
    d["college_value"] = st.college_value;
    d["reservation_value"] = st.reservation_value;
    d["agg_index"] = st.agg_index;
    d["cohort"] = st.cohort;
    d["unskilled_value"] = st.unskilled_value;
    d["iterations"] = st.convergence.iterations;
    d["residual"] = st.convergence.residual;
    return d;
}

py::dict solve_config(const std::string& text, const std::optional<std::string>& mode, std::optional<double> damping,
                      std::optional<double> tol, std::optional<int> max_iter) {
    RunConfig cfg = parse_config(text);
    if (!cfg.economy || !cfg.cities) throw ConfigError("solve requires economy and cities sections");
    if (mode) cfg.solver.mode = parse_solver_mode(*mode);
    if (damping) cfg.solver.damping = *damping;
    if (tol) cfg.solver.tol = *tol;
    if (max_iter) cfg.solver.max_iter = *max_iter;
    const EquilibriumState st = solve_equilibrium(*cfg.economy, *cfg.cities, cfg.solver);
    py::dict d = state_dict(st);
    py::dict residuals;
    for (const auto& [name, value] : clearing_residuals(st, *cfg.economy, *cfg.cities).entries) residuals[name.c_str()] = value;
    d["residuals"] = residuals;
    d["labels"] = resolve_labels(cfg, cfg.economy->n_cities);
    return d;
}

GeneratorSpec generator_spec(std::uint64_t seed, int n_cities, const std::optional<std::string>& config) {
    GeneratorSpec spec;
    if (config) {
        const RunConfig cfg = parse_config(*config);
        if (cfg.generator) spec = *cfg.generator;
    }
    spec.seed = seed;
    if (n_cities > 0) spec.n_cities = n_cities;
    return spec;
}

py::dict panel_dict(const std::vector<PanelObservation>& rows) {
    std::vector<std::string> msa;
    std::vector<int> year;
    std::vector<double> ws, wu, rent, frac, pop;
    for (const auto& r : rows) {
        msa.push_back(r.msa);
        year.push_back(r.year);
        ws.push_back(r.w_skilled);
        wu.push_back(r.w_unskilled);
        rent.push_back(r.rent);
        frac.push_back(r.college_frac);
        pop.push_back(r.pop);
    }
    py::dict d;
    d["msa"] = msa;
    d["year"] = year;
    d["w_skilled"] = py::array(py::cast(ws));
    d["w_unskilled"] = py::array(py::cast(wu));
    d["rent"] = py::array(py::cast(rent));
    d["college_frac"] = py::array(py::cast(frac));
    d["pop"] = py::array(py::cast(pop));
    return d;
}

py::dict estimates_dict(const EstimationResult& r) {
    py::dict d;
    for (const auto& row : estimate_table(r)) {
        d[row.param.c_str()] = py::make_tuple(row.estimate, row.se, row.pvalue);
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spatial skill-acquisition model: equilibrium solver, estimator and counterfactuals";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<ModelError>(m, "ModelError", PyExc_ArithmeticError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<EstimationError>(m, "EstimationError", PyExc_RuntimeError);

    m.def(
        "posterior_update",
        [](const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const Eigen::VectorXd& signal_mean,
           const Eigen::VectorXd& precision) {
            const GaussianBelief post = posterior_update({mean, cov}, signal_mean, precision);
            return py::make_tuple(post.mean, post.cov);
        },
        py::arg("mean"), py::arg("cov"), py::arg("signal_mean"), py::arg("precision"),
        "Conjugate normal update; returns (posterior mean, posterior covariance).");

    m.def("solve", &solve_config, py::arg("config_json"), py::arg("mode") = py::none(),
          py::arg("damping") = py::none(), py::arg("tol") = py::none(), py::arg("max_iter") = py::none(),
          "Solve the equilibrium described by a JSON config string.");

    m.def(
        "generate_panel",
        [](std::uint64_t seed, int n_cities, const std::optional<std::string>& config) {
            const GeneratedData data = generate_panel(generator_spec(seed, n_cities, config));
            py::dict d;
            d["panel"] = panel_dict(data.panel);
            std::vector<int> year;
            std::vector<std::string> origin, dest;
            std::vector<double> count;
            for (const auto& f : data.flows) {
                year.push_back(f.year);
                origin.push_back(f.origin);
                dest.push_back(f.dest);
                count.push_back(f.count);
            }
            d["migration"] = py::dict(py::arg("year") = year, py::arg("origin") = origin, py::arg("dest") = dest,
                                      py::arg("count") = py::array(py::cast(count)));
            d["truth"] = data.truth;
            return d;
        },
        py::arg("seed") = 7, py::arg("n_cities") = 0, py::arg("config_json") = py::none(),
        "Synthetic panel, migration flows and generating parameters.");

    m.def(
        "write_generated",
        [](const std::string& dir, std::uint64_t seed, int n_cities) {
            write_generated(dir, generate_panel(generator_spec(seed, n_cities, std::nullopt)));
        },
        py::arg("out_dir"), py::arg("seed") = 7, py::arg("n_cities") = 0,
        "Write panel.csv, migration.csv and truth.json into an existing directory.");

    m.def(
        "estimate",
        [](const std::string& panel_csv, const std::string& migration_csv) {
            return estimates_dict(estimate_all(read_panel_file(panel_csv), read_migration_file(migration_csv)));
        },
        py::arg("panel_csv"), py::arg("migration_csv"), "Estimate every parameter; values are (estimate, se, pvalue).");

    m.def(
        "verify",
        [](std::uint64_t seed) {
            GeneratorSpec spec;
            spec.seed = seed;
            const VerifyReport rep = run_verify(spec);
            py::list rows;
            for (const auto& c : rep.checks)
                rows.append(py::dict(py::arg("param") = c.param, py::arg("truth") = c.truth,
                                     py::arg("estimate") = c.estimate, py::arg("error") = c.error,
                                     py::arg("tolerance") = c.tolerance, py::arg("pass") = c.pass));
            return py::make_tuple(rep.all_pass(), rows);
        },
        py::arg("seed") = 7, "Generate, estimate and compare; returns (all_pass, rows).");

    m.def(
        "redistribution_impact",
        [](const Eigen::VectorXd& delta, const Eigen::VectorXd& population, const Eigen::VectorXd& rho_h,
           const Eigen::VectorXd& p_n, const Eigen::VectorXd& p_h, const Eigen::VectorXd& amenity, double gamma_agg,
           double zeta, double gamma_sig, double lambda) {
            const PhiTildeInputs in{rho_h, p_n, p_h, amenity, gamma_agg, zeta, gamma_sig, lambda};
            const CounterfactualReport rep = redistribution_impact(delta, population, in, 0);
            const auto n = static_cast<Eigen::Index>(rep.rows.size());
            Eigen::VectorXd total(n), agg(n), sig(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& r = rep.rows[static_cast<std::size_t>(i)];
                total(i) = r.dphi_total;
                agg(i) = r.dphi_agglomeration;
                sig(i) = r.dphi_signaling;
            }
            return py::dict(py::arg("delta_bar") = rep.delta_bar, py::arg("dphi_total") = total,
                            py::arg("dphi_agglomeration") = agg, py::arg("dphi_signaling") = sig);
        },
        py::arg("delta"), py::arg("population"), py::arg("rho_h"), py::arg("p_n"), py::arg("p_h"), py::arg("amenity"),
        py::arg("gamma_agg"), py::arg("zeta"), py::arg("gamma_sig"), py::arg("lam"),
        "Change in the linearised market potential from equalising college fractions.");

    m.def("dollar_impact", &dollar_impact, py::arg("zeta"), py::arg("gamma_sig"), py::arg("delta_p20"),
          py::arg("delta_p80"), py::arg("unit_scale"));
    m.def("agglomeration_dollar_impact", &agglomeration_dollar_impact, py::arg("gamma_agg"), py::arg("delta_p20"),
          py::arg("delta_p80"), py::arg("base_wage"));
    m.def("implied_base_wage", &implied_base_wage, py::arg("gamma_agg"), py::arg("delta_p20"), py::arg("delta_p80"),
          py::arg("impact"));
}
