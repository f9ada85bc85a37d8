// skillscape: generate, solve, estimate, counterfactual and verify from the command line.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "skillscape/config_io.hpp"
#include "skillscape/datagen.hpp"
#include "skillscape/equilibrium.hpp"
#include "skillscape/errors.hpp"
#include "skillscape/estimation.hpp"
#include "skillscape/experiment.hpp"
#include "skillscape/panel.hpp"
#include "skillscape/verify.hpp"

namespace fs = std::filesystem;
using namespace skillscape;

namespace {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,
    exit_io = 3,
    exit_config = 4,
    exit_solver = 5,
    exit_estimation = 6,
    exit_verify = 7,
};

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  2  usage error\n"
    "  3  I/O error (unreadable input, output directory not empty without --force)\n"
    "  4  configuration or schema error\n"
    "  5  model or solver error (non-convergence, infeasible clearing)\n"
    "  6  estimation error\n"
    "  7  verify: at least one parameter outside tolerance\n"
    "\n"
    "Logging: SKILLSCAPE_LOG=error|info|debug (default info).\n";

struct Manifest {
    std::string command;
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::optional<double> damping;
    std::optional<double> tol;
    std::optional<int> max_iter;
    unsigned threads = 1;
    bool force = false;
    std::string panel_path;
    std::string migration_path;
    std::uint64_t agents = 0;
};

class OutputDir {
public:
    OutputDir(const std::string& path, bool force) : path_(path) {
        std::error_code ec;
        if (fs::exists(path_, ec)) {
            if (!fs::is_directory(path_)) throw IoError(path_.string() + " exists and is not a directory");
            if (!fs::is_empty(path_) && !force) {
                throw IoError("output directory " + path_.string() + " is not empty; pass --force to overwrite");
            }
        } else if (!fs::create_directories(path_, ec) || ec) {
            throw IoError("cannot create output directory " + path_.string());
        }
    }

    fs::path file(const std::string& name) const { return path_ / name; }

    std::ofstream open(const std::string& name) const {
        std::ofstream out(file(name), std::ios::binary);
        if (!out) throw IoError("cannot write " + file(name).string());
        return out;
    }

    void write(const std::string& name, const std::string& content) const {
        auto out = open(name);
        out << content;
        if (!out) throw IoError("write failed: " + file(name).string());
    }

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

spdlog::level::level_enum log_level() {
    const char* env = std::getenv("SKILLSCAPE_LOG");
    const std::string v = env ? env : "info";
    if (v == "error") return spdlog::level::err;
    if (v == "debug") return spdlog::level::debug;
    if (v == "info") return spdlog::level::info;
    throw ConfigError("SKILLSCAPE_LOG must be error, info or debug (got '" + v + "')");
}

void setup_logging(const OutputDir* out) {
    auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
    console->set_pattern("[%l] %v");
    std::vector<spdlog::sink_ptr> sinks{console};
    if (out) {
        auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(out->file("run.log").string(), true);
        file->set_pattern("%Y-%m-%dT%H:%M:%S.%e [%l] %v");
        sinks.push_back(file);
    }
    auto logger = std::make_shared<spdlog::logger>("skillscape", sinks.begin(), sinks.end());
    logger->set_level(log_level());
    logger->flush_on(spdlog::level::info);
    spdlog::set_default_logger(logger);
}

RunConfig load_or_default(const Manifest& m) {
    if (m.config_path.empty()) return RunConfig{};
    spdlog::info("reading config {}", m.config_path);
    return load_config(m.config_path);
}

void apply_solver_overrides(RunConfig& cfg, const Manifest& m) {
    if (!m.mode.empty()) cfg.solver.mode = parse_solver_mode(m.mode);
    if (m.damping) cfg.solver.damping = *m.damping;
    if (m.tol) cfg.solver.tol = *m.tol;
    if (m.max_iter) cfg.solver.max_iter = *m.max_iter;
}

GeneratorSpec generator_of(RunConfig& cfg, const Manifest& m) {
    GeneratorSpec spec = cfg.generator.value_or(GeneratorSpec{});
    if (m.seed) spec.seed = *m.seed;
    validate_generator(spec);
    cfg.generator = spec;
    return spec;
}

EquilibriumState solve_config(RunConfig& cfg, const Manifest& m) {
    if (!cfg.economy || !cfg.cities) throw ConfigError("solve requires economy and cities sections");
    apply_solver_overrides(cfg, m);
    cfg.solver.record_trace = true;
    spdlog::info("solving {} cities x {} majors ({}, damping {}, tol {})", cfg.economy->n_cities,
                 cfg.economy->n_majors, to_string(cfg.solver.mode), cfg.solver.damping, cfg.solver.tol);
    EquilibriumState st = solve_equilibrium(*cfg.economy, *cfg.cities, cfg.solver);
    spdlog::info("converged in {} iterations, residual {:.3e}", st.convergence.iterations, st.convergence.residual);
    return st;
}

int cmd_generate(const Manifest& m, const OutputDir& out) {
    RunConfig cfg = load_or_default(m);
    const GeneratorSpec spec = generator_of(cfg, m);
    spdlog::info("generating {} cities x {} years, seed {}", spec.n_cities, spec.years.size(), spec.seed);
    const GeneratedData data = generate_panel(spec);
    write_generated(out.path(), data);
    out.write("config.json", dump_config(cfg));
    spdlog::info("wrote {} panel rows and {} migration rows", data.panel.size(), data.flows.size());
    return exit_ok;
}

int cmd_solve(const Manifest& m, const OutputDir& out) {
    RunConfig cfg = load_or_default(m);
    const EquilibriumState st = solve_config(cfg, m);
    const EconomyConfig& e = *cfg.economy;
    const CityPrimitives& c = *cfg.cities;
    const auto labels = resolve_labels(cfg, e.n_cities);

    {
        auto f = out.open("equilibrium.csv");
        f << "city,population,college_frac,p_nontradable,p_housing,log_market_potential,college_value,"
             "reservation_value\n";
        for (int k = 0; k < e.n_cities; ++k) {
            f << labels[static_cast<std::size_t>(k)] << ',' << format_double(st.population(k)) << ','
              << format_double(1.0 - st.skill_share(k, 0)) << ',' << format_double(st.p_nontradable(k)) << ','
              << format_double(st.p_housing(k)) << ',' << format_double(st.log_market_potential(k)) << ','
              << format_double(st.college_value(k)) << ',' << format_double(st.reservation_value(k)) << '\n';
        }
    }
    {
        auto f = out.open("choice.csv");
        f << "origin,major,dest,prob\n";
        for (int o = 0; o < e.n_cities; ++o)
            for (int k = 0; k < e.n_slots(); ++k)
                for (int d = 0; d < e.n_cities; ++d)
                    f << labels[static_cast<std::size_t>(o)] << ',' << k << ',' << labels[static_cast<std::size_t>(d)]
                      << ',' << format_double(st.choice_prob(o, k, d)) << '\n';
    }
    {
        auto f = out.open("residuals.csv");
        f << "condition,residual\n";
        for (const auto& [name, value] : clearing_residuals(st, e, c).entries) f << name << ',' << format_double(value) << '\n';
    }
    {
        auto f = out.open("trace.csv");
        write_trace_csv(f, st.convergence.trace);
    }
    out.write("state.json", dump_state_json(st, labels));

    if (m.agents > 0) {
        const ChoiceInputs in = choice_inputs_from_state(st, e, c);
        const std::uint64_t seed = m.seed.value_or(1);
        spdlog::info("simulating {} agents per origin on {} threads", m.agents, m.threads);
        const AgentSimulation sim = simulate_agents(in, m.agents, seed, m.threads);
        auto f = out.open("simulated.csv");
        f << "origin,major,dest,count,share,prob\n";
        for (int o = 0; o < e.n_cities; ++o)
            for (int k = 0; k < e.n_slots(); ++k)
                for (int d = 0; d < e.n_cities; ++d)
                    f << labels[static_cast<std::size_t>(o)] << ',' << k << ',' << labels[static_cast<std::size_t>(d)]
                      << ',' << format_double(sim.counts(o, k, d)) << ',' << format_double(sim.shares(o, k, d))
                      << ',' << format_double(st.choice_prob(o, k, d)) << '\n';
    }
    cfg.solver.record_trace = false;
    out.write("config.json", dump_config(cfg));
    return exit_ok;
}

void require_data_paths(const Manifest& m) {
    if (m.panel_path.empty() || m.migration_path.empty()) {
        throw CLI::ValidationError("--panel and --migration are required for this command");
    }
}

int cmd_estimate(const Manifest& m, const OutputDir& out) {
    require_data_paths(m);
    const auto panel = read_panel_file(m.panel_path);
    const auto flows = read_migration_file(m.migration_path);
    spdlog::info("estimating on {} panel rows and {} migration rows", panel.size(), flows.size());
    const EstimationResult r = estimate_all(panel, flows);
    {
        auto f = out.open("estimates.csv");
        write_estimates(f, estimate_table(r));
    }
    {
        auto f = out.open("amenities.csv");
        write_amenities(f, r.amenities);
    }
    {
        auto f = out.open("diagnostics.csv");
        f << "metric,value\n"
          << "pairs," << r.residuals.pairs << '\n'
          << "dropped_zero_share," << r.residuals.dropped_zero_share << '\n'
          << "dropped_nonpositive," << r.residuals.dropped_nonpositive << '\n'
          << "dropped_missing_panel," << r.residuals.dropped_missing_panel << '\n'
          << "r2_lambda," << format_double(r.r2_lambda) << '\n'
          << "r2_signaling," << format_double(r.r2_signaling) << '\n'
          << "r2_agglomeration," << format_double(r.r2_agglomeration) << '\n';
    }
    spdlog::info("lambda {:.4f}, gamma {:.4f}, gamma_agg {:.4f}", r.lambda_hat, r.gamma_hat, r.gamma_agg_hat);
    return exit_ok;
}

int cmd_counterfactual(const Manifest& m, const OutputDir& out) {
    std::vector<CounterfactualReport> reports;
    std::vector<std::string> labels;
    if (!m.panel_path.empty() || !m.migration_path.empty()) {
        require_data_paths(m);
        const auto panel = read_panel_file(m.panel_path);
        const auto flows = read_migration_file(m.migration_path);
        const EstimationResult r = estimate_all(panel, flows);
        spdlog::info("counterfactual from estimates: lambda {:.4f}, gamma {:.4f}, gamma_agg {:.4f}", r.lambda_hat,
                     r.gamma_hat, r.gamma_agg_hat);
        std::map<int, std::vector<const PanelObservation*>> by_year;
        for (const auto& row : panel) by_year[row.year].push_back(&row);
        for (auto& [year, rows] : by_year) {
            std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->msa < b->msa; });
            const auto n = static_cast<Eigen::Index>(rows.size());
            Eigen::VectorXd delta(n), pop(n);
            PhiTildeInputs in;
            in.rho_h.resize(n);
            in.p_n.resize(n);
            in.p_h.resize(n);
            in.amenity.resize(n);
            in.gamma_agg = r.gamma_agg_hat;
            in.gamma_sig = r.gamma_hat;
            in.lambda = r.lambda_hat;
            const auto z = r.zeta_hat.find(year);
            if (z == r.zeta_hat.end()) throw EstimationError("no zeta estimate for year " + std::to_string(year));
            in.zeta = z->second;
            std::vector<std::string> year_labels;
            for (Eigen::Index k = 0; k < n; ++k) {
                const auto& row = *rows[static_cast<std::size_t>(k)];
                delta(k) = row.college_frac;
                pop(k) = row.pop;
                in.rho_h(k) = row.w_skilled / std::pow(row.college_frac, r.gamma_agg_hat);
                in.p_n(k) = row.w_unskilled;
                in.p_h(k) = row.rent;
                in.amenity(k) = r.amenities.at(row.msa);
                year_labels.push_back(row.msa);
            }
            if (labels.empty()) labels = year_labels;
            if (year_labels != labels) throw EstimationError("counterfactual needs the same MSAs in every year");
            reports.push_back(redistribution_impact(delta, pop, in, year));
        }
    } else {
        RunConfig cfg = load_or_default(m);
        const EquilibriumState st = solve_config(cfg, m);
        const EconomyConfig& e = *cfg.economy;
        const CityPrimitives& c = *cfg.cities;
        labels = resolve_labels(cfg, e.n_cities);
        const auto n = static_cast<Eigen::Index>(e.n_cities);
        Eigen::VectorXd delta(n);
        PhiTildeInputs in;
        in.rho_h.resize(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            delta(k) = 1.0 - st.skill_share(k, 0);
            in.rho_h(k) = c.productivity(k) * c.match_quality(static_cast<std::size_t>(k), 1, static_cast<std::size_t>(k));
        }
        in.p_n = st.p_nontradable;
        in.p_h = st.p_housing;
        in.amenity = c.amenity;
        in.gamma_agg = e.gamma_agg;
        in.gamma_sig = e.gamma_sig;
        in.zeta = e.zeta_tilde;
        in.lambda = e.lambda;
        reports.push_back(redistribution_impact(delta, st.population, in, 0));
    }
    auto f = out.open("counterfactual.csv");
    write_counterfactual(f, reports, labels);
    for (const auto& rep : reports) spdlog::info("year {}: delta_bar {:.4f}", rep.year, rep.delta_bar);
    return exit_ok;
}

int cmd_verify(const Manifest& m, const OutputDir& out) {
    RunConfig cfg = load_or_default(m);
    const GeneratorSpec spec = generator_of(cfg, m);
    spdlog::info("verify: seed {}, {} cities x {} years", spec.seed, spec.n_cities, spec.years.size());
    const VerifyReport rep = run_verify(spec);
    write_generated(out.path(), rep.data);
    {
        auto f = out.open("estimates.csv");
        write_estimates(f, estimate_table(rep.estimates));
    }
    {
        auto f = out.open("verify.csv");
        write_verify_table(f, rep);
    }
    out.write("config.json", dump_config(cfg));

    std::printf("%-10s %12s %12s %12s %10s  %s\n", "param", "truth", "estimate", "error", "tolerance", "result");
    for (const auto& c : rep.checks) {
        std::printf("%-10s %12.6f %12.6f %12.6f %10.4f  %s\n", c.param.c_str(), c.truth, c.estimate, c.error,
                    c.tolerance, c.pass ? "PASS" : "FAIL");
    }
    std::printf("%s\n", rep.all_pass() ? "verify: PASS" : "verify: FAIL");
    return rep.all_pass() ? exit_ok : exit_verify;
}

int report_error(const std::optional<OutputDir>& out, const std::string& kind, int code, const std::string& message,
                 const std::vector<double>& trajectory = {}) {
    nlohmann::json j = {{"error", kind}, {"code", code}, {"message", message}};
    if (!trajectory.empty()) j["trajectory"] = trajectory;
    std::cerr << j.dump() << '\n';
    if (out) {
        std::ofstream f(out->file("error.json"), std::ios::binary);
        f << j.dump(2) << '\n';
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatial skill-acquisition model: equilibrium solver, estimator and counterfactuals"};
    app.footer(kExitCodes);
    app.require_subcommand(1);

    Manifest m;
    const auto common = [&m](CLI::App* sub) {
        sub->add_option("--config", m.config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", m.out_dir, "Output directory (created if absent)")->capture_default_str();
        sub->add_option("--seed", m.seed, "Seed override");
        sub->add_option("--mode", m.mode, "Solver mode")->check(CLI::IsMember({"one-generation", "steady-state"}));
        sub->add_option("--damping", m.damping, "Damping factor in (0,1]");
        sub->add_option("--tol", m.tol, "Convergence tolerance");
        sub->add_option("--max-iter", m.max_iter, "Iteration cap");
        sub->add_option("--threads", m.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_flag("--force", m.force, "Overwrite a non-empty output directory");
    };

    auto* generate = app.add_subcommand("generate", "Write a synthetic panel, migration flows and truth.json");
    auto* solve = app.add_subcommand("solve", "Solve the equilibrium of a configured economy");
    auto* estimate = app.add_subcommand("estimate", "Estimate lambda, amenities, zeta_t, gamma and gamma_agg");
    auto* counterfactual = app.add_subcommand("counterfactual", "Equalise college fractions and report dPhi");
    auto* verify = app.add_subcommand("verify", "Generate, estimate and compare with the truth");
    for (auto* sub : {generate, solve, estimate, counterfactual, verify}) common(sub);
    for (auto* sub : {estimate, counterfactual}) {
        sub->add_option("--panel", m.panel_path, "Panel CSV")->check(CLI::ExistingFile);
        sub->add_option("--migration", m.migration_path, "Migration CSV")->check(CLI::ExistingFile);
    }
    solve->add_option("--agents", m.agents, "Also simulate this many agents per origin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }
    m.command = app.get_subcommands().front()->get_name();
    m.threads = std::max(1u, m.threads);

    std::optional<OutputDir> out;
    try {
        out.emplace(m.out_dir, m.force);
        setup_logging(&*out);
        spdlog::info("skillscape {} -> {}", m.command, out->path().string());
        if (m.command == "generate") return cmd_generate(m, *out);
        if (m.command == "solve") return cmd_solve(m, *out);
        if (m.command == "estimate") return cmd_estimate(m, *out);
        if (m.command == "counterfactual") return cmd_counterfactual(m, *out);
        return cmd_verify(m, *out);
    } catch (const CLI::ValidationError& e) {
        return report_error(out, "usage", exit_usage, e.what());
    } catch (const IoError& e) {
        return report_error(out, "io", exit_io, e.what());
    } catch (const ConfigError& e) {
        return report_error(out, "config", exit_config, e.what());
    } catch (const SolverError& e) {
        return report_error(out, "solver", exit_solver, e.what(), e.trajectory());
    } catch (const ModelError& e) {
        return report_error(out, "model", exit_solver, e.what());
    } catch (const EstimationError& e) {
        return report_error(out, "estimation", exit_estimation, e.what());
    } catch (const std::exception& e) {
        return report_error(out, "internal", 1, e.what());
    }
}
