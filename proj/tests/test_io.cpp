#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skillscape/config_io.hpp"
#include "skillscape/datagen.hpp"
#include "skillscape/errors.hpp"
#include "skillscape/panel.hpp"
#include "support.hpp"

using namespace skillscape;
using Catch::Matchers::ContainsSubstring;

namespace {

const char* kTwoCities = R"({
  "economy": {"n_cities": 2, "n_majors": 1, "lambda": 0.7, "theta": 2.0, "kappa_obs": 100,
              "sigma2_xi": 0.5, "sigma2_xihat": 0.5, "gamma_sig": 0.6, "zeta_tilde": 1.0,
              "gamma_agg": 0.2, "gamma_h": 0.3, "kappa_h": 0.5, "total_pop": 1.0},
  "cities": {"labels": ["x", "y"], "productivity": [2.0, 2.5], "amenity": [0.1, -0.1], "match_quality": [1.0, 1.0]},
  "solver": {"damping": 0.25, "mode": "one-generation"}
})";

}  // namespace

TEST_CASE("config parse applies defaults", "[config]") {
    const RunConfig cfg = parse_config(kTwoCities);
    REQUIRE(cfg.economy);
    REQUIRE(cfg.cities);
    CHECK(cfg.economy->tau == 0.0);
    CHECK(cfg.economy->tuition.isZero());
    CHECK(cfg.cities->endowment.isZero());
    CHECK(cfg.cities->moving_cost.isZero());
    CHECK(cfg.cities->taste_scale(1, 1, 0) == 1.0);
    CHECK(cfg.cities->match_quality(0, 1, 1) == 1.0);
    CHECK(cfg.solver.damping == 0.25);
    CHECK(cfg.solver.mode == SolverMode::one_generation);
    CHECK(resolve_labels(cfg, 2) == std::vector<std::string>{"x", "y"});
    CHECK(resolve_labels(RunConfig{}, 2) == std::vector<std::string>{"c000", "c001"});
    CHECK(validate_config(*cfg.economy, *cfg.cities).empty());
}

TEST_CASE("config dump is a fixed point of parse", "[config]") {
    RunConfig cfg = parse_config(kTwoCities);
    GeneratorSpec g;
    g.seed = 11;
    g.noise.share = 0.05;
    cfg.generator = g;
    const std::string once = dump_config(cfg);
    const RunConfig again = parse_config(once);
    CHECK(dump_config(again) == once);
    CHECK(again.generator->seed == 11);
    CHECK(again.generator->noise.share == 0.05);
    CHECK(again.economy->lambda == 0.7);
}

TEST_CASE("random fixtures survive a config round trip", "[config]") {
    auto f = testing::random_fixture(21, 4);
    RunConfig cfg;
    cfg.economy = f.economy;
    cfg.cities = f.cities;
    cfg.solver = f.solver;
    const RunConfig back = parse_config(dump_config(cfg));
    CHECK(back.economy->tuition == f.economy.tuition);
    CHECK(back.cities->productivity == f.cities.productivity);
    CHECK(back.cities->endowment == f.cities.endowment);
    CHECK(back.economy->lambda == f.economy.lambda);
    CHECK(back.solver.init == f.solver.init);
}

TEST_CASE("config errors name the offending key", "[config]") {
    CHECK_THROWS_WITH(parse_config("{\"economics\": {}}"), ContainsSubstring("unknown key 'economics'"));
    CHECK_THROWS_WITH(parse_config("{"), ContainsSubstring("invalid JSON"));
    auto j = nlohmann::json::parse(kTwoCities);
    j["economy"]["lamda"] = 0.5;
    CHECK_THROWS_WITH(parse_config(j.dump()), ContainsSubstring("economy.lamda"));
    j = nlohmann::json::parse(kTwoCities);
    j["economy"]["theta"] = "two";
    CHECK_THROWS_WITH(parse_config(j.dump()), ContainsSubstring("expected a number"));
    j = nlohmann::json::parse(kTwoCities);
    j["cities"]["labels"] = {"x"};
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
    j = nlohmann::json::parse(kTwoCities);
    j.erase("economy");
    CHECK_THROWS_WITH(parse_config(j.dump()), ContainsSubstring("requires an economy"));
}

TEST_CASE("panel and migration CSV round trip", "[io]") {
    GeneratorSpec g;
    g.n_cities = 6;
    const GeneratedData data = generate_panel(g);
    std::stringstream p, m;
    write_panel(p, data.panel);
    write_migration(m, data.flows);
    const auto panel = read_panel(p);
    const auto flows = read_migration(m);
    REQUIRE(panel.size() == data.panel.size());
    REQUIRE(flows.size() == data.flows.size());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        CHECK(panel[i].msa == data.panel[i].msa);
        CHECK(panel[i].rent == data.panel[i].rent);
        CHECK(panel[i].w_skilled == data.panel[i].w_skilled);
        CHECK(panel[i].college_frac == data.panel[i].college_frac);
    }
    for (std::size_t i = 0; i < flows.size(); ++i) CHECK(flows[i].count == data.flows[i].count);
}

TEST_CASE("format_double round trips", "[io]") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 7.26}) CHECK(parse_double(format_double(v)) == v);
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("CSV readers reject malformed input", "[io]") {
    std::istringstream bad_header("msa,year,rent\n");
    CHECK_THROWS_WITH(read_panel(bad_header), ContainsSubstring("header mismatch"));
    std::istringstream dup(std::string(kPanelHeader) + "\na,1980,1,1,1,0.2,1\na,1980,1,1,1,0.2,1\n");
    CHECK_THROWS_WITH(read_panel(dup), ContainsSubstring("duplicate"));
    std::istringstream short_row(std::string(kMigrationHeader) + "\n1980,a,b\n");
    CHECK_THROWS_WITH(read_migration(short_row), ContainsSubstring("fields"));
    std::istringstream bad_number(std::string(kMigrationHeader) + "\n1980,a,b,many\n");
    CHECK_THROWS_AS(read_migration(bad_number), IoError);
    CHECK_THROWS_AS(read_panel_file("/nonexistent/panel.csv"), IoError);
}

TEST_CASE("state JSON carries every city", "[io]") {
    const auto f = testing::two_identical_cities();
    const EquilibriumState st = solve_equilibrium(f.economy, f.cities, f.solver);
    const auto j = nlohmann::json::parse(dump_state_json(st, {"a", "b"}));
    CHECK(j.dump().find("\"a\"") != std::string::npos);
    CHECK(j.dump().find("\"b\"") != std::string::npos);
}
