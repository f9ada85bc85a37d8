#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "skillscape/choice.hpp"
#include "skillscape/datagen.hpp"
#include "skillscape/errors.hpp"
#include "skillscape/panel.hpp"
#include "skillscape/rng.hpp"
#include "support.hpp"

using namespace skillscape;
namespace fs = std::filesystem;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("skillscape_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double max_cell_error(const Tensor3& a, const Tensor3& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.flat()[i] - b.flat()[i]));
    return worst;
}

}  // namespace

TEST_CASE("counter RNG streams are reproducible and distinct", "[rng]") {
    CounterRng a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 10; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
    CounterRng u(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("frechet_sample inverts the CDF", "[datagen]") {
    CHECK_THAT(frechet_sample(1.0, 1.0, std::exp(-1.0)), WithinAbs(1.0, 1e-14));
    for (double u : {0.01, 0.3, 0.5, 0.77, 0.999}) {
        const double z = frechet_sample(2.5, 1.7, u);
        CHECK_THAT(std::exp(-2.5 * std::pow(z, -1.7)), WithinAbs(u, 1e-13));
        CHECK_THAT(frechet_cdf(z, 2.5, 1.7), WithinAbs(u, 1e-13));
    }
    CHECK_THROWS_AS(frechet_sample(1.0, 1.0, 0.0), ModelError);
}

TEST_CASE("Frechet draws pass a Kolmogorov-Smirnov test", "[datagen][slow]") {
    const std::size_t n = 1000000;
    const double T = 1.5, theta = 2.0;
    std::vector<double> z(n);
    CounterRng rng(2024, 0);
    for (auto& v : z) v = frechet_sample(T, theta, rng.uniform());
    std::sort(z.begin(), z.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = std::exp(-T * std::pow(z[i], -theta));
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("simulated shares agree with closed-form probabilities", "[datagen][slow]") {
    const ChoiceInputs in = testing::choice_fixture();
    const Tensor3 p = choice_probabilities(in);
    const std::uint64_t n = 1000000;
    const AgentSimulation sim = simulate_agents(in, n, 99, 2);
    for (std::size_t o = 0; o < 3; ++o) {
        double total = 0.0;
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t d = 0; d < 3; ++d) {
                const double se = std::sqrt(p(o, m, d) * (1.0 - p(o, m, d)) / static_cast<double>(n));
                CHECK(std::abs(sim.shares(o, m, d) - p(o, m, d)) <= 4.0 * se);
                CHECK_THAT(sim.shares(o, m, d), WithinAbs(sim.counts(o, m, d) / static_cast<double>(n), 1e-15));
                total += sim.counts(o, m, d);
            }
        CHECK(total == static_cast<double>(n));
    }
}

TEST_CASE("simulation is independent of the thread count", "[datagen]") {
    const ChoiceInputs in = testing::choice_fixture();
    const AgentSimulation one = simulate_agents(in, 5000, 3, 1);
    const AgentSimulation four = simulate_agents(in, 5000, 3, 4);
    CHECK(max_cell_error(one.counts, four.counts) == 0.0);
    const AgentSimulation again = simulate_agents(in, 2, 3, 1);
    CHECK(max_cell_error(again.counts, simulate_agents(in, 2, 3, 1).counts) == 0.0);
}

TEST_CASE("sharp tastes send every agent to the best cell", "[datagen]") {
    ChoiceInputs in = testing::choice_fixture();
    in.theta = 1000.0;
    const AgentSimulation sim = simulate_agents(in, 200, 5, 1);
    for (std::size_t o = 0; o < 3; ++o) {
        double best = -1e300;
        std::size_t bm = 0, bd = 0;
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t d = 0; d < 3; ++d) {
                const double v = utility_argument(in, o, m, d);
                if (v > best) {
                    best = v;
                    bm = m;
                    bd = d;
                }
            }
        CHECK(sim.counts(o, bm, bd) == 200.0);
    }
}

TEST_CASE("simulation error shrinks at the square-root rate", "[datagen][slow]") {
    const ChoiceInputs in = testing::choice_fixture();
    const Tensor3 p = choice_probabilities(in);
    double small = 0.0, large = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        small += max_cell_error(simulate_agents(in, 10000, 100 + s, 1).shares, p);
        large += max_cell_error(simulate_agents(in, 40000, 200 + s, 1).shares, p);
    }
    const double ratio = large / small;
    CHECK(ratio > 0.35);
    CHECK(ratio < 0.7);
}

TEST_CASE("generator output is seeded and schema-exact", "[datagen]") {
    GeneratorSpec g;
    g.n_cities = 20;
    const GeneratedData a = generate_panel(g);
    const GeneratedData b = generate_panel(g);
    REQUIRE(a.panel.size() == 60);
    CHECK(a.flows.size() == 20u * 20u * 3u);

    const fs::path d1 = fresh_dir("gen_a");
    const fs::path d2 = fresh_dir("gen_b");
    write_generated(d1, a);
    write_generated(d2, b);
    for (const char* f : {"panel.csv", "migration.csv", "truth.json"}) CHECK(slurp(d1 / f) == slurp(d2 / f));

    const std::string panel = slurp(d1 / "panel.csv");
    CHECK(panel.substr(0, panel.find('\n')) == kPanelHeader);
    const std::string mig = slurp(d1 / "migration.csv");
    CHECK(mig.substr(0, mig.find('\n')) == kMigrationHeader);

    const auto truth = read_truth(d1 / "truth.json");
    CHECK(truth.at("lambda") == 0.703);
    CHECK(truth.at("zeta_1990") == 7.59);
    CHECK(truth.count("amenity_" + city_label(0, 20)) == 1);

    g.seed = 8;
    CHECK(generate_panel(g).panel[0].rent != a.panel[0].rent);
}

TEST_CASE("generator rejects unsupported specs", "[datagen]") {
    GeneratorSpec g;
    g.n_majors = 2;
    CHECK_THROWS_AS(validate_generator(g), ConfigError);
    GeneratorSpec h;
    h.zeta = {7.0};
    CHECK_THROWS_AS(validate_generator(h), ConfigError);
}

TEST_CASE("occupational similarity", "[datagen]") {
    const Eigen::Matrix4d I = Eigen::Matrix4d::Identity();
    const Eigen::Vector4d e0(1, 0, 0, 0), e2(0, 0, 1, 0);
    CHECK(occupational_similarity(e0, I, e0) == 1.0);
    CHECK(occupational_similarity(e0, I, e2) == 0.0);

    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::Matrix4d T;
    Eigen::Vector4d a, b;
    for (int i = 0; i < 4; ++i) {
        a(i) = unif(gen);
        b(i) = unif(gen);
        for (int j = 0; j < 4; ++j) T(i, j) = unif(gen);
        T.row(i) /= T.row(i).sum();
    }
    a /= a.sum();
    b /= b.sum();
    double oracle = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) oracle += a(i) * T(i, j) * b(j);
    CHECK_THAT(occupational_similarity(a, T, b), WithinAbs(oracle, 1e-12));
    CHECK_THROWS_AS(occupational_similarity(Eigen::Vector3d(1, 0, 0), I, e0), ModelError);
}
