#include "fixtures.hpp"
#include "sovdebt/config.hpp"
#include "sovdebt/io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstring>
#include <sstream>

using namespace sovdebt;
using sovdebt::testing::base_model;

namespace {

const char* kBase = R"(# comment
[model]
r = 0.05
lambda = 0.2
mu = 0.02
sigma = 0.3
B = 5
x_star = 1.5
v_max = 0.5

[costs]
family = barrier
alpha_L = 0.5
alpha_c = 0.1

[risk]
family = power
kappa = 1
q = 0.5

[salvage]
family = linear
m = 0.4
)";

int error_line(const std::string& text) {
    try {
        parse_config(text, "t.ini");
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    if (pos != std::string::npos) s.replace(pos, from.size(), to);
    return s;
}

Solution small_solution() {
    SolverConfig cfg;
    cfg.n = 101;
    cfg.epsilon_schedule = {1e-1, 1e-2};
    return continuation_solve(base_model(), cfg).solution;
}

}  // namespace

TEST(Config, ParsesBaseModel) {
    const RunConfig c = parse_config(kBase);
    EXPECT_EQ(c.model.params.x_star, 1.5);
    EXPECT_EQ(c.model.costs.alpha_L(), 0.5);
    EXPECT_EQ(c.model.risk.q(), 0.5);
    EXPECT_EQ(c.model.salvage.m(), 0.4);
    EXPECT_EQ(c.solver.n, SolverConfig{}.n);
    EXPECT_EQ(c.output_dir, "out");
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line(replace(kBase, "sigma = 0.3", "sigma = 0")), 6);
    EXPECT_EQ(error_line(replace(kBase, "mu = 0.02", "mu = abc")), 5);
    EXPECT_EQ(error_line(replace(kBase, "mu = 0.02", "muu = 0.02")), 5);
    EXPECT_EQ(error_line(replace(kBase, "[risk]", "[risky]")), 16);
    EXPECT_EQ(error_line(replace(kBase, "family = power", "family = cubic")), 17);
    EXPECT_EQ(error_line(std::string(kBase) + "q = 0.7\n"), 24);
}

TEST(Config, MessageNamesSourceAndLine) {
    try {
        parse_config(replace(kBase, "sigma = 0.3", "sigma = 0"), "bad.ini");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("bad.ini:6: [model] 'sigma'", 0), 0u) << e.what();
    }
}

TEST(Config, MissingRequiredKey) {
    try {
        parse_config(replace(kBase, "x_star = 1.5\n", ""), "t.ini");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("x_star"), std::string::npos);
    }
}

TEST(Config, AssumptionFailureIsAConfigError) {
    EXPECT_THROW(parse_config(replace(kBase, "m = 0.4", "m = 1.5")), ConfigError);
}

TEST(Config, CanonicalTextRoundTrips) {
    RunConfig c = parse_config(std::string(kBase) +
                               "[solver]\nn = 401\nepsilon_schedule = 0.1, 0.01\n"
                               "[sim]\nseed = 7\nx0 = 0.3\nhorizon = 12.5\n[output]\ndir = a/b\n");
    const std::string text = to_config_text(c);
    const RunConfig d = parse_config(text);
    EXPECT_EQ(to_config_text(d), text);
    EXPECT_EQ(d.solver.n, 401u);
    EXPECT_EQ(d.solver.epsilon_schedule, (std::vector<double>{0.1, 0.01}));
    EXPECT_EQ(d.sim.seed, 7u);
    ASSERT_TRUE(d.sim.horizon.has_value());
    EXPECT_EQ(*d.sim.horizon, 12.5);
    EXPECT_EQ(d.output_dir, "a/b");
}

TEST(SolutionFile, RoundTripIsBitExact) {
    const Model m = base_model();
    const Solution s = small_solution();
    std::stringstream buf;
    write_solution(buf, s, m);
    const SolutionFile f = read_solution(buf);
    ASSERT_EQ(f.solution.grid.n, s.grid.n);
    for (std::size_t i = 0; i < s.grid.n; ++i) {
        EXPECT_EQ(std::memcmp(&f.solution.V[i], &s.V[i], sizeof(double)), 0);
        EXPECT_EQ(f.solution.p[i], s.p[i]);
        EXPECT_EQ(f.solution.u_star[i], s.u_star[i]);
        EXPECT_EQ(f.solution.res_p[i], s.res_p[i]);
        EXPECT_EQ(f.solution.grid.nodes[i], s.grid.nodes[i]);
    }
    EXPECT_EQ(f.header.epsilon, s.epsilon);
    EXPECT_EQ(header_mismatch(f.header, m), "");
}

TEST(SolutionFile, HeaderMismatchNamesParameter) {
    const Model m = base_model();
    std::stringstream buf;
    write_solution(buf, small_solution(), m);
    const SolutionFile f = read_solution(buf);
    Model other = m;
    other.params.x_star = 2.0;
    EXPECT_NE(header_mismatch(f.header, other).find("x_star"), std::string::npos);
}

TEST(SolutionFile, CorruptInputsAreRejected) {
    std::stringstream empty;
    EXPECT_THROW(read_solution(empty), IoError);
    std::stringstream no_header("x,V\n0,0\n");
    EXPECT_THROW(read_solution(no_header), IoError);

    std::stringstream buf;
    write_solution(buf, small_solution(), base_model());
    std::string text = buf.str();
    const auto row = text.find('\n', text.find('\n') + 1) + 1;
    text.insert(row, "zz");
    std::stringstream bad(text);
    try {
        read_solution(bad, "s.csv");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("s.csv:3"), std::string::npos) << e.what();
    }

    std::string truncated = buf.str();
    truncated.resize(truncated.rfind('\n', truncated.size() - 2) + 1);
    std::stringstream shortf(truncated);
    EXPECT_THROW(read_solution(shortf), IoError);
}

TEST(Json, ArtifactsParseAndUseStableKeys) {
    const Model m = base_model();
    const auto b = nlohmann::json::parse(to_json(compute_constants(m)));
    EXPECT_NEAR(b["theta_min"].get<double>(), 1.0 / 3.0, 1e-15);

    Model div = m;
    div.risk = RiskSpec::power(1.0, 2.0, 1.5);
    div.params.x_star = 1.5;
    const auto c = nlohmann::json::parse(to_json(classify_regime(div)));
    EXPECT_EQ(c["devalue_pay_test"]["beta_star"], "divergent");

    const std::string j1 = to_json(classify_regime(m));
    EXPECT_EQ(j1, to_json(classify_regime(m)));
}
