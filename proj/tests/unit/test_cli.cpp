#include "sovdebt/cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using sovdebt::cli::run;

namespace {

const std::string kConfigDir = SOVDEBT_CONFIG_DIR;

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation call(std::vector<std::string> args) {
    args.insert(args.begin(), "sovdebt");
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("sovdebt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string out(const std::string& sub = "") const { return (dir_ / sub).string(); }

    Invocation quick_solve(const std::string& config, const std::string& sub = "") {
        return call({"solve", config, "--n", "201", "--eps-final", "1e-3", "--out", out(sub)});
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SolveThenVerify) {
    const std::string cfg = kConfigDir + "/base.ini";
    const Invocation s = quick_solve(cfg);
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_TRUE(fs::exists(dir_ / "solution.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "trace.json"));
    EXPECT_TRUE(fs::exists(dir_ / "solve.meta.json"));
    const Invocation v = call({"verify", out("solution.csv"), cfg, "--out", out()});
    EXPECT_EQ(v.code, 0) << v.out << v.err;
    const auto j = nlohmann::json::parse(slurp(dir_ / "verification.json"));
    EXPECT_TRUE(j.contains("checks"));
}

TEST_F(CliTest, CorruptedValueFailsVerification) {
    const std::string cfg = kConfigDir + "/base.ini";
    ASSERT_EQ(quick_solve(cfg).code, 0);
    // push V above B at the midpoint row
    std::istringstream in(slurp(dir_ / "solution.csv"));
    std::ostringstream fixed;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (row++ == 102) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            line = line.substr(0, c1 + 1) + "7" + line.substr(c2);
        }
        fixed << line << "\n";
    }
    std::ofstream(dir_ / "bad.csv") << fixed.str();
    const Invocation v = call({"verify", out("bad.csv"), cfg, "--out", out()});
    EXPECT_EQ(v.code, 3);
    EXPECT_NE(v.err.find("V_range"), std::string::npos) << v.err;
}

TEST_F(CliTest, MismatchedConfigIsInputError) {
    ASSERT_EQ(quick_solve(kConfigDir + "/base.ini").code, 0);
    const Invocation v = call({"verify", out("solution.csv"), kConfigDir + "/regime2.ini", "--out", out()});
    EXPECT_EQ(v.code, 1);
    EXPECT_NE(v.err.find("mismatch"), std::string::npos) << v.err;
}

TEST_F(CliTest, BadConfigIsInputErrorWithLine) {
    std::string text = slurp(kConfigDir + "/base.ini");
    const auto pos = text.find("sigma = 0.3");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 11, "sigma = -1");
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n');
    std::ofstream(dir_ / "bad.ini") << text;
    const Invocation c = call({"classify", out("bad.ini"), "--out", out()});
    EXPECT_EQ(c.code, 1);
    EXPECT_NE(c.err.find("bad.ini:" + std::to_string(line) + ": [model] 'sigma'"), std::string::npos) << c.err;
    EXPECT_EQ(call({"classify", out("missing.ini")}).code, 1);
    EXPECT_EQ(call({"frobnicate"}).code, 1);
}

TEST_F(CliTest, ClassifyAndBounds) {
    const Invocation c = call({"classify", kConfigDir + "/regime1.ini", "--out", out()});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "classification.json"))["label"], "DevaluePay");

    const Invocation b = call({"bounds", kConfigDir + "/base.ini", "--samples", "11", "--out", out()});
    ASSERT_EQ(b.code, 0) << b.err;
    const auto j = nlohmann::json::parse(slurp(dir_ / "bounds.json"));
    EXPECT_NEAR(j["K1"].get<double>(), 4.08, 1e-12);
    EXPECT_EQ(j["curves"]["x"].size(), 11u);
}

TEST_F(CliTest, SweepWritesOneDirectoryPerValue) {
    const Invocation s = call({"sweep", kConfigDir + "/regime1.ini", "--param", "q", "--values", "0.5,3",
                               "--n", "201", "--eps-final", "1e-2", "--out", out()});
    ASSERT_EQ(s.code, 0) << s.err;
    const auto j = nlohmann::json::parse(slurp(dir_ / "sweep.json"));
    EXPECT_EQ(j["entries"].size(), 2u);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "q_0.5" / "classification.json"))["label"], "DevaluePay");
    EXPECT_TRUE(fs::exists(dir_ / "q_3" / "solution.csv"));
}

TEST_F(CliTest, RerunsAreByteIdentical) {
    const std::string cfg = kConfigDir + "/base.ini";
    ASSERT_EQ(quick_solve(cfg, "a").code, 0);
    ASSERT_EQ(quick_solve(cfg, "b").code, 0);
    EXPECT_EQ(slurp(dir_ / "a" / "solution.csv"), slurp(dir_ / "b" / "solution.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "trace.json"), slurp(dir_ / "b" / "trace.json"));
    for (const char* sub : {"a", "b"}) {
        const Invocation m = call({"simulate", out(std::string(sub) + "/solution.csv"), cfg, "--n-paths", "300",
                                   "--horizon", "10", "--threads", sub[0] == 'a' ? "1" : "2", "--out", out(sub)});
        ASSERT_EQ(m.code, 0) << m.err;
    }
    EXPECT_EQ(slurp(dir_ / "a" / "simulation.json"), slurp(dir_ / "b" / "simulation.json"));
}
