#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fnbo/cli.hpp"

using namespace fnbo;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream o, e;
    const int c = runCli(args, o, e);
    return {c, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("fnbo_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(Cli, AnalyticReportsSteadyState) {
    const auto r = run({"analytic", "--Q", "10", "--T1", "0.25", "--qdo", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    const auto rp = singleBath(10.0, 0.25, 1e3, BathStatistics::Quantum, 0.5);
    const auto eb = meanKineticPotential(rp);
    EXPECT_NEAR(j["R"].get<double>(), eb.ratioR, 1e-12);
    EXPECT_NEAR(j["F"].get<double>(), eb.factorF, 1e-12);
    EXPECT_GE(j["R"].get<double>(), j["R_H"].get<double>());
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({"analytic", "--qdo", "1.2"}).code, 3);
    EXPECT_EQ(run({"analytic", "--cutoff", "5"}).code, 2);
    EXPECT_EQ(run({"analytic", "--Q", "-1"}).code, 2);
    EXPECT_EQ(run({"analytic", "--bogus"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"simulate", "--qdo", "1.2"}).code, 3);
}

TEST(Cli, VersionAndHelp) {
    const auto v = run({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find(kToolVersion), std::string::npos);
    const auto h = run({"--help"});
    EXPECT_EQ(h.code, 0);
    EXPECT_NE(h.out.find("noise-dump"), std::string::npos);
}

TEST(Cli, DeviceTweezersPrintsFloor) {
    const auto r = run({"device", "tweezers", "-P", "0.5", "-l", "1.55e-6"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("1.282e-19"), std::string::npos) << r.out;
}

TEST(Cli, DevicePaulAndCavityJson) {
    const auto p = run({"device", "--format", "json", "paul", "-C", "10e-12", "-V", "0.1", "--phi", "40"});
    ASSERT_EQ(p.code, 0) << p.err;
    const auto j = nlohmann::json::parse(p.out);
    EXPECT_NEAR(j["D_min"].get<double>() / 2.636e-18, 1.0, 1e-3);
    const auto c = run({"device", "cavity", "--omega0", "1e5", "--Omega", "1e5"});
    EXPECT_EQ(c.code, 2);
}

TEST(Cli, FigureReplayIsIdentical) {
    const auto path = scratch("fig3b.csv");
    const auto r = run({"figure", "fig3b", "--points", "7", "--threads", "1", "-o", path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto again = run({"replay", path.string()});
    EXPECT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(again.out, "identical\n");

    // A changed value must be noticed.
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    auto text = ss.str();
    const auto pos = text.rfind(",0.");
    text[pos + 3] = text[pos + 3] == '1' ? '2' : '1';
    std::ofstream(path) << text;
    const auto bad = run({"replay", path.string()});
    EXPECT_EQ(bad.out, "DIFFERENT\n");
    EXPECT_NE(bad.code, 0);
}

TEST(Cli, AnalyticCsvReplays) {
    const auto path = scratch("analytic.csv");
    ASSERT_EQ(run({"analytic", "--format", "csv", "--baths", "2", "--gamma", "0.3", "--T2", "1", "-o", path.string()}).code,
              0);
    const auto again = run({"replay", path.string()});
    EXPECT_EQ(again.out, "identical\n") << again.err;
}

TEST(Cli, SimulateChecksAgainstQuadrature) {
    const auto r = run({"simulate", "--Q", "1", "--T1", "1", "--stats1", "classical", "--cutoff", "20", "--dt", "0.01",
                        "--ensemble", "200", "--burn-in", "40", "--window", "160", "--threads", "1",
                        "--check-analytic"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["check"]["pass"].get<bool>());
    EXPECT_EQ(j["trajectories"].get<int>(), 200);
    EXPECT_NE(r.err.find("check-analytic"), std::string::npos);
}

TEST(Cli, NoiseDumpRoundTrip) {
    const auto path = scratch("noise.bin");
    const auto r = run({"noise-dump", "--Q", "1", "--cutoff", "20", "--T1", "0.5", "--dt", "0.025", "-n", "8192",
                        "--seed", "5", "-o", path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream is(path, std::ios::binary);
    std::uint64_t h = 0;
    const auto p = readProcessBinary(is, &h);
    EXPECT_EQ(p.samples.size(), 8192u);
    EXPECT_EQ(p.seed, 5u);
    EXPECT_DOUBLE_EQ(p.dt, 0.025);
    EXPECT_NE(h, 0u);

    BathNoiseSpec s;
    s.bath = {1.0, 0.5, 20.0, BathStatistics::Quantum};
    s.damping = 0.25;
    s.totalDamping = 0.25;
    s.dt = 0.025;
    s.nSamples = 8192;
    s.seed = 5;
    const auto direct = synthesizeBathNoise(s);
    EXPECT_EQ(direct.samples, p.samples);
    EXPECT_EQ(h, fnv1a(canonical(s)));
}

TEST(Cli, IniConfigSetsOptionsAndFlagsOverride) {
    const auto ini = scratch("run.ini");
    std::ofstream(ini) << "[analytic]\nQ=5\nqdo=0.25\n";
    const auto a = run({"--config", ini.string(), "analytic"});
    ASSERT_EQ(a.code, 0) << a.err;
    auto j = nlohmann::json::parse(a.out);
    EXPECT_EQ(j["Q"].get<double>(), 5.0);
    EXPECT_EQ(j["QDOmega"].get<double>(), 0.25);
    const auto b = run({"--config", ini.string(), "analytic", "--Q", "7"});
    j = nlohmann::json::parse(b.out);
    EXPECT_EQ(j["Q"].get<double>(), 7.0);
    EXPECT_EQ(j["QDOmega"].get<double>(), 0.25);
}

TEST(Cli, ProtocolClassifiesTarget) {
    const auto q = run({"protocol", "--gamma", "0.05", "--T2", "0.25"});
    ASSERT_EQ(q.code, 0) << q.err;
    EXPECT_EQ(nlohmann::json::parse(q.out)["classification"], "quantum");
    const auto c = run({"protocol", "--gamma", "0.05", "--T2", "0.25", "--target", "classical"});
    EXPECT_EQ(nlohmann::json::parse(c.out)["classification"], "classical");
    EXPECT_NE(q.err.find("classification"), std::string::npos);
}

TEST(Cli, ThermometryForwardModel) {
    const auto r = run({"thermometry", "--Q", "10", "--gamma", "0.3", "--T1", "1.5", "--dT-frac", "0.05", "--W", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    const double truth = j["dT_true"].get<double>();
    EXPECT_NEAR(j["dT_energy"]["value"].get<double>() / truth, 1.0, 0.1);
    EXPECT_NEAR(j["dT_current"]["value"].get<double>() / truth, 1.0, 0.1);
    EXPECT_TRUE(j["valid"].get<bool>());
}
