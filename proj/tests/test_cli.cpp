#include "qpair_cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace qpair;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "qpair");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("qpair_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

}  // namespace

TEST_F(Cli, EvolveAtZeroTimeReproducesInput) {
    const std::string in = io::to_json(jc::AtomFieldState::basis(3, 0, 1)).dump(2) + "\n";
    spit(path("in.json"), in);
    const auto r = run({"evolve", "--in", path("in.json"), "--t", "0", "--out", path("out.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(path("out.json")), in);
}

TEST_F(Cli, EvolveFullSwap) {
    spit(path("in.json"), io::to_json(jc::AtomFieldState::basis(3, 0, 1)).dump());
    const double xi = 2.0;
    const auto r = run({"evolve", "--in", path("in.json"), "--xi", "2", "--t", io::fmt17(kPi / (2 * xi)), "--out",
                        path("out.json"), "--populations", path("pop.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream csv(slurp(path("pop.csv")));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "k,n,population");
    while (std::getline(csv, line)) {
        int k = 0, n = 0;
        double p = 0;
        char c = 0;
        std::istringstream(line) >> k >> c >> n >> c >> p;
        EXPECT_NEAR(p, (k == 1 && n == 0) ? 1.0 : 0.0, 1e-15) << line;
    }
}

TEST_F(Cli, EvolveRejectsNonNormalizedInput) {
    spit(path("in.json"), R"({"n_max": 1, "amplitudes": [[1,0],[1,0],[0,0],[0,0]]})");
    EXPECT_EQ(run({"evolve", "--in", path("in.json"), "--t", "1"}).code, 2);
    EXPECT_EQ(run({"evolve", "--in", path("missing.json"), "--t", "1"}).code, 2);
    spit(path("bad.json"), "{not json");
    EXPECT_EQ(run({"evolve", "--in", path("bad.json"), "--t", "1"}).code, 2);
}

TEST_F(Cli, ComplexityBudgets) {
    const auto q = run({"complexity", "--target", "ququart", "--error-target", "0.1"});
    ASSERT_EQ(q.code, 0);
    const json jq = json::parse(q.out.substr(q.out.find('{')));
    EXPECT_EQ(jq.at("inf").at("series").size(), 5u);
    EXPECT_EQ(jq.at("inf").at("series")[0].at("events"), 19);
    EXPECT_EQ(jq.at("sup").at("series")[4].at("events"), 25);

    const auto p = run({"complexity", "--target", "prior", "--error-target", "0.1"});
    const json jp = json::parse(p.out.substr(p.out.find('{')));
    EXPECT_EQ(jp.at("series").size(), 3u);
    EXPECT_EQ(jp.at("series")[0].at("events"), 25);

    const auto b = run({"complexity", "--target", "bernoulli", "--p", "0.5", "--error-target", "0.5"});
    const json jb = json::parse(b.out.substr(b.out.find('{')));
    EXPECT_EQ(jb.at("total_events"), 1);
    EXPECT_EQ(jb.at("bits"), 0.0);

    EXPECT_EQ(run({"complexity", "--target", "bernoulli"}).code, 2);
    EXPECT_EQ(run({"complexity", "--error-target", "0.7"}).code, 2);
    EXPECT_EQ(run({"complexity", "--target", "nope"}).code, 2);
}

TEST_F(Cli, ExactReconstructionOfBellParams) {
    spit(path("bell.json"), R"({"params": {"p": [1, 0, 0, 0], "theta_c": 0.7853981633974483, "theta_e": 0}})");
    const auto r = run({"reconstruct", "--exact", "--params", path("bell.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_NEAR(j.at("params").at("p")[0].get<double>(), 1.0, 1e-9);
    EXPECT_NEAR(j.at("params").at("theta_c").get<double>(), kPi / 4, 1e-9);
    EXPECT_TRUE(j.at("diagnostics").at("epr_undetermined").get<bool>());
}

TEST_F(Cli, SimulateThenReconstructIsDeterministic) {
    spit(path("s.json"), R"({"p": [0.6, 0.25, 0.1, 0.05], "theta_c": 0.5, "theta_e": 0.9})");
    ASSERT_EQ(run({"simulate", "--params", path("s.json"), "--seed", "5", "--out", path("a.csv"), "--result",
                   path("a.json")})
                  .code,
              0);
    ASSERT_EQ(run({"simulate", "--params", path("s.json"), "--seed", "5", "--out", path("b.csv")}).code, 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    const std::string csv = slurp(path("a.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 126);

    const auto r = run({"reconstruct", "--events", path("a.csv"), "--out", path("r.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json replay = json::parse(slurp(path("r.json")));
    const json direct = json::parse(slurp(path("a.json")));
    EXPECT_EQ(replay.at("rho"), direct.at("rho"));
    EXPECT_EQ(replay.at("params"), direct.at("params"));
    EXPECT_EQ(replay.at("diagnostics").at("events_used"), 125);
}

TEST_F(Cli, ReconstructFull9FromSimulation) {
    spit(path("s.json"), R"({"p": [0.6, 0.25, 0.1, 0.05], "theta_c": 0.5, "theta_e": 0.9})");
    ASSERT_EQ(run({"simulate", "--params", path("s.json"), "--mode", "full9", "--seed", "2", "--events-per-series",
                   "200", "--out", path("e.csv")})
                  .code,
              0);
    const auto r = run({"reconstruct", "--events", path("e.csv"), "--mode", "full9"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(json::parse(r.out).at("params").is_null());
    // A nine-series log is not a five-series log.
    EXPECT_EQ(run({"reconstruct", "--events", path("e.csv"), "--mode", "minimal5"}).code, 2);
}

TEST_F(Cli, ReconstructErrors) {
    EXPECT_EQ(run({"reconstruct"}).code, 2);
    EXPECT_EQ(run({"reconstruct", "--exact"}).code, 2);
    spit(path("bad.csv"), "event_index,detector_id,outcome\n0,0,7\n");
    EXPECT_EQ(run({"reconstruct", "--events", path("bad.csv")}).code, 2);
    spit(path("rho3.json"), R"({"rho": {"dim": 2, "entries": [[0.5,0],[0,0],[0,0],[0.5,0]]}})");
    EXPECT_EQ(run({"reconstruct", "--exact", "--params", path("rho3.json")}).code, 2);
}

TEST_F(Cli, StrictReconstructionOfInfeasibleDataExitsThree) {
    // Series 3 claims perfect σ̃_1 s̃_2 correlation on an otherwise product state.
    std::string csv = "event_index,detector_id,outcome\n";
    std::size_t idx = 0;
    for (int s = 0; s < 5; ++s)
        for (int e = 0; e < 4; ++e) {
            const int outcome = s < 3 ? 0 : (s == 3 ? 3 * (e % 2) : e);
            csv += std::to_string(idx++) + "," + std::to_string(s) + "," + std::to_string(outcome) + "\n";
        }
    spit(path("e.csv"), csv);
    const auto r = run({"reconstruct", "--events", path("e.csv"), "--strict"});
    EXPECT_EQ(r.code, 3) << r.out << r.err;
    EXPECT_TRUE(json::parse(r.out).contains("infeasibility"));
    EXPECT_EQ(run({"reconstruct", "--events", path("e.csv")}).code, 0);
}

TEST_F(Cli, ProtocolTransferIsNonDemolition) {
    const auto r = run({"protocol", "--scenario", "transfer", "--seed", "3", "--length", "200"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_TRUE(j.at("nondemolition_candidate").get<bool>());
    EXPECT_EQ(j.at("basis_verdict"), "not_applicable");
}

TEST_F(Cli, ProtocolOutputsAreByteIdentical) {
    for (const char* sc : {"transfer", "analysis", "eavesdrop"}) {
        const auto a = run({"protocol", "--scenario", sc, "--seed", "11", "--length", "500", "--weights", "0.8,0.2"});
        const auto b = run({"protocol", "--scenario", sc, "--seed", "11", "--length", "500", "--weights", "0.8,0.2"});
        ASSERT_EQ(a.code, 0) << a.err;
        EXPECT_EQ(a.out, b.out);
    }
}

TEST_F(Cli, ProtocolUnbalancedEavesdropIsDeterminable) {
    const auto r = run({"protocol", "--scenario", "eavesdrop", "--seed", "4", "--length", "10000", "--weights", "0.8,0.2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j.at("basis_verdict"), "determinable");
    EXPECT_NEAR(j.at("basis_estimate").at("bloch")[2].get<double>(), -0.6, 0.05);
}

TEST_F(Cli, ProtocolInputErrors) {
    EXPECT_EQ(run({"protocol", "--scenario", "transfer"}).code, 2);
    EXPECT_EQ(run({"protocol", "--seed", "1", "--weights", "0.5,abc"}).code, 2);
    EXPECT_EQ(run({"protocol", "--seed", "1", "--weights", "0.5,0.6"}).code, 2);
}
