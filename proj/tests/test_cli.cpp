#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dslab/cli.hpp"

using namespace dslab;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
    nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "dslab");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("dslab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    std::string write(const std::string& name, const HypothesisClass& h) const {
        save_class(h, path(name));
        return path(name);
    }
};

HypothesisClass square() { return HypothesisClass(2, 2, {{1, 1}, {1, 2}, {2, 1}, {2, 2}}); }

} // namespace

TEST_F(Cli, GenCubeRoundTrips) {
    auto r = run({"gen", "--cube", "k=3,ell=1,s=1,m=2", "-o", path("c.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto h = load_class(path("c.json"));
    EXPECT_EQ(h.size(), 3u);
    EXPECT_EQ(h, gen_cube(3, 1, 1, 2));
    std::ifstream in(path("c.json"));
    auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j["config"]["cube"], "k=3,ell=1,s=1,m=2");

    auto g = run({"gen", "--random", "k=3,n=4,size=10", "--seed", "5"});
    ASSERT_EQ(g.code, 0);
    EXPECT_EQ(class_from_json(g.json()), gen_random(3, 4, 10, 5));
    EXPECT_EQ(run({"gen", "--cube", "k=3,ell=1"}).code, 1);
    EXPECT_EQ(run({"gen"}).code, 1);
}

TEST_F(Cli, MuOnTheSquare) {
    auto r = run({"mu", "--class", write("sq.json", square()), "--n", "2", "--ell", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = r.json();
    EXPECT_EQ(j["result"]["mu"], "1/1");
    EXPECT_EQ(j["result"]["ceil_mu"], 1);
    EXPECT_EQ(j["config"]["n"], 2);
    EXPECT_EQ(j["config"]["command"], "mu");
}

TEST_F(Cli, AuditSingleAndExitCodes) {
    auto c = write("c.json", gen_cube(4, 1, 2, 3));
    auto r = run({"audit", "--class", c, "--ell", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = r.json();
    EXPECT_EQ(j["result"]["verdict"], "PASS");
    EXPECT_EQ(j["result"]["mu"]["num"], 3);
    EXPECT_EQ(j["result"]["mu"]["den"], 2);

    EXPECT_EQ(run({"audit", "--class", path("missing.json")}).code, 1);
    EXPECT_EQ(run({"audit", "--class", c, "--ell", "0"}).code, 1);
    EXPECT_EQ(run({"audit", "--class", c, "--format", "xml"}).code, 1);
    EXPECT_EQ(run({"audit"}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, ReportsAreByteReproducible) {
    auto c = write("c.json", gen_random(3, 4, 9, 2));
    for (auto cmd : {"audit", "dims", "orient", "density", "loo", "agnostic"}) {
        std::vector<std::string> args{cmd, "--class", c, "--seed", "11", "--jobs", "2"};
        auto a = run(args), b = run(args);
        EXPECT_EQ(a.code, 0) << cmd << a.err;
        EXPECT_EQ(a.out, b.out) << cmd;
        EXPECT_EQ(a.json()["config"]["seed"], 11) << cmd;
    }
}

TEST_F(Cli, SeedFallsBackToEnvironment) {
    auto c = write("c.json", gen_cube(3, 1, 2, 3));
    ::setenv("DSLAB_SEED", "42", 1);
    auto r = run({"pac", "--class", c, "--m", "40", "--trials", "10"});
    ::unsetenv("DSLAB_SEED");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["config"]["seed"], 42);
    EXPECT_EQ(r.json()["config"]["seed_source"], "env");
    EXPECT_EQ(r.json()["result"]["seed"], 42);
}

TEST_F(Cli, BatchAuditStreamsCsv) {
    fs::create_directories(dir / "batch");
    save_class(square(), path("batch/a.json"));
    save_class(gen_cube(4, 1, 2, 3), path("batch/b.json"));
    std::ofstream(path("batch/notes.txt")) << "ignored";
    auto r = run({"audit", "--dir", path("batch"), "--ell", "1", "--format", "csv", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string header, a, b, extra;
    std::getline(in, header);
    std::getline(in, a);
    std::getline(in, b);
    EXPECT_FALSE(std::getline(in, extra));
    EXPECT_EQ(header, "class,ell,n,seed,budget_subsets,budget_matrix,mu_num,mu_den,ceil_mu,d_ds,d_nat,t_star,"
                      "spanning,verdict,note");
    EXPECT_EQ(a.substr(0, 8), "a,1,2,3,");
    EXPECT_NE(a.find(",1,1,1,2,2,1,yes,PASS,"), std::string::npos) << a;
    EXPECT_NE(b.find(",3,2,2,2,2,2,yes,PASS,"), std::string::npos) << b;

    std::ofstream(path("batch/c.json")) << "{not json";
    auto bad = run({"audit", "--dir", path("batch"), "--format", "csv"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("c,1,0,"), std::string::npos);
    EXPECT_NE(bad.out.find("ERROR"), std::string::npos);
}

TEST_F(Cli, BudgetViolationGivesHint) {
    auto c = write("c.json", gen_random(3, 4, 30, 1));
    auto r = run({"span", "--class", c, "--budget-subsets", "1"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("hint"), std::string::npos) << r.err;

    auto p = run({"audit", "--class", c, "--budget-matrix", "4"});
    EXPECT_EQ(p.code, 0) << p.err;
    EXPECT_EQ(p.json()["result"]["verdict"], "PARTIAL");
}

TEST_F(Cli, WitnessRevalidation) {
    auto c = write("sq.json", square());
    auto d = run({"dims", "--class", c, "-o", path("d.json")});
    ASSERT_EQ(d.code, 0);
    std::ifstream in(path("d.json"));
    auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j["result"]["ds"]["value"], 2);
    EXPECT_EQ(j["result"]["vc"], 2);
    std::ofstream(path("w.json")) << j["result"]["ds"]["witness"].dump();
    EXPECT_EQ(run({"witness", "--class", c, "--witness", path("w.json")}).code, 0);

    auto smaller = write("small.json", HypothesisClass(2, 2, {{1, 1}, {1, 2}, {2, 1}}));
    auto r = run({"witness", "--class", smaller, "--witness", path("w.json")});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.json()["result"]["verdict"], "FAIL");
}

TEST_F(Cli, CsvSingleOutputHasConfigColumns) {
    auto r = run({"orient", "--class", write("sq.json", square()), "--format", "csv"});
    ASSERT_EQ(r.code, 0);
    auto header = r.out.substr(0, r.out.find('\n'));
    EXPECT_NE(header.find("config.seed"), std::string::npos);
    EXPECT_NE(header.find("result.t_star"), std::string::npos);
}

TEST_F(Cli, NonRealizableLearnerInputIsAnError) {
    auto c = write("c.json", gen_cube(3, 1, 2, 3));
    EXPECT_EQ(run({"pac", "--class", c, "--target", "999"}).code, 1);
    EXPECT_EQ(run({"agnostic", "--class", c, "--n1", "0"}).code, 1);
}
