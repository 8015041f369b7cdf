#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "mimfd/config.hpp"
#include "mimfd/experiments.hpp"
#include "mimfd/fem.hpp"
#include "mimfd/solver.hpp"

namespace fs = std::filesystem;
using namespace mimfd;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mimfd_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(MIMFD_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path write_config(const fs::path& dir, const RunConfig& c) {
    const fs::path p = dir / "input.cfg";
    save_config(p, c);
    return p;
}

}  // namespace

TEST(Cli, ForwardExampleOneWritesFramesAndManifest) {
    const auto dir = scratch("forward");
    const auto cfg = write_config(dir, example1_config());
    ASSERT_EQ(run("forward --config " + cfg.string() + " --out " + (dir / "out").string(), dir / "log"), 0)
        << slurp(dir / "log");
    EXPECT_TRUE(fs::exists(dir / "out" / "frame_0000.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "frame_0020.csv"));
    EXPECT_FALSE(fs::exists(dir / "out" / "frame_0021.csv"));
    const auto m = read_field_manifest(dir / "out");
    EXPECT_EQ(m.alpha, 0.5);
    EXPECT_EQ(m.final_time, 1.5);
    EXPECT_EQ(m.steps, 20);
    EXPECT_EQ(m.nx, 20);
    EXPECT_EQ(m.ny, 20);
    // The run manifest re-parses to the effective configuration.
    RunConfig expected = example1_config();
    expected.out = dir / "out";
    EXPECT_TRUE(load_config(dir / "out" / "run.cfg") == expected);
}

TEST(Cli, ForwardZeroDataGivesZeroFrames) {
    const auto dir = scratch("zero");
    RunConfig c = example1_config();
    c.g_true = "zero";
    c.steps = 4;
    const auto cfg = write_config(dir, c);
    ASSERT_EQ(run("forward --config " + cfg.string() + " --out " + (dir / "out").string(), dir / "log"), 0);
    const Mesh mesh = build_mesh(20, 20);
    const auto u = read_space_time_field(dir / "out", mesh);
    for (const auto& f : u.frames) EXPECT_EQ(f.norm(), 0.0);
}

TEST(Cli, MissingKeyExitsWithConfigCode) {
    const auto dir = scratch("missing");
    std::ofstream(dir / "bad.cfg") << "alpha = 0.5\nq = 1\nfinal_time = 1.5\nsteps = 20\nnx = 20\nrho = example1\n"
                                      "g_true = example1\n";
    EXPECT_EQ(run("forward --config " + (dir / "bad.cfg").string(), dir / "log"), 1);
    EXPECT_NE(slurp(dir / "log").find("'ny'"), std::string::npos);
}

TEST(Cli, InvertNoiseFreeSanity) {
    const auto dir = scratch("invert0");
    RunConfig c = example1_config();
    c.noise = 0.0;
    c.beta_sweep = false;
    c.beta = 1e-8;
    const auto cfg = write_config(dir, c);
    ASSERT_EQ(run("invert --config " + cfg.string() + " --out " + (dir / "out").string(), dir / "log"), 0)
        << slurp(dir / "log");
    std::ifstream in(dir / "out" / "summary.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header.rfind("Error,Loss", 0), 0u);
    EXPECT_LE(std::stod(row.substr(0, row.find(','))), 1e-2);
    for (const char* f : {"g_rec.csv", "g_true.csv", "history.csv", "run.cfg"}) EXPECT_TRUE(fs::exists(dir / "out" / f));
    std::ifstream hist(dir / "out" / "history.csv");
    std::getline(hist, header);
    EXPECT_EQ(header, "iteration,cost,grad_norm,step");
}

TEST(Cli, InvertTableOneRowOneWritesSummaryAndSweep) {
    const auto dir = scratch("invert1");
    const auto cfg = write_config(dir, example1_config());  // eps = 1, frame [0.1, 0.9]
    ASSERT_EQ(run("invert --config " + cfg.string() + " --seed 7 --out " + (dir / "out").string(), dir / "log"), 0)
        << slurp(dir / "log");
    std::ifstream in(dir / "out" / "summary.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "Error,Loss,beta,iterations,converged,seed");
    EXPECT_TRUE(fs::exists(dir / "out" / "sweep.csv"));
    EXPECT_EQ(load_config(dir / "out" / "run.cfg").seed, 7u);
}

TEST(Cli, InfiniteToleranceWritesInitialGuess) {
    const auto dir = scratch("inf");
    RunConfig c = example1_config();
    c.beta_sweep = false;
    c.grad_tol = std::numeric_limits<double>::infinity();
    const auto cfg = write_config(dir, c);
    ASSERT_EQ(run("invert --config " + cfg.string() + " --out " + (dir / "out").string(), dir / "log"), 0);
    const Field g = read_field_csv(dir / "out" / "g_rec.csv", build_mesh(20, 20));
    EXPECT_EQ(g.norm(), 0.0);
}

TEST(Cli, LineSearchFailureExitCode) {
    const auto dir = scratch("armijo");
    RunConfig c = example1_config();
    c.beta_sweep = false;
    c.step_rule = StepRule::fixed;
    c.armijo_initial_step = 1e12;
    c.armijo_max_backtracks = 0;
    const auto cfg = write_config(dir, c);
    EXPECT_EQ(run("invert --config " + cfg.string() + " --out " + (dir / "out").string(), dir / "log"), 4);
}

TEST(Cli, UnwritableOutputExitCode) {
    const auto dir = scratch("io");
    std::ofstream(dir / "blocker") << "x";
    const auto cfg = write_config(dir, example1_config());
    EXPECT_EQ(run("forward --config " + cfg.string() + " --out " + (dir / "blocker" / "sub").string(), dir / "log"), 3);
}

TEST(Cli, TablesRejectZeroSeeds) {
    const auto dir = scratch("tables0");
    EXPECT_EQ(run("tables 2 --seeds 0 --out " + dir.string(), dir / "log"), 1);
    EXPECT_EQ(run("tables 7 --out " + dir.string(), dir / "log"), 1);
}

TEST(Cli, VerifyUnknownSuite) {
    const auto dir = scratch("verify");
    EXPECT_EQ(run("verify everything", dir / "log"), 1);
    EXPECT_EQ(run("", dir / "log"), 1);
}

TEST(Cli, VerifyGradientSuitePasses) {
    const auto dir = scratch("verify_gradient");
    EXPECT_EQ(run("verify gradient", dir / "log"), 0) << slurp(dir / "log");
    EXPECT_NE(slurp(dir / "log").find("PASS"), std::string::npos);
}

TEST(Cli, TablesAreByteIdenticalAcrossRunsAndJobCounts) {
    const auto a = scratch("tables_a");
    const auto b = scratch("tables_b");
    ASSERT_EQ(run("tables 3 --seeds 1 --seed 11 --jobs 1 --out " + a.string(), a / "log"), 0) << slurp(a / "log");
    ASSERT_EQ(run("tables 3 --seeds 1 --seed 11 --jobs 2 --out " + b.string(), b / "log"), 0) << slurp(b / "log");
    EXPECT_EQ(slurp(a / "table3.csv"), slurp(b / "table3.csv"));
    EXPECT_EQ(slurp(a / "table3_runs.csv"), slurp(b / "table3_runs.csv"));
}
