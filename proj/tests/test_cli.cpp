#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "weylcs_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome run(const std::string& args) {
    const fs::path out = scratch() / "stdout.txt";
    const std::string cmd = std::string(WEYLCS_BINARY) + " " + args + " > " + out.string() + " 2> /dev/null";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    return r;
}

std::string config(const std::string& name) { return std::string(WEYLCS_CONFIG_DIR) + "/" + name; }

std::vector<std::string> lines(const std::string& text, bool data_only) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string l; std::getline(is, l);)
        if (!data_only || (!l.empty() && l[0] != '#')) out.push_back(l);
    return out;
}

std::vector<double> row(const std::string& line) {
    std::vector<double> v;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
    return v;
}

}  // namespace

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run("--help").code, 0); }

TEST(Cli, MissingSubcommandIsAnError) { EXPECT_EQ(run("").code, 1); }

TEST(Cli, InvalidValuesExitOne) {
    EXPECT_EQ(run("spectrum --h -0.1").code, 1);
    EXPECT_EQ(run("spectrum --h abc").code, 1);
    EXPECT_EQ(run("spectrum --kind elliptic").code, 1);
    EXPECT_EQ(run("spectrum --dim 2 --box '0 1'").code, 1);
    EXPECT_EQ(run("weyl-curve --lambda-min 10 --lambda-max 5").code, 1);
    EXPECT_EQ(run("weyl-curve --kind hyperbolic --dim 2 --box '0 1 0 1' --source exact").code, 1);
    EXPECT_EQ(run("spectrum --config /nonexistent/file.cfg").code, 1);
}

TEST(Cli, UnknownConfigKeyExitsOne) {
    const fs::path cfg = scratch() / "bad.cfg";
    std::ofstream(cfg) << "dim = 1\ncolour = blue\n";
    EXPECT_EQ(run("spectrum --config " + cfg.string()).code, 1);
}

TEST(Cli, MissingOutputDirectoryExitsOne) {
    EXPECT_EQ(run("spectrum --lambda 10 --out /nonexistent/dir/out.txt").code, 1);
}

TEST(Cli, WrappedWindowExitsTwo) { EXPECT_EQ(run("frame-check --config " + config("frame_wrapped.cfg")).code, 2); }

TEST(Cli, ZeroLambdaGivesEmptySpectrum) {
    const Outcome r = run("spectrum --lambda 0");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("count=0"), std::string::npos);
    EXPECT_NE(r.out.find("certified=1"), std::string::npos);
    EXPECT_TRUE(lines(r.out, true).empty());
}

TEST(Cli, SpectrumMatchesClosedForm) {
    // Three-point Laplacian on (0, pi) with n interior nodes: (4/h^2) sin^2(k h / 2).
    const int n = 200;
    const double h = M_PI / (n + 1);
    std::ostringstream args;
    args.precision(17);
    args << "spectrum --h " << h << " --lambda 50";
    const Outcome r = run(args.str());
    ASSERT_EQ(r.code, 0);
    const auto data = lines(r.out, true);
    ASSERT_EQ(data.size(), 7u);
    for (int k = 1; k <= 7; ++k) {
        const double exact = 4.0 / (h * h) * std::pow(std::sin(k * h / 2.0), 2);
        EXPECT_NEAR(std::stod(data[k - 1]), exact, 1e-9 * exact) << k;
    }
}

TEST(Cli, SpectrumRuntime) {
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome r = run("spectrum --h 0.015629814196964145 --lambda 40000");
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(lines(r.out, true).size(), 200u);
    EXPECT_LT(t, 5.0);
}

TEST(Cli, OutputFileHasProvenanceHeader) {
    const fs::path out = scratch() / "curve.csv";
    fs::remove(out);
    ASSERT_EQ(run("weyl-curve --config " + config("weyl_exact_1d.cfg") + " --out " + out.string()).code, 0);
    const std::string text = slurp(out);
    EXPECT_EQ(text.rfind("# weylcs ", 0), 0u);
    EXPECT_NE(text.find("# command=weyl-curve\n"), std::string::npos);
    EXPECT_NE(text.find("# lambda-max=10000\n"), std::string::npos);
    EXPECT_NE(text.find("\nlambda,riesz,leading,remainder,ratio,epsilon,c1,c2,c3\n"), std::string::npos);
    EXPECT_NE(text.find("\n# fit slope="), std::string::npos);
}

TEST(Cli, FlagsOverrideConfig) {
    const Outcome r = run("weyl-curve --config " + config("weyl_exact_1d.cfg") + " --lambda-count 7");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(lines(r.out, true).size(), 8u);
}

TEST(Cli, ExactCurveRatioAtTopOfRange) {
    const Outcome r = run("weyl-curve --config " + config("weyl_exact_1d.cfg"));
    ASSERT_EQ(r.code, 0);
    const auto data = lines(r.out, true);
    ASSERT_EQ(data.size(), 26u);
    const auto last = row(data.back());
    ASSERT_EQ(last.size(), 9u);
    EXPECT_EQ(last[0], 10000.0);
    // Riesz mean of k^2 at 10^4 and (2/3) 10^6.
    double riesz = 0.0;
    for (int k = 1; k < 100; ++k) riesz += 10000.0 - k * k;
    EXPECT_NEAR(last[1], riesz, 1e-9 * riesz);
    EXPECT_NEAR(last[2], 2.0e6 / 3.0, 1e-6);
    EXPECT_GE(last[4], 0.98);
    EXPECT_LE(last[4], 1.0);
}

TEST(Cli, HyperbolicOneDimensionMatchesEuclidean) {
    const std::string common = "weyl-curve --dim 1 --box '0 1' --h 0.005 --source discrete --lambda-min 10 "
                               "--lambda-max 10000 --lambda-count 20";
    const Outcome e = run(common + " --kind euclidean");
    const Outcome h = run(common + " --kind hyperbolic");
    ASSERT_EQ(e.code, 0);
    ASSERT_EQ(h.code, 0);
    EXPECT_EQ(lines(e.out, true), lines(h.out, true));
    std::vector<std::string> fe, fh;
    for (const auto& l : lines(e.out, false))
        if (l.rfind("# fit", 0) == 0) fe.push_back(l);
    for (const auto& l : lines(h.out, false))
        if (l.rfind("# fit", 0) == 0) fh.push_back(l);
    EXPECT_EQ(fe, fh);
}

TEST(Cli, Deterministic) {
    for (const std::string& args :
         {"symbol-check --config " + config("symbol_check.cfg"), "frame-check --config " + config("frame_check.cfg"),
          "weyl-curve --config " + config("weyl_hyperbolic_2d.cfg")}) {
        const Outcome a = run(args);
        const Outcome b = run(args);
        ASSERT_EQ(a.code, 0) << args;
        EXPECT_EQ(a.out, b.out) << args;
    }
}

TEST(Cli, SymbolCheckConvergesAtSecondOrder) {
    const Outcome r = run("symbol-check --config " + config("symbol_check.cfg"));
    ASSERT_EQ(r.code, 0);
    const auto data = lines(r.out, true);
    ASSERT_EQ(data.size(), 6u);
    for (std::size_t i = 1; i < data.size(); ++i) {
        const auto cells = row(data[i].substr(data[i].find(',', data[i].find(',') + 1) + 1));
        ASSERT_EQ(cells.size(), 7u);
        EXPECT_GT(cells[5], 3.0) << data[i];
        EXPECT_LT(cells[5], 5.0) << data[i];
        EXPECT_EQ(cells[6], 0.0) << data[i];
    }
}

TEST(Cli, FrameCheckDefectsAreSmall) {
    const Outcome r = run("frame-check --config " + config("frame_check.cfg"));
    ASSERT_EQ(r.code, 0);
    std::map<std::string, double> v;
    for (const auto& l : lines(r.out, true)) {
        std::istringstream is(l);
        std::string key;
        double x = 0.0;
        if (is >> key >> x) v[key] = x;
    }
    ASSERT_TRUE(v.count("parseval_defect") && v.count("trace_defect") && v.count("inversion_defect"));
    EXPECT_LT(v["parseval_defect"], 1e-10);
    EXPECT_LT(v["inversion_defect"], 1e-10);
    EXPECT_LT(v["trace_defect"], 1e-10);
}

TEST(Cli, FitUnavailableStillSucceeds) {
    const Outcome r = run("weyl-curve --lambda-min 1 --lambda-max 3 --lambda-count 3");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("# fit unavailable:"), std::string::npos);
}
