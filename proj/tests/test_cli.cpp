#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / ("hillkdv_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct ScratchCleanup : ::testing::Environment {
    void TearDown() override {
        std::error_code ec;
        fs::remove_all(scratch(), ec);
    }
};
const auto* const cleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

int run(const std::string& args) {
    const std::string cmd = std::string(HILLKDV_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream f(p);
    std::vector<std::string> out;
    std::string l;
    while (std::getline(f, l)) out.push_back(l);
    return out;
}

/// Data rows of a table: comment lines and the header row dropped.
std::vector<std::vector<std::string>> rows(const fs::path& p) {
    std::vector<std::vector<std::string>> out;
    bool header = false;
    for (const auto& l : lines(p)) {
        if (l.empty() || l[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(l);
        std::string c;
        while (std::getline(ss, c, '\t')) cells.push_back(c);
        out.push_back(cells);
    }
    return out;
}

std::string dir(const std::string& name) { return (scratch() / name).string(); }

}  // namespace

TEST(Cli, ZeroPotentialSpectrumHasClosedGaps) {
    ASSERT_EQ(run("spectrum --potential 0 --nmax 6 --out " + dir("zero")), 0);
    const auto r = rows(scratch() / "zero" / "bands.tsv");
    ASSERT_EQ(r.size(), 6u);
    for (const auto& row : r) EXPECT_EQ(std::stod(row[4]), 0.0);
}

TEST(Cli, OutputsCarryProvenance) {
    ASSERT_EQ(run("actions --potential cos:1:0.3 --nmax 4 --out " + dir("prov")), 0);
    for (const char* name : {"bands.tsv", "actions.tsv", "action_summary.tsv", "v_profiles.tsv"}) {
        const auto l = lines(scratch() / "prov" / name);
        ASSERT_GE(l.size(), 5u) << name;
        EXPECT_EQ(l[0].rfind("# generated ", 0), 0u);
        EXPECT_EQ(l[1], "# version hillkdv 1.0.0");
        EXPECT_EQ(l[2], "# command actions");
        EXPECT_EQ(l[3], "# config potential = cos:1:0.3");
    }
}

TEST(Cli, ActionSummaryEchoesNormIdentity) {
    ASSERT_EQ(run("actions --potential cos:1:0.3+sin:2:0.2 --out " + dir("ident")), 0);
    std::map<std::string, double> v;
    for (const auto& r : rows(scratch() / "ident" / "action_summary.tsv")) v[r[0]] = std::stod(r[1]);
    EXPECT_NEAR(v.at("norm_sq"), v.at("4P_1"), 1e-6 * v.at("norm_sq"));
    EXPECT_NEAR(v.at("Q0_gap"), v.at("Q0_weighted"), 1e-8 * v.at("Q0_gap"));
}

TEST(Cli, RerunsAreByteIdentical) {
    const std::vector<std::pair<std::string, std::vector<std::string>>> cmds{
        {"spectrum --potential cos:1:0.4+sin:3:0.1 --nmax 8", {"bands.tsv", "crosscheck.tsv", "potential.txt"}},
        {"actions --potential cos:2:0.5", {"actions.tsv", "action_summary.tsv", "v_profiles.tsv"}},
        {"verify --seed 11 --set count=3", {"reports.jsonl", "verify_summary.tsv"}},
        {"evolve --potential cos:1:0.5 --set t_end=0.01 --set record_every=20 --set action_gaps=2",
         {"diagnostics.tsv", "final.txt", "evolve_summary.tsv"}}};
    int i = 0;
    for (const auto& [args, files] : cmds) {
        const std::string a = dir("det_a" + std::to_string(i)), b = dir("det_b" + std::to_string(i));
        ++i;
        ASSERT_EQ(run(args + " --out " + a), 0) << args;
        ASSERT_EQ(run(args + " --out " + b), 0) << args;
        for (const auto& f : files) {
            auto la = lines(fs::path(a) / f), lb = lines(fs::path(b) / f);
            ASSERT_FALSE(la.empty()) << f;
            ASSERT_EQ(la.size(), lb.size()) << f;
            for (std::size_t k = 1; k < la.size(); ++k) {
                // the output directory is part of the config echo
                if (la[k].find("det_a") != std::string::npos) continue;
                EXPECT_EQ(la[k], lb[k]) << args << " " << f << " line " << k;
            }
        }
    }
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("spectrum --potential cos:x:1 --out " + dir("bad")), 2);
    EXPECT_EQ(run("spectrum --bogus-flag"), 2);
    EXPECT_EQ(run("spectrum --config /nonexistent/file.cfg"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    {
        std::ofstream f(scratch() / "malformed.txt");
        f << "N_modes 2\n1 0.5\n";
    }
    EXPECT_EQ(run("spectrum --potential-file " + (scratch() / "malformed.txt").string() + " --out " + dir("bad")), 2);
    {
        std::ofstream f(scratch() / "unknown.cfg");
        f << "no_such_key = 1\n";
    }
    EXPECT_EQ(run("spectrum --config " + (scratch() / "unknown.cfg").string() + " --out " + dir("bad")), 2);
    EXPECT_EQ(run("verify --potential cos:1:0.5 --tol 1e-300 --set checks=identity --out " + dir("fail")), 1);
    EXPECT_EQ(run("riccati --potential cos:1:3000 --set riccati_from=q --out " + dir("hard")), 3);
    EXPECT_EQ(run("evolve --potential cos:1:0.5 --set dt=0.5 --out " + dir("bad")), 2);
}

TEST(Cli, RiccatiOfZero) {
    ASSERT_EQ(run("riccati --potential 0 --set riccati_from=p --out " + dir("ric0")), 0);
    std::map<std::string, double> v;
    for (const auto& r : rows(scratch() / "ric0" / "riccati.tsv")) v[r[0]] = std::stod(r[1]);
    EXPECT_EQ(v.at("norm_p"), 0.0);
    EXPECT_LT(v.at("roundtrip_q"), 1e-14);
    ASSERT_EQ(run("riccati --potential cos:1:0.7+cos:2:0.3 --set riccati_from=p --out " + dir("ric1")), 0);
    v.clear();
    for (const auto& r : rows(scratch() / "ric1" / "riccati.tsv")) v[r[0]] = std::stod(r[1]);
    EXPECT_LT(v.at("roundtrip_p"), 1e-7);
    EXPECT_GE(v.at("riccati_q_upper_margin"), 0.0);
}

TEST(Cli, EvolveZeroDataAndCascade) {
    ASSERT_EQ(run("evolve --potential 0 --set t_end=0.01 --set record_every=10 --out " + dir("ev0")), 0);
    for (const auto& r : rows(scratch() / "ev0" / "diagnostics.tsv")) EXPECT_EQ(std::stod(r[2]), 0.0);
    ASSERT_EQ(run("evolve --set cascade=true --set t_end=0.02 --set record_every=50 --out " + dir("casc")), 0);
    const auto r = rows(scratch() / "casc" / "cascade.tsv");
    ASSERT_FALSE(r.empty());
    for (const auto& row : r) {
        EXPECT_GE(std::stod(row[3]), 0.0);
        EXPECT_GE(std::stod(row[6]), 0.0);
    }
}

TEST(Cli, EmptyBatteryVerifies) {
    ASSERT_EQ(run("verify --set count=0 --out " + dir("empty")), 0);
    EXPECT_EQ(lines(scratch() / "empty" / "reports.jsonl").size(), 2u);
}

TEST(Cli, PlotDataFromEmptyDirectory) {
    ASSERT_EQ(run("plotdata --out " + dir("plot_empty")), 0);
    for (const char* name : {"plot_gaps.tsv", "plot_profiles.tsv", "plot_action_drift.tsv", "plot_margins.tsv"}) {
        EXPECT_TRUE(fs::exists(scratch() / "plot_empty" / name)) << name;
        EXPECT_TRUE(rows(scratch() / "plot_empty" / name).empty()) << name;
    }
}

TEST(Cli, PlotProfilesVanishAtEndpointsAndPeakAtHeight) {
    const std::string d = dir("plot");
    ASSERT_EQ(run("actions --potential cos:1:0.6+sin:2:0.3 --nmax 3 --out " + d), 0);
    ASSERT_EQ(run("plotdata --out " + d), 0);
    std::map<std::string, double> height;
    for (const auto& r : rows(fs::path(d) / "plot_gaps.tsv")) height[r[0]] = std::stod(r[2]);
    std::map<std::string, std::vector<double>> prof;
    for (const auto& r : rows(fs::path(d) / "plot_profiles.tsv"))
        if (r.size() == 3) prof[r[0]].push_back(std::stod(r[2]));
    ASSERT_FALSE(prof.empty());
    for (const auto& [n, v] : prof) {
        EXPECT_EQ(v.front(), 0.0);
        EXPECT_EQ(v.back(), 0.0);
        EXPECT_NEAR(*std::max_element(v.begin(), v.end()), height.at(n), 1e-12 * std::max(1.0, height.at(n)));
    }
}

TEST(Cli, PlotMarginsAndDrift) {
    const std::string d = dir("plot2");
    ASSERT_EQ(run("verify --seed 2 --set count=2 --set checks=identity,q0 --out " + d), 0);
    ASSERT_EQ(run("evolve --potential cos:1:0.5 --set t_end=0.01 --set record_every=20 --set action_gaps=2 --out " + d), 0);
    ASSERT_EQ(run("plotdata --out " + d), 0);
    const auto m = rows(fs::path(d) / "plot_margins.tsv");
    ASSERT_FALSE(m.empty());
    EXPECT_EQ(m.front()[0], "0");
    EXPECT_EQ(m.back()[0], "1");
    const auto drift = rows(fs::path(d) / "plot_action_drift.tsv");
    ASSERT_EQ(drift.size(), 6u);
    EXPECT_EQ(std::stod(drift.front()[1]), 0.0);
    for (const auto& r : drift) EXPECT_LT(std::stod(r[1]), 1e-9);
}
