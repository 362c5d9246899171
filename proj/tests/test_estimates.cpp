#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "hillkdv/estimates.hpp"
#include "support.hpp"

using namespace hillkdv;

namespace {

Battery small_battery(std::uint64_t seed, std::size_t count) {
    Battery b;
    b.seed = seed;
    b.count = count;
    return b;
}

const EstimateReport& find(const std::vector<EstimateReport>& v, const std::string& id) {
    for (const auto& r : v)
        if (r.id == id) return r;
    throw std::runtime_error("missing report " + id);
}

}  // namespace

TEST(Estimates, ReportBuilders) {
    const auto id = identity_report("x", 1.0, 1.0 + 1e-9, 1e-8, "fp");
    EXPECT_TRUE(id.pass);
    EXPECT_NEAR(id.margin, 1e-9, 1e-15);
    EXPECT_FALSE(identity_report("x", 1.0, 1.1, 1e-8, "fp").pass);
    const auto in = inequality_report("y", 2.0, 1.0, 0.5, "fp");
    EXPECT_DOUBLE_EQ(in.margin, -1.0);
    EXPECT_FALSE(in.pass);
    EXPECT_TRUE(inequality_report("y", 1.0, 1.0 - 1e-12, 1e-9, "fp").pass);
    EXPECT_TRUE(informational_report("z", 10.0, 1.0, "fp").pass);
    EXPECT_STREQ(to_string(CheckKind::informational), "informational");
}

TEST(Estimates, BatteryMembersAreReproducible) {
    Battery b = small_battery(99, 30);
    const auto a = battery_members(b), c = battery_members(b);
    ASSERT_EQ(a.size(), 30u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(a[i] == c[i]);
        EXPECT_LE(a[i].degree(), b.modes);
        const double n = l2_norm(a[i]);
        EXPECT_GE(n, b.norm_min - 1e-12);
        EXPECT_LE(n, b.norm_max + 1e-12);
    }
    b.seed = 100;
    EXPECT_FALSE(battery_members(b)[0] == a[0]);
    b.law = DecayLaw::exponential;
    EXPECT_EQ(battery_members(b).size(), 30u);
}

TEST(Estimates, EmptyBattery) {
    const auto res = run_battery(small_battery(1, 0));
    EXPECT_TRUE(res.reports.empty());
    EXPECT_TRUE(res.summary.empty());
    EXPECT_TRUE(res.all_pass());
}

TEST(Estimates, AllChecksPassOnSmallBattery) {
    const auto res = run_battery(small_battery(5, 6), check_all, {}, 1);
    EXPECT_TRUE(res.hard_failures.empty());
    for (const auto& r : res.reports) EXPECT_TRUE(r.pass) << r.id << " " << r.fingerprint << " margin " << r.margin;
    EXPECT_LE(res.max_constant, 3.0);
    std::set<std::string> ids;
    for (const auto& s : res.summary) ids.insert(s.id);
    for (const char* id : {"norm-action-identity", "hminus1-upper-by-action", "action-upper-by-hminus1",
                           "riccati-action-lower", "q0-gap-vs-riccati", "q0-gap-vs-weighted", "gap-v-envelope",
                           "gap-v-concave", "action-height-gap-lambda", "action-height-gap-zmeasure"})
        EXPECT_TRUE(ids.count(id)) << id;
}

TEST(Estimates, ThreadCountDoesNotChangeResults) {
    const auto a = run_battery(small_battery(8, 4), check_all, {}, 1);
    const auto b = run_battery(small_battery(8, 4), check_all, {}, 3);
    ASSERT_EQ(a.reports.size(), b.reports.size());
    for (std::size_t i = 0; i < a.reports.size(); ++i) {
        EXPECT_EQ(a.reports[i].id, b.reports[i].id);
        EXPECT_EQ(a.reports[i].fingerprint, b.reports[i].fingerprint);
        EXPECT_EQ(a.reports[i].lhs, b.reports[i].lhs);
        EXPECT_EQ(a.reports[i].rhs, b.reports[i].rhs);
    }
}

TEST(Estimates, SingleModeClosedForm) {
    // psi = 2 c cos(2 pi x): ||psi||^2 = 2 c^2, ||psi||_{-1}^2 = 2 c^2 / (2 pi)^2
    TrigPotential p(1);
    const double c = 0.05;
    p[1] = cplx(c, 0.0);
    const auto a = analyze_potential(p);
    EXPECT_NEAR(a.l2 * a.l2, 2 * c * c, 1e-16);
    EXPECT_NEAR(a.hminus1 * a.hminus1, 2 * c * c / std::pow(two_pi, 2), 1e-18);
    const auto r = check_norm_action_identity(a);
    EXPECT_TRUE(r.pass);
    // to leading order P_{-1} = ||psi||_{-1}^2, so the observed constant tends to 1
    EXPECT_NEAR(hminus1_action_constant(a), 1.0, 1e-3);
}

TEST(Estimates, CheckSelection) {
    std::mt19937_64 rng(3);
    const auto a = analyze_potential(testing_support::random_potential(rng, 4, 0.7));
    const auto only = run_checks(a, check_identity | check_q0);
    for (const auto& r : only) EXPECT_TRUE(r.id == "norm-action-identity" || r.id.rfind("q0", 0) == 0 || r.id == "riccati-roundtrip");
    EXPECT_EQ(run_checks(a, 0).size(), 0u);
    const auto all = run_checks(a, check_all);
    EXPECT_GT(all.size(), only.size());
    EXPECT_EQ(find(all, "q0-consistency").kind, CheckKind::identity);
}

TEST(Estimates, FailureIsDetectedWithTightTolerance) {
    std::mt19937_64 rng(4);
    const auto a = analyze_potential(testing_support::random_potential(rng, 4, 1.0));
    VerifierTolerances t;
    t.identity_rel = 1e-300;
    EXPECT_FALSE(check_norm_action_identity(a, t).pass);
}

TEST(Estimates, SummaryTracksWorstMargin) {
    std::vector<EstimateReport> v{inequality_report("a", 1.0, 2.0, 0.0, "p"), inequality_report("a", 1.0, 1.5, 0.0, "q"),
                                  identity_report("b", 1.0, 1.0, 0.1, "p"), identity_report("b", 1.0, 1.05, 0.1, "q"),
                                  inequality_report("a", 3.0, 1.0, 0.0, "r")};
    const auto s = summarize(v);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].id, "a");
    EXPECT_EQ(s[0].failures, 1u);
    EXPECT_DOUBLE_EQ(s[0].worst_margin, -2.0);
    EXPECT_EQ(s[0].worst_fingerprint, "r");
    EXPECT_NEAR(s[1].worst_margin, 0.05, 1e-15);
    EXPECT_EQ(s[1].worst_fingerprint, "q");
}

TEST(Estimates, FlowBoundsAlongTrajectory) {
    TrigPotential p(1);
    p[1] = cplx(0.25, 0.0);
    FlowConfig cfg;
    cfg.modes = 64;
    cfg.dt = 1e-4;
    cfg.t_end = 0.02;
    cfg.record_every = 50;
    const auto fr = evolve(p, cfg);
    const auto reps = check_flow_hminus1_bounds(fr);
    EXPECT_EQ(reps.size(), 2 * fr.records.size());
    for (const auto& r : reps) EXPECT_TRUE(r.pass) << r.id << " " << r.note;
}
