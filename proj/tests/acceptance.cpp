// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hillkdv/hillkdv.hpp"

using namespace hillkdv;
namespace fs = std::filesystem;

namespace {

using clock_type = std::chrono::steady_clock;

int failures = 0;

void verdict(int id, bool ok, const std::string& what, const std::string& detail, clock_type::time_point t0) {
    const double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
    std::printf("[%s] %2d %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

struct Worst {
    double value = std::numeric_limits<double>::infinity();
    void take(double v) { value = std::min(value, v); }
};

/// Reports with the given id; all of them must exist on every member.
std::vector<const EstimateReport*> select(const BatteryResult& r, const std::string& id) {
    std::vector<const EstimateReport*> out;
    for (const auto& x : r.reports)
        if (x.id == id) out.push_back(&x);
    return out;
}

double worst_margin(const BatteryResult& r, const std::string& id) {
    Worst w;
    for (const auto* x : select(r, id)) w.take(x->margin);
    return w.value;
}

double worst_mismatch(const BatteryResult& r, const std::string& id, bool relative) {
    double m = 0.0;
    for (const auto* x : select(r, id)) {
        const double scale = relative ? std::max(std::abs(x->lhs), 1e-300) : 1.0;
        m = std::max(m, x->margin / scale);
    }
    return m;
}

bool all_pass(const BatteryResult& r, const std::string& id, std::size_t members) {
    const auto v = select(r, id);
    if (v.size() != members) return false;
    for (const auto* x : v)
        if (!x->pass) return false;
    return true;
}

int run_cli(const fs::path& cwd, const std::string& args) {
    const std::string cmd = "cd '" + cwd.string() + "' && " + HILLKDV_CLI + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> file_lines(const fs::path& p) {
    std::ifstream f(p);
    std::vector<std::string> out;
    std::string l;
    while (std::getline(f, l)) out.push_back(l);
    return out;
}

double kdv_final_error(const TrigPotential& psi0, double dt, double t_end) {
    FlowConfig c;
    c.modes = 256;
    c.dt = dt;
    c.t_end = t_end;
    c.record_every = 1u << 30;
    const auto ref_cfg = [&] {
        FlowConfig r = c;
        r.dt = dt / 4.0;
        return r;
    }();
    return l2_norm(evolve(psi0, c).final_state - evolve(psi0, ref_cfg).final_state);
}

}  // namespace

int main() {
    std::printf("hillkdv acceptance (%s)\n", version_string);

    // Battery shared by criteria 1-5 and 10.
    Battery battery;
    battery.seed = 20261018;
    battery.count = 50;
    battery.modes = 8;
    battery.norm_min = 0.05;
    battery.norm_max = 2.0;
    const VerifierTolerances tol;
    auto t0 = clock_type::now();
    const BatteryResult br = run_battery(battery, check_all, tol);
    const double battery_secs = std::chrono::duration<double>(clock_type::now() - t0).count();
    const std::size_t members = br.hard_failures.empty() ? battery.count : 0;
    for (const auto& h : br.hard_failures) std::printf("  hard failure: %s\n", h.c_str());

    {  // 1
        const double m = worst_mismatch(br, "norm-action-identity", true);
        const bool ok = br.hard_failures.empty() && all_pass(br, "norm-action-identity", members) && m <= 1e-6 &&
                        battery_secs <= 300.0;
        verdict(1, ok, "norm/action identity on 50-member battery",
                fmt("worst relative mismatch %.3g, battery time %.1f s", m, battery_secs), t0);
    }
    {  // 2
        const auto t = clock_type::now();
        bool ok = br.hard_failures.empty();
        double worst_r = 0.0, worst_d = 0.0;
        for (const auto* x : select(br, "q0-gap-vs-riccati")) {
            const double q = std::max(std::abs(x->lhs), 1e-10);
            worst_r = std::max(worst_r, x->margin / q);
            ok = ok && x->margin <= 1e-6 * q;
        }
        for (const auto* x : select(br, "q0-gap-vs-weighted")) {
            const double q = std::max(std::abs(x->lhs), 1e-12);
            worst_d = std::max(worst_d, x->margin / q);
            ok = ok && x->margin <= 1e-8 * q;
        }
        ok = ok && select(br, "q0-gap-vs-riccati").size() == members && select(br, "q0-gap-vs-weighted").size() == members;
        verdict(2, ok, "quasimomentum identities",
                fmt("worst |Q0 - |p|^2/2|/Q0 %.3g, worst dual-form mismatch %.3g", worst_r, worst_d), t);
    }
    {  // 3
        const auto t = clock_type::now();
        const double a = worst_margin(br, "hminus1-upper-by-action"), b = worst_margin(br, "action-upper-by-hminus1");
        const bool ok = br.hard_failures.empty() && select(br, "hminus1-upper-by-action").size() == members &&
                        select(br, "action-upper-by-hminus1").size() == members && a >= -1e-9 && b >= -1e-9;
        const char* flag = br.max_constant <= 3.0 ? "<= 3" : (br.max_constant <= 5.0 ? "in (3,5] FLAGGED" : "> 5");
        verdict(3, ok, "H^-1 / action two-sided bounds",
                fmt("worst margins %.3g and %.3g, max observed constant %.4f ", a, b, br.max_constant) + flag, t);
    }
    {  // 4
        const auto t = clock_type::now();
        bool ok = br.hard_failures.empty();
        double rt_q = 0.0, rt_p = 0.0, q0c = 0.0;
        for (const auto& p : battery_members(battery)) {
            const auto inv = inverse(antiderivative(p.trimmed()));
            rt_q = std::max(rt_q, inv.roundtrip);
            const auto back = inverse(forward(p.trimmed()).q);
            rt_p = std::max(rt_p, l2_norm(back.p - p.trimmed()));
        }
        for (const auto* x : select(br, "q0-consistency")) q0c = std::max(q0c, x->margin);
        const double m11 = worst_margin(br, "riccati-q-upper"), m12 = worst_margin(br, "riccati-p-upper");
        ok = ok && rt_q <= 1e-7 && rt_p <= 1e-7 && q0c <= 1e-8 && m11 >= -1e-9 && m12 >= -1e-9 &&
             select(br, "q0-consistency").size() == members;
        verdict(4, ok, "Riccati map",
                fmt("roundtrips q %.3g p %.3g, |q0 - |p|^2| %.3g, ", rt_q, rt_p, q0c) +
                    fmt("bound margins %.3g / %.3g", m11, m12),
                t);
    }
    {  // 5
        const auto t = clock_type::now();
        const double m13 = worst_margin(br, "riccati-action-lower");
        const double ml = worst_margin(br, "action-height-gap-lambda");
        const double mz = worst_margin(br, "action-height-gap-zmeasure");
        const bool ok = br.hard_failures.empty() && all_pass(br, "riccati-action-lower", members) && m13 >= -1e-9 &&
                        select(br, "action-height-gap-lambda").size() == members &&
                        select(br, "action-height-gap-zmeasure").size() == members;
        verdict(5, ok, "Riccati/action chain",
                fmt("|p|^2 <= P_-1 worst margin %.3g; height-gap bound margins: lambda reading %.3g, "
                    "z-measure reading %.3g (informational)",
                    m13, ml, mz),
                t);
    }
    {  // 6
        const auto t = clock_type::now();
        double dres = 0.0, droot = 0.0, wr = 0.0, sep = std::numeric_limits<double>::infinity();
        SpectrumOptions so;
        so.n_max = 16;
        for (const auto& p : battery_members(battery)) {
            const HillSpectrum hs(p, so);
            const auto cv = cross_validate(hs, 16);
            dres = std::max(dres, cv.max_delta_residual);
            droot = std::max(droot, cv.max_root_rel_diff);
            wr = std::max(wr, cv.max_wronskian_dev);
            sep = std::min(sep, cv.min_separation);
        }
        const bool ok = dres <= 1e-8 && droot <= 1e-8 && wr <= 1e-10 && sep > 0.0;
        verdict(6, ok, "Hill matrix vs monodromy, n <= 16",
                fmt("|Delta - (-1)^n| %.3g, root diff (rel) %.3g, Wronskian drift %.3g, min separation %.3g", dres,
                    droot, wr, sep),
                t);
    }

    // Trajectory shared by criteria 7 and 8.
    TrigPotential psi0(1);
    psi0[1] = cplx(0.25, 0.0);  // 0.5 cos(2 pi x)
    FlowConfig fc;
    fc.modes = 256;
    fc.dt = 5e-5;
    fc.t_end = 0.5;
    fc.record_every = 500;
    fc.action_gaps = 8;
    t0 = clock_type::now();
    const FlowResult fr = evolve(psi0, fc);
    {  // 7
        const auto& r0 = fr.records.front();
        double da = 0.0, dl = 0.0, dh = 0.0;
        for (const auto& r : fr.records) {
            for (std::size_t n = 0; n < 8; ++n) da = std::max(da, std::abs(r.actions[n] - r0.actions[n]));
            dl = std::max(dl, std::abs(r.l2 * r.l2 - r0.l2 * r0.l2) / (r0.l2 * r0.l2));
            dh = std::max(dh, std::abs(r.hamiltonian - r0.hamiltonian) / std::abs(r0.hamiltonian));
        }
        const double abound = 1e-5 * std::max(r0.actions[0], 1e-12);
        const double e1 = kdv_final_error(psi0, 2.5e-4, fc.t_end), e2 = kdv_final_error(psi0, 1.25e-4, fc.t_end);
        const double ratio = e1 / e2;
        const bool ok = !fr.aborted && da <= abound && dl <= 1e-8 && dh <= 1e-7 && ratio > 12.0 && ratio < 20.0;
        verdict(7, ok, "KdV isospectrality",
                fmt("action drift %.3g (bound %.3g), |psi|^2 drift %.3g, H drift %.3g", da, abound, dl, dh) +
                    fmt(", halving-dt error ratio %.2f", ratio),
                t0);
    }
    {  // 8
        const auto t = clock_type::now();
        const auto reps = check_flow_hminus1_bounds(fr, tol);
        Worst up, lo;
        bool ok = !reps.empty() && reps.size() == 2 * fr.records.size();
        for (const auto& r : reps) {
            ok = ok && r.pass;
            (r.id == "flow-hminus1-upper" ? up : lo).take(r.margin);
        }
        verdict(8, ok, "H^-1 bounds along the trajectory",
                fmt("%.0f records, worst margins %.3g (upper) and %.3g (lower)", double(fr.records.size()), up.value,
                    lo.value),
                t);
    }
    {  // 9
        const auto t = clock_type::now();
        FlowConfig cc;
        cc.modes = 256;
        cc.dt = 1e-4;
        cc.t_end = 0.5;
        cc.record_every = 50;
        const auto rep = cascade_experiment(16, 2, 1.0, cc);
        const bool ok = rep.pass && rep.epsilon <= 0.25 && rep.flow.records.size() == 101;
        verdict(9, ok, "no inverse cascade from mode 16",
                fmt("eps %.4g, worst margins: |psi|_-1 <= 6 eps %.3g, |P_2 psi| <= 24 pi eps %.3g, min high energy %.4f",
                    rep.epsilon, rep.worst_hminus1_margin, rep.worst_low_margin, rep.min_high_energy),
                t);
    }
    {  // 10
        const auto t = clock_type::now();
        const bool ok = br.hard_failures.empty() && all_pass(br, "gap-v-envelope", members) &&
                        all_pass(br, "gap-v-concave", members);
        verdict(10, ok, "pointwise gap geometry",
                fmt("worst envelope margin %.3g, max second difference %.3g", worst_margin(br, "gap-v-envelope"),
                    -worst_margin(br, "gap-v-concave")),
                t);
    }
    {  // 11
        const auto t = clock_type::now();
        Battery small = battery;
        small.count = 12;
        const auto a = run_battery(small, check_all, tol, 1), b = run_battery(small, check_all, tol, 4);
        bool same = a.reports.size() == b.reports.size() && !a.reports.empty();
        for (std::size_t i = 0; same && i < a.reports.size(); ++i)
            same = a.reports[i].id == b.reports[i].id && a.reports[i].lhs == b.reports[i].lhs &&
                   a.reports[i].rhs == b.reports[i].rhs && a.reports[i].fingerprint == b.reports[i].fingerprint;
        const fs::path root = fs::temp_directory_path() / "hillkdv_acceptance";
        fs::remove_all(root);
        const std::vector<std::string> cmds{
            "spectrum --potential cos:1:0.7+sin:2:0.2 --nmax 12 --out res",
            "actions --potential cos:1:0.7+sin:2:0.2 --nmax 12 --out res",
            "riccati --potential cos:1:0.7+sin:2:0.2 --out res",
            "evolve --potential cos:1:0.5 --set t_end=0.05 --set record_every=100 --set action_gaps=4 --out res",
            "verify --seed 5 --set count=6 --out res",
            "plotdata --out res"};
        std::size_t files = 0;
        for (const char* side : {"a", "b"}) {
            fs::create_directories(root / side);
            for (const auto& c : cmds) same = same && run_cli(root / side, c) == 0;
        }
        if (same) {
            for (const auto& e : fs::directory_iterator(root / "a" / "res")) {
                const auto la = file_lines(e.path()), lb = file_lines(root / "b" / "res" / e.path().filename());
                same = same && la.size() == lb.size() && la.size() > 1;
                for (std::size_t k = 1; same && k < la.size(); ++k) same = la[k] == lb[k];
                ++files;
            }
        }
        fs::remove_all(root);
        verdict(11, same && files > 0, "determinism",
                fmt("battery reports identical across 1 and 4 workers; %.0f CLI result files byte-identical below line 1",
                    double(files)),
                t);
    }
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
