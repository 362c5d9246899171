#pragma once

// Both sides of the norm/action identities and inequalities, evaluated on a
// single potential or on a seeded battery of random trigonometric potentials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "hillkdv/actions.hpp"
#include "hillkdv/errors.hpp"
#include "hillkdv/fourier.hpp"
#include "hillkdv/kdv.hpp"
#include "hillkdv/riccati.hpp"
#include "hillkdv/spectrum.hpp"

namespace hillkdv {

enum class CheckKind { identity, inequality, informational };

inline const char* to_string(CheckKind k) {
    switch (k) {
        case CheckKind::identity: return "identity";
        case CheckKind::inequality: return "inequality";
        default: return "informational";
    }
}

struct EstimateReport {
    std::string id;
    CheckKind kind = CheckKind::inequality;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;     ///< rhs - lhs, or |lhs - rhs| for identities
    double tolerance = 0.0;  ///< absolute
    bool pass = true;
    std::string fingerprint;
    std::string note;
};

inline EstimateReport identity_report(std::string id, double lhs, double rhs, double tol, std::string fp) {
    EstimateReport r{std::move(id), CheckKind::identity, lhs, rhs, std::abs(lhs - rhs), tol, false, std::move(fp), {}};
    r.pass = r.margin <= tol;
    return r;
}

inline EstimateReport inequality_report(std::string id, double lhs, double rhs, double tol, std::string fp) {
    EstimateReport r{std::move(id), CheckKind::inequality, lhs, rhs, rhs - lhs, tol, false, std::move(fp), {}};
    r.pass = r.margin >= -tol;
    return r;
}

inline EstimateReport informational_report(std::string id, double lhs, double rhs, std::string fp, std::string note = {}) {
    EstimateReport r{std::move(id), CheckKind::informational, lhs, rhs, rhs - lhs, 0.0, true, std::move(fp), std::move(note)};
    return r;
}

struct VerifierTolerances {
    double identity_rel = 1e-6;   ///< relative, identities
    double dual_rel = 1e-8;       ///< relative, the two real-line forms of Q0
    double q0_abs = 1e-8;         ///< |q0 - ||p||^2|
    double inequality = 1e-9;     ///< margin >= -inequality * max(1, |lhs|, |rhs|)
    double roundtrip = 1e-7;      ///< Riccati roundtrip in L2
    double scan_rel = 1e-12;      ///< pointwise gap scans, relative to h_n
};

/// Everything the checks need about one potential, computed once.
struct PotentialAnalysis {
    TrigPotential psi;
    std::string fingerprint;
    double l2 = 0.0;
    double hminus1 = 0.0;
    double hamiltonian = 0.0;
    std::optional<SpectralAnalysis> spectral;
    InverseRiccati riccati;
};

inline PotentialAnalysis analyze_potential(const TrigPotential& psi, const AnalysisOptions& opt = {}) {
    PotentialAnalysis a;
    a.psi = psi.trimmed();
    a.fingerprint = fingerprint(a.psi);
    a.l2 = l2_norm(a.psi);
    a.hminus1 = hminus1_norm(a.psi);
    a.hamiltonian = hamiltonian(a.psi);
    a.spectral.emplace(analyze(a.psi, opt));
    a.riccati = inverse(antiderivative(a.psi));
    return a;
}

/// Sequence norms of the gap data with weights (2 pi n)^{2m}.
struct GapNorms {
    double gamma_m1 = 0.0;    ///< ||gamma||_{-1}, lambda-plane gap lengths
    double gamma_0 = 0.0;     ///< ||gamma||_0
    double h_0 = 0.0;         ///< ||h||_0
    double zgap_m1 = 0.0;     ///< ||(z_n^+ - z_n^-)||_{-1}
    double zmeasure_m1 = 0.0; ///< ||(int_{g_n} z dz)||_{-1}
};

inline GapNorms gap_norms(const HillSpectrum& hs) {
    GapNorms g;
    const auto& bs = hs.bands();
    for (std::size_t n = 1; n <= bs.n_max; ++n) {
        const double w = 1.0 / std::pow(two_pi * static_cast<double>(n), 2);
        const double gl = bs.gap_lengths[n - 1];
        const auto mg = momentum_gap(hs, n);
        const double zl = mg.z_hi - mg.z_lo;
        const double zm = 0.5 * (mg.z_hi * mg.z_hi - mg.z_lo * mg.z_lo);
        g.gamma_m1 += w * gl * gl;
        g.gamma_0 += gl * gl;
        g.h_0 += bs.heights[n - 1] * bs.heights[n - 1];
        g.zgap_m1 += w * zl * zl;
        g.zmeasure_m1 += w * zm * zm;
    }
    g.gamma_m1 = std::sqrt(g.gamma_m1);
    g.gamma_0 = std::sqrt(g.gamma_0);
    g.h_0 = std::sqrt(g.h_0);
    g.zgap_m1 = std::sqrt(g.zgap_m1);
    g.zmeasure_m1 = std::sqrt(g.zmeasure_m1);
    return g;
}

namespace detail {

inline double ineq_tol(const VerifierTolerances& t, double lhs, double rhs) {
    return t.inequality * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

inline EstimateReport ineq(const std::string& id, double lhs, double rhs, const PotentialAnalysis& a,
                           const VerifierTolerances& t) {
    return inequality_report(id, lhs, rhs, ineq_tol(t, lhs, rhs), a.fingerprint);
}

}  // namespace detail

/// ||psi||^2 = 4 sum pi n A_n.
inline EstimateReport check_norm_action_identity(const PotentialAnalysis& a, const VerifierTolerances& t = {}) {
    const double lhs = a.l2 * a.l2;
    const double rhs = 4.0 * a.spectral->actions.p1.value;
    auto r = identity_report("norm-action-identity", lhs, rhs, t.identity_rel * lhs, a.fingerprint);
    if (a.spectral->actions.p1.tail_warning) r.note = "P_1 tail warning";
    return r;
}

/// 8 P_3 - 8 P_1 P_{-1} <= H(psi) <= 8 P_3.
inline std::vector<EstimateReport> check_hamiltonian_bounds(const PotentialAnalysis& a, const VerifierTolerances& t = {}) {
    const auto& as = a.spectral->actions;
    const double p3 = as.p3.value, p1 = as.p1.value, pm1 = as.p_minus1.value;
    std::vector<EstimateReport> out;
    out.push_back(detail::ineq("hamiltonian-lower", 8.0 * p3 - 8.0 * p1 * pm1, a.hamiltonian, a, t));
    out.push_back(detail::ineq("hamiltonian-upper", a.hamiltonian, 8.0 * p3, a, t));
    if (as.p3.tail_warning)
        for (auto& r : out) r.note = "P_3 tail warning";
    return out;
}

/// Observed ||psi||_{-1}^2 / (P_{-1}(1 + P_{-1})); 0 for the zero potential.
inline double hminus1_action_constant(const PotentialAnalysis& a) {
    const double pm1 = a.spectral->actions.p_minus1.value;
    if (pm1 <= 0.0) return 0.0;
    return a.hminus1 * a.hminus1 / (pm1 * (1.0 + pm1));
}

/// ||psi||_{-1}^2 <= 3 P_{-1}(1 + P_{-1}) and P_{-1} <= ||psi||_{-1}^2 (1 + ||psi||_{-1})^{3/2},
/// plus the observed constant of the first against 3 and 5.
inline std::vector<EstimateReport> check_hminus1_action_bounds(const PotentialAnalysis& a, const VerifierTolerances& t = {}) {
    const double pm1 = a.spectral->actions.p_minus1.value;
    const double s2 = a.hminus1 * a.hminus1;
    std::vector<EstimateReport> out;
    out.push_back(detail::ineq("hminus1-upper-by-action", s2, 3.0 * pm1 * (1.0 + pm1), a, t));
    out.push_back(detail::ineq("action-upper-by-hminus1", pm1, s2 * std::pow(1.0 + a.hminus1, 1.5), a, t));
    const double c = hminus1_action_constant(a);
    std::string note = c <= 3.0 ? "constant <= 3" : (c <= 5.0 ? "constant in (3,5]" : "constant > 5");
    out.push_back(informational_report("hminus1-constant-vs-3", c, 3.0, a.fingerprint, note));
    out.push_back(informational_report("hminus1-constant-vs-5", c, 5.0, a.fingerprint, note));
    return out;
}

/// Along a trajectory: ||psi(t)||_{-1} <= 3 e0 (1 + e0)^{5/2} and
/// e0 <= 14 max(||psi(t)||_{-1}, ||psi(t)||_{-1}^{5/2}), e0 = ||psi(0)||_{-1}.
inline std::vector<EstimateReport> check_flow_hminus1_bounds(const FlowResult& flow, const VerifierTolerances& t = {}) {
    std::vector<EstimateReport> out;
    if (flow.records.empty()) return out;
    const double e0 = flow.records.front().hminus1;
    const std::string fp = fingerprint(flow.initial_state.trimmed());
    for (const auto& r : flow.records) {
        const double et = r.hminus1;
        const double rhs6 = 3.0 * e0 * std::pow(1.0 + e0, 2.5);
        const double rhs7 = 14.0 * std::max(et, std::pow(et, 2.5));
        auto a = inequality_report("flow-hminus1-upper", et, rhs6, detail::ineq_tol(t, et, rhs6), fp);
        auto b = inequality_report("flow-hminus1-lower", e0, rhs7, detail::ineq_tol(t, e0, rhs7), fp);
        a.note = b.note = "t=" + std::to_string(r.t);
        out.push_back(std::move(a));
        out.push_back(std::move(b));
    }
    return out;
}

/// The cited gap-length and height estimates.
inline std::vector<EstimateReport> check_prior_estimates(const PotentialAnalysis& a, const VerifierTolerances& t = {}) {
    const auto g = gap_norms(a.spectral->spectrum);
    const double s = a.hminus1, l2 = a.l2;
    std::vector<EstimateReport> out;
    out.push_back(detail::ineq("gap-hminus1-upper", g.gamma_m1, std::sqrt(2.0) * s * (1.0 + s), a, t));
    out.push_back(detail::ineq("potential-hminus1-upper", s, 8.0 * std::numbers::pi * g.gamma_m1 * (1.0 + g.gamma_m1), a, t));
    out.push_back(detail::ineq("height-lower", std::sqrt(std::numbers::pi / 8.0) * s, g.h_0, a, t));
    out.push_back(detail::ineq("height-upper", g.h_0, std::numbers::pi / 2.0 * s * std::sqrt(1.0 + s), a, t));
    out.push_back(detail::ineq("l2-potential-upper", l2, 2.0 * g.gamma_0 * (1.0 + std::cbrt(g.gamma_0)), a, t));
    out.push_back(detail::ineq("l2-gap-upper", g.gamma_0, 2.0 * l2 * (1.0 + std::cbrt(l2)), a, t));
    return out;
}

/// Riccati estimates, ||p||^2 <= P_{-1}, and the readings of the bound
/// P_{-1} <= (4/pi) ||h||_0 ||gamma||_{-1}.
inline std::vector<EstimateReport> check_riccati_action_chain(const PotentialAnalysis& a, const VerifierTolerances& t = {}) {
    const auto& hs = a.spectral->spectrum;
    const auto& as = a.spectral->actions;
    const auto& bs = hs.bands();
    const double p = l2_norm(a.riccati.p), q = a.hminus1, pm1 = as.p_minus1.value;
    std::vector<EstimateReport> out;
    out.push_back(detail::ineq("riccati-q-upper", q, p * (1.0 + 2.0 * p), a, t));
    out.push_back(detail::ineq("riccati-p-upper", p, std::sqrt(2.0) * q * (1.0 + 2.0 * q), a, t));
    out.push_back(detail::ineq("riccati-action-lower", p * p, pm1, a, t));

    // per-gap chain A_n <= (4 h_n / pi) int_{g_n} z dz <= (4 h_n / pi)|gamma_n|
    double worst_z = std::numeric_limits<double>::infinity(), worst_l = worst_z;
    double lz = 0.0, rz = 0.0, ll = 0.0, rl = 0.0;
    double sum_z = 0.0, sum_l = 0.0;
    for (std::size_t n = 1; n <= bs.n_max; ++n) {
        const auto mg = momentum_gap(hs, n);
        const double zdz = 0.5 * (mg.z_hi * mg.z_hi - mg.z_lo * mg.z_lo);
        const double h = bs.heights[n - 1], an = as.actions[n - 1];
        const double bz = 4.0 * h / std::numbers::pi * zdz, bl = 4.0 * h / std::numbers::pi * bs.gap_lengths[n - 1];
        const double pin = std::numbers::pi * static_cast<double>(n);
        sum_z += bz / pin;
        sum_l += bl / pin;
        if (bz - an < worst_z) worst_z = bz - an, lz = an, rz = bz;
        if (bl - an < worst_l) worst_l = bl - an, ll = an, rl = bl;
    }
    if (bs.n_max > 0) {
        out.push_back(detail::ineq("gap-action-zmeasure", lz, rz, a, t));
        out.push_back(detail::ineq("gap-action-lambda", ll, rl, a, t));
    }
    out.push_back(detail::ineq("action-sum-zmeasure", pm1, sum_z, a, t));
    out.push_back(detail::ineq("action-sum-lambda", pm1, sum_l, a, t));
    const auto g = gap_norms(hs);
    out.push_back(detail::ineq("action-height-gap-lambda", pm1, 4.0 / std::numbers::pi * g.h_0 * g.gamma_m1, a, t));
    out.push_back(informational_report("action-height-gap-zmeasure", pm1, 4.0 / std::numbers::pi * g.h_0 * g.zmeasure_m1,
                                       a.fingerprint, "gap measure int z dz in the sequence norm"));
    return out;
}

/// Q0 by the gap integral, by the weighted integral, and as ||p||^2 / 2; the
/// Riccati roundtrip and the consistency of q0 with ||p||^2.
inline std::vector<EstimateReport> check_quasimomentum(const PotentialAnalysis& a, const VerifierTolerances& t = {}) {
    const auto& as = a.spectral->actions;
    const double pp = a.riccati.q0;
    std::vector<EstimateReport> out;
    out.push_back(identity_report("q0-gap-vs-riccati", as.q0_gap, 0.5 * pp, t.identity_rel * std::max(as.q0_gap, 1e-10),
                                  a.fingerprint));
    out.push_back(identity_report("q0-gap-vs-weighted", as.q0_gap, as.q0_weighted, t.dual_rel * std::max(as.q0_gap, 1e-12),
                                  a.fingerprint));
    out.push_back(identity_report("q0-consistency", a.spectral->spectrum.q0(), pp, t.q0_abs, a.fingerprint));
    out.push_back(inequality_report("riccati-roundtrip", a.riccati.roundtrip, t.roundtrip, 0.0, a.fingerprint));
    return out;
}

/// Scan of every open gap at `points` interior nodes: v > |(z - z^-)(z - z^+)|^{1/2}
/// and non-positive second differences of v.
inline std::vector<EstimateReport> check_gap_geometry(const PotentialAnalysis& a, const VerifierTolerances& t = {},
                                                      std::size_t points = 100) {
    const auto& hs = a.spectral->spectrum;
    double worst_lower = std::numeric_limits<double>::infinity(), lower_l = 0.0, lower_r = 0.0, lower_h = 0.0;
    double worst_curv = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n <= hs.n_max(); ++n) {
        if (!hs.is_open(n)) continue;
        const auto g = momentum_gap(hs, n);
        const double h = hs.height(n);
        const double dz = (g.z_hi - g.z_lo) / static_cast<double>(points + 1);
        std::vector<double> v(points);
        for (std::size_t i = 0; i < points; ++i) {
            const double z = g.z_lo + dz * static_cast<double>(i + 1);
            v[i] = gap_v(hs, n, z);
            const double env = gap_v_envelope(hs, n, z);
            const double rel = (v[i] - env) / h;
            if (rel < worst_lower) worst_lower = rel, lower_l = env, lower_r = v[i], lower_h = h;
        }
        for (std::size_t i = 1; i + 1 < points; ++i)
            worst_curv = std::max(worst_curv, (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h);
    }
    std::vector<EstimateReport> out;
    if (std::isfinite(worst_lower)) {
        auto r = inequality_report("gap-v-envelope", lower_l, lower_r, t.scan_rel * lower_h, a.fingerprint);
        r.note = "worst (v - v_n) / h_n = " + std::to_string(worst_lower);
        out.push_back(std::move(r));
        out.push_back(inequality_report("gap-v-concave", worst_curv, 0.0, t.scan_rel, a.fingerprint));
    }
    return out;
}

enum Check : unsigned {
    check_identity = 1u << 0,
    check_hamiltonian = 1u << 1,
    check_hminus1_action = 1u << 2,
    check_prior = 1u << 3,
    check_riccati_chain = 1u << 4,
    check_q0 = 1u << 5,
    check_geometry = 1u << 6,
    check_all = 0x7fu,
};

inline std::vector<EstimateReport> run_checks(const PotentialAnalysis& a, unsigned checks, const VerifierTolerances& t = {}) {
    std::vector<EstimateReport> out;
    auto add = [&out](std::vector<EstimateReport> v) { out.insert(out.end(), v.begin(), v.end()); };
    if (checks & check_identity) out.push_back(check_norm_action_identity(a, t));
    if (checks & check_hamiltonian) add(check_hamiltonian_bounds(a, t));
    if (checks & check_hminus1_action) add(check_hminus1_action_bounds(a, t));
    if (checks & check_prior) add(check_prior_estimates(a, t));
    if (checks & check_riccati_chain) add(check_riccati_action_chain(a, t));
    if (checks & check_q0) add(check_quasimomentum(a, t));
    if (checks & check_geometry) add(check_gap_geometry(a, t));
    return out;
}

enum class DecayLaw { power, exponential };

struct Battery {
    std::uint64_t seed = 1;
    std::size_t count = 50;
    std::size_t modes = 8;
    DecayLaw law = DecayLaw::power;
    double decay = 1.0;      ///< alpha (n^-alpha) or beta (e^{-beta n})
    double norm_min = 0.05;  ///< range of ||psi||_0
    double norm_max = 2.0;
};

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// The battery members, reproducible from the seed on every platform.
inline std::vector<TrigPotential> battery_members(const Battery& b) {
    std::mt19937_64 rng(b.seed);
    std::vector<TrigPotential> out;
    out.reserve(b.count);
    for (std::size_t i = 0; i < b.count; ++i) {
        const double target = b.norm_min + (b.norm_max - b.norm_min) * detail::unit_uniform(rng);
        TrigPotential p(b.modes);
        for (std::size_t n = 1; n <= b.modes; ++n) {
            const double env = b.law == DecayLaw::power ? std::pow(static_cast<double>(n), -b.decay)
                                                        : std::exp(-b.decay * static_cast<double>(n));
            const double mag = env * (0.25 + 0.75 * detail::unit_uniform(rng));
            const double phase = two_pi * detail::unit_uniform(rng);
            p[n] = std::polar(mag, phase);
        }
        const double norm = l2_norm(p);
        if (norm > 0.0) p *= target / norm;
        out.push_back(std::move(p));
    }
    return out;
}

struct CheckSummary {
    std::string id;
    CheckKind kind = CheckKind::inequality;
    std::size_t members = 0;
    std::size_t failures = 0;
    double worst_margin = 0.0;  ///< min margin (inequality) or max mismatch (identity)
    std::string worst_fingerprint;
};

struct BatteryResult {
    std::vector<EstimateReport> reports;  ///< sorted by fingerprint, then check order
    std::vector<CheckSummary> summary;    ///< sorted by id
    std::vector<std::string> hard_failures;
    double max_constant = 0.0;            ///< max ||psi||_{-1}^2 / (P_{-1}(1 + P_{-1}))
    bool constant_flag = false;           ///< max_constant in (3, 5]
    bool all_pass() const {
        if (!hard_failures.empty()) return false;
        return std::all_of(reports.begin(), reports.end(), [](const EstimateReport& r) { return r.pass; });
    }
};

inline std::vector<CheckSummary> summarize(const std::vector<EstimateReport>& reports) {
    std::map<std::string, CheckSummary> m;
    for (const auto& r : reports) {
        auto [it, fresh] = m.try_emplace(r.id);
        CheckSummary& s = it->second;
        if (fresh) {
            s.id = r.id;
            s.kind = r.kind;
            s.worst_margin = r.margin;
            s.worst_fingerprint = r.fingerprint;
        }
        ++s.members;
        if (!r.pass) ++s.failures;
        const bool worse = r.kind == CheckKind::identity ? r.margin > s.worst_margin : r.margin < s.worst_margin;
        if (worse) s.worst_margin = r.margin, s.worst_fingerprint = r.fingerprint;
    }
    std::vector<CheckSummary> out;
    for (auto& [k, v] : m) out.push_back(std::move(v));
    return out;
}

/// Evaluates the selected checks on every member, in parallel over `threads`
/// workers (0: hardware concurrency). A member whose analysis throws is
/// recorded as a hard failure and the run continues.
inline BatteryResult run_battery(const Battery& b, unsigned checks = check_all, const VerifierTolerances& t = {},
                                 unsigned threads = 0, const AnalysisOptions& opt = {}) {
    const auto members = battery_members(b);
    struct Slot {
        std::vector<EstimateReport> reports;
        std::string fp;
        std::string error;
        double constant = 0.0;
    };
    std::vector<Slot> slots(members.size());
    auto work = [&](std::size_t i) {
        Slot& s = slots[i];
        s.fp = fingerprint(members[i].trimmed());
        try {
            const auto a = analyze_potential(members[i], opt);
            s.reports = run_checks(a, checks, t);
            s.constant = hminus1_action_constant(a);
        } catch (const std::exception& e) {
            s.error = "member " + std::to_string(i) + " (" + s.fp + "): " + e.what();
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads <= 1 || members.size() <= 1) {
        for (std::size_t i = 0; i < members.size(); ++i) work(i);
    } else {
        std::vector<std::future<void>> jobs;
        std::size_t next = 0;
        std::mutex mx;
        for (unsigned w = 0; w < threads; ++w)
            jobs.push_back(std::async(std::launch::async, [&] {
                for (;;) {
                    std::size_t i;
                    {
                        std::lock_guard<std::mutex> lock(mx);
                        if (next >= members.size()) return;
                        i = next++;
                    }
                    work(i);
                }
            }));
        for (auto& j : jobs) j.get();
    }
    std::vector<std::size_t> order(members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return slots[x].fp < slots[y].fp; });
    BatteryResult res;
    for (std::size_t i : order) {
        const Slot& s = slots[i];
        if (!s.error.empty()) res.hard_failures.push_back(s.error);
        res.reports.insert(res.reports.end(), s.reports.begin(), s.reports.end());
        res.max_constant = std::max(res.max_constant, s.constant);
    }
    res.constant_flag = res.max_constant > 3.0 && res.max_constant <= 5.0;
    res.summary = summarize(res.reports);
    return res;
}

}  // namespace hillkdv
