// hillkdv command-line driver.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hillkdv/hillkdv.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace hillkdv;

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> out, potential, potential_file;
    std::optional<std::uint64_t> seed, nmax;
    std::optional<double> tol;
    std::vector<std::string> sets;
};

std::string utc_stamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

RunConfig build_config(const std::string& command, const Overrides& o) {
    ConfigEntries e;
    if (!o.config_path.empty()) e = load_config(o.config_path);
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        e.set(detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
    }
    if (o.potential) {
        e.erase("potential_file");
        e.set("potential", *o.potential);
    }
    if (o.potential_file) {
        e.erase("potential");
        e.set("potential_file", *o.potential_file);
    }
    if (o.out) e.set("out", *o.out);
    if (o.seed) e.set("seed", std::to_string(*o.seed));
    if (o.nmax) e.set("n_max", std::to_string(*o.nmax));
    if (o.tol) {
        std::ostringstream os;
        os << std::setprecision(17) << *o.tol;
        e.set("tol", os.str());
    }
    RunConfig rc = make_run_config(e);
    rc.command = command;
    return rc;
}

class Output {
public:
    Output(const RunConfig& rc, std::string stamp) : rc_(rc), stamp_(std::move(stamp)) {
        std::error_code ec;
        fs::create_directories(rc.out_dir, ec);
        if (ec) throw ConfigError("cannot create output directory '" + rc.out_dir + "': " + ec.message());
    }

    /// Text file with the provenance header as '#' lines.
    std::ofstream table(const std::string& name) const {
        std::ofstream f = open(name);
        f << "# generated " << stamp_ << '\n';
        f << "# version " << version_string << '\n';
        f << "# command " << rc_.command << '\n';
        for (const auto& [k, v] : rc_.entries.items) f << "# config " << k << " = " << v << '\n';
        f << std::setprecision(17);
        return f;
    }

    /// JSON-lines file; the first two records carry the provenance.
    std::ofstream jsonl(const std::string& name) const {
        std::ofstream f = open(name);
        f << json{{"generated", stamp_}}.dump() << '\n';
        json cfg = json::array();
        for (const auto& [k, v] : rc_.entries.items) cfg.push_back({k, v});
        f << json{{"version", version_string}, {"command", rc_.command}, {"config", cfg}}.dump() << '\n';
        return f;
    }

    fs::path path(const std::string& name) const { return fs::path(rc_.out_dir) / name; }

private:
    std::ofstream open(const std::string& name) const {
        std::ofstream f(path(name));
        if (!f) throw ConfigError("cannot write '" + path(name).string() + "'");
        return f;
    }
    const RunConfig& rc_;
    std::string stamp_;
};

AnalysisOptions analysis_options(const RunConfig& rc) {
    AnalysisOptions opt;
    opt.spectrum.n_max = rc.n_max;
    return opt;
}

VerifierTolerances tolerances(const RunConfig& rc) {
    VerifierTolerances t;
    t.identity_rel = rc.tol;
    return t;
}

int cmd_spectrum(const RunConfig& rc, const Output& out) {
    SpectrumOptions so;
    so.n_max = rc.n_max;
    const HillSpectrum hs(rc.potential, so);
    {
        auto f = out.table("potential.txt");
        write_potential(f, rc.potential);
    }
    {
        auto f = out.table("bands.tsv");
        write_band_table(f, hs.bands());
    }
    const auto cv = cross_validate(hs, std::min<std::size_t>(rc.n_max, 16));
    auto f = out.table("crosscheck.tsv");
    f << "n\tside\tlambda_hill\tdelta_residual\troot_refined\tlambda_root\n";
    for (const auto& e : cv.edges)
        f << e.n << '\t' << (e.side < 0 ? "minus" : "plus") << '\t' << e.lambda_hill << '\t' << e.delta_residual << '\t'
          << (e.root_refined ? 1 : 0) << '\t' << e.lambda_root << '\n';
    f << "# max_delta_residual " << cv.max_delta_residual << '\n';
    f << "# max_root_diff " << cv.max_root_diff << '\n';
    f << "# max_root_rel_diff " << cv.max_root_rel_diff << '\n';
    f << "# max_wronskian_dev " << cv.max_wronskian_dev << '\n';
    f << "# min_separation " << cv.min_separation << '\n';
    return 0;
}

void write_profiles(const RunConfig& rc, const Output& out, const HillSpectrum& hs) {
    auto f = out.table("v_profiles.tsv");
    f << "n\tz\tv\tenvelope\n";
    for (std::size_t n = 1; n <= hs.n_max(); ++n) {
        if (!hs.is_open(n)) continue;
        const auto g = momentum_gap(hs, n);
        std::vector<double> zs;
        for (std::size_t i = 0; i < rc.profile_points; ++i)
            zs.push_back(g.z_lo + (g.z_hi - g.z_lo) * static_cast<double>(i) / static_cast<double>(rc.profile_points - 1));
        zs.push_back(std::sqrt(hs.critical_point(n)));
        std::sort(zs.begin(), zs.end());
        for (std::size_t i = 0; i < zs.size(); ++i) {
            const bool edge = i == 0 || i + 1 == zs.size();
            const double z = edge ? (i == 0 ? g.z_lo : g.z_hi) : zs[i];
            const double v = edge ? 0.0 : gap_v(hs, n, z);
            const double env = edge ? 0.0 : gap_v_envelope(hs, n, z);
            f << n << '\t' << z << '\t' << v << '\t' << env << '\n';
        }
    }
}

int cmd_actions(const RunConfig& rc, const Output& out) {
    const auto an = analyze(rc.potential, analysis_options(rc));
    const auto& as = an.actions;
    {
        auto f = out.table("bands.tsv");
        write_band_table(f, an.spectrum.bands());
    }
    {
        auto f = out.table("actions.tsv");
        write_action_table(f, as);
    }
    {
        auto f = out.table("action_summary.tsv");
        write_action_summary(f, as);
        const double l2 = l2_norm(rc.potential);
        f << "norm_sq\t" << l2 * l2 << "\t0\n";
        f << "4P_1\t" << 4.0 * as.p1.value << '\t' << 4.0 * as.p1.tail << '\n';
        f << "Q0_half_norm_sq\t" << 0.5 * an.spectrum.q0() << "\t0\n";
    }
    write_profiles(rc, out, an.spectrum);
    return 0;
}

int cmd_riccati(const RunConfig& rc, const Output& out) {
    TrigPotential p_in, q;
    const bool from_p = rc.riccati_from == "p";
    if (from_p) {
        p_in = rc.potential;
        q = forward(p_in).q;
    } else {
        q = rc.riccati_from == "q" ? rc.potential : antiderivative(rc.potential);
    }
    InverseOptions io;
    io.roundtrip_tol = 1e-7;
    const InverseRiccati inv = inverse(q, io);
    const RiccatiPair pair = forward(inv.p);
    const double p_roundtrip = from_p ? l2_norm(inv.p - p_in) : 0.0;
    const double pn = l2_norm(inv.p), qn = l2_norm(q);
    {
        auto f = out.table("p.txt");
        write_potential(f, inv.p);
    }
    {
        auto f = out.table("q.txt");
        write_potential(f, q);
    }
    {
        auto f = out.table("weight.tsv");
        f << "x\tw\n";
        const auto m = pair.w_samples.size();
        for (std::size_t j = 0; j < m; ++j)
            f << static_cast<double>(j) / static_cast<double>(m) << '\t' << pair.w_samples[j] << '\n';
    }
    const double q_upper = pn * (1.0 + 2.0 * pn);
    const double p_upper = std::sqrt(2.0) * qn * (1.0 + 2.0 * qn);
    auto f = out.table("riccati.tsv");
    f << "quantity\tvalue\n";
    f << "norm_p\t" << pn << '\n';
    f << "norm_q\t" << qn << '\n';
    f << "q0\t" << pair.q0 << '\n';
    f << "lambda0\t" << inv.lambda0 << '\n';
    f << "roundtrip_q\t" << inv.roundtrip << '\n';
    f << "roundtrip_p\t" << p_roundtrip << '\n';
    f << "truncation\t" << inv.truncation << '\n';
    f << "riccati_q_upper_margin\t" << q_upper - qn << '\n';
    f << "riccati_p_upper_margin\t" << p_upper - pn << '\n';
    const bool ok = inv.roundtrip <= 1e-7 && p_roundtrip <= 1e-7 && q_upper - qn >= -1e-9 * std::max(1.0, q_upper) &&
                    p_upper - pn >= -1e-9 * std::max(1.0, p_upper);
    return ok ? 0 : 1;
}

void write_diagnostics(const Output& out, const FlowConfig& cfg, const FlowResult& fr) {
    auto f = out.table("diagnostics.tsv");
    f << "t\tmean\tl2\thminus1\thamiltonian";
    for (std::size_t n : cfg.projections) f << "\tproj_" << n;
    for (std::size_t n = 1; n <= cfg.action_gaps; ++n) f << "\tA_" << n;
    f << '\n';
    for (const auto& r : fr.records) {
        f << r.t << '\t' << r.mean << '\t' << r.l2 << '\t' << r.hminus1 << '\t' << r.hamiltonian;
        for (double v : r.projected) f << '\t' << v;
        for (double v : r.actions) f << '\t' << v;
        f << '\n';
    }
}

int cmd_evolve(const RunConfig& rc, const Output& out) {
    if (rc.cascade) {
        const auto rep = cascade_experiment(rc.cascade_mode, rc.cascade_cutoff, rc.cascade_amplitude, rc.flow);
        FlowConfig cfg = rc.flow;
        cfg.projections = {rc.cascade_cutoff};
        write_diagnostics(out, cfg, rep.flow);
        {
            auto f = out.table("final.txt");
            write_potential(f, rep.flow.final_state);
        }
        const double low_bound = 6.0 * two_pi * static_cast<double>(rc.cascade_cutoff) * rep.epsilon;
        auto f = out.table("cascade.tsv");
        f << "t\thminus1\thminus1_bound\thminus1_margin\tlow_norm\tlow_bound\tlow_margin\thigh_energy\n";
        for (const auto& r : rep.flow.records) {
            const double low = r.projected.front();
            f << r.t << '\t' << r.hminus1 << '\t' << 6.0 * rep.epsilon << '\t' << 6.0 * rep.epsilon - r.hminus1 << '\t'
              << low << '\t' << low_bound << '\t' << low_bound - low << '\t' << r.l2 * r.l2 - low * low << '\n';
        }
        f << "# epsilon " << rep.epsilon << '\n';
        f << "# energy " << rep.energy << '\n';
        f << "# high_energy_bound " << rep.high_energy_bound << '\n';
        f << "# min_high_energy " << rep.min_high_energy << '\n';
        f << "# pass " << (rep.pass ? "true" : "false") << '\n';
        if (rep.flow.aborted) throw NumericalError(rep.flow.message);
        return rep.pass ? 0 : 1;
    }
    const FlowResult fr = evolve(rc.potential, rc.flow);
    write_diagnostics(out, rc.flow, fr);
    {
        auto f = out.table("final.txt");
        write_potential(f, fr.final_state);
    }
    const auto& r0 = fr.records.front();
    double l2_drift = 0.0, h_drift = 0.0, a_drift = 0.0;
    for (const auto& r : fr.records) {
        l2_drift = std::max(l2_drift, std::abs(r.l2 * r.l2 - r0.l2 * r0.l2) / std::max(r0.l2 * r0.l2, 1e-300));
        h_drift = std::max(h_drift, std::abs(r.hamiltonian - r0.hamiltonian) / std::max(std::abs(r0.hamiltonian), 1e-300));
        for (std::size_t i = 0; i < r.actions.size(); ++i) a_drift = std::max(a_drift, std::abs(r.actions[i] - r0.actions[i]));
    }
    auto f = out.table("evolve_summary.tsv");
    f << "quantity\tvalue\n";
    f << "steps\t" << fr.steps << '\n';
    f << "records\t" << fr.records.size() << '\n';
    f << "l2_sq_drift_rel\t" << l2_drift << '\n';
    f << "hamiltonian_drift_rel\t" << h_drift << '\n';
    f << "action_drift_abs\t" << a_drift << '\n';
    if (fr.aborted) throw NumericalError(fr.message);
    return 0;
}

json report_json(const EstimateReport& r, std::size_t member) {
    return json{{"member", member},       {"id", r.id},     {"kind", to_string(r.kind)},
                {"lhs", r.lhs},           {"rhs", r.rhs},   {"margin", r.margin},
                {"tolerance", r.tolerance}, {"pass", r.pass}, {"fingerprint", r.fingerprint},
                {"note", r.note}};
}

int cmd_verify(const RunConfig& rc, const Output& out) {
    const auto tol = tolerances(rc);
    BatteryResult res;
    if (!rc.potential_source.empty() || rc.flow_bounds) {
        try {
            const auto a = analyze_potential(rc.potential, analysis_options(rc));
            res.reports = run_checks(a, rc.checks, tol);
            res.max_constant = hminus1_action_constant(a);
        } catch (const NumericalError& e) {
            res.hard_failures.push_back(e.what());
        }
        if (rc.flow_bounds) {
            const auto fr = evolve(rc.potential, rc.flow);
            if (fr.aborted) throw NumericalError(fr.message);
            const auto v = check_flow_hminus1_bounds(fr, tol);
            res.reports.insert(res.reports.end(), v.begin(), v.end());
        }
        res.constant_flag = res.max_constant > 3.0 && res.max_constant <= 5.0;
        res.summary = summarize(res.reports);
    } else {
        res = run_battery(rc.battery, rc.checks, tol, rc.threads, analysis_options(rc));
    }
    {
        auto f = out.jsonl("reports.jsonl");
        std::size_t member = 0;
        std::string last;
        bool first = true;
        for (const auto& r : res.reports) {
            if (!first && r.fingerprint != last) ++member;
            first = false;
            last = r.fingerprint;
            f << report_json(r, member).dump() << '\n';
        }
        for (const auto& h : res.hard_failures) f << json{{"hard_failure", h}}.dump() << '\n';
    }
    auto f = out.table("verify_summary.tsv");
    f << "id\tkind\tmembers\tfailures\tworst_margin\tworst_fingerprint\n";
    for (const auto& s : res.summary)
        f << s.id << '\t' << to_string(s.kind) << '\t' << s.members << '\t' << s.failures << '\t' << s.worst_margin << '\t'
          << s.worst_fingerprint << '\n';
    f << "# max_constant " << res.max_constant << '\n';
    f << "# constant_flag " << (res.constant_flag ? "true" : "false") << '\n';
    f << "# hard_failures " << res.hard_failures.size() << '\n';
    f << "# all_pass " << (res.all_pass() ? "true" : "false") << '\n';
    return res.all_pass() ? 0 : 1;
}

/// Rows of a tab-separated table: '#' lines and the header row skipped.
std::vector<std::vector<std::string>> read_table(const fs::path& p, std::vector<std::string>* header = nullptr) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream f(p);
    if (!f) return rows;
    std::string line;
    bool seen_header = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = detail::split(line, '\t');
        if (!seen_header) {
            seen_header = true;
            if (header) *header = cells;
            continue;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

int cmd_plotdata(const RunConfig& rc, const Output& out) {
    {
        auto f = out.table("plot_gaps.tsv");
        f << "n\tgap_length\theight\n";
        for (const auto& r : read_table(out.path("bands.tsv")))
            if (r.size() >= 6) f << r[0] << '\t' << r[5] << '\t' << r[4] << '\n';
    }
    {
        auto f = out.table("plot_profiles.tsv");
        f << "n\tz\tv\n";
        std::string gap;
        for (const auto& r : read_table(out.path("v_profiles.tsv"))) {
            if (r.size() < 3) continue;
            if (!gap.empty() && r[0] != gap) f << '\n';
            gap = r[0];
            f << r[0] << '\t' << r[1] << '\t' << r[2] << '\n';
        }
    }
    {
        auto f = out.table("plot_action_drift.tsv");
        f << "t\tmax_action_drift\n";
        std::vector<std::string> header;
        const auto rows = read_table(out.path("diagnostics.tsv"), &header);
        std::vector<std::size_t> cols;
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i].rfind("A_", 0) == 0) cols.push_back(i);
        if (!cols.empty() && !rows.empty()) {
            std::vector<double> a0;
            for (std::size_t c : cols) a0.push_back(detail::parse_double("diagnostics", rows.front().at(c)));
            for (const auto& r : rows) {
                double d = 0.0;
                for (std::size_t i = 0; i < cols.size(); ++i)
                    d = std::max(d, std::abs(detail::parse_double("diagnostics", r.at(cols[i])) - a0[i]));
                f << r[0] << '\t' << d << '\n';
            }
        }
    }
    {
        auto f = out.table("plot_margins.tsv");
        f << "member\tid\tmargin\n";
        std::ifstream in(out.path("reports.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            const json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) throw ConfigError("reports.jsonl: malformed line");
            if (!j.contains("margin") || !j.contains("member")) continue;
            f << j["member"].get<std::size_t>() << '\t' << j["id"].get<std::string>() << '\t'
              << j["margin"].get<double>() << '\n';
        }
    }
    (void)rc;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hill spectra, action variables and KdV flows for periodic potentials"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string);
    Overrides o;
    const std::vector<std::string> names{"spectrum", "actions", "riccati", "evolve", "verify", "plotdata"};
    const std::map<std::string, std::string> help{
        {"spectrum", "band edges, heights and gap lengths"},
        {"actions", "action spectrum, moments and gap profiles"},
        {"riccati", "Riccati pair and roundtrip residual"},
        {"evolve", "KdV trajectory and diagnostics (cascade = true for the cascade experiment)"},
        {"verify", "estimate reports on a potential or a seeded battery"},
        {"plotdata", "plot-ready series from result files in the output directory"}};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", o.config_path, "key = value config file");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "battery seed");
        sub->add_option("--nmax", o.nmax, "number of gaps");
        sub->add_option("--tol", o.tol, "identity tolerance (relative)");
        sub->add_option("--potential", o.potential, "inline potential, e.g. cos:1:0.5+sin:3:0.1");
        sub->add_option("--potential-file", o.potential_file, "potential coefficient file");
        sub->add_option("--set", o.sets, "extra key=value config entries")->take_all();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const RunConfig rc = build_config(command, o);
        const Output out(rc, utc_stamp());
        if (command == "spectrum") return cmd_spectrum(rc, out);
        if (command == "actions") return cmd_actions(rc, out);
        if (command == "riccati") return cmd_riccati(rc, out);
        if (command == "evolve") return cmd_evolve(rc, out);
        if (command == "verify") return cmd_verify(rc, out);
        return cmd_plotdata(rc, out);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    }
}
