#pragma once

// Pseudospectral integration of  psi_t = -psi_xxx + 6 psi psi_x  on [0, 1):
//   d/dt c_n = i k^3 c_n + 3 i k (psi^2)_n,  k = 2 pi n,
// by the fourth-order exponential integrator ETDRK4 (Cox-Matthews) with
// contour-integral coefficients (Kassam-Trefethen) and 3/2-rule dealiasing.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hillkdv/actions.hpp"
#include "hillkdv/errors.hpp"
#include "hillkdv/fft.hpp"
#include "hillkdv/fourier.hpp"

namespace hillkdv {

struct FlowConfig {
    std::size_t modes = 256;          ///< grid size M; resolved modes n < M/2
    double dt = 1e-4;
    double t_end = 0.5;
    std::size_t record_every = 100;   ///< steps between diagnostic records
    bool dealias = true;
    std::vector<std::size_t> projections;  ///< N for ||P_N psi||
    std::size_t action_gaps = 0;      ///< actions A_1..A_n per record (0: none)
    bool keep_snapshots = false;
    double stability_limit = 2.5;     ///< bound on dt * 6 k_max max|psi0|
};

struct FlowRecord {
    double t = 0.0;
    double mean = 0.0;
    double l2 = 0.0;
    double hminus1 = 0.0;
    double hamiltonian = 0.0;
    std::vector<double> projected;  ///< ||P_N psi|| per configured N
    std::vector<double> actions;
};

struct FlowResult {
    TrigPotential initial_state;
    TrigPotential final_state;
    std::vector<FlowRecord> records;
    std::vector<TrigPotential> snapshots;
    std::size_t steps = 0;
    bool aborted = false;
    std::string message;
};

/// Throws ConfigError if cfg cannot carry psi0.
inline void validate_flow(const TrigPotential& psi0, const FlowConfig& cfg) {
    std::ostringstream os;
    if (cfg.modes < 8 || cfg.modes % 2 != 0) os << "modes must be even and >= 8; ";
    if (!(cfg.dt > 0.0)) os << "dt must be positive; ";
    if (!(cfg.t_end >= 0.0)) os << "t_end must be nonnegative; ";
    if (cfg.record_every == 0) os << "record_every must be positive; ";
    const std::size_t deg = psi0.degree();
    if (cfg.modes < 4 * deg) os << "modes " << cfg.modes << " < 4 x initial degree " << deg << "; ";
    if (os.str().empty() && deg > 0) {
        const auto grid = evaluate_grid(psi0, fft_friendly_size(std::max<std::size_t>(8 * deg, 64)));
        double mx = 0.0;
        for (double v : grid) mx = std::max(mx, std::abs(v));
        const double kmax = two_pi * static_cast<double>(cfg.modes / 2);
        const double cfl = cfg.dt * 6.0 * kmax * mx;
        if (cfl > cfg.stability_limit)
            os << "dt " << cfg.dt << " outside the stability envelope (dt*6*k_max*max|psi| = " << cfl << " > "
               << cfg.stability_limit << "); ";
    }
    if (!os.str().empty()) throw ConfigError("flow config: " + os.str());
}

namespace detail {

/// ETDRK4 coefficients for one diagonal entry L = i k^3 (times dt).
struct EtdCoefficients {
    std::vector<cplx> e, e2, q, f1, f2, f3;

    EtdCoefficients(const std::vector<double>& wavenumbers, double dt) {
        constexpr int contour = 64;
        const std::size_t n = wavenumbers.size();
        e.resize(n), e2.resize(n), q.resize(n), f1.resize(n), f2.resize(n), f3.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double k = wavenumbers[j];
            const cplx hl(0.0, dt * k * k * k);
            e[j] = std::exp(hl);
            e2[j] = std::exp(0.5 * hl);
            cplx sq = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            for (int m = 0; m < contour; ++m) {
                const cplx z = hl + std::polar(1.0, std::numbers::pi * (m + 0.5) / contour * 2.0);
                const cplx ez = std::exp(z), z3 = z * z * z;
                sq += (std::exp(0.5 * z) - 1.0) / z;
                s1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                s2 += (2.0 + z + ez * (z - 2.0)) / z3;
                s3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            // L is purely imaginary, so the contour means are taken in full.
            q[j] = dt * sq / static_cast<double>(contour);
            f1[j] = dt * s1 / static_cast<double>(contour);
            f2[j] = dt * s2 / static_cast<double>(contour);
            f3[j] = dt * s3 / static_cast<double>(contour);
        }
    }
};

/// 3 i k (psi^2)_n for the resolved modes.
class KdvNonlinearity {
  public:
    KdvNonlinearity(std::size_t n_modes, bool dealias)
        : n_(n_modes), fft_(dealias ? fft_friendly_size(3 * n_modes + 1) : 2 * n_modes + 2),
          c_(fft_.spectrum_size()), grid_(fft_.size()) {}

    void operator()(const std::vector<cplx>& state, std::vector<cplx>& out) {
        std::fill(c_.begin(), c_.end(), cplx(0.0, 0.0));
        for (std::size_t n = 1; n <= n_; ++n) c_[n] = state[n];
        fft_.inverse(c_, grid_);
        for (double& v : grid_) v *= v;
        fft_.forward(grid_, c_);
        out[0] = 0.0;
        for (std::size_t n = 1; n <= n_; ++n) out[n] = cplx(0.0, 3.0 * two_pi * static_cast<double>(n)) * c_[n];
    }

  private:
    std::size_t n_;
    RealFFT fft_;
    std::vector<cplx> c_;
    std::vector<double> grid_;
};

inline TrigPotential state_to_potential(const std::vector<cplx>& s) {
    TrigPotential p(s.size() - 1);
    for (std::size_t n = 1; n < s.size(); ++n) p[n] = s[n];
    return p;
}

}  // namespace detail

/// Potential handed to the spectral pipeline: negligible trailing modes dropped.
inline TrigPotential spectral_view(const TrigPotential& psi) { return psi.trimmed(1e-15); }

inline FlowRecord flow_record(const TrigPotential& psi, double t, const FlowConfig& cfg) {
    FlowRecord r;
    r.t = t;
    if (!psi.is_zero()) {
        const auto grid = evaluate_grid(psi, fft_friendly_size(2 * psi.modes() + 2));
        double s = 0.0;
        for (double v : grid) s += v;
        r.mean = s / static_cast<double>(grid.size());
    }
    r.l2 = l2_norm(psi);
    r.hminus1 = hminus1_norm(psi);
    r.hamiltonian = hamiltonian(psi);
    for (std::size_t n : cfg.projections) r.projected.push_back(l2_norm(project(psi, n)));
    if (cfg.action_gaps > 0) {
        AnalysisOptions opt;
        opt.spectrum.n_max = std::max<std::size_t>(opt.spectrum.n_max, cfg.action_gaps);
        const auto an = analyze(spectral_view(psi), opt);
        r.actions.assign(an.actions.actions.begin(),
                         an.actions.actions.begin() + static_cast<std::ptrdiff_t>(cfg.action_gaps));
    }
    return r;
}

/// Integrates from psi0 to cfg.t_end. On blow-up (||psi|| beyond 10 ||psi0||
/// or non-finite values) the run stops and returns the last good state with
/// `aborted` set.
inline FlowResult evolve(const TrigPotential& psi0, const FlowConfig& cfg) {
    validate_flow(psi0, cfg);
    const std::size_t nm = cfg.modes / 2 - 1;  // Nyquist mode dropped
    std::vector<double> k(nm + 1);
    for (std::size_t n = 0; n <= nm; ++n) k[n] = two_pi * static_cast<double>(n);
    const detail::EtdCoefficients co(k, cfg.dt);
    detail::KdvNonlinearity nl(nm, cfg.dealias);

    std::vector<cplx> v(nm + 1, cplx(0.0, 0.0));
    for (std::size_t n = 1; n <= std::min(nm, psi0.modes()); ++n) v[n] = psi0[n];

    FlowResult res;
    res.initial_state = psi0;
    const double norm0 = l2_norm(psi0);
    const auto n_steps = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
    auto record = [&](std::size_t step) {
        const TrigPotential p = detail::state_to_potential(v);
        res.records.push_back(flow_record(p, static_cast<double>(step) * cfg.dt, cfg));
        if (cfg.keep_snapshots) res.snapshots.push_back(p);
    };
    record(0);

    std::vector<cplx> nv(nm + 1), na(nm + 1), nb(nm + 1), nc(nm + 1), a(nm + 1), b(nm + 1), c(nm + 1), prev;
    for (std::size_t step = 1; step <= n_steps; ++step) {
        prev = v;
        nl(v, nv);
        for (std::size_t n = 0; n <= nm; ++n) a[n] = co.e2[n] * v[n] + co.q[n] * nv[n];
        nl(a, na);
        for (std::size_t n = 0; n <= nm; ++n) b[n] = co.e2[n] * v[n] + co.q[n] * na[n];
        nl(b, nb);
        for (std::size_t n = 0; n <= nm; ++n) c[n] = co.e2[n] * a[n] + co.q[n] * (2.0 * nb[n] - nv[n]);
        nl(c, nc);
        double norm2 = 0.0;
        for (std::size_t n = 0; n <= nm; ++n) {
            v[n] = co.e[n] * v[n] + nv[n] * co.f1[n] + 2.0 * (na[n] + nb[n]) * co.f2[n] + nc[n] * co.f3[n];
            norm2 += 2.0 * std::norm(v[n]);
        }
        v[0] = 0.0;
        const double norm = std::sqrt(norm2);
        if (!std::isfinite(norm) || (norm0 > 0.0 && norm > 10.0 * norm0)) {
            v = prev;
            res.aborted = true;
            std::ostringstream os;
            os << "evolve: blow-up at t = " << static_cast<double>(step) * cfg.dt << " (||psi|| = " << norm << ")";
            res.message = os.str();
            res.steps = step - 1;
            res.final_state = detail::state_to_potential(v);
            return res;
        }
        res.steps = step;
        if (step % cfg.record_every == 0 || step == n_steps) record(step);
    }
    res.final_state = detail::state_to_potential(v);
    return res;
}

struct CascadeReport {
    double epsilon = 0.0;        ///< ||psi0||_{-1}
    double energy = 0.0;         ///< C = ||psi0||
    std::size_t cutoff = 0;      ///< N
    double worst_hminus1_margin = std::numeric_limits<double>::infinity();  ///< min 6 eps - ||psi(t)||_{-1}
    double worst_low_margin = std::numeric_limits<double>::infinity();      ///< min 6 (2 pi N) eps - ||P_N psi(t)||
    double min_high_energy = std::numeric_limits<double>::infinity();       ///< min ||(I - P_N) psi(t)||^2
    double high_energy_bound = 0.0;  ///< C^2 - (6 (2 pi N) eps)^2
    bool pass = true;
    FlowResult flow;
};

/// Evolves psi0 = 2 c cos(2 pi N0 x) with ||psi0|| = amplitude and checks the
/// low-mode bounds at every record. Throws ConfigError if eps > 1/4.
inline CascadeReport cascade_experiment(std::size_t high_mode, std::size_t cutoff, double amplitude,
                                        FlowConfig cfg) {
    if (high_mode == 0 || cutoff == 0) throw ConfigError("cascade: modes must be positive");
    TrigPotential psi0(high_mode);
    psi0[high_mode] = amplitude / std::sqrt(2.0);
    CascadeReport rep;
    rep.energy = l2_norm(psi0);
    rep.epsilon = hminus1_norm(psi0);
    rep.cutoff = cutoff;
    if (rep.epsilon > 0.25) {
        std::ostringstream os;
        os << "cascade: ||psi0||_{-1} = " << rep.epsilon << " exceeds 1/4";
        throw ConfigError(os.str());
    }
    cfg.projections = {cutoff};
    rep.flow = evolve(psi0, cfg);
    const double low_bound = 6.0 * two_pi * static_cast<double>(cutoff) * rep.epsilon;
    rep.high_energy_bound = rep.energy * rep.energy - low_bound * low_bound;
    for (const auto& r : rep.flow.records) {
        rep.worst_hminus1_margin = std::min(rep.worst_hminus1_margin, 6.0 * rep.epsilon - r.hminus1);
        rep.worst_low_margin = std::min(rep.worst_low_margin, low_bound - r.projected.front());
        rep.min_high_energy = std::min(rep.min_high_energy, r.l2 * r.l2 - r.projected.front() * r.projected.front());
    }
    rep.pass = !rep.flow.aborted && rep.worst_hminus1_margin >= 0.0 && rep.worst_low_margin >= 0.0;
    return rep;
}

}  // namespace hillkdv
