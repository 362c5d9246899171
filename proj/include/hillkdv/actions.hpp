#pragma once

// Quasimomentum on the momentum gaps g_n = (z_n^-, z_n^+), z = sqrt(lambda):
// v(z + i0) = arccosh((-1)^n Delta(z^2)), the actions
//   A_n = (4/pi) int_{g_n} z v dz,
// the moments P_j = sum (pi n)^j A_n, and the constant
//   Q0 = (2/pi) sum_n int_{g_n} v dz = (2/pi) sum_n pi n int_{g_n} v / z dz.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hillkdv/errors.hpp"
#include "hillkdv/spectrum.hpp"

namespace hillkdv {

struct GapCoordinates {
    double z_lo = 0.0, z_hi = 0.0;
    double mid() const { return 0.5 * (z_lo + z_hi); }
    double half() const { return 0.5 * (z_hi - z_lo); }
};

inline GapCoordinates momentum_gap(const HillSpectrum& hs, std::size_t n) {
    const auto& bs = hs.bands();
    return {std::sqrt(std::max(0.0, bs.lower.at(n - 1))), std::sqrt(std::max(0.0, bs.upper.at(n - 1)))};
}

/// v(z + i0) on the open momentum gap n. Throws std::domain_error for z
/// outside the gap or a closed gap.
inline double gap_v(const HillSpectrum& hs, std::size_t n, double z) {
    if (!hs.is_open(n)) throw std::domain_error("gap_v: gap " + std::to_string(n) + " is closed");
    const auto g = momentum_gap(hs, n);
    if (z < g.z_lo || z > g.z_hi) {
        std::ostringstream os;
        os << std::setprecision(17) << "gap_v: z = " << z << " outside gap " << n << " [" << g.z_lo << ", " << g.z_hi
           << "]";
        throw std::domain_error(os.str());
    }
    const double off_lo = (z - g.z_lo) * (z + g.z_lo);
    const double off_hi = (g.z_hi - z) * (g.z_hi + z);
    return height_from_delta_sq_minus_one(hs.delta_sq_minus_one_in_gap(n, off_lo, off_hi, z * z));
}

/// |(z - z_n^-)(z - z_n^+)|^{1/2}, the lower envelope of v on gap n.
inline double gap_v_envelope(const HillSpectrum& hs, std::size_t n, double z) {
    const auto g = momentum_gap(hs, n);
    return std::sqrt(std::abs((z - g.z_lo) * (z - g.z_hi)));
}

struct QuadratureOptions {
    double rel_tol = 1e-10;
    std::size_t min_nodes = 16;
    std::size_t max_nodes = 1u << 16;
};

/// The three gap integrals int z v, int v, int v/z over one momentum gap.
struct GapIntegrals {
    double z_v = 0.0;
    double v = 0.0;
    double v_over_z = 0.0;
    std::size_t nodes = 0;
};

/// Gauss-Chebyshev (second kind) quadrature in z = mid + half cos(theta):
/// v vanishes like sqrt at both endpoints, so v / sin(theta) is smooth and the
/// rule converges geometrically. The node count doubles (nested) until every
/// integral changes by less than rel_tol.
inline GapIntegrals gap_integrals(const HillSpectrum& hs, std::size_t n, const QuadratureOptions& opt = {}) {
    GapIntegrals out;
    if (!hs.is_open(n)) return out;
    const auto g = momentum_gap(hs, n);
    const double mid = g.mid(), half = g.half();
    auto node = [&](double theta, std::array<double, 3>& acc) {
        const double c = std::cos(theta), s = std::sin(theta);
        const double z = mid + half * c;
        // exact endpoint offsets: z - z^- = half (1 + c), z^+ - z = half (1 - c)
        const double dlo = half * (1.0 + c), dhi = half * (1.0 - c);
        const double off_lo = dlo * (z + g.z_lo), off_hi = dhi * (g.z_hi + z);
        const double v = height_from_delta_sq_minus_one(hs.delta_sq_minus_one_in_gap(n, off_lo, off_hi, z * z));
        acc[0] += s * z * v;
        acc[1] += s * v;
        acc[2] += s * v / z;
    };
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    std::size_t m = opt.min_nodes;  // panels in theta; interior nodes k pi / m
    for (std::size_t k = 1; k < m; ++k) node(std::numbers::pi * static_cast<double>(k) / static_cast<double>(m), sum);
    std::array<double, 3> prev{};
    for (int i = 0; i < 3; ++i) prev[i] = half * std::numbers::pi / static_cast<double>(m) * sum[i];
    for (;;) {
        if (2 * m > opt.max_nodes) {
            std::ostringstream os;
            os << "gap_integrals: quadrature on gap " << n << " did not converge with " << m << " nodes (estimate "
               << prev[0] << ")";
            throw NumericalError(os.str());
        }
        for (std::size_t k = 1; k < 2 * m; k += 2)
            node(std::numbers::pi * static_cast<double>(k) / static_cast<double>(2 * m), sum);
        m *= 2;
        std::array<double, 3> cur{};
        bool converged = true;
        for (int i = 0; i < 3; ++i) {
            cur[i] = half * std::numbers::pi / static_cast<double>(m) * sum[i];
            if (std::abs(cur[i] - prev[i]) > opt.rel_tol * std::abs(cur[i]) + std::numeric_limits<double>::min())
                converged = false;
        }
        prev = cur;
        if (converged) break;
    }
    out.z_v = prev[0];
    out.v = prev[1];
    out.v_over_z = prev[2];
    out.nodes = m - 1;
    return out;
}

/// A_n = (4/pi) int_{g_n} z v(z + i0) dz; zero on closed gaps.
inline double action(const HillSpectrum& hs, std::size_t n, const QuadratureOptions& opt = {}) {
    return 4.0 / std::numbers::pi * gap_integrals(hs, n, opt).z_v;
}

/// A_n through the lambda-plane form
///   A_n = (2/pi) int_{gamma_n} lambda (-1)^{n+1} Delta'(lambda) / |Delta^2 - 1|^{1/2} dlambda
/// with Delta, Delta' from the monodromy route at complex lambda.
///
/// With lambda = mid + r cos(w) the integral becomes
///   (1/2) int_0^{2 pi} lambda Delta' / sqrt(g) dw,  g = (Delta^2 - 1) / ((lambda - a)(b - lambda)),
/// a periodic analytic integrand. The trapezoid rule is applied on the shifted
/// line w = theta + i rho, i.e. on a confocal ellipse around the gap, half way
/// to the neighbouring band edges, where Delta^2 - 1 is far from zero.
inline double action_lambda_form(const HillSpectrum& hs, std::size_t n, double rel_tol = 1e-10,
                                 std::size_t max_nodes = 512) {
    if (!hs.is_open(n)) return 0.0;
    const auto& bs = hs.bands();
    const auto& pr = hs.product();
    const double a = bs.lower[n - 1], b = bs.upper[n - 1];
    const double mid = 0.5 * (a + b), r = 0.5 * (b - a);
    const double left = n == 1 ? 0.0 : pr.upper(n - 1) + hs.q0();
    const double right = pr.lower(n + 1) + hs.q0();
    const double dist = std::min(a - left, right - b);
    const double rho = 0.5 * std::acosh(1.0 + dist / r);
    auto rule = [&](std::size_t m) {
        cplx sum = 0.0, prev = 1.0;
        for (std::size_t k = 0; k < m; ++k) {
            const cplx w(two_pi * (static_cast<double>(k) + 0.5) / static_cast<double>(m), rho);
            const cplx lam = mid + r * std::cos(w);
            const auto mono = monodromy<cplx>(hs.potential(), hs.q0(), lam);
            const cplx g = (mono.delta - 1.0) * (mono.delta + 1.0) / ((lam - a) * (b - lam));
            cplx root = std::sqrt(g);
            if (std::real(root * std::conj(prev)) < 0.0) root = -root;  // continuous branch
            prev = root;
            sum += lam * mono.ddelta / root;
        }
        return std::real(sum) / static_cast<double>(m);  // (2/pi)(1/2)(2 pi/m)
    };
    const double sign = (n % 2 == 0) ? -1.0 : 1.0;  // (-1)^{n+1}
    std::size_t m = 16;
    double prev = rule(m);
    for (;;) {
        m *= 2;
        const double cur = rule(m);
        if (std::abs(cur - prev) <= rel_tol * std::abs(cur) || m >= max_nodes) return sign * 2.0 * cur;
        prev = cur;
    }
}

struct Moment {
    double exponent = 0.0;
    double value = 0.0;       ///< truncated sum
    double tail = 0.0;        ///< geometric extrapolation of the remainder
    bool tail_warning = false;  ///< tail > 1e-8 * value
};

struct ActionSpectrum {
    std::size_t n_max = 0;
    std::vector<double> z_lower, z_upper;  ///< index n-1
    std::vector<double> actions;
    std::vector<double> gap_v_integral;    ///< int_{g_n} v dz
    std::vector<double> gap_v_over_z;      ///< int_{g_n} v / z dz
    Moment p_minus1, p1, p3;
    double q0_gap = 0.0;       ///< (2/pi) sum int v dz
    double q0_weighted = 0.0;  ///< (2/pi) sum pi n int v / z dz
    bool truncation_ok = true; ///< A_{n_max} < 1e-14 max A
};

/// P_j = sum_{n <= n_max} (pi n)^j A_n with a tail estimate from the ratio of
/// the last three nonzero terms.
inline Moment moment(const std::vector<double>& actions, double j) {
    Moment m;
    m.exponent = j;
    std::vector<double> terms;
    for (std::size_t n = 1; n <= actions.size(); ++n) {
        const double t = std::pow(std::numbers::pi * static_cast<double>(n), j) * actions[n - 1];
        m.value += t;
        if (t > 0.0) terms.push_back(t);
    }
    if (terms.size() >= 3) {
        const double t1 = terms[terms.size() - 3], t2 = terms[terms.size() - 2], t3 = terms.back();
        const double r = std::max(t3 / t2, t2 / t1);
        m.tail = r < 1.0 ? t3 * r / (1.0 - r) : std::numeric_limits<double>::infinity();
    }
    m.tail_warning = m.tail > 1e-8 * m.value;
    return m;
}

inline ActionSpectrum action_spectrum(const HillSpectrum& hs, const QuadratureOptions& opt = {}) {
    ActionSpectrum as;
    as.n_max = hs.n_max();
    double amax = 0.0;
    for (std::size_t n = 1; n <= as.n_max; ++n) {
        const auto g = momentum_gap(hs, n);
        as.z_lower.push_back(g.z_lo);
        as.z_upper.push_back(g.z_hi);
        const auto gi = gap_integrals(hs, n, opt);
        const double a = 4.0 / std::numbers::pi * gi.z_v;
        as.actions.push_back(a);
        as.gap_v_integral.push_back(gi.v);
        as.gap_v_over_z.push_back(gi.v_over_z);
        as.q0_gap += 2.0 / std::numbers::pi * gi.v;
        as.q0_weighted += 2.0 * static_cast<double>(n) * gi.v_over_z;
        amax = std::max(amax, a);
    }
    as.p_minus1 = moment(as.actions, -1.0);
    as.p1 = moment(as.actions, 1.0);
    as.p3 = moment(as.actions, 3.0);
    as.truncation_ok = as.actions.empty() || as.actions.back() <= 1e-14 * amax;
    return as;
}

struct AnalysisOptions {
    SpectrumOptions spectrum{};
    QuadratureOptions quadrature{};
    std::size_t n_max_cap = 256;
};

/// Spectrum plus actions, with n_max doubled until the action at the
/// truncation edge is negligible.
struct SpectralAnalysis {
    HillSpectrum spectrum;
    ActionSpectrum actions;
};

inline SpectralAnalysis analyze(const TrigPotential& psi, const AnalysisOptions& opt = {}) {
    SpectrumOptions so = opt.spectrum;
    for (;;) {
        HillSpectrum hs(psi, so);
        ActionSpectrum as = action_spectrum(hs, opt.quadrature);
        if (as.truncation_ok || 2 * so.n_max > opt.n_max_cap) return {std::move(hs), std::move(as)};
        so.n_max *= 2;
    }
}

inline void write_action_table(std::ostream& os, const ActionSpectrum& as) {
    os << std::setprecision(17);
    os << "n\tz_minus\tz_plus\taction\n";
    for (std::size_t n = 1; n <= as.n_max; ++n)
        os << n << '\t' << as.z_lower[n - 1] << '\t' << as.z_upper[n - 1] << '\t' << as.actions[n - 1] << '\n';
}

inline void write_action_summary(std::ostream& os, const ActionSpectrum& as) {
    os << std::setprecision(17);
    os << "quantity\tvalue\ttail_bound\n";
    os << "P_-1\t" << as.p_minus1.value << '\t' << as.p_minus1.tail << '\n';
    os << "P_1\t" << as.p1.value << '\t' << as.p1.tail << '\n';
    os << "P_3\t" << as.p3.value << '\t' << as.p3.tail << '\n';
    os << "Q0_gap\t" << as.q0_gap << "\t0\n";
    os << "Q0_weighted\t" << as.q0_weighted << "\t0\n";
}

}  // namespace hillkdv
