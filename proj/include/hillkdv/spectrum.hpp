#pragma once

// Periodic/antiperiodic spectrum of the Hill operator -d^2/dx^2 + psi + q0:
// band edges, the shift q0 with lambda_0^+ = 0, critical points of the
// discriminant inside each gap, Marchenko-Ostrovski heights and gap lengths.
//
// Band edges come from the Fourier-truncated Hill matrix. Inside a gap the
// discriminant is evaluated through its product over the band edges,
//
//   Delta(l)^2 - 1 = (l_0^+ - l) prod_{m>=1} (l_m^- - l)(l_m^+ - l) / (pi m)^4,
//
// which keeps full relative accuracy right up to the gap endpoints, where the
// monodromy route loses all digits to cancellation. The monodromy route is
// kept as an independent check (cross_validate).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "hillkdv/errors.hpp"
#include "hillkdv/fourier.hpp"
#include "hillkdv/hill_matrix.hpp"
#include "hillkdv/monodromy.hpp"

namespace hillkdv {

/// arccosh(1 + u) for u >= 0, accurate for small u.
inline double arccosh1p_series(double u) {
    return std::sqrt(2.0 * u) * (1.0 - u / 12.0 + 3.0 * u * u / 160.0 - 5.0 * u * u * u / 896.0);
}

inline double arccosh1p(double u) {
    if (u < 0.0) u = 0.0;
    if (u < 1e-4) return arccosh1p_series(u);
    return std::log1p(u + std::sqrt(u * (2.0 + u)));
}

/// arccosh(sqrt(1 + x)) = asinh(sqrt(x)), the gap height function written in
/// terms of x = Delta^2 - 1 >= 0.
inline double height_from_delta_sq_minus_one(double x) {
    if (x <= 0.0) return 0.0;
    return arccosh1p(x / (1.0 + std::sqrt(1.0 + x)));
}

namespace detail {

/// Hurwitz zeta sum_{m >= a} m^{-s} by Euler-Maclaurin (a >= ~20, s >= 2).
inline double hurwitz_zeta(double s, double a) {
    constexpr int direct = 8;
    double sum = 0.0;
    for (int i = 0; i < direct; ++i) sum += std::pow(a + i, -s);
    const double b = a + direct;
    double r = std::pow(b, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(b, -s);
    // B_2k / (2k)!
    constexpr double coef[] = {1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0};
    double rising = s;  // s (s+1) ... (s+2k-2)
    double bp = std::pow(b, -s - 1.0);
    for (int k = 0; k < 4; ++k) {
        r += coef[k] * rising * bp;
        rising *= (s + 2 * k + 1) * (s + 2 * k + 2);
        bp /= b * b;
    }
    return sum + r;
}

}  // namespace detail

/// Delta^2 - 1 as a product over band edges (unshifted spectral parameter).
class DiscriminantProduct {
  public:
    DiscriminantProduct() = default;

    /// lower[m-1], upper[m-1] are lambda_m^-, lambda_m^+ for m = 1..M.
    DiscriminantProduct(double lambda0, std::vector<double> lower, std::vector<double> upper)
        : lambda0_(lambda0), lo_(std::move(lower)), up_(std::move(upper)) {
        const std::size_t m = lo_.size();
        if (m < 8 || up_.size() != m) throw std::invalid_argument("DiscriminantProduct: need >= 8 gaps");
        const double pm = std::numbers::pi * static_cast<double>(m);
        // Edge offsets decay like C/m^2 for a zero-mean potential; fit C at m = M.
        tail_shift_ = (lo_[m - 1] - pm * pm + up_[m - 1] - pm * pm) * static_cast<double>(m) * static_cast<double>(m);
        for (int j = 0; j < kTailTerms; ++j) {
            zeta_[j] = detail::hurwitz_zeta(2.0 * (j + 1), static_cast<double>(m) + 1.0);
            zeta4_[j] = detail::hurwitz_zeta(4.0 + 2.0 * j, static_cast<double>(m) + 1.0);
        }
    }

    std::size_t gaps() const { return lo_.size(); }
    double lambda0() const { return lambda0_; }
    double lower(std::size_t n) const { return lo_.at(n - 1); }
    double upper(std::size_t n) const { return up_.at(n - 1); }

    /// log|Delta^2 - 1| with the factor of gap `skip` (if nonzero) and the
    /// linear factor of lambda_0 (if skip_ground) removed; the sign of the
    /// remaining product is returned through `sign`.
    double log_abs_partial(double lambda, std::size_t skip, int& sign) const {
        double s = 0.0;
        int sg = -1;
        const double d0 = lambda - lambda0_;
        s += std::log(std::abs(d0));
        if (d0 < 0) sg = -sg;
        const std::size_t m = lo_.size();
        for (std::size_t k = 1; k <= m; ++k) {
            if (k == skip) continue;
            const double pk2 = sq(std::numbers::pi * static_cast<double>(k));
            const double a = (lo_[k - 1] - lambda) / pk2;
            const double b = (up_[k - 1] - lambda) / pk2;
            s += std::log(std::abs(a)) + std::log(std::abs(b));
            if ((a < 0) != (b < 0)) sg = -sg;
        }
        s += tail_log(lambda);
        sign = sg;
        return s;
    }

    /// Delta(lambda)^2 - 1.
    double delta_sq_minus_one(double lambda) const {
        int sg = 0;
        const double l = log_abs_partial(lambda, 0, sg);
        return sg * std::exp(l);
    }

    /// (Delta^2 - 1) / ((lambda - l_n^-)(l_n^+ - lambda)); positive inside gap n.
    double gap_factor(std::size_t n, double lambda) const {
        int sg = 0;
        const double l = log_abs_partial(lambda, n, sg);
        const double pn4 = sq(sq(std::numbers::pi * static_cast<double>(n)));
        // removed factor (l^- - l)(l^+ - l)/(pi n)^4 = -(l - l^-)(l^+ - l)/(pi n)^4
        return -sg * std::exp(l) / pn4;
    }

    /// d/dlambda of log|Delta^2 - 1| minus the two poles of gap `skip`.
    double log_derivative_partial(double lambda, std::size_t skip) const {
        double s = 1.0 / (lambda - lambda0_);
        for (std::size_t k = 1; k <= lo_.size(); ++k) {
            if (k == skip) continue;
            s += 1.0 / (lambda - lo_[k - 1]) + 1.0 / (lambda - up_[k - 1]);
        }
        return s + tail_log_derivative(lambda);
    }

  private:
    static constexpr int kTailTerms = 24;
    static double sq(double x) { return x * x; }

    // sum_{m>M} log((l_m^- - l)(l_m^+ - l)/(pi m)^4)
    //   ~ sum_{m>M} [2 log(1 - x/m^2) + S/(m^2 (m^2 - x))],  x = l/pi^2,
    // with S = M^2 (delta_M^- + delta_M^+) / pi^2.
    double tail_log(double lambda) const {
        const double x = lambda / sq(std::numbers::pi);
        double s = 0.0, xp = 1.0;
        for (int j = 0; j < kTailTerms; ++j) {
            xp *= x;
            s -= 2.0 * xp * zeta_[j] / (j + 1);
        }
        const double shift = tail_shift_ / sq(std::numbers::pi);
        double c = 0.0;
        xp = 1.0;
        for (int j = 0; j < kTailTerms; ++j) {
            c += xp * zeta4_[j];
            xp *= x;
        }
        return s + shift * c;
    }
    double tail_log_derivative(double lambda) const {
        const double pi2 = sq(std::numbers::pi);
        const double x = lambda / pi2;
        double s = 0.0, xp = 1.0;
        for (int j = 0; j < kTailTerms; ++j) {
            s -= 2.0 * xp * zeta_[j];
            xp *= x;
        }
        double c = 0.0;
        xp = 1.0;
        for (int j = 1; j < kTailTerms; ++j) {
            c += j * xp * zeta4_[j];
            xp *= x;
        }
        return (s + tail_shift_ / pi2 * c) / pi2;
    }

    double lambda0_ = 0.0;
    std::vector<double> lo_, up_;
    double tail_shift_ = 0.0;
    double zeta_[kTailTerms] = {};
    double zeta4_[kTailTerms] = {};
};

struct SpectrumOptions {
    std::size_t n_max = 16;            ///< gaps reported
    double gap_threshold = 1e-9;       ///< open iff |gamma_n| > threshold * max(1, lambda_n^+)
    double edge_tol = 1e-10;           ///< truncation convergence of the Hill edges
    std::size_t min_product_gaps = 48; ///< minimum number of gaps in the product
    std::size_t max_half_width = 2048;
};

/// Band edges of -d^2/dx^2 + psi (no shift): lambda_0^+ and (lambda_n^-, lambda_n^+).
struct RawEdges {
    double lambda0 = 0.0;
    std::vector<double> lower, upper;  ///< index n-1
    std::size_t half_width = 0;        ///< Hill-matrix K that produced them
};

namespace detail {

inline RawEdges edges_from_matrix(const TrigPotential& psi, std::size_t half_width, std::size_t n_edges) {
    const auto ep = hill_eigenvalues(psi, {Parity::periodic, half_width});
    const auto ea = hill_eigenvalues(psi, {Parity::antiperiodic, half_width});
    if (ep.size() < n_edges + 1 || ea.size() < n_edges + 1)
        throw std::logic_error("edges_from_matrix: Hill matrix too small");
    RawEdges r;
    r.half_width = half_width;
    r.lambda0 = ep[0];
    for (std::size_t n = 1; n <= n_edges; ++n) {
        if (n % 2 == 0) {
            r.lower.push_back(ep[n - 1]);
            r.upper.push_back(ep[n]);
        } else {
            r.lower.push_back(ea[n - 1]);
            r.upper.push_back(ea[n]);
        }
    }
    return r;
}

}  // namespace detail

/// Band edges up to index n_edges, with the truncation doubled until the
/// edges are stable. Throws NumericalError on an interlacing violation.
inline RawEdges band_edges(const TrigPotential& psi, std::size_t n_edges, const SpectrumOptions& opt = {}) {
    if (n_edges < 1) throw std::invalid_argument("band_edges: n_max must be >= 1");
    const TrigPotential p = psi.trimmed();
    const std::size_t deg = p.degree();
    std::size_t k = std::max(n_edges + 8, n_edges / 2 + deg + 8);
    RawEdges cur = detail::edges_from_matrix(p, k, n_edges);
    for (;;) {
        if (2 * k > opt.max_half_width)
            throw NumericalError("band_edges: Hill truncation did not converge");
        RawEdges next = detail::edges_from_matrix(p, 2 * k, n_edges);
        // The eigensolver is normwise accurate, so the comparison cannot go
        // below a few ulps of the largest diagonal entry.
        const double kap = two_pi * static_cast<double>(2 * k + 1);
        const double noise = 32.0 * std::numeric_limits<double>::epsilon() * kap * kap;
        auto moved = [&](double a, double b) { return std::abs(a - b) > opt.edge_tol * std::max(1.0, std::abs(a)) + noise; };
        bool stable = !moved(cur.lambda0, next.lambda0);
        for (std::size_t i = 0; i < n_edges && stable; ++i)
            stable = !moved(cur.lower[i], next.lower[i]) && !moved(cur.upper[i], next.upper[i]);
        if (stable) break;  // keep the smaller matrix: less roundoff
        cur = std::move(next);
        k *= 2;
    }
    // lambda_0^+ < lambda_1^- <= lambda_1^+ < lambda_2^- <= ...
    double prev = cur.lambda0;
    for (std::size_t n = 1; n <= n_edges; ++n) {
        const double lo = cur.lower[n - 1], hi = cur.upper[n - 1];
        if (!(lo > prev) || hi < lo) {
            std::ostringstream os;
            os << "band_edges: interlacing violated at n = " << n << " (" << prev << ", " << lo << ", " << hi << ")";
            throw NumericalError(os.str());
        }
        prev = hi;
    }
    return cur;
}

/// q0 = -lambda_0^+ of -d^2/dx^2 + psi.
inline double normalize_offset(const TrigPotential& psi) { return -band_edges(psi, 1).lambda0; }

/// Ordered spectral data of -d^2/dx^2 + psi + q0 with lambda_0^+ = 0.
struct BandStructure {
    double q0 = 0.0;
    std::size_t n_max = 0;
    std::vector<double> lower;       ///< lambda_n^-, n = 1..n_max (index n-1)
    std::vector<double> upper;       ///< lambda_n^+
    std::vector<double> crit;        ///< lambda_n with Delta'(lambda_n) = 0
    std::vector<double> heights;     ///< h_n
    std::vector<double> gap_lengths; ///< lambda_n^+ - lambda_n^-
    std::vector<bool> open;

    double edge(std::size_t n, int side) const { return side < 0 ? lower.at(n - 1) : upper.at(n - 1); }
};

class HillSpectrum {
  public:
    HillSpectrum(const TrigPotential& psi, const SpectrumOptions& opt = {}) : psi_(psi.trimmed()), opt_(opt) {
        const std::size_t n_prod = std::max({opt.min_product_gaps, 2 * opt.n_max + 16, 2 * psi_.degree() + 16});
        raw_ = band_edges(psi_, n_prod, opt);
        product_ = DiscriminantProduct(raw_.lambda0, raw_.lower, raw_.upper);
        bs_.q0 = -raw_.lambda0;
        bs_.n_max = opt.n_max;
        for (std::size_t n = 1; n <= opt.n_max; ++n) {
            const double lo = raw_.lower[n - 1] + bs_.q0, hi = raw_.upper[n - 1] + bs_.q0;
            bs_.lower.push_back(lo);
            bs_.upper.push_back(hi);
            bs_.gap_lengths.push_back(hi - lo);
            bs_.open.push_back(hi - lo > opt.gap_threshold * std::max(1.0, hi));
        }
        for (std::size_t n = 1; n <= opt.n_max; ++n) {
            const auto [lam, h] = locate_critical(n);
            bs_.crit.push_back(lam);
            bs_.heights.push_back(h);
        }
    }

    const TrigPotential& potential() const { return psi_; }
    const BandStructure& bands() const { return bs_; }
    const DiscriminantProduct& product() const { return product_; }
    const RawEdges& raw_edges() const { return raw_; }
    double q0() const { return bs_.q0; }
    std::size_t n_max() const { return bs_.n_max; }
    bool is_open(std::size_t n) const { return bs_.open.at(n - 1); }

    double critical_point(std::size_t n) const { return bs_.crit.at(n - 1); }
    double height(std::size_t n) const { return bs_.heights.at(n - 1); }

    /// Delta^2 - 1 at a (shifted) lambda inside gap n, with the gap factor
    /// supplied as the exact product of endpoint offsets.
    double delta_sq_minus_one_in_gap(std::size_t n, double off_lo, double off_hi, double lambda) const {
        return off_lo * off_hi * product_.gap_factor(n, lambda - bs_.q0);
    }

    /// Delta(lambda) for the shifted operator, via the monodromy route.
    Monodromy<double> monodromy_at(double lambda) const { return monodromy<double>(psi_, bs_.q0, lambda); }

  private:
    std::pair<double, double> locate_critical(std::size_t n) const {
        const double lo = bs_.lower[n - 1], hi = bs_.upper[n - 1];
        if (!bs_.open[n - 1]) return {0.5 * (lo + hi), 0.0};
        const double w = hi - lo;
        // Zero of d/dl log(Delta^2 - 1), scaled by w t (1 - t), l = lo + t w.
        auto g = [&](double t) {
            if (t <= 0.0) return 1.0;
            if (t >= 1.0) return -1.0;
            const double lam = lo + t * w;
            return (1.0 - 2.0 * t) + w * t * (1.0 - t) * product_.log_derivative_partial(lam - bs_.q0, n);
        };
        boost::uintmax_t iters = 200;
        const auto r = boost::math::tools::toms748_solve(g, 0.0, 1.0, 1.0, -1.0,
                                                         boost::math::tools::eps_tolerance<double>(52), iters);
        const double t = 0.5 * (r.first + r.second);
        const double lam = lo + t * w;
        const double x = delta_sq_minus_one_in_gap(n, t * w, (1.0 - t) * w, lam);
        return {lam, height_from_delta_sq_minus_one(x)};
    }

    TrigPotential psi_;
    SpectrumOptions opt_;
    RawEdges raw_;
    DiscriminantProduct product_;
    BandStructure bs_;
};

/// Per-edge agreement between the Hill-matrix edges and the monodromy route.
struct EdgeCheck {
    std::size_t n = 0;
    int side = 0;              ///< -1 for lambda_n^-, +1 for lambda_n^+
    double lambda_hill = 0.0;
    double delta_residual = 0.0;  ///< Delta(lambda) - (-1)^n
    bool root_refined = false;    ///< monodromy root well conditioned and located
    double lambda_root = 0.0;
    double wronskian_dev = 0.0;
};

struct CrossValidation {
    std::vector<EdgeCheck> edges;
    double max_delta_residual = 0.0;
    double max_root_diff = 0.0;
    double max_root_rel_diff = 0.0;  ///< |lambda_root - lambda_hill| / max(1, |lambda|)
    double max_wronskian_dev = 0.0;
    double min_separation = std::numeric_limits<double>::infinity();  ///< min lambda_{n+1}^- - lambda_n^+
};

/// Checks each edge n <= n_check against Delta(lambda) = (-1)^n on the
/// monodromy route; edges whose root is well conditioned are also refined by
/// Newton's method and compared in lambda.
inline CrossValidation cross_validate(const HillSpectrum& hs, std::size_t n_check) {
    CrossValidation cv;
    const auto& bs = hs.bands();
    n_check = std::min(n_check, bs.n_max);
    auto record = [&cv](double dev) { cv.max_wronskian_dev = std::max(cv.max_wronskian_dev, dev); };
    {
        const auto m = hs.monodromy_at(0.0);
        record(std::abs(m.wronskian() - 1.0));
        EdgeCheck e{0, 1, 0.0, m.delta - 1.0, false, 0.0, std::abs(m.wronskian() - 1.0)};
        cv.max_delta_residual = std::max(cv.max_delta_residual, std::abs(e.delta_residual));
        cv.edges.push_back(e);
    }
    double prev = 0.0;
    for (std::size_t n = 1; n <= n_check; ++n) {
        const double s = (n % 2 == 0) ? 1.0 : -1.0;
        cv.min_separation = std::min(cv.min_separation, bs.lower[n - 1] - prev);
        prev = bs.upper[n - 1];
        for (int side : {-1, 1}) {
            EdgeCheck e;
            e.n = n;
            e.side = side;
            e.lambda_hill = bs.edge(n, side);
            const auto m = hs.monodromy_at(e.lambda_hill);
            e.delta_residual = m.delta - s;
            e.wronskian_dev = std::abs(m.wronskian() - 1.0);
            record(e.wronskian_dev);
            cv.max_delta_residual = std::max(cv.max_delta_residual, std::abs(e.delta_residual));
            // Newton is meaningful only when Delta' resolves the root well
            // above the monodromy noise floor.
            if (bs.open[n - 1] && std::abs(m.ddelta) * std::max(1.0, std::abs(e.lambda_hill)) > 1e-4) {
                double lam = e.lambda_hill;
                bool ok = true;
                for (int it = 0; it < 4; ++it) {
                    const auto mm = hs.monodromy_at(lam);
                    const double step = (mm.delta - s) / mm.ddelta;
                    if (!std::isfinite(step)) {
                        ok = false;
                        break;
                    }
                    lam -= step;
                    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(lam))) break;
                }
                if (ok) {
                    e.root_refined = true;
                    e.lambda_root = lam;
                    cv.max_root_diff = std::max(cv.max_root_diff, std::abs(lam - e.lambda_hill));
                    cv.max_root_rel_diff = std::max(cv.max_root_rel_diff,
                                                    std::abs(lam - e.lambda_hill) / std::max(1.0, std::abs(lam)));
                }
            }
            cv.edges.push_back(e);
        }
    }
    return cv;
}

/// Tab-separated (n, lambda_n^-, lambda_n^+, lambda_n, h_n, |gamma_n|) table.
inline void write_band_table(std::ostream& os, const BandStructure& bs) {
    os << std::setprecision(17);
    os << "# q0\t" << bs.q0 << '\n';
    os << "n\tlambda_minus\tlambda_plus\tlambda_crit\theight\tgap_length\n";
    for (std::size_t n = 1; n <= bs.n_max; ++n)
        os << n << '\t' << bs.lower[n - 1] << '\t' << bs.upper[n - 1] << '\t' << bs.crit[n - 1] << '\t'
           << bs.heights[n - 1] << '\t' << bs.gap_lengths[n - 1] << '\n';
}

}  // namespace hillkdv
