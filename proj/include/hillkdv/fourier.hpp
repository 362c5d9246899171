#pragma once

// Zero-mean real 1-periodic trigonometric polynomials
//   psi(x) = sum_{0 < |n| <= N} c_n exp(i 2 pi n x),   c_{-n} = conj(c_n),
// stored through their positive modes only. Reality and zero mean hold by
// construction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hillkdv/errors.hpp"
#include "hillkdv/fft.hpp"

namespace hillkdv {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

class TrigPotential {
  public:
    TrigPotential() = default;
    explicit TrigPotential(std::size_t n_modes) : c_(n_modes, cplx(0.0, 0.0)) {}
    explicit TrigPotential(std::vector<cplx> positive_modes) : c_(std::move(positive_modes)) {}

    /// A sum of a_n cos(2 pi n x) + b_n sin(2 pi n x) terms.
    static TrigPotential from_cos_sin(std::span<const double> cos_amp, std::span<const double> sin_amp = {}) {
        TrigPotential p(std::max(cos_amp.size(), sin_amp.size()));
        for (std::size_t i = 0; i < cos_amp.size(); ++i) p.c_[i] += 0.5 * cos_amp[i];
        for (std::size_t i = 0; i < sin_amp.size(); ++i) p.c_[i] += cplx(0.0, -0.5 * sin_amp[i]);
        return p;
    }

    /// Number of stored positive modes (the cutoff N_modes).
    std::size_t modes() const { return c_.size(); }

    /// Highest mode with a nonzero coefficient (0 for the zero potential).
    std::size_t degree() const {
        for (std::size_t n = c_.size(); n > 0; --n)
            if (c_[n - 1] != cplx(0.0, 0.0)) return n;
        return 0;
    }

    bool is_zero() const { return degree() == 0; }

    /// Coefficient of exp(i 2 pi n x) for any integer n.
    cplx coeff(std::int64_t n) const {
        if (n == 0) return {0.0, 0.0};
        const auto a = static_cast<std::size_t>(n > 0 ? n : -n);
        if (a > c_.size()) return {0.0, 0.0};
        return n > 0 ? c_[a - 1] : std::conj(c_[a - 1]);
    }

    /// Mutable access to the coefficient of mode n >= 1.
    cplx& operator[](std::size_t n) { return c_.at(n - 1); }
    const cplx& operator[](std::size_t n) const { return c_.at(n - 1); }

    const std::vector<cplx>& positive_modes() const { return c_; }

    double operator()(double x) const {
        double s = 0.0;
        const cplx e = std::polar(1.0, two_pi * x);
        cplx en = e;
        for (const cplx& cn : c_) {
            s += 2.0 * (cn * en).real();
            en *= e;
        }
        return s;
    }

    void resize(std::size_t n_modes) { c_.resize(n_modes, cplx(0.0, 0.0)); }

    /// Drops trailing modes whose magnitude is <= rel * max |c_n|.
    TrigPotential trimmed(double rel = 0.0) const {
        double mx = 0.0;
        for (const cplx& z : c_) mx = std::max(mx, std::abs(z));
        std::size_t n = c_.size();
        while (n > 0 && std::abs(c_[n - 1]) <= rel * mx) --n;
        return TrigPotential(std::vector<cplx>(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(n)));
    }

    TrigPotential& operator+=(const TrigPotential& o) {
        if (o.modes() > modes()) resize(o.modes());
        for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    TrigPotential& operator-=(const TrigPotential& o) {
        if (o.modes() > modes()) resize(o.modes());
        for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    TrigPotential& operator*=(double s) {
        for (cplx& z : c_) z *= s;
        return *this;
    }
    friend TrigPotential operator+(TrigPotential a, const TrigPotential& b) { return a += b; }
    friend TrigPotential operator-(TrigPotential a, const TrigPotential& b) { return a -= b; }
    friend TrigPotential operator*(double s, TrigPotential a) { return a *= s; }

    friend bool operator==(const TrigPotential& a, const TrigPotential& b) {
        const std::size_t n = std::max(a.modes(), b.modes());
        for (std::size_t k = 1; k <= n; ++k)
            if (a.coeff(static_cast<std::int64_t>(k)) != b.coeff(static_cast<std::int64_t>(k))) return false;
        return true;
    }

  private:
    std::vector<cplx> c_;
};

/// Exponent m of the weighted sequence norm sum (2 pi n)^{2m} |f_n|^2.
struct SobolevIndex {
    double m = 0.0;
};

/// (sum_{n>=1} (2 pi n)^{2m} 2|c_n|^2)^{1/2}. For m = 0 this is the L2 norm,
/// for m = -1 the L2 norm of the zero-mean antiderivative.
inline double sobolev_norm(const TrigPotential& f, SobolevIndex idx) {
    double s = 0.0;
    for (std::size_t n = 1; n <= f.modes(); ++n)
        s += std::pow(two_pi * static_cast<double>(n), 2.0 * idx.m) * 2.0 * std::norm(f[n]);
    return std::sqrt(s);
}

inline double l2_norm(const TrigPotential& f) { return sobolev_norm(f, {0.0}); }
inline double hminus1_norm(const TrigPotential& f) { return sobolev_norm(f, {-1.0}); }

inline TrigPotential antiderivative(const TrigPotential& f) {
    TrigPotential q(f.modes());
    for (std::size_t n = 1; n <= f.modes(); ++n) q[n] = f[n] / cplx(0.0, two_pi * static_cast<double>(n));
    return q;
}

inline TrigPotential derivative(const TrigPotential& f) {
    TrigPotential d(f.modes());
    for (std::size_t n = 1; n <= f.modes(); ++n) d[n] = f[n] * cplx(0.0, two_pi * static_cast<double>(n));
    return d;
}

/// Keeps modes |n| <= n_keep.
inline TrigPotential project(const TrigPotential& f, std::size_t n_keep) {
    TrigPotential p(std::min(n_keep, f.modes()));
    for (std::size_t n = 1; n <= p.modes(); ++n) p[n] = f[n];
    return p;
}

/// x -> f(x - a).
inline TrigPotential translate(const TrigPotential& f, double a) {
    TrigPotential t(f.modes());
    for (std::size_t n = 1; n <= f.modes(); ++n) t[n] = f[n] * std::polar(1.0, -two_pi * static_cast<double>(n) * a);
    return t;
}

/// Samples f(j/M), j = 0..M-1. Requires M >= 2 N_modes + 1 so that the
/// samples determine the coefficients.
inline std::vector<double> evaluate_grid(const TrigPotential& f, std::size_t m) {
    if (m < 2 * f.modes() + 1)
        throw std::invalid_argument("evaluate_grid: grid of " + std::to_string(m) + " points aliases " +
                                    std::to_string(f.modes()) + " modes");
    RealFFT fft(m);
    std::vector<cplx> c(fft.spectrum_size(), cplx(0.0, 0.0));
    for (std::size_t n = 1; n <= f.modes(); ++n) c[n] = f[n];
    return fft.inverse(c);
}

/// Grid samples -> zero-mean potential with N = (M-1)/2 modes. The sample
/// mean and any Nyquist component are discarded; `mean_out` receives the mean.
inline TrigPotential from_grid(std::span<const double> samples, double* mean_out = nullptr) {
    RealFFT fft(samples.size());
    const auto c = fft.forward(samples);
    if (mean_out) *mean_out = c[0].real();
    TrigPotential f((samples.size() - 1) / 2);
    for (std::size_t n = 1; n <= f.modes(); ++n) f[n] = c[n];
    return f;
}

/// Mean of f * g, exact for trigonometric polynomials.
inline double inner_product(const TrigPotential& f, const TrigPotential& g) {
    double s = 0.0;
    const std::size_t n = std::min(f.modes(), g.modes());
    for (std::size_t k = 1; k <= n; ++k) s += 2.0 * (f[k] * std::conj(g[k])).real();
    return s;
}

/// Product f*g computed on a zero-padded grid (exact); returns the zero-mean
/// part and writes the mean to `mean_out`.
inline TrigPotential multiply(const TrigPotential& f, const TrigPotential& g, double* mean_out = nullptr) {
    const std::size_t nf = f.modes(), ng = g.modes();
    const std::size_t nprod = nf + ng;
    const std::size_t m = fft_friendly_size(2 * nprod + 2);
    RealFFT fft(m);
    std::vector<cplx> cf(fft.spectrum_size(), cplx(0.0, 0.0)), cg(fft.spectrum_size(), cplx(0.0, 0.0));
    for (std::size_t n = 1; n <= nf; ++n) cf[n] = f[n];
    for (std::size_t n = 1; n <= ng; ++n) cg[n] = g[n];
    auto a = fft.inverse(cf);
    const auto b = fft.inverse(cg);
    for (std::size_t j = 0; j < m; ++j) a[j] *= b[j];
    const auto c = fft.forward(a);
    if (mean_out) *mean_out = c[0].real();
    TrigPotential p(nprod);
    for (std::size_t n = 1; n <= nprod; ++n) p[n] = c[n];
    return p;
}

/// (1/2) int_0^1 (psi'^2 + 2 psi^3) dx by quadrature on a grid of at least
/// 3 N + 1 points, which is exact for the cubic term.
inline double hamiltonian(const TrigPotential& psi) {
    const std::size_t n = psi.degree();
    if (n == 0) return 0.0;
    const std::size_t m = fft_friendly_size(3 * n + 1);
    const TrigPotential p = project(psi, n);
    const auto u = evaluate_grid(p, m);
    const auto du = evaluate_grid(derivative(p), m);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += du[j] * du[j] + 2.0 * u[j] * u[j] * u[j];
    return 0.5 * s / static_cast<double>(m);
}

/// 64-bit FNV-1a hash over the coefficient bits, as a hex string.
inline std::string fingerprint(const TrigPotential& f) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    const TrigPotential t = f.trimmed();
    for (std::size_t n = 1; n <= t.modes(); ++n) {
        mix(t[n].real());
        mix(t[n].imag());
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// Text record:
//   N_modes <N>
//   <n> <Re c_n> <Im c_n>      (one line per n >= 1; omitted lines are zero)
// '#' starts a comment.

inline void write_potential(std::ostream& os, const TrigPotential& f) {
    os << "N_modes " << f.modes() << '\n';
    os << std::setprecision(17);
    for (std::size_t n = 1; n <= f.modes(); ++n) os << n << ' ' << f[n].real() << ' ' << f[n].imag() << '\n';
}

inline TrigPotential read_potential(std::istream& is) {
    std::string line;
    long long n_modes = -1;
    TrigPotential f;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (n_modes < 0) {
            if (first != "N_modes" || !(ls >> n_modes) || n_modes < 0)
                throw ConfigError("potential record line " + std::to_string(lineno) + ": expected 'N_modes <N>'");
            f.resize(static_cast<std::size_t>(n_modes));
            continue;
        }
        long long n = 0;
        double re = 0.0, im = 0.0;
        std::istringstream ns(first);
        if (!(ns >> n) || !ns.eof() || !(ls >> re >> im))
            throw ConfigError("potential record line " + std::to_string(lineno) + ": expected '<n> <re> <im>'");
        std::string extra;
        if (ls >> extra) throw ConfigError("potential record line " + std::to_string(lineno) + ": trailing data");
        if (n < 1 || n > n_modes)
            throw ConfigError("potential record line " + std::to_string(lineno) + ": mode " + std::to_string(n) +
                              " outside 1.." + std::to_string(n_modes));
        if (!std::isfinite(re) || !std::isfinite(im))
            throw ConfigError("potential record line " + std::to_string(lineno) + ": non-finite coefficient");
        f[static_cast<std::size_t>(n)] = cplx(re, im);
    }
    if (n_modes < 0) throw ConfigError("potential record: missing 'N_modes' header");
    return f;
}

}  // namespace hillkdv
