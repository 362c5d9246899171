#pragma once

// The Riccati map p -> q,  q' = p' + p^2 - ||p||^2,  and its inverse through
// the positive periodic ground state w of -d^2/dx^2 + q': p = w'/w.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <vector>

#include "hillkdv/errors.hpp"
#include "hillkdv/fft.hpp"
#include "hillkdv/fourier.hpp"
#include "hillkdv/hill_matrix.hpp"

namespace hillkdv {

struct RiccatiPair {
    TrigPotential p;
    TrigPotential q;
    double q0 = 0.0;                 ///< ||p||^2
    std::vector<double> w_samples;   ///< exp(int_0^x p) at x = j / M
};

/// Grid size used for w samples of a potential with n modes.
inline std::size_t weight_grid_size(std::size_t n_modes) { return fft_friendly_size(std::max<std::size_t>(64, 8 * n_modes + 1)); }

/// q = p + antiderivative(p^2 - ||p||^2), exact in coefficient space.
inline RiccatiPair forward(const TrigPotential& p) {
    RiccatiPair out;
    double mean = 0.0;
    const TrigPotential sq = multiply(p, p, &mean);
    out.q0 = mean;
    out.q = p + antiderivative(sq);
    out.p = p;
    const TrigPotential prim = antiderivative(p);
    const std::size_t m = weight_grid_size(p.modes());
    const auto s = evaluate_grid(prim, m);
    out.w_samples.resize(m);
    for (std::size_t j = 0; j < m; ++j) out.w_samples[j] = std::exp(s[j] - s[0]);
    return out;
}

struct GroundState {
    double lambda0 = 0.0;
    /// Fourier coefficients a_k of w, k = -K..K (index k + K), with w(0) = 1
    /// and a_{-k} = conj(a_k).
    std::vector<cplx> coeffs;
    std::size_t half_width = 0;
    double residual = 0.0;  ///< L2 norm of -w'' + psi w - lambda0 w
    double min_value = 0.0; ///< min of w on the sample grid

    cplx coeff(std::int64_t k) const {
        const auto K = static_cast<std::int64_t>(half_width);
        if (k < -K || k > K) return {0.0, 0.0};
        return coeffs[static_cast<std::size_t>(k + K)];
    }
    /// w sampled at j / m.
    std::vector<double> samples(std::size_t m) const;
    /// w' sampled at j / m.
    std::vector<double> derivative_samples(std::size_t m) const;
};

namespace detail {

inline std::vector<double> ground_samples(const GroundState& g, std::size_t m, bool derivative) {
    if (m < 2 * g.half_width + 1) throw std::invalid_argument("GroundState: sample grid too small");
    RealFFT fft(m);
    std::vector<cplx> c(fft.spectrum_size(), cplx(0.0, 0.0));
    for (std::size_t k = 0; k <= g.half_width; ++k) {
        c[k] = g.coeff(static_cast<std::int64_t>(k));
        if (derivative) c[k] *= cplx(0.0, two_pi * static_cast<double>(k));
    }
    const auto s = fft.inverse(c);
    return s;
}

}  // namespace detail

inline std::vector<double> GroundState::samples(std::size_t m) const { return detail::ground_samples(*this, m, false); }
inline std::vector<double> GroundState::derivative_samples(std::size_t m) const {
    return detail::ground_samples(*this, m, true);
}

struct GroundStateOptions {
    std::size_t min_half_width = 32;
    std::size_t max_half_width = 1024;
    double tail_tol = 1e-17;  ///< relative size of the outermost coefficients
};

/// Bottom periodic eigenvalue of -d^2/dx^2 + psi and its positive
/// eigenfunction, from the Hill-matrix eigenvector refined by inverse
/// iteration. Throws NumericalError if the eigenfunction changes sign.
inline GroundState ground_state(const TrigPotential& psi_in, const GroundStateOptions& opt = {}) {
    const TrigPotential psi = psi_in.trimmed();
    const std::size_t deg = psi.degree();
    std::size_t K = std::max(opt.min_half_width, 4 * deg + 16);
    for (;;) {
        const HillBasis basis{Parity::periodic, K};
        const Eigen::MatrixXcd h = hill_matrix(psi, basis);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        if (es.info() != Eigen::Success) throw NumericalError("ground_state: eigensolver failed");
        Eigen::VectorXcd x = es.eigenvectors().col(0);
        const double lam = es.eigenvalues()(0);
        const double shift = lam - 1e-9 * std::max(1.0, std::abs(lam));
        const Eigen::MatrixXcd a = h - shift * Eigen::MatrixXcd::Identity(h.rows(), h.cols());
        const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
        for (int it = 0; it < 2; ++it) {
            x = lu.solve(x);
            x.normalize();
        }
        const double tail = std::max(std::abs(x(0)), std::abs(x(x.size() - 1)));
        if (tail > opt.tail_tol * x.cwiseAbs().maxCoeff() && 2 * K <= opt.max_half_width) {
            K *= 2;
            continue;
        }
        GroundState g;
        g.half_width = K;
        g.lambda0 = (x.adjoint() * h * x)(0, 0).real() / x.squaredNorm();
        // phase so that w(0) = sum a_k is real positive, then w(0) = 1
        const cplx w0 = x.sum();
        if (std::abs(w0) == 0.0) throw NumericalError("ground_state: eigenfunction vanishes at 0");
        x /= w0;
        g.coeffs.resize(static_cast<std::size_t>(x.size()));
        const auto Ki = static_cast<Eigen::Index>(K);
        for (Eigen::Index k = -Ki; k <= Ki; ++k)
            g.coeffs[static_cast<std::size_t>(k + Ki)] = 0.5 * (x(k + Ki) + std::conj(x(-k + Ki)));
        // residual including the modes beyond K reached by psi
        double r2 = 0.0;
        const auto Kw = static_cast<std::int64_t>(K);
        const auto D = static_cast<std::int64_t>(deg);
        for (std::int64_t k = -Kw - D; k <= Kw + D; ++k) {
            const double kap = two_pi * static_cast<double>(k);
            cplx r = (kap * kap - g.lambda0) * g.coeff(k);
            for (std::int64_t s = -D; s <= D; ++s) r += psi.coeff(s) * g.coeff(k - s);
            r2 += std::norm(r);
        }
        g.residual = std::sqrt(r2);
        const auto w = g.samples(weight_grid_size(K));
        g.min_value = *std::min_element(w.begin(), w.end());
        if (!(g.min_value > 0.0)) {
            std::ostringstream os;
            os << "ground_state: eigenfunction not positive (min " << g.min_value << ")";
            throw NumericalError(os.str());
        }
        return g;
    }
}

struct InverseRiccati {
    TrigPotential p;
    double q0 = 0.0;          ///< ||p||^2
    double lambda0 = 0.0;     ///< bottom of the spectrum of -d^2/dx^2 + q'
    double roundtrip = 0.0;   ///< ||forward(p).q - q||
    double truncation = 0.0;  ///< L2 norm of the discarded modes of w'/w
    std::vector<double> w_samples;
};

struct InverseOptions {
    double roundtrip_tol = 1e-7;
    double trim_rel = 1e-17;
    GroundStateOptions ground;
};

/// p with forward(p).q = q, from p = w'/w. Throws NumericalError when the
/// roundtrip residual exceeds the tolerance.
inline InverseRiccati inverse(const TrigPotential& q, const InverseOptions& opt = {}) {
    InverseRiccati out;
    const GroundState g = ground_state(derivative(q), opt.ground);
    out.lambda0 = g.lambda0;
    const std::size_t m = weight_grid_size(g.half_width);
    const auto w = g.samples(m);
    const auto dw = g.derivative_samples(m);
    std::vector<double> ratio(m);
    for (std::size_t j = 0; j < m; ++j) ratio[j] = dw[j] / w[j];
    const TrigPotential full = from_grid(ratio);
    out.p = full.trimmed(opt.trim_rel);
    out.truncation = l2_norm(full - out.p);
    out.q0 = std::pow(l2_norm(out.p), 2);
    out.w_samples = w;
    const RiccatiPair fwd = forward(out.p);
    out.roundtrip = l2_norm(fwd.q - q);
    if (!(out.roundtrip <= opt.roundtrip_tol)) {
        std::ostringstream os;
        os << "inverse: Riccati roundtrip residual " << out.roundtrip << " exceeds " << opt.roundtrip_tol;
        throw NumericalError(os.str());
    }
    return out;
}

}  // namespace hillkdv
