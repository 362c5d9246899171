#pragma once

// Random potentials and brute-force quadrature shared by the tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "hillkdv/fourier.hpp"

namespace testing_support {

using hillkdv::cplx;
using hillkdv::TrigPotential;

/// Potential with `modes` random coefficients and L2 norm `norm`.
inline TrigPotential random_potential(std::mt19937_64& rng, std::size_t modes, double norm) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TrigPotential p(modes);
    for (std::size_t n = 1; n <= modes; ++n)
        p[n] = std::polar((0.2 + u(rng)) / static_cast<double>(n), hillkdv::two_pi * u(rng));
    p *= norm / hillkdv::l2_norm(p);
    return p;
}

/// Midpoint rule on `m` points of f over [0, 1]; exact for trig polynomials
/// of degree < m, evaluated pointwise without FFTs.
template <class F>
double periodic_mean(F&& f, std::size_t m = 4096) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += f((static_cast<double>(j) + 0.5) / static_cast<double>(m));
    return s / static_cast<double>(m);
}

/// Pointwise derivative from the coefficients.
inline double derivative_at(const TrigPotential& p, double x) {
    double s = 0.0;
    for (std::size_t n = 1; n <= p.modes(); ++n) {
        const double k = hillkdv::two_pi * static_cast<double>(n);
        s += 2.0 * (p[n] * cplx(0.0, k) * std::polar(1.0, k * x)).real();
    }
    return s;
}

}  // namespace testing_support
