#pragma once

// Galerkin (Fourier) truncation of -d^2/dx^2 + psi on [0, 1] with periodic or
// antiperiodic boundary conditions. The basis exp(i kappa_k x) uses
// kappa_k = 2 pi k (periodic) or pi (2k + 1) (antiperiodic); psi couples
// kappa_j and kappa_k through its Fourier coefficient c_{(kappa_j-kappa_k)/2pi}.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "hillkdv/errors.hpp"
#include "hillkdv/fourier.hpp"

namespace hillkdv {

enum class Parity { periodic, antiperiodic };

struct HillBasis {
    Parity parity;
    std::size_t half_width;  ///< K: k in [-K, K] (periodic) or [-K-1, K] (antiperiodic)

    std::size_t dim() const { return parity == Parity::periodic ? 2 * half_width + 1 : 2 * half_width + 2; }
    std::int64_t k_min() const {
        return parity == Parity::periodic ? -static_cast<std::int64_t>(half_width)
                                          : -static_cast<std::int64_t>(half_width) - 1;
    }
    double kappa(std::size_t i) const {
        const std::int64_t k = k_min() + static_cast<std::int64_t>(i);
        return parity == Parity::periodic ? two_pi * static_cast<double>(k)
                                          : std::numbers::pi * static_cast<double>(2 * k + 1);
    }
};

inline Eigen::MatrixXcd hill_matrix(const TrigPotential& psi, const HillBasis& basis) {
    const std::size_t d = basis.dim();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    const auto nmod = static_cast<std::int64_t>(psi.modes());
    for (std::size_t i = 0; i < d; ++i) {
        const double kap = basis.kappa(i);
        h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = kap * kap;
        for (std::int64_t s = 1; s <= nmod; ++s) {
            const std::int64_t j = static_cast<std::int64_t>(i) - s;
            if (j < 0) break;
            // row i (mode k_i), column j (mode k_i - s): coefficient c_s
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = psi.coeff(s);
            h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = psi.coeff(-s);
        }
    }
    return h;
}

/// Ascending eigenvalues of the truncated Hill matrix.
inline std::vector<double> hill_eigenvalues(const TrigPotential& psi, const HillBasis& basis) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hill_matrix(psi, basis), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("hill_eigenvalues: eigensolver failed");
    const auto& ev = es.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

}  // namespace hillkdv
