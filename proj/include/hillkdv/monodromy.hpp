#pragma once

// Fundamental solutions of  -y'' + (psi(x) + q0) y = lambda y  over one
// period, with their lambda-derivatives, by adaptive Runge-Kutta-Fehlberg 7(8)
// integration (Boost.Odeint).

#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "hillkdv/errors.hpp"
#include "hillkdv/fourier.hpp"

namespace hillkdv {

template <typename Scalar>
struct Monodromy {
    Scalar lambda{};
    Scalar theta1{};   ///< theta(1, lambda); theta(0)=1, theta'(0)=0
    Scalar dtheta1{};  ///< theta'(1, lambda)
    Scalar phi1{};     ///< phi(1, lambda); phi(0)=0, phi'(0)=1
    Scalar dphi1{};    ///< phi'(1, lambda)
    Scalar delta{};    ///< (phi'(1) + theta(1)) / 2
    Scalar ddelta{};   ///< d delta / d lambda

    Scalar wronskian() const { return theta1 * dphi1 - dtheta1 * phi1; }
};

struct MonodromyOptions {
    double abs_tol = 1e-14;
    double rel_tol = 1e-14;
    std::size_t max_steps = 200000;
};

namespace detail {

// Potential sampler with one complex exponential per call and a running power
// for the harmonics.
class PotentialEvaluator {
  public:
    PotentialEvaluator(const TrigPotential& psi, double q0) : c_(psi.trimmed().positive_modes()), q0_(q0) {}
    double operator()(double x) const {
        double s = q0_;
        if (c_.empty()) return s;
        const cplx e = std::polar(1.0, two_pi * x);
        cplx en = e;
        for (const cplx& cn : c_) {
            s += 2.0 * (cn.real() * en.real() - cn.imag() * en.imag());
            en *= e;
        }
        return s;
    }

  private:
    std::vector<cplx> c_;
    double q0_;
};

}  // namespace detail

/// Integrates the fundamental system from x = 0 to x = 1. Throws
/// NumericalError if the integrator cannot complete the period.
template <typename Scalar>
Monodromy<Scalar> monodromy(const TrigPotential& psi, double q0, Scalar lambda, const MonodromyOptions& opt = {}) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<Scalar, 8>;
    // (theta, theta', phi, phi', d_l theta, d_l theta', d_l phi, d_l phi')
    const detail::PotentialEvaluator v(psi, q0);
    auto rhs = [&](const State& y, State& dy, double x) {
        const Scalar a = Scalar(v(x)) - lambda;
        dy[0] = y[1];
        dy[1] = a * y[0];
        dy[2] = y[3];
        dy[3] = a * y[2];
        dy[4] = y[5];
        dy[5] = a * y[4] - y[0];
        dy[6] = y[7];
        dy[7] = a * y[6] - y[2];
    };
    State y{Scalar(1), Scalar(0), Scalar(0), Scalar(1), Scalar(0), Scalar(0), Scalar(0), Scalar(0)};

    // The solutions oscillate with local wavenumber ~ sqrt|lambda|; start with
    // a step that resolves it.
    const double k = std::sqrt(std::abs(std::complex<double>(lambda))) + 1.0;
    const double dt0 = std::min(0.05, 0.1 / k);

    auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_fehlberg78<State, double, State, double>());
    double x = 0.0, dt = dt0;
    std::size_t attempts = 0;
    while (x < 1.0) {
        if (++attempts > opt.max_steps || dt < 1e-14) {
            std::ostringstream os;
            os << "monodromy: step underflow at x = " << x << ", lambda = " << lambda;
            throw NumericalError(os.str());
        }
        if (x + dt > 1.0) dt = 1.0 - x;
        stepper.try_step(rhs, y, x, dt);  // advances x and adapts dt on success
    }
    Monodromy<Scalar> m;
    m.lambda = lambda;
    m.theta1 = y[0];
    m.dtheta1 = y[1];
    m.phi1 = y[2];
    m.dphi1 = y[3];
    m.delta = (y[3] + y[0]) / Scalar(2);
    m.ddelta = (y[7] + y[4]) / Scalar(2);
    return m;
}

/// Delta(lambda) through the monodromy route.
inline double discriminant(const TrigPotential& psi, double q0, double lambda) {
    return monodromy<double>(psi, q0, lambda).delta;
}

}  // namespace hillkdv
