// Gaps, actions and the Riccati pair for a two-mode potential, then a short
// KdV run showing the actions stay put.

#include <cstdio>

#include "hillkdv/hillkdv.hpp"

using namespace hillkdv;

int main() {
    TrigPotential psi(2);
    psi[1] = cplx(0.35, 0.0);
    psi[2] = cplx(0.0, -0.1);

    AnalysisOptions opt;
    opt.spectrum.n_max = 6;
    const auto a = analyze(psi, opt);
    const auto& bs = a.spectrum.bands();
    std::printf("q0 = %.12f\n", bs.q0);
    std::printf("%3s %20s %20s %14s %14s\n", "n", "lambda-", "lambda+", "height", "action");
    for (std::size_t n = 1; n <= bs.n_max; ++n)
        std::printf("%3zu %20.12f %20.12f %14.6e %14.6e\n", n, bs.lower[n - 1], bs.upper[n - 1], bs.heights[n - 1],
                    a.actions.actions[n - 1]);
    std::printf("|psi|^2 = %.12f   4 P_1 = %.12f\n", l2_norm(psi) * l2_norm(psi), 4.0 * a.actions.p1.value);
    std::printf("|psi|_-1 = %.6f   sqrt(P_-1) = %.6f\n", hminus1_norm(psi), std::sqrt(a.actions.p_minus1.value));

    const auto ric = inverse(antiderivative(psi));
    std::printf("Riccati: |p|^2 = %.12f, roundtrip %.2e\n", ric.q0, ric.roundtrip);

    FlowConfig fc;
    fc.modes = 128;
    fc.dt = 1e-4;
    fc.t_end = 0.1;
    fc.record_every = 250;
    fc.action_gaps = 4;
    const auto fr = evolve(psi, fc);
    std::printf("%8s %14s %14s %14s\n", "t", "A_1", "A_2", "H");
    for (const auto& r : fr.records)
        std::printf("%8.4f %14.10f %14.10f %14.10f\n", r.t, r.actions[0], r.actions[1], r.hamiltonian);
    return 0;
}
