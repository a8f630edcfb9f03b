// Integrates the ten-neuron benchmark at a few values of k and prints the
// outcome next to the equilibria the solver predicts.

#include <cstdio>

#include "hyperlv/hyperlv.hpp"

int main() {
    hyperlv::Vector w(10), z0(10);
    w << 1.9557, 2.8322, 3.8317, 2.2795, 1.3796, 7.1796, 8.0, 2.4356, 3.8469, 1.7953;
    z0 << 0.1234, 0.1678, 0.1101, 0.1345, 0.1789, 0.6256, 0.1890, 0.1567, 0.1910, 0.1346;

    for (double k : {0.01, 0.5, 1.0, 1.5}) {
        const hyperlv::CompetitionModel model(3, k, w);
        const auto traj = hyperlv::integrate(model, z0);
        const auto eqs = hyperlv::enumerate_equilibria(model);
        const auto outcome = hyperlv::classify_outcome(model, traj, eqs.records);

        std::printf("k = %-5g  %-12s t_final = %7.2f  winners:", k, hyperlv::to_string(outcome.label), traj.final_time);
        for (auto i : outcome.winners) std::printf(" %zu (%.4f)", i + 1, outcome.final_values[static_cast<Eigen::Index>(i)]);
        std::printf("\n");

        std::size_t stable = 0;
        for (const auto& rec : eqs.records) {
            if (rec.stability == hyperlv::Stability::AsymptoticallyStable) ++stable;
        }
        std::printf("          %zu equilibria, %zu asymptotically stable\n", eqs.records.size(), stable);
    }
}
