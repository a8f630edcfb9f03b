#pragma once

#include "hyperlv/model.hpp"

namespace fixtures {

// Ten-neuron benchmark: external inputs and initial state.
inline hyperlv::Vector w0() {
    hyperlv::Vector w(10);
    w << 1.9557, 2.8322, 3.8317, 2.2795, 1.3796, 7.1796, 8.0, 2.4356, 3.8469, 1.7953;
    return w;
}

inline hyperlv::Vector z0() {
    hyperlv::Vector z(10);
    z << 0.1234, 0.1678, 0.1101, 0.1345, 0.1789, 0.6256, 0.1890, 0.1567, 0.1910, 0.1346;
    return z;
}

inline hyperlv::CompetitionModel benchmark(int t, double k) { return {t, k, w0()}; }

}  // namespace fixtures
