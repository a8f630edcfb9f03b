#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hyperlv/integrator.hpp"
#include "hyperlv/model.hpp"
#include "oracles.hpp"

using namespace hyperlv;

namespace {

oracle::Vec to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector random_state(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector z(static_cast<Eigen::Index>(n));
    for (auto& v : z) v = u(rng);
    return z;
}

}  // namespace

TEST(Model, ValidatesParameters) {
    EXPECT_THROW(CompetitionModel(1, 0.5, Vector::Ones(3)), std::invalid_argument);
    EXPECT_THROW(CompetitionModel(3, 0.0, Vector::Ones(3)), std::invalid_argument);
    EXPECT_THROW(CompetitionModel(3, -1.0, Vector::Ones(3)), std::invalid_argument);
    EXPECT_THROW(CompetitionModel(3, 0.5, Vector(0)), std::invalid_argument);
    Vector w = Vector::Ones(3);
    w[1] = -0.1;
    EXPECT_THROW(CompetitionModel(3, 0.5, w), std::invalid_argument);
    const CompetitionModel m(3, 0.5, Vector::Ones(3));
    EXPECT_EQ(m.p(), 2);
    EXPECT_DOUBLE_EQ(m.b()[0], 2.0);
    EXPECT_THROW(vector_field(m, Vector::Ones(2)), std::invalid_argument);
    Vector neg = Vector::Ones(3);
    neg[2] = -1e-3;
    EXPECT_THROW(vector_field(m, neg), std::invalid_argument);
    EXPECT_THROW(jacobian(m, neg), std::invalid_argument);
}

TEST(Model, VectorFieldMatchesOracles) {
    std::mt19937_64 rng(3);
    for (int t = 2; t <= 5; ++t) {
        for (double k : {0.01, 0.5, 1.0, 1.5, 3.0}) {
            for (std::size_t n : {1u, 3u, 6u}) {
                const Vector w = random_state(rng, n, 0.0, 5.0);
                const CompetitionModel m(t, k, w);
                const Vector z = random_state(rng, n, 0.0, 1.5);
                const auto direct = oracle::field_direct(t, k, to_std(w), to_std(z));
                const auto brute = oracle::field_bruteforce(t, k, to_std(w), to_std(z));
                const Vector f = vector_field(m, z);
                const Vector ft = vector_field_tensor(m, z);
                const Vector fd = vector_field_tensor(m, m.tensor().expand(), z);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto ii = static_cast<Eigen::Index>(i);
                    const double scale = std::max(1.0, std::abs(direct[i]));
                    EXPECT_NEAR(f[ii], direct[i], 1e-12 * scale);
                    EXPECT_NEAR(f[ii], brute[i], 1e-11 * scale);
                    EXPECT_NEAR(ft[ii], f[ii], 1e-12 * scale);
                    EXPECT_NEAR(fd[ii], f[ii], 1e-11 * scale);
                }
            }
        }
    }
}

TEST(Model, JacobianMatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    for (int t = 2; t <= 5; ++t) {
        for (std::size_t n : {2u, 5u, 10u}) {
            for (double k : {0.3, 1.0, 2.0}) {
                const Vector w = random_state(rng, n, 0.0, 8.0);
                const CompetitionModel m(t, k, w);
                for (int rep = 0; rep < 10; ++rep) {
                    const Vector z = random_state(rng, n, 0.05, 2.0);
                    const Matrix j = jacobian(m, z);
                    std::vector<oracle::Vec> ja(n, oracle::Vec(n));
                    for (std::size_t r = 0; r < n; ++r) {
                        for (std::size_t c = 0; c < n; ++c) {
                            ja[r][c] = j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                        }
                    }
                    const auto fd = oracle::jacobian_fd(t, k, to_std(w), to_std(z));
                    EXPECT_LT(oracle::rel_matrix_error(ja, fd), 1e-6) << "t " << t << " n " << n << " k " << k;
                }
            }
        }
    }
}

TEST(Model, PairwiseCaseMatchesClassicalLotkaVolterra) {
    const auto w = fixtures::w0();
    const auto z0 = fixtures::z0();
    for (double k : {0.05, 0.5, 2.0}) {
        const CompetitionModel m(2, k, w);
        IntegratorOptions o;
        o.t_max = 5.0;
        o.tol_conv = 1e-300;
        const auto tr = integrate(m, z0, o);
        const auto ref = oracle::pairwise_lv(k, to_std(w), to_std(z0), 5.0, 1e-3);
        for (Eigen::Index i = 0; i < 10; ++i) {
            EXPECT_NEAR(tr.final_state[i], ref[static_cast<std::size_t>(i)], 1e-9) << "k " << k << " i " << i;
        }
    }
}

TEST(Model, SingleWinnerBlockSpectrum) {
    // At z* = b_j^{1/p} e_j the winner eigenvalue is -p b_j and every loser
    // diagonal equals b_i - k b_j.
    const auto w = fixtures::w0();
    for (int t : {2, 3, 5}) {
        for (double k : {0.5, 1.0, 1.5}) {
            const CompetitionModel m(t, k, w);
            Vector z = Vector::Zero(10);
            z[6] = std::pow(m.b()[6], 1.0 / m.p());
            const auto bs = winner_block_spectrum(m, {6}, z);
            ASSERT_EQ(bs.winner_eigs.size(), 1u);
            EXPECT_NEAR(bs.winner_eigs[0].real(), -m.p() * m.b()[6], 1e-9);
            ASSERT_EQ(bs.loser_diags.size(), 9u);
            EXPECT_NEAR(bs.loser_diags[5], m.b()[5] - k * m.b()[6], 1e-9);
        }
    }
}

TEST(Model, BlockSpectrumRejectsNonEquilibria) {
    const auto m = fixtures::benchmark(3, 0.5);
    EXPECT_THROW(winner_block_spectrum(m, {6}, fixtures::z0()), std::invalid_argument);
    Vector z = Vector::Zero(10);
    z[6] = 3.0;
    EXPECT_THROW(winner_block_spectrum(m, {5}, z), std::invalid_argument);
}

TEST(Model, EigenvaluesOfKnownMatrix) {
    Matrix a(2, 2);
    a << 0.0, 1.0, -1.0, 0.0;
    const auto ev = eigenvalues(a);
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_NEAR(std::abs(ev[0].imag()), 1.0, 1e-12);
    EXPECT_NEAR(ev[0].real(), 0.0, 1e-12);
}
