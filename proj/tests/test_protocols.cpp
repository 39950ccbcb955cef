#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "distill/dss.hpp"
#include "distill/entanglement.hpp"
#include "distill/error.hpp"
#include "distill/protocols.hpp"
#include "distill/states.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace distill;
using namespace distill::testing;

namespace {

PartyMatrices one_party(const std::string& label, ComplexMatrix m) { return {{label, std::move(m)}}; }

}  // namespace

TEST(Run, EmptyProtocol) {
    const DensityMatrix rho = presets::werner(0.7);
    const RunResult r = run({}, rho);
    ASSERT_EQ(r.branches.size(), 1u);
    EXPECT_NEAR(r.branches[0].probability, 1.0, 0.0);
    EXPECT_LE(max_abs(r.branches[0].state.matrix() - rho.matrix()), 0.0);
    EXPECT_EQ(r.dropped_weight, 0.0);
}

TEST(Run, IdentityProjection) {
    const DensityMatrix rho = presets::three_qubit_example(0.4);
    const Protocol p{{ProjectStep{one_party("A", ComplexMatrix::Identity(2, 2))}}};
    const RunResult r = run(p, rho);
    ASSERT_EQ(r.branches.size(), 1u);
    EXPECT_NEAR(r.branches[0].probability, 1.0, 1e-15);
}

TEST(Run, SingleProjectAgreesWithDssProject) {
    auto g = rng(51);
    for (int t = 0; t < 20; ++t) {
        const SystemShape s = SystemShape::from_dims({3, 2});
        const DensityMatrix rho = random_density(g, s, 2 + t % 4);
        const ComplexMatrix ua = random_unitary(g, 3).leftCols(2);
        const ComplexMatrix ub = random_unitary(g, 2).leftCols(1);
        const RunResult r = run({{ProjectStep{{{"A", ua}, {"B", ub}}}}}, rho);
        const ProjectionOutcome o = project(rho, LocalSubspace(s, {ua, ub}));
        ASSERT_EQ(r.branches.size(), 1u);
        EXPECT_NEAR(r.branches[0].probability, o.weight, 1e-12);
        // run keeps the parent space; project reports compressed coordinates
        EXPECT_LE(max_abs(r.branches[0].state.matrix() - embed(LocalSubspace(s, {ua, ub}), o.state->matrix())), 1e-12);
        EXPECT_EQ(r.branches[0].state.shape(), s);
        EXPECT_NEAR(r.dropped_weight, 1 - o.weight, 1e-12);
    }
}

TEST(Run, DimensionErrorsNameTheStep) {
    const DensityMatrix rho = presets::werner(0.7);
    const Protocol p{{LocalUnitaryStep{}}, {LocalUnitaryStep{one_party("A", ComplexMatrix::Identity(3, 3))}}};
    try {
        run(p, rho);
        FAIL();
    } catch (const ProtocolError& e) {
        EXPECT_EQ(e.step(), 1u);
    }
    EXPECT_THROW(run({{MeasureStep{"Z", 0, {}}}}, rho), ProtocolError);
    EXPECT_THROW(run({{MeasureStep{"A", 1, {}}}}, rho), ProtocolError);
    ComplexMatrix not_unitary = ComplexMatrix::Identity(2, 2);
    not_unitary(0, 0) = 0.5;
    EXPECT_THROW(run({{LocalUnitaryStep{one_party("A", not_unitary)}}}, rho), ProtocolError);
}

TEST(Run, AllBranchesZeroIsAnError) {
    const DensityMatrix rho(PureState::basis(SystemShape::from_dims({2, 2}), {0, 0}));
    const Protocol p{{ProjectStep{one_party("A", basis_vector(2, 1))}}};
    EXPECT_THROW(run(p, rho), Error);
}

TEST(Run, MeasureSplitsAndDiscards) {
    const DensityMatrix rho(presets::phi_plus());
    const RunResult r = run({{MeasureStep{"B", 0, {}}}}, rho);
    ASSERT_EQ(r.branches.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_NEAR(r.branches[k].probability, 0.5, 1e-15);
        EXPECT_EQ(r.branches[k].state.shape().party_count(), 1u);
        EXPECT_NEAR(r.branches[k].state.matrix()(k, k).real(), 1.0, 1e-15);
        EXPECT_EQ(r.branches[k].outcomes.at(0).value, k);
        EXPECT_EQ(r.branches[k].shape_history.size(), 2u);
    }
}

TEST(Run, ConditionalEqualsPredicate) {
    // measure A of |Phi+>, flip B when A read 1: B always ends in |0>
    ComplexMatrix x(2, 2);
    x << 0, 1, 1, 0;
    Protocol fix{{LocalUnitaryStep{one_party("B", x)}}};
    const Protocol p{{MeasureStep{"A", 0, {}}}, {ConditionalStep{{Predicate::Kind::equals, {0}, 1}, fix}}};
    const RunResult r = run(p, DensityMatrix(presets::phi_plus()));
    ASSERT_EQ(r.branches.size(), 2u);
    for (const auto& b : r.branches) EXPECT_NEAR(b.state.matrix()(0, 0).real(), 1.0, 1e-15);
}

TEST(Run, ProbabilityConservationOnRandomProtocols) {
    auto g = rng(52);
    std::uniform_int_distribution<int> kind_pick(0, 3), len_pick(1, 4);
    for (int t = 0; t < 100; ++t) {
        const bool two_copies = t % 2 == 0;
        const SystemShape base = SystemShape::from_dims(two_copies ? std::vector<std::size_t>{2, 2}
                                                                   : std::vector<std::size_t>{2, 2, 2});
        const DensityMatrix rho = tensor_power(random_density(g, base, 3), two_copies ? 2 : 1);
        std::vector<std::size_t> particles(base.party_count(), two_copies ? 2 : 1);
        Protocol p;
        const int len = len_pick(g);
        for (int k = 0; k < len; ++k) {
            std::uniform_int_distribution<std::size_t> party_pick(0, base.party_count() - 1);
            const std::size_t party = party_pick(g);
            const std::string label = base.party(party).label;
            const auto dim = static_cast<Eigen::Index>(std::size_t{1} << particles[party]);
            const int kind = kind_pick(g);
            if (kind == 0) {
                p.push_back({LocalUnitaryStep{one_party(label, random_unitary(g, dim))}});
            } else if (kind == 1) {
                std::uniform_int_distribution<Eigen::Index> keep(1, dim);
                p.push_back({ProjectStep{one_party(label, random_unitary(g, dim).leftCols(keep(g)))}});
            } else if (kind == 2) {
                p.push_back({FilterStep{one_party(label, LocalFactor::normalized(label, random_matrix(g, dim, dim)).matrix())}});
            } else {
                std::size_t alive = 0;
                for (auto c : particles) alive += c;
                if (alive <= 1 || particles[party] == 0) continue;
                std::uniform_int_distribution<std::size_t> which(0, particles[party] - 1);
                p.push_back({MeasureStep{label, which(g), random_unitary(g, 2)}});
                --particles[party];
            }
            // later steps must skip parties that are gone
            if (particles[party] == 0) break;
        }
        RunResult r;
        try {
            r = run(p, rho);
        } catch (const Error&) {
            continue;  // every branch filtered away
        }
        double total = r.dropped_weight;
        for (const auto& b : r.branches) total += b.probability;
        EXPECT_NEAR(total, 1.0, 1e-9) << "protocol " << t;
    }
}

TEST(Ghz, SuccessProbabilityAndFidelities) {
    for (double p : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        const GhzExampleReport r = ghz_from_two_copies(p);
        EXPECT_NEAR(r.success_probability, p * p / 2, 1e-9);
        ASSERT_EQ(r.branches.size(), 8u);
        double total = 0;
        for (const auto& b : r.branches) {
            EXPECT_GE(b.fidelity, 1 - 1e-9);
            EXPECT_NEAR(b.conditional_probability, 0.125, 1e-9);
            total += b.probability;
        }
        EXPECT_NEAR(total, p * p / 2, 1e-9);
    }
    EXPECT_NEAR(ghz_from_two_copies(0.9).success_probability, 0.405, 1e-9);
}

TEST(Ghz, MatchesBruteForceOracle) {
    for (double p : {0.1, 0.5, 0.9}) {
        for (bool correct : {true, false}) {
            const GhzExampleReport r = ghz_from_two_copies(p, correct);
            const auto oracle = ghz_oracle(p, correct);
            ASSERT_EQ(r.branches.size(), oracle.size());
            for (std::size_t k = 0; k < oracle.size(); ++k) {
                EXPECT_EQ(r.branches[k].outcomes,
                          (std::vector<std::size_t>{std::size_t(oracle[k].sa), std::size_t(oracle[k].sb),
                                                    std::size_t(oracle[k].sc)}));
                EXPECT_NEAR(r.branches[k].probability, oracle[k].probability, 1e-12);
                EXPECT_NEAR(r.branches[k].fidelity, oracle[k].fidelity, 1e-9);
            }
        }
    }
}

TEST(Ghz, WithoutCorrectionOddBranchesFail) {
    const GhzExampleReport r = ghz_from_two_copies(0.5, false);
    for (const auto& b : r.branches) {
        const std::size_t parity = std::accumulate(b.outcomes.begin(), b.outcomes.end(), std::size_t{0}) % 2;
        EXPECT_NEAR(b.fidelity, parity ? 0.0 : 1.0, 1e-9);
    }
}

TEST(Werner, BellDiagonalProjections) {
    for (double f : {0.6, 0.8, 0.9, 0.95}) {
        const WernerExampleReport r = werner_two_copy(f);
        EXPECT_NEAR(r.concurrence_before, 2 * f - 1, 1e-9);
        ASSERT_EQ(r.subspaces.size(), 2u);
        EXPECT_TRUE(r.bell_diagonal);
        for (const auto& s : r.subspaces) {
            EXPECT_LE(s.max_bell_offdiagonal, 1e-9);
            EXPECT_GT(s.concurrence, r.concurrence_before);
        }
    }
}

TEST(Werner, BruteForceProjection) {
    // 16x16 oracle for F = 0.9 on the {|01>,|10>} subspace
    const double f = 0.9;
    const ComplexMatrix w = presets::werner(f).matrix();
    ComplexMatrix two = ComplexMatrix::Zero(16, 16);
    auto regroup = [](int i) {  // a1 b1 a2 b2 -> a1 a2 b1 b2
        const int a1 = (i >> 3) & 1, b1 = (i >> 2) & 1, a2 = (i >> 1) & 1, b2 = i & 1;
        return (a1 << 3) | (a2 << 2) | (b1 << 1) | b2;
    };
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) two(regroup(i), regroup(j)) = w(i >> 2, j >> 2) * w(i & 3, j & 3);
    const int idx[2] = {1, 2};
    ComplexMatrix c(4, 4);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) c(x, y) = two(idx[x >> 1] * 4 + idx[x & 1], idx[y >> 1] * 4 + idx[y & 1]);
    const double weight = c.trace().real();
    const WernerExampleReport r = werner_two_copy(f);
    const auto& s = r.subspaces.at(0);
    EXPECT_NEAR(s.weight, weight, 1e-12);
    EXPECT_LE(max_abs(s.state.matrix() - c / weight), 1e-12);
    EXPECT_NEAR(s.concurrence, concurrence(DensityMatrix(SystemShape::from_dims({2, 2}), c / weight)), 1e-12);
}

TEST(Werner, Endpoints) {
    const WernerExampleReport one = werner_two_copy(1.0);
    for (const auto& s : one.subspaces) EXPECT_NEAR(s.concurrence, 1.0, 1e-9);
    const WernerExampleReport quarter = werner_two_copy(0.25);
    EXPECT_NEAR(quarter.concurrence_before, 0.0, 1e-12);
    EXPECT_TRUE(quarter.bell_diagonal);
}
