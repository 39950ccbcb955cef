#pragma once

// Shared helpers for the test binaries: seeded generators and small oracles.

#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "distill/linalg.hpp"
#include "distill/localops.hpp"
#include "distill/states.hpp"

namespace distill::testing {

inline constexpr std::uint64_t kDefaultSeed = 20240611;

// DISTILL_SEED overrides the fixed default.
inline std::uint64_t base_seed() {
    if (const char* s = std::getenv("DISTILL_SEED")) return std::strtoull(s, nullptr, 10);
    return kDefaultSeed;
}

inline std::mt19937_64 rng(std::uint64_t salt = 0) { return std::mt19937_64(base_seed() * 1000003ULL + salt); }

inline ComplexMatrix random_matrix(std::mt19937_64& g, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    ComplexMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Complex(n(g), n(g));
    return m;
}

inline ComplexMatrix random_unitary(std::mt19937_64& g, Eigen::Index n) {
    Eigen::HouseholderQR<ComplexMatrix> qr(random_matrix(g, n, n));
    return qr.householderQ() * ComplexMatrix::Identity(n, n);
}

inline ComplexMatrix random_hermitian(std::mt19937_64& g, Eigen::Index n) {
    const ComplexMatrix a = random_matrix(g, n, n);
    return 0.5 * (a + a.adjoint());
}

// Random density matrix of the given rank.
inline DensityMatrix random_density(std::mt19937_64& g, const SystemShape& shape, std::size_t rank) {
    const auto d = static_cast<Eigen::Index>(shape.total_dim());
    const ComplexMatrix a = random_matrix(g, d, static_cast<Eigen::Index>(rank));
    ComplexMatrix m = a * a.adjoint();
    m /= m.trace().real();
    return DensityMatrix(shape, 0.5 * (m + m.adjoint()));
}

inline PureState random_pure(std::mt19937_64& g, const SystemShape& shape) {
    const auto d = static_cast<Eigen::Index>(shape.total_dim());
    return PureState::normalized(shape, random_matrix(g, d, 1).col(0));
}

// Invertible local factor with spectral norm 1 and condition number at most ~10.
inline ComplexMatrix random_invertible(std::mt19937_64& g, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    RealVector s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = u(g);
    s(0) = 1.0;
    return random_unitary(g, n) * s.cast<Complex>().asDiagonal() * random_unitary(g, n);
}

inline ProductOperator random_invertible_product(std::mt19937_64& g, const SystemShape& shape) {
    std::vector<LocalFactor> f;
    for (const auto& p : shape.parties()) {
        f.emplace_back(p.label, random_invertible(g, static_cast<Eigen::Index>(p.dim)));
    }
    return ProductOperator(shape, std::move(f));
}

inline ComplexVector ket(std::initializer_list<Complex> amps) {
    ComplexVector v(static_cast<Eigen::Index>(amps.size()));
    Eigen::Index i = 0;
    for (auto a : amps) v(i++) = a;
    return v;
}

inline ComplexVector basis_vector(Eigen::Index dim, Eigen::Index i) {
    ComplexVector v = ComplexVector::Zero(dim);
    v(i) = 1.0;
    return v;
}

inline ComplexMatrix diag(std::initializer_list<double> d) {
    RealVector v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double x : d) v(i++) = x;
    return v.cast<Complex>().asDiagonal();
}

}  // namespace distill::testing
