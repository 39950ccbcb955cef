#pragma once

// Dense complex linear algebra used throughout the library.
//
// Index convention: for a tensor product of subsystems with dimensions
// (d_0, d_1, ..., d_{m-1}) the flat index of (i_0, ..., i_{m-1}) is
// i_0 * d_1 * ... * d_{m-1} + ... + i_{m-1}; the first subsystem is the most
// significant digit. kron(a, b) follows the same rule.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace distill {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Largest matrix side the dense kernel accepts.
inline constexpr std::size_t kMaxSide = 4096;

/// Numerical thresholds. All fields must lie in [0, 1).
struct Tolerance {
    double rank_rtol = 1e-9;
    double herm_atol = 1e-9;
    double psd_atol = 1e-9;
    double purity_atol = 1e-9;

    void validate() const;

    /// Named profiles: "default", "strict" (1e-12) and "loose" (1e-6).
    static Tolerance profile(std::string_view name);

    /// Profile named by DISTILL_TOLERANCE, or the default profile when unset.
    static Tolerance from_environment();
};

struct HermitianEigen {
    RealVector values;     // descending
    ComplexMatrix vectors; // orthonormal columns, matching `values`
};

struct SingularValueDecomposition {
    ComplexMatrix left;   // rows x k, orthonormal columns
    RealVector singulars; // k = min(rows, cols), descending, nonnegative
    ComplexMatrix right;  // cols x k, orthonormal columns
};

/// Throws CapExceeded when `side` is larger than kMaxSide.
void check_side(std::size_t side, const char* what);

/// Throws InvariantError("finite") if any entry is NaN or infinite.
void require_finite(const ComplexMatrix& m);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector kron(const ComplexVector& a, const ComplexVector& b);
ComplexMatrix kron_all(std::span<const ComplexMatrix> factors);

Complex trace(const ComplexMatrix& m);

/// Reduced matrix on the subsystems listed in `keep` (any order, no
/// duplicates); result uses the original relative order of kept subsystems.
ComplexMatrix partial_trace(const ComplexMatrix& m, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep);

/// Reorders tensor factors: subsystem j of the result is subsystem order[j]
/// of the input. Applies the same permutation to rows and columns.
ComplexMatrix permute_subsystems(const ComplexMatrix& m, std::span<const std::size_t> dims,
                                 std::span<const std::size_t> order);

/// Same relabeling for a state vector.
ComplexVector permute_subsystems(const ComplexVector& v, std::span<const std::size_t> dims,
                                 std::span<const std::size_t> order);

/// Largest |m - m^dagger| entry.
double hermitian_defect(const ComplexMatrix& m);

double max_abs(const ComplexMatrix& m);

HermitianEigen eig_hermitian(const ComplexMatrix& m, const Tolerance& tol = {});

SingularValueDecomposition svd(const ComplexMatrix& m);

/// Cutoff used by numerical_rank for a given largest singular value.
double rank_threshold(double largest_singular, const Tolerance& tol);

/// Number of singular values strictly above rank_rtol * max(1, largest).
std::size_t numerical_rank(const ComplexMatrix& m, const Tolerance& tol = {});

/// Extends the orthonormal columns of `cols` to a dim x dim unitary by
/// Gram-Schmidt over the standard basis vectors e_0, e_1, ... taken in order.
/// The first cols.cols() columns of the result equal `cols`.
ComplexMatrix complete_to_unitary(const ComplexMatrix& cols, Eigen::Index dim);

/// Largest deviation of the columns of `v` from orthonormality.
double orthonormality_defect(const ComplexMatrix& v);

/// Hermitian PSD square root; negative eigenvalues are clipped to zero.
ComplexMatrix psd_sqrt(const ComplexMatrix& m, const Tolerance& tol = {});

/// Product of entries, throwing CapExceeded once it passes kMaxSide.
std::size_t checked_product(std::span<const std::size_t> dims, const char* what);

}  // namespace distill
