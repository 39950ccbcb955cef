#pragma once

#include <string>
#include <vector>

#include "distill/linalg.hpp"
#include "distill/states.hpp"

namespace distill {

/// One party's component of a product measurement operator. The spectral norm
/// is at most 1 (within 1e-9), so the factor can be part of a POVM element.
class LocalFactor {
public:
    LocalFactor(std::string party, ComplexMatrix mat);

    /// Divides `mat` by its spectral norm when that exceeds 1; the divisor is
    /// available from scale(). The post-measurement state is unchanged.
    static LocalFactor normalized(std::string party, ComplexMatrix mat);

    static LocalFactor identity(std::string party, std::size_t dim);

    const std::string& party() const noexcept { return party_; }
    const ComplexMatrix& matrix() const noexcept { return mat_; }
    double scale() const noexcept { return scale_; }

private:
    std::string party_;
    ComplexMatrix mat_;
    double scale_ = 1.0;
};

/// A (x) B (x) C (x) ... with exactly one factor per party, in shape order.
class ProductOperator {
public:
    ProductOperator(const SystemShape& shape, std::vector<LocalFactor> factors);

    static ProductOperator identity(const SystemShape& shape);

    /// Identity everywhere except `factor`.
    static ProductOperator single(const SystemShape& shape, LocalFactor factor);

    const SystemShape& shape() const noexcept { return shape_; }
    const std::vector<LocalFactor>& factors() const noexcept { return factors_; }

    /// Dense matrix of the full tensor product.
    ComplexMatrix matrix() const;

private:
    SystemShape shape_;
    std::vector<LocalFactor> factors_;
};

struct ApplyResult {
    DensityMatrix state;
    double probability;
};

/// Below this outcome probability a branch is treated as impossible.
inline constexpr double kBranchThreshold = 1e-12;

/// M rho M^dagger / p with p = tr(M rho M^dagger). Throws ImpossibleBranch when
/// p <= kBranchThreshold.
ApplyResult apply(const ProductOperator& op, const DensityMatrix& rho);

/// Local projective, filter and unitary parts of a factor f = luo * lfo * lpo.
struct LpoLfoLuo {
    ComplexMatrix lpo;             // projector onto the retained input vectors
    ComplexMatrix lfo;             // PSD reweighting of those vectors
    ComplexMatrix luo;             // unitary taking them to the output vectors
    std::size_t retained_dim = 0;  // number of singular values above threshold
    ComplexMatrix retained_basis;  // columns: the retained input vectors
    RealVector weights;            // their singular values, descending
};

/// Canonical split through the singular value decomposition f = U S V^dagger:
/// lpo = V_r V_r^dagger, lfo = V_r S_r V_r^dagger, and luo = U_full V_full^dagger
/// where U_r and V_r are completed to unitaries with complete_to_unitary().
/// Throws InvariantError("nonzero") for a zero operator.
LpoLfoLuo decompose(const LocalFactor& f, const Tolerance& tol = {});
LpoLfoLuo decompose(const ComplexMatrix& f, const Tolerance& tol = {});

/// True iff f restricted to span(basis) keeps full rank. `basis` columns must be
/// orthonormal within 1e-9, otherwise InvariantError("orthonormal").
bool is_full_rank_on(const LocalFactor& f, const ComplexMatrix& basis, const Tolerance& tol = {});

/// Full rank on the party's whole space.
bool is_full_rank(const ProductOperator& op, const Tolerance& tol = {});

struct RankInvarianceReport {
    std::size_t rank_before = 0;
    std::size_t rank_after = 0;
    bool full_rank = false;
    bool consistent = false;
};

/// Compares the numerical rank of rho with that of the normalized output of
/// `op`. A full-rank operator that changes the rank makes `consistent` false.
RankInvarianceReport verify_rank_invariance(const DensityMatrix& rho, const ProductOperator& op,
                           const Tolerance& tol = {});

}  // namespace distill
