#pragma once

// Distillable subspaces: local subspaces H'_A (x) H'_B (x) ... onto which a
// (multi-copy) state projects to a pure entangled state.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "distill/entanglement.hpp"
#include "distill/linalg.hpp"
#include "distill/states.hpp"

namespace distill {

/// Per-party orthonormal vectors spanning a local subspace. Party i's vectors
/// are the columns of bases()[i].
class LocalSubspace {
public:
    /// Validates: one nonempty block per party, columns orthonormal within
    /// 1e-9 (InvariantError("orthonormal")), at most dim columns.
    LocalSubspace(const SystemShape& shape, std::vector<ComplexMatrix> bases);

    static LocalSubspace full(const SystemShape& shape);

    /// Subsets of the computational basis, one index list per party.
    static LocalSubspace computational(const SystemShape& shape,
                                       const std::vector<std::vector<std::size_t>>& indices);

    /// Columns `indices[i]` of the orthonormal basis `bases[i]`.
    static LocalSubspace from_basis(const SystemShape& shape, const std::vector<ComplexMatrix>& bases,
                                    const std::vector<std::vector<std::size_t>>& indices);

    const SystemShape& parent_shape() const noexcept { return shape_; }
    const std::vector<ComplexMatrix>& bases() const noexcept { return bases_; }
    std::vector<std::size_t> dims() const;

    /// Shape of the compressed state: same labels, dimension = vectors kept.
    SystemShape compressed_shape() const;

    /// kron of the per-party bases (parent dim x subspace dim).
    ComplexMatrix isometry() const;
    ComplexMatrix projector() const;

private:
    SystemShape shape_;
    std::vector<ComplexMatrix> bases_;
};

enum class Classification { zero, pure_product, pure_entangled, mixed };

std::string to_string(Classification c);

/// Below this projector weight a projection counts as zero.
inline constexpr double kZeroWeight = 1e-12;

struct ProjectionOutcome {
    double weight = 0.0;  // tr(P rho P)
    Classification classification = Classification::zero;
    /// Normalized compressed state <v_i..|rho|v_j..>/weight; absent when zero.
    std::optional<DensityMatrix> state;
    /// Dominant eigenvector of `state`, in compressed coordinates; set when pure.
    std::optional<PureState> pure;
    std::optional<DimensionSignature> signature;
    double purity_ratio = 0.0;  // largest eigenvalue / trace
};

/// Projects rho onto `s` and classifies the result.
ProjectionOutcome project(const DensityMatrix& rho, const LocalSubspace& s, const Tolerance& tol = {});

/// Maps compressed coordinates back into the parent space.
ComplexVector embed(const LocalSubspace& s, const ComplexVector& compressed);
ComplexMatrix embed(const LocalSubspace& s, const ComplexMatrix& compressed);

struct DssCertificate {
    LocalSubspace subspace;
    ProjectionOutcome outcome;  // classification pure_entangled
    /// Indices into the searched per-party bases; empty when not from a search.
    std::vector<std::vector<std::size_t>> basis_indices;
};

struct Refusal {
    Classification classification;
    std::string reason;  // "weight zero", "mixed" or "product"
};

using CertificateCheck = std::variant<DssCertificate, Refusal>;

/// Independent re-verification of a claimed distillable subspace.
CertificateCheck check_certificate(const DensityMatrix& rho, const LocalSubspace& s,
                                   const Tolerance& tol = {});

struct DssConstraints {
    /// Entrywise minimum signature; empty means no constraint.
    std::vector<std::size_t> min_signature;
    /// Require every party to be entangled with the rest (all ranks >= 2).
    bool require_entangled = false;
    /// Drop certificates that keep a basis vector the pure projection never
    /// touches (its reduced weight is zero); keeps only the tight subspace.
    bool minimal_support = false;
};

struct SearchOptions {
    /// Skip candidates that are provably not pure before compressing them.
    bool prune = true;
    std::size_t workers = 1;
    std::uint64_t candidate_cap = 2'000'000;
};

struct SearchStats {
    std::uint64_t candidates = 0;
    std::uint64_t evaluated = 0;      // fully compressed and classified
    std::uint64_t pruned_zero = 0;
    std::uint64_t pruned_mixed = 0;
};

struct DssSearch {
    std::vector<DssCertificate> certificates;  // canonical candidate order
    SearchStats stats;
};

/// Number of candidate subspaces, prod_i (2^{d_i} - 1). Throws CapExceeded
/// (suggesting narrower bases) when it exceeds `cap`.
std::uint64_t candidate_count(const SystemShape& shape, std::uint64_t cap);

/// Searches every product of nonempty subsets of the per-party bases (default,
/// empty `bases`: computational). Candidates are ordered lexicographically by
/// party, subset bitmask ascending (bit k selects basis vector k).
DssSearch find_dss(const DensityMatrix& rho, const std::vector<ComplexMatrix>& bases = {},
                   const DssConstraints& constraints = {}, const Tolerance& tol = {},
                   const SearchOptions& options = {});

/// (prod dims)^n - prod signature + 1, over the single-copy shape.
std::uint64_t rank_bound(const SystemShape& shape, std::size_t copies,
                         const std::vector<std::size_t>& signature);

struct RankBoundReport {
    std::size_t rank = 0;
    std::uint64_t bound = 0;
    bool satisfied = false;
};

/// Rank of rho^{(x)n} against rank_bound for the certificate's signature.
/// `cert` must come from tensor_power(rho, copies).
RankBoundReport check_rank_bound(const DensityMatrix& rho, std::size_t copies,
                                 const DssCertificate& cert, const Tolerance& tol = {});

struct PurifyingSubspace {
    LocalSubspace subspace;
    std::vector<std::vector<std::size_t>> basis_indices;
    double weight = 0.0;
    DensityMatrix state;  // compressed 2x2 state
    double measure_before = 0.0;
    double measure_after = 0.0;
};

struct PurifyingSearch {
    std::vector<PurifyingSubspace> subspaces;
    double reference = 0.0;
    std::uint64_t skipped_shape = 0;  // candidates that are not 2 (x) 2
    SearchStats stats;
};

/// Subspaces whose projection is a mixed two-qubit state with concurrence
/// strictly above `reference` (noise margin purity_atol). When `reference` is
/// absent, rho itself must be two qubits and its concurrence is used.
PurifyingSearch find_purifying_subspaces(const DensityMatrix& rho,
                                         const std::vector<ComplexMatrix>& bases = {},
                                         std::optional<double> reference = std::nullopt,
                                         const Tolerance& tol = {},
                                         const SearchOptions& options = {});

/// Same search on sigma^{(x)copies}, against the concurrence of sigma.
PurifyingSearch find_purifying_subspaces(const DensityMatrix& sigma, std::size_t copies,
                                         const std::vector<ComplexMatrix>& bases = {},
                                         const Tolerance& tol = {},
                                         const SearchOptions& options = {});

}  // namespace distill
