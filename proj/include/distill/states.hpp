#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "distill/linalg.hpp"

namespace distill {

/// One party of a multipartite system. `subdims` records the particles the
/// party holds (e.g. {2, 2} after taking two copies of a qubit); their product
/// is `dim`.
struct Party {
    std::string label;
    std::size_t dim = 0;
    std::vector<std::size_t> subdims;

    bool operator==(const Party&) const = default;
};

/// Ordered list of parties defining the tensor factorization
/// H = H_0 (x) H_1 (x) ... with party 0 most significant.
class SystemShape {
public:
    /// Validates: at least one party, unique nonempty labels, every dim >= 1,
    /// subdims consistent (filled with {dim} when empty), total dim <= kMaxSide.
    explicit SystemShape(std::vector<Party> parties);

    /// Parties labelled A, B, C, ... with the given dimensions.
    static SystemShape from_dims(const std::vector<std::size_t>& dims);

    const std::vector<Party>& parties() const noexcept { return parties_; }
    const Party& party(std::size_t i) const { return parties_.at(i); }
    std::size_t party_count() const noexcept { return parties_.size(); }
    std::size_t total_dim() const noexcept { return total_; }
    std::vector<std::size_t> dims() const;
    std::vector<std::string> labels() const;

    /// All particles of all parties, in party order.
    std::vector<std::size_t> flat_subdims() const;
    /// Position of party p's first particle inside flat_subdims().
    std::size_t flat_offset(std::size_t party) const;

    /// Throws DimensionError for an unknown label.
    std::size_t index_of(std::string_view label) const;

    std::string describe() const;

    bool operator==(const SystemShape&) const = default;

private:
    std::vector<Party> parties_;
    std::size_t total_ = 1;
};

class PureState {
public:
    /// Requires amplitudes.size() == shape.total_dim() and unit norm within 1e-9.
    PureState(SystemShape shape, ComplexVector amplitudes);

    /// Normalizes `amplitudes` first; throws InvariantError("norm") on a zero vector.
    static PureState normalized(SystemShape shape, ComplexVector amplitudes);

    /// Computational basis state; `digits` holds one index per party.
    static PureState basis(SystemShape shape, const std::vector<std::size_t>& digits);

    const SystemShape& shape() const noexcept { return shape_; }
    const ComplexVector& amplitudes() const noexcept { return amplitudes_; }
    ComplexMatrix projector() const { return amplitudes_ * amplitudes_.adjoint(); }

private:
    SystemShape shape_;
    ComplexVector amplitudes_;
};

/// Hermitian, positive semidefinite, unit-trace matrix over a SystemShape.
class DensityMatrix {
public:
    /// Validates the invariants and throws InvariantError naming the first one
    /// that fails ("finite", "hermitian", "psd" or "trace"). The stored matrix is
    /// the Hermitian part of `mat`.
    DensityMatrix(SystemShape shape, ComplexMatrix mat, const Tolerance& tol = {});

    explicit DensityMatrix(const PureState& psi);

    /// Rescales a nonzero PSD matrix to unit trace before validating.
    static DensityMatrix normalized(SystemShape shape, ComplexMatrix mat, const Tolerance& tol = {});

    const SystemShape& shape() const noexcept { return shape_; }
    const ComplexMatrix& matrix() const noexcept { return mat_; }
    std::size_t dim() const noexcept { return shape_.total_dim(); }

    RealVector eigenvalues() const;
    std::size_t rank(const Tolerance& tol = {}) const { return numerical_rank(mat_, tol); }

private:
    SystemShape shape_;
    ComplexMatrix mat_;
};

/// Fidelity <psi|rho|psi>.
double fidelity(const PureState& psi, const DensityMatrix& rho);

/// Reduced state on the parties at the given indices (kept in shape order).
DensityMatrix reduce(const DensityMatrix& rho, const std::vector<std::size_t>& keep_parties);

/// rho^{(x)n} regrouped so each party holds its n copies side by side:
/// party A's copy-1 particles, then its copy-2 particles, and so on.
DensityMatrix tensor_power(const DensityMatrix& rho, std::size_t n);
PureState tensor_power(const PureState& psi, std::size_t n);

/// Shape of tensor_power(rho, n) for rho over `shape`.
SystemShape tensor_power_shape(const SystemShape& shape, std::size_t n);

namespace presets {

/// The four Bell vectors (|00> +- |11>)/sqrt2, (|01> +- |10>)/sqrt2.
PureState phi_plus();
PureState phi_minus();
PureState psi_plus();
PureState psi_minus();

/// F[Phi+] + (1-F)/3 ([Phi-] + [Psi+] + [Psi-]), F in [0, 1].
DensityMatrix werner(double fidelity);

PureState ghz();
/// W-type state (|100> + |010> + |011>)/sqrt3.
PureState w_variant();
/// Textbook W state (|100> + |010> + |001>)/sqrt3.
PureState w_standard();
/// (GHZ, w_variant).
std::pair<PureState, PureState> ghz_w();

/// p[GHZ] + (1-p)[|0>_A|1>_B|1>_C], p in (0, 1].
DensityMatrix three_qubit_example(double p);

/// lambda[(sqrt3/2)|00> + (1/2)|11>] + (1-lambda)[|01>], lambda in (0, 1].
DensityMatrix filter_example(double lambda);
PureState filter_example_pure();

}  // namespace presets

}  // namespace distill
