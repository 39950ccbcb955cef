#include "distill/states.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "distill/error.hpp"

namespace distill {

SystemShape::SystemShape(std::vector<Party> parties) : parties_(std::move(parties)) {
    if (parties_.empty()) throw InvariantError("shape", "at least one party is required");
    std::set<std::string> seen;
    std::vector<std::size_t> dims;
    for (auto& p : parties_) {
        if (p.label.empty()) throw InvariantError("shape", "empty party label");
        if (!seen.insert(p.label).second) {
            throw InvariantError("shape", "duplicate party label '" + p.label + "'");
        }
        if (p.dim < 1) throw InvariantError("shape", "party '" + p.label + "' has dimension 0");
        if (p.subdims.empty()) p.subdims = {p.dim};
        std::size_t prod = 1;
        for (auto s : p.subdims) {
            if (s < 1) throw InvariantError("shape", "party '" + p.label + "' has a zero subdim");
            prod *= s;
        }
        if (prod != p.dim) {
            throw InvariantError("shape", "subdims of party '" + p.label +
                                              "' do not multiply to its dimension");
        }
        dims.push_back(p.dim);
    }
    total_ = checked_product(dims, "system dimension");
}

SystemShape SystemShape::from_dims(const std::vector<std::size_t>& dims) {
    std::vector<Party> parties;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        std::string label = i < 26 ? std::string(1, static_cast<char>('A' + i))
                                   : "P" + std::to_string(i);
        parties.push_back({label, dims[i], {}});
    }
    return SystemShape(std::move(parties));
}

std::vector<std::size_t> SystemShape::dims() const {
    std::vector<std::size_t> out;
    for (const auto& p : parties_) out.push_back(p.dim);
    return out;
}

std::vector<std::string> SystemShape::labels() const {
    std::vector<std::string> out;
    for (const auto& p : parties_) out.push_back(p.label);
    return out;
}

std::vector<std::size_t> SystemShape::flat_subdims() const {
    std::vector<std::size_t> out;
    for (const auto& p : parties_) out.insert(out.end(), p.subdims.begin(), p.subdims.end());
    return out;
}

std::size_t SystemShape::flat_offset(std::size_t party) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < party; ++i) off += parties_.at(i).subdims.size();
    return off;
}

std::size_t SystemShape::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < parties_.size(); ++i) {
        if (parties_[i].label == label) return i;
    }
    throw DimensionError("unknown party '" + std::string(label) + "'");
}

std::string SystemShape::describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < parties_.size(); ++i) {
        if (i) os << " x ";
        os << parties_[i].label << ":" << parties_[i].dim;
    }
    return os.str();
}

PureState::PureState(SystemShape shape, ComplexVector amplitudes)
    : shape_(std::move(shape)), amplitudes_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amplitudes_.size()) != shape_.total_dim()) {
        throw DimensionError("pure state length " + std::to_string(amplitudes_.size()) +
                             " does not match shape dimension " +
                             std::to_string(shape_.total_dim()));
    }
    if (!amplitudes_.allFinite()) throw InvariantError("finite", "amplitudes contain NaN or Inf");
    const double n = amplitudes_.norm();
    if (std::abs(n - 1.0) > 1e-9) {
        throw InvariantError("norm", "state norm is " + std::to_string(n));
    }
}

PureState PureState::normalized(SystemShape shape, ComplexVector amplitudes) {
    const double n = amplitudes.norm();
    if (!(n > 0.0)) throw InvariantError("norm", "cannot normalize the zero vector");
    return PureState(std::move(shape), amplitudes / n);
}

PureState PureState::basis(SystemShape shape, const std::vector<std::size_t>& digits) {
    if (digits.size() != shape.party_count()) throw DimensionError("one digit per party required");
    std::size_t index = 0;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (digits[i] >= shape.party(i).dim) throw DimensionError("basis digit out of range");
        index = index * shape.party(i).dim + digits[i];
    }
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(shape.total_dim()));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return PureState(std::move(shape), std::move(v));
}

DensityMatrix::DensityMatrix(SystemShape shape, ComplexMatrix mat, const Tolerance& tol)
    : shape_(std::move(shape)) {
    const auto side = static_cast<Eigen::Index>(shape_.total_dim());
    if (mat.rows() != side || mat.cols() != side) {
        throw DimensionError("density matrix is " + std::to_string(mat.rows()) + "x" +
                             std::to_string(mat.cols()) + " but the shape needs side " +
                             std::to_string(side));
    }
    require_finite(mat);
    const double defect = hermitian_defect(mat);
    if (defect > tol.herm_atol) {
        throw InvariantError("hermitian", "max |rho - rho^dagger| = " + std::to_string(defect));
    }
    mat_ = 0.5 * (mat + mat.adjoint());
    const double tr = mat_.trace().real();
    const double smallest = eig_hermitian(mat_, tol).values.minCoeff();
    if (smallest < -tol.psd_atol) {
        std::ostringstream os;
        os << "smallest eigenvalue is " << smallest;
        throw InvariantError("psd", os.str());
    }
    if (std::abs(tr - 1.0) > 1e-9) {
        std::ostringstream os;
        os.precision(15);
        os << "trace is " << tr;
        throw InvariantError("trace", os.str());
    }
}

DensityMatrix::DensityMatrix(const PureState& psi)
    : shape_(psi.shape()), mat_(psi.projector()) {}

DensityMatrix DensityMatrix::normalized(SystemShape shape, ComplexMatrix mat, const Tolerance& tol) {
    const double tr = mat.trace().real();
    if (!(tr > 0.0)) throw InvariantError("trace", "cannot normalize a matrix with trace <= 0");
    return DensityMatrix(std::move(shape), mat / tr, tol);
}

RealVector DensityMatrix::eigenvalues() const { return eig_hermitian(mat_).values; }

double fidelity(const PureState& psi, const DensityMatrix& rho) {
    if (!(psi.shape() == rho.shape())) throw DimensionError("fidelity: shapes differ");
    return (psi.amplitudes().adjoint() * rho.matrix() * psi.amplitudes())(0, 0).real();
}

DensityMatrix reduce(const DensityMatrix& rho, const std::vector<std::size_t>& keep_parties) {
    const auto& shape = rho.shape();
    std::vector<std::size_t> sorted = keep_parties;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Party> kept;
    for (auto k : sorted) {
        if (k >= shape.party_count()) throw DimensionError("reduce: party index out of range");
        kept.push_back(shape.party(k));
    }
    const auto dims = shape.dims();
    ComplexMatrix m = partial_trace(rho.matrix(), dims, sorted);
    return DensityMatrix::normalized(SystemShape(std::move(kept)), std::move(m));
}

SystemShape tensor_power_shape(const SystemShape& shape, std::size_t n) {
    if (n == 0) throw DimensionError("tensor_power: copies must be positive");
    std::vector<std::size_t> all;
    for (std::size_t c = 0; c < n; ++c) {
        for (auto d : shape.dims()) all.push_back(d);
    }
    checked_product(all, "tensor power dimension");
    std::vector<Party> parties;
    for (const auto& p : shape.parties()) {
        Party q{p.label, 1, {}};
        for (std::size_t c = 0; c < n; ++c) {
            q.dim *= p.dim;
            q.subdims.insert(q.subdims.end(), p.subdims.begin(), p.subdims.end());
        }
        parties.push_back(std::move(q));
    }
    return SystemShape(std::move(parties));
}

namespace {

// Flat-particle order taking copy-major layout to party-major layout.
std::vector<std::size_t> regroup_order(const SystemShape& shape, std::size_t n) {
    const std::size_t per_copy = shape.flat_subdims().size();
    std::vector<std::size_t> order;
    for (std::size_t p = 0; p < shape.party_count(); ++p) {
        const std::size_t off = shape.flat_offset(p);
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t s = 0; s < shape.party(p).subdims.size(); ++s) {
                order.push_back(c * per_copy + off + s);
            }
        }
    }
    return order;
}

std::vector<std::size_t> repeated_subdims(const SystemShape& shape, std::size_t n) {
    std::vector<std::size_t> flat;
    const auto one = shape.flat_subdims();
    for (std::size_t c = 0; c < n; ++c) flat.insert(flat.end(), one.begin(), one.end());
    return flat;
}

}  // namespace

DensityMatrix tensor_power(const DensityMatrix& rho, std::size_t n) {
    SystemShape out_shape = tensor_power_shape(rho.shape(), n);
    if (n == 1) return rho;
    ComplexMatrix m = rho.matrix();
    for (std::size_t c = 1; c < n; ++c) m = kron(m, rho.matrix());
    m = permute_subsystems(m, repeated_subdims(rho.shape(), n), regroup_order(rho.shape(), n));
    return DensityMatrix(std::move(out_shape), std::move(m));
}

PureState tensor_power(const PureState& psi, std::size_t n) {
    SystemShape out_shape = tensor_power_shape(psi.shape(), n);
    if (n == 1) return psi;
    ComplexVector v = psi.amplitudes();
    for (std::size_t c = 1; c < n; ++c) v = kron(v, psi.amplitudes());
    v = permute_subsystems(v, repeated_subdims(psi.shape(), n), regroup_order(psi.shape(), n));
    return PureState(std::move(out_shape), std::move(v));
}

namespace presets {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

PureState two_qubit(Complex a00, Complex a01, Complex a10, Complex a11) {
    ComplexVector v(4);
    v << a00, a01, a10, a11;
    return PureState(SystemShape::from_dims({2, 2}), v);
}

PureState three_qubit(std::initializer_list<std::pair<int, double>> terms) {
    ComplexVector v = ComplexVector::Zero(8);
    for (auto [index, amp] : terms) v(index) = amp;
    return PureState(SystemShape::from_dims({2, 2, 2}), v);
}

void require_open_unit(double x, const char* name) {
    if (!(x > 0.0 && x <= 1.0)) {
        throw InvariantError("parameter", std::string(name) + " must lie in (0, 1], got " +
                                              std::to_string(x));
    }
}

}  // namespace

PureState phi_plus() { return two_qubit(kInvSqrt2, 0, 0, kInvSqrt2); }
PureState phi_minus() { return two_qubit(kInvSqrt2, 0, 0, -kInvSqrt2); }
PureState psi_plus() { return two_qubit(0, kInvSqrt2, kInvSqrt2, 0); }
PureState psi_minus() { return two_qubit(0, kInvSqrt2, -kInvSqrt2, 0); }

DensityMatrix werner(double fidelity) {
    if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
        throw InvariantError("parameter",
                             "Werner fidelity must lie in [0, 1], got " + std::to_string(fidelity));
    }
    const double rest = (1.0 - fidelity) / 3.0;
    ComplexMatrix m = fidelity * phi_plus().projector() +
                      rest * (phi_minus().projector() + psi_plus().projector() +
                              psi_minus().projector());
    return DensityMatrix(SystemShape::from_dims({2, 2}), m);
}

PureState ghz() { return three_qubit({{0b000, kInvSqrt2}, {0b111, kInvSqrt2}}); }

PureState w_variant() {
    const double a = 1.0 / std::sqrt(3.0);
    return three_qubit({{0b100, a}, {0b010, a}, {0b011, a}});
}

PureState w_standard() {
    const double a = 1.0 / std::sqrt(3.0);
    return three_qubit({{0b100, a}, {0b010, a}, {0b001, a}});
}

std::pair<PureState, PureState> ghz_w() { return {ghz(), w_variant()}; }

DensityMatrix three_qubit_example(double p) {
    require_open_unit(p, "p");
    const auto shape = SystemShape::from_dims({2, 2, 2});
    ComplexMatrix m = p * ghz().projector() +
                      (1.0 - p) * PureState::basis(shape, {0, 1, 1}).projector();
    return DensityMatrix(shape, m);
}

PureState filter_example_pure() { return two_qubit(std::sqrt(3.0) / 2.0, 0, 0, 0.5); }

DensityMatrix filter_example(double lambda) {
    require_open_unit(lambda, "lambda");
    const auto shape = SystemShape::from_dims({2, 2});
    ComplexMatrix m = lambda * filter_example_pure().projector() +
                      (1.0 - lambda) * PureState::basis(shape, {0, 1}).projector();
    return DensityMatrix(shape, m);
}

}  // namespace presets

}  // namespace distill
