#include "distill/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "distill/error.hpp"

namespace distill {

bool DimensionSignature::entangled() const {
    return std::any_of(ranks.begin(), ranks.end(), [](std::size_t r) { return r > 1; });
}

bool DimensionSignature::fully_entangled() const {
    return !ranks.empty() &&
           std::all_of(ranks.begin(), ranks.end(), [](std::size_t r) { return r > 1; });
}

bool DimensionSignature::meets(const std::vector<std::size_t>& minimum) const {
    if (minimum.empty()) return true;
    if (minimum.size() != ranks.size()) {
        throw DimensionError("minimum signature has " + std::to_string(minimum.size()) +
                             " entries for " + std::to_string(ranks.size()) + " parties");
    }
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (ranks[i] < minimum[i]) return false;
    }
    return true;
}

std::size_t DimensionSignature::product() const {
    return std::accumulate(ranks.begin(), ranks.end(), std::size_t{1}, std::multiplies<>());
}

std::string DimensionSignature::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < ranks.size(); ++i) os << (i ? "x" : "") << ranks[i];
    return os.str();
}

DimensionSignature dimension_signature(const PureState& psi, const Tolerance& tol) {
    const auto dims = psi.shape().dims();
    const ComplexMatrix rho = psi.projector();
    DimensionSignature sig;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const std::size_t keep[] = {i};
        sig.ranks.push_back(numerical_rank(partial_trace(rho, dims, keep), tol));
    }
    return sig;
}

RealVector schmidt(const PureState& psi) {
    if (psi.shape().party_count() != 2) {
        throw DimensionError("schmidt needs exactly two parties; pass a grouping for " +
                             std::to_string(psi.shape().party_count()));
    }
    return schmidt(psi, {0});
}

RealVector schmidt(const PureState& psi, const std::vector<std::size_t>& group_a) {
    const auto dims = psi.shape().dims();
    std::vector<std::size_t> order, rest;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const bool in_a = std::find(group_a.begin(), group_a.end(), i) != group_a.end();
        (in_a ? order : rest).push_back(i);
    }
    if (order.size() != group_a.size() || order.empty() || rest.empty()) {
        throw DimensionError("schmidt: group must be a proper nonempty subset of the parties");
    }
    std::size_t rows = 1;
    for (auto i : order) rows *= dims[i];
    order.insert(order.end(), rest.begin(), rest.end());
    const ComplexVector v = permute_subsystems(psi.amplitudes(), dims, order);
    const auto r = static_cast<Eigen::Index>(rows);
    const auto c = v.size() / r;
    // Row-major reshape: row index = first group.
    ComplexMatrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) m.row(i) = v.segment(i * c, c).transpose();
    return svd(m).singulars;
}

SignatureInvarianceReport verify_signature_invariance(const PureState& psi, const ProductOperator& op, const Tolerance& tol) {
    if (!(op.shape().dims() == psi.shape().dims())) {
        throw DimensionError("operator shape does not match state shape");
    }
    const ComplexVector out = op.matrix() * psi.amplitudes();
    const double p = out.squaredNorm();
    if (!(p > kBranchThreshold)) throw ImpossibleBranch(p);
    SignatureInvarianceReport report;
    report.signature_before = dimension_signature(psi, tol);
    report.signature_after = dimension_signature(PureState::normalized(psi.shape(), out), tol);
    report.full_rank = is_full_rank(op, tol);
    report.consistent = !report.full_rank || report.signature_before == report.signature_after;
    return report;
}

namespace {

void require_two_qubits(const SystemShape& shape) {
    if (shape.party_count() != 2 || shape.party(0).dim != 2 || shape.party(1).dim != 2) {
        throw DimensionError("two-qubit measure requested on shape " + shape.describe());
    }
}

}  // namespace

double concurrence(const DensityMatrix& rho, const Tolerance& tol) {
    require_two_qubits(rho.shape());
    ComplexMatrix yy = ComplexMatrix::Zero(4, 4);
    // sigma_y (x) sigma_y is real and antidiagonal: (-1, 1, 1, -1).
    yy(0, 3) = -1.0;
    yy(1, 2) = 1.0;
    yy(2, 1) = 1.0;
    yy(3, 0) = -1.0;
    // The Wootters values are the singular values of sqrt(rho) * sqrt(rho~),
    // which avoids taking a square root of near-zero eigenvalues twice.
    const HermitianEigen e = eig_hermitian(rho.matrix(), tol);
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, e.values(0));
    RealVector roots = e.values;
    for (Eigen::Index i = 0; i < roots.size(); ++i) roots(i) = roots(i) > floor ? std::sqrt(roots(i)) : 0.0;
    const ComplexMatrix root = e.vectors * roots.cast<Complex>().asDiagonal() * e.vectors.adjoint();
    const ComplexMatrix flipped_root = yy * root.conjugate() * yy;
    const RealVector lambdas = svd(root * flipped_root).singulars;
    const double c = lambdas(0) - lambdas(1) - lambdas(2) - lambdas(3);
    return std::clamp(c, 0.0, 1.0);
}

double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double eof_from_concurrence(double c) {
    c = std::clamp(c, 0.0, 1.0);
    return binary_entropy(0.5 * (1.0 + std::sqrt(1.0 - c * c)));
}

EntanglementReport entanglement_of_formation(const DensityMatrix& rho, const Tolerance& tol) {
    EntanglementReport r;
    r.concurrence = concurrence(rho, tol);
    r.eof = eof_from_concurrence(r.concurrence);
    return r;
}

LocalFactor example_filter() {
    ComplexMatrix a = ComplexMatrix::Zero(2, 2);
    a(0, 0) = 0.5;
    a(1, 1) = std::sqrt(3.0) / 2.0;
    return LocalFactor("A", a);
}

FilterComparison filter_comparison(double lambda, const Tolerance& tol) {
    const DensityMatrix sigma = presets::filter_example(lambda);
    const auto result = apply(ProductOperator::single(sigma.shape(), example_filter()), sigma);
    FilterComparison out{lambda,
                         entanglement_of_formation(sigma, tol),
                         entanglement_of_formation(result.state, tol),
                         result.state,
                         result.probability,
                         fidelity(presets::phi_plus(), result.state)};
    return out;
}

}  // namespace distill
