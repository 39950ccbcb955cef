#include "distill/localops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "distill/error.hpp"

namespace distill {

namespace {

double spectral_norm(const ComplexMatrix& m) {
    const auto s = svd(m).singulars;
    return s.size() ? s(0) : 0.0;
}

}  // namespace

LocalFactor::LocalFactor(std::string party, ComplexMatrix mat)
    : party_(std::move(party)), mat_(std::move(mat)) {
    if (mat_.rows() != mat_.cols()) throw DimensionError("local factor must be square");
    require_finite(mat_);
    const double norm = spectral_norm(mat_);
    if (norm > 1.0 + 1e-9) {
        std::ostringstream os;
        os << "factor on '" << party_ << "' has spectral norm " << norm << " > 1";
        throw InvariantError("contraction", os.str());
    }
}

LocalFactor LocalFactor::normalized(std::string party, ComplexMatrix mat) {
    require_finite(mat);
    const double norm = spectral_norm(mat);
    if (!std::isfinite(norm)) throw InvariantError("finite", "spectral norm overflows");
    const double scale = norm > 1.0 ? norm : 1.0;
    LocalFactor f(std::move(party), mat / scale);
    f.scale_ = scale;
    return f;
}

LocalFactor LocalFactor::identity(std::string party, std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return LocalFactor(std::move(party), ComplexMatrix::Identity(d, d));
}

ProductOperator::ProductOperator(const SystemShape& shape, std::vector<LocalFactor> factors)
    : shape_(shape), factors_(std::move(factors)) {
    if (factors_.size() != shape_.party_count()) {
        throw DimensionError("product operator needs one factor per party (" +
                             std::to_string(shape_.party_count()) + "), got " +
                             std::to_string(factors_.size()));
    }
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        const auto& p = shape_.party(i);
        if (factors_[i].party() != p.label) {
            throw DimensionError("factor " + std::to_string(i) + " is for '" +
                                 factors_[i].party() + "' but the shape has '" + p.label + "'");
        }
        if (static_cast<std::size_t>(factors_[i].matrix().rows()) != p.dim) {
            throw DimensionError("factor on '" + p.label + "' has side " +
                                 std::to_string(factors_[i].matrix().rows()) +
                                 ", party dimension is " + std::to_string(p.dim));
        }
    }
}

ProductOperator ProductOperator::identity(const SystemShape& shape) {
    std::vector<LocalFactor> factors;
    for (const auto& p : shape.parties()) factors.push_back(LocalFactor::identity(p.label, p.dim));
    return ProductOperator(shape, std::move(factors));
}

ProductOperator ProductOperator::single(const SystemShape& shape, LocalFactor factor) {
    std::vector<LocalFactor> factors;
    for (const auto& p : shape.parties()) {
        if (p.label == factor.party()) {
            factors.push_back(factor);
        } else {
            factors.push_back(LocalFactor::identity(p.label, p.dim));
        }
    }
    return ProductOperator(shape, std::move(factors));
}

ComplexMatrix ProductOperator::matrix() const {
    std::vector<ComplexMatrix> mats;
    for (const auto& f : factors_) mats.push_back(f.matrix());
    return kron_all(mats);
}

ApplyResult apply(const ProductOperator& op, const DensityMatrix& rho) {
    if (!(op.shape().dims() == rho.shape().dims())) {
        throw DimensionError("operator shape " + op.shape().describe() +
                             " does not match state shape " + rho.shape().describe());
    }
    const ComplexMatrix m = op.matrix();
    const ComplexMatrix out = m * rho.matrix() * m.adjoint();
    const double p = out.trace().real();
    if (!(p > kBranchThreshold)) throw ImpossibleBranch(p);
    return {DensityMatrix(rho.shape(), out / p), std::min(p, 1.0)};
}

LpoLfoLuo decompose(const ComplexMatrix& f, const Tolerance& tol) {
    if (f.rows() != f.cols()) throw DimensionError("decompose: factor must be square");
    require_finite(f);
    const auto d = svd(f);
    if (!d.singulars.allFinite()) throw InvariantError("finite", "singular values overflow");
    if (d.singulars.size() == 0 || d.singulars(0) <= 0.0) {
        throw InvariantError("nonzero", "cannot decompose the zero operator");
    }
    const double cut = rank_threshold(d.singulars(0), tol);
    const auto r = static_cast<Eigen::Index>((d.singulars.array() > cut).count());
    if (r == 0) throw InvariantError("nonzero", "cannot decompose the zero operator");

    const ComplexMatrix vr = d.right.leftCols(r);
    const ComplexMatrix ur = d.left.leftCols(r);
    const RealVector sr = d.singulars.head(r);

    LpoLfoLuo out;
    out.retained_dim = static_cast<std::size_t>(r);
    out.retained_basis = vr;
    out.weights = sr;
    out.lpo = vr * vr.adjoint();
    out.lfo = vr * sr.cast<Complex>().asDiagonal() * vr.adjoint();
    out.luo = complete_to_unitary(ur, f.rows()) * complete_to_unitary(vr, f.rows()).adjoint();
    return out;
}

LpoLfoLuo decompose(const LocalFactor& f, const Tolerance& tol) { return decompose(f.matrix(), tol); }

bool is_full_rank_on(const LocalFactor& f, const ComplexMatrix& basis, const Tolerance& tol) {
    if (basis.rows() != f.matrix().cols()) {
        throw DimensionError("basis vectors do not live in the factor's space");
    }
    if (basis.cols() == 0) return true;
    const double defect = orthonormality_defect(basis);
    if (defect > 1e-9) {
        throw InvariantError("orthonormal", "basis deviates by " + std::to_string(defect));
    }
    return numerical_rank(f.matrix() * basis, tol) == static_cast<std::size_t>(basis.cols());
}

bool is_full_rank(const ProductOperator& op, const Tolerance& tol) {
    for (const auto& f : op.factors()) {
        const auto n = f.matrix().rows();
        if (!is_full_rank_on(f, ComplexMatrix::Identity(n, n), tol)) return false;
    }
    return true;
}

RankInvarianceReport verify_rank_invariance(const DensityMatrix& rho, const ProductOperator& op,
                           const Tolerance& tol) {
    RankInvarianceReport report;
    report.rank_before = rho.rank(tol);
    report.full_rank = is_full_rank(op, tol);
    report.rank_after = apply(op, rho).state.rank(tol);
    report.consistent = !report.full_rank || report.rank_before == report.rank_after;
    return report;
}

}  // namespace distill
