#include "distill/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "distill/error.hpp"

namespace distill {

void Tolerance::validate() const {
    for (double v : {rank_rtol, herm_atol, psd_atol, purity_atol}) {
        if (!(v >= 0.0 && v < 1.0)) {
            throw InvariantError("tolerance", "every tolerance must lie in [0, 1), got " +
                                                  std::to_string(v));
        }
    }
}

Tolerance Tolerance::profile(std::string_view name) {
    if (name.empty() || name == "default") return Tolerance{};
    if (name == "strict") return Tolerance{1e-12, 1e-12, 1e-12, 1e-12};
    if (name == "loose") return Tolerance{1e-6, 1e-6, 1e-6, 1e-6};
    throw InvariantError("tolerance", "unknown tolerance profile '" + std::string(name) + "'");
}

Tolerance Tolerance::from_environment() {
    const char* env = std::getenv("DISTILL_TOLERANCE");
    return profile(env ? std::string_view(env) : std::string_view{});
}

void check_side(std::size_t side, const char* what) {
    if (side > kMaxSide) throw CapExceeded(what, side, kMaxSide);
}

std::size_t checked_product(std::span<const std::size_t> dims, const char* what) {
    std::size_t total = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw DimensionError(std::string(what) + ": zero dimension");
        if (total > kMaxSide / d) throw CapExceeded(what, total * d, kMaxSide);
        total *= d;
    }
    return total;
}

void require_finite(const ComplexMatrix& m) {
    if (!m.allFinite()) throw InvariantError("finite", "matrix contains NaN or Inf entries");
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    check_side(static_cast<std::size_t>(a.rows() * b.rows()), "kron rows");
    check_side(static_cast<std::size_t>(a.cols() * b.cols()), "kron cols");
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
    check_side(static_cast<std::size_t>(a.size() * b.size()), "kron length");
    ComplexVector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

ComplexMatrix kron_all(std::span<const ComplexMatrix> factors) {
    ComplexMatrix out = ComplexMatrix::Identity(1, 1);
    for (const auto& f : factors) out = kron(out, f);
    return out;
}

Complex trace(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("trace of a non-square matrix");
    return m.trace();
}

namespace {

// Strides of a most-significant-first mixed radix.
std::vector<std::size_t> strides_of(std::span<const std::size_t> dims) {
    std::vector<std::size_t> strides(dims.size(), 1);
    for (std::size_t k = dims.size(); k-- > 1;) strides[k - 1] = strides[k] * dims[k];
    return strides;
}

// For each flat index, its flat index in the sub-radix made from `which`.
std::vector<std::size_t> sub_index_map(std::span<const std::size_t> dims,
                                       std::span<const std::size_t> which) {
    std::size_t total = 1;
    for (auto d : dims) total *= d;
    const auto full = strides_of(dims);
    std::vector<std::size_t> sub_dims;
    for (auto w : which) sub_dims.push_back(dims[w]);
    const auto sub = strides_of(sub_dims);
    std::vector<std::size_t> map(total, 0);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t s = 0;
        for (std::size_t k = 0; k < which.size(); ++k) {
            s += ((i / full[which[k]]) % dims[which[k]]) * sub[k];
        }
        map[i] = s;
    }
    return map;
}

std::size_t side_of(std::span<const std::size_t> dims) {
    std::size_t total = 1;
    for (auto d : dims) {
        if (d == 0) throw DimensionError("subsystem of dimension zero");
        total *= d;
    }
    return total;
}

}  // namespace

ComplexMatrix partial_trace(const ComplexMatrix& m, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep) {
    const std::size_t side = side_of(dims);
    if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != side) {
        throw DimensionError("partial_trace: matrix side " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + " does not match subsystem product " +
                             std::to_string(side));
    }
    if (keep.empty()) throw DimensionError("partial_trace: empty keep set (use trace())");

    std::vector<std::size_t> kept(keep.begin(), keep.end());
    std::sort(kept.begin(), kept.end());
    if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
        throw DimensionError("partial_trace: duplicate subsystem in keep set");
    }
    if (kept.back() >= dims.size()) throw DimensionError("partial_trace: subsystem out of range");

    std::vector<std::size_t> traced;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (!std::binary_search(kept.begin(), kept.end(), k)) traced.push_back(k);
    }
    const auto kmap = sub_index_map(dims, kept);
    const auto tmap = sub_index_map(dims, traced);

    std::size_t kept_side = 1;
    for (auto k : kept) kept_side *= dims[k];
    const std::size_t traced_side = side / kept_side;

    // Group full indices by their traced part; within a group the kept part
    // runs over every value exactly once.
    std::vector<std::vector<Eigen::Index>> groups(traced_side,
                                                  std::vector<Eigen::Index>(kept_side));
    for (std::size_t i = 0; i < side; ++i) groups[tmap[i]][kmap[i]] = static_cast<Eigen::Index>(i);

    ComplexMatrix out = ComplexMatrix::Zero(kept_side, kept_side);
    for (const auto& g : groups) out += m(g, g);
    return out;
}

namespace {

std::vector<Eigen::Index> permutation_map(std::span<const std::size_t> dims,
                                          std::span<const std::size_t> order) {
    if (order.size() != dims.size()) throw DimensionError("permutation length mismatch");
    std::vector<std::size_t> seen(order.begin(), order.end());
    std::sort(seen.begin(), seen.end());
    for (std::size_t k = 0; k < seen.size(); ++k) {
        if (seen[k] != k) throw DimensionError("order is not a permutation");
    }
    std::vector<std::size_t> new_dims;
    for (auto o : order) new_dims.push_back(dims[o]);
    const auto old_strides = strides_of(dims);
    const auto new_strides = strides_of(new_dims);
    const std::size_t side = side_of(dims);
    std::vector<Eigen::Index> map(side);
    for (std::size_t i = 0; i < side; ++i) {
        std::size_t j = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            j += ((i / old_strides[order[k]]) % dims[order[k]]) * new_strides[k];
        }
        map[i] = static_cast<Eigen::Index>(j);
    }
    return map;
}

}  // namespace

ComplexMatrix permute_subsystems(const ComplexMatrix& m, std::span<const std::size_t> dims,
                                 std::span<const std::size_t> order) {
    const auto map = permutation_map(dims, order);
    if (m.rows() != static_cast<Eigen::Index>(map.size()) || m.cols() != m.rows()) {
        throw DimensionError("permute_subsystems: matrix side does not match dimensions");
    }
    ComplexMatrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(map[i], map[j]) = m(i, j);
    }
    return out;
}

ComplexVector permute_subsystems(const ComplexVector& v, std::span<const std::size_t> dims,
                                 std::span<const std::size_t> order) {
    const auto map = permutation_map(dims, order);
    if (v.size() != static_cast<Eigen::Index>(map.size())) {
        throw DimensionError("permute_subsystems: vector length does not match dimensions");
    }
    ComplexVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(map[i]) = v(i);
    return out;
}

double hermitian_defect(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("hermitian_defect of a non-square matrix");
    return max_abs(m - m.adjoint());
}

double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

HermitianEigen eig_hermitian(const ComplexMatrix& m, const Tolerance& tol) {
    if (m.rows() != m.cols()) throw DimensionError("eig_hermitian of a non-square matrix");
    require_finite(m);
    const double defect = hermitian_defect(m);
    if (defect > tol.herm_atol) {
        throw InvariantError("hermitian", "max |m - m^dagger| = " + std::to_string(defect));
    }
    const ComplexMatrix sym = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
    if (solver.info() != Eigen::Success) throw Error("eig_hermitian: eigensolver failed");
    // Eigen returns ascending order.
    HermitianEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

SingularValueDecomposition svd(const ComplexMatrix& m) {
    require_finite(m);
    SingularValueDecomposition out;
    if (m.size() == 0) return out;
    Eigen::BDCSVD<ComplexMatrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success) throw Error("svd: decomposition failed");
    out.left = solver.matrixU();
    out.singulars = solver.singularValues();
    out.right = solver.matrixV();
    return out;
}

double rank_threshold(double largest_singular, const Tolerance& tol) {
    return tol.rank_rtol * std::max(1.0, largest_singular);
}

std::size_t numerical_rank(const ComplexMatrix& m, const Tolerance& tol) {
    if (m.size() == 0) return 0;
    const RealVector s = svd(m).singulars;
    const double cut = rank_threshold(s.size() ? s(0) : 0.0, tol);
    return static_cast<std::size_t>((s.array() > cut).count());
}

ComplexMatrix complete_to_unitary(const ComplexMatrix& cols, Eigen::Index dim) {
    if (cols.rows() != dim || cols.cols() > dim) {
        throw DimensionError("complete_to_unitary: columns do not fit the dimension");
    }
    ComplexMatrix out(dim, dim);
    Eigen::Index filled = cols.cols();
    out.leftCols(filled) = cols;
    for (Eigen::Index e = 0; e < dim && filled < dim; ++e) {
        ComplexVector v = ComplexVector::Unit(dim, e);
        // Two Gram-Schmidt passes keep the result orthonormal to working precision.
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index k = 0; k < filled; ++k) {
                v -= out.col(k) * out.col(k).dot(v);
            }
        }
        const double n = v.norm();
        if (n < 1e-8) continue;
        out.col(filled++) = v / n;
    }
    if (filled != dim) throw Error("complete_to_unitary: input columns are not independent");
    return out;
}

double orthonormality_defect(const ComplexMatrix& v) {
    if (v.cols() == 0) return 0.0;
    const ComplexMatrix g = v.adjoint() * v;
    return max_abs(g - ComplexMatrix::Identity(g.rows(), g.cols()));
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m, const Tolerance& tol) {
    const auto e = eig_hermitian(m, tol);
    const RealVector roots = e.values.cwiseMax(0.0).cwiseSqrt();
    return e.vectors * roots.cast<Complex>().asDiagonal() * e.vectors.adjoint();
}

}  // namespace distill
