#include "distill/dss.hpp"

#include <algorithm>
#include <bit>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "distill/error.hpp"

namespace distill {

LocalSubspace::LocalSubspace(const SystemShape& shape, std::vector<ComplexMatrix> bases)
    : shape_(shape), bases_(std::move(bases)) {
    if (bases_.size() != shape_.party_count()) {
        throw DimensionError("local subspace needs one vector list per party (" +
                             std::to_string(shape_.party_count()) + "), got " +
                             std::to_string(bases_.size()));
    }
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        const auto& b = bases_[i];
        const auto& p = shape_.party(i);
        if (static_cast<std::size_t>(b.rows()) != p.dim) {
            throw DimensionError("vectors for '" + p.label + "' have length " +
                                 std::to_string(b.rows()) + ", party dimension is " +
                                 std::to_string(p.dim));
        }
        if (b.cols() == 0) throw InvariantError("subspace", "party '" + p.label + "' has no vectors");
        if (static_cast<std::size_t>(b.cols()) > p.dim) {
            throw InvariantError("subspace", "party '" + p.label + "' has more vectors than its dimension");
        }
        require_finite(b);
        const double defect = orthonormality_defect(b);
        if (defect > 1e-9) {
            throw InvariantError("orthonormal", "vectors for '" + p.label + "' deviate by " +
                                                    std::to_string(defect));
        }
    }
}

LocalSubspace LocalSubspace::full(const SystemShape& shape) {
    std::vector<ComplexMatrix> bases;
    for (const auto& p : shape.parties()) {
        const auto d = static_cast<Eigen::Index>(p.dim);
        bases.push_back(ComplexMatrix::Identity(d, d));
    }
    return LocalSubspace(shape, std::move(bases));
}

LocalSubspace LocalSubspace::computational(const SystemShape& shape,
                                           const std::vector<std::vector<std::size_t>>& indices) {
    std::vector<ComplexMatrix> bases;
    for (const auto& p : shape.parties()) {
        const auto d = static_cast<Eigen::Index>(p.dim);
        bases.push_back(ComplexMatrix::Identity(d, d));
    }
    return from_basis(shape, bases, indices);
}

LocalSubspace LocalSubspace::from_basis(const SystemShape& shape,
                                        const std::vector<ComplexMatrix>& bases,
                                        const std::vector<std::vector<std::size_t>>& indices) {
    if (bases.size() != shape.party_count() || indices.size() != shape.party_count()) {
        throw DimensionError("from_basis: one basis and one index list per party required");
    }
    std::vector<ComplexMatrix> picked;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        ComplexMatrix cols(bases[i].rows(), static_cast<Eigen::Index>(indices[i].size()));
        for (std::size_t k = 0; k < indices[i].size(); ++k) {
            if (static_cast<Eigen::Index>(indices[i][k]) >= bases[i].cols()) {
                throw DimensionError("basis index out of range for party '" +
                                     shape.party(i).label + "'");
            }
            cols.col(static_cast<Eigen::Index>(k)) =
                bases[i].col(static_cast<Eigen::Index>(indices[i][k]));
        }
        picked.push_back(std::move(cols));
    }
    return LocalSubspace(shape, std::move(picked));
}

std::vector<std::size_t> LocalSubspace::dims() const {
    std::vector<std::size_t> out;
    for (const auto& b : bases_) out.push_back(static_cast<std::size_t>(b.cols()));
    return out;
}

SystemShape LocalSubspace::compressed_shape() const {
    std::vector<Party> parties;
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        const auto k = static_cast<std::size_t>(bases_[i].cols());
        parties.push_back({shape_.party(i).label, k, {k}});
    }
    return SystemShape(std::move(parties));
}

ComplexMatrix LocalSubspace::isometry() const { return kron_all(bases_); }

ComplexMatrix LocalSubspace::projector() const {
    const ComplexMatrix v = isometry();
    return v * v.adjoint();
}

std::string to_string(Classification c) {
    switch (c) {
        case Classification::zero: return "zero";
        case Classification::pure_product: return "pure-product";
        case Classification::pure_entangled: return "pure-entangled";
        case Classification::mixed: return "mixed";
    }
    return "unknown";
}

namespace {

// Classifies an unnormalized compressed matrix whose trace is `weight`.
ProjectionOutcome classify(const ComplexMatrix& compressed, double weight,
                           const SystemShape& compressed_shape, const Tolerance& tol) {
    ProjectionOutcome out;
    out.weight = weight;
    if (!(weight > kZeroWeight)) {
        out.classification = Classification::zero;
        return out;
    }
    // Rounding in the parent matrix is amplified by 1/weight after normalizing.
    Tolerance scaled = tol;
    scaled.herm_atol = std::max(tol.herm_atol, 1e-14 / weight);
    scaled.psd_atol = std::max(tol.psd_atol, 1e-14 / weight);
    ComplexMatrix normalized = compressed / weight;
    normalized = 0.5 * (normalized + normalized.adjoint());
    const auto eig = eig_hermitian(normalized, scaled);
    const double total = eig.values.sum();
    out.purity_ratio = total > 0.0 ? eig.values(0) / total : 0.0;
    out.state = DensityMatrix(compressed_shape, std::move(normalized), scaled);
    if (out.purity_ratio >= 1.0 - tol.purity_atol) {
        out.pure = PureState::normalized(compressed_shape, eig.vectors.col(0));
        out.signature = dimension_signature(*out.pure, tol);
        out.classification = out.signature->entangled() ? Classification::pure_entangled
                                                        : Classification::pure_product;
    } else {
        out.classification = Classification::mixed;
    }
    return out;
}

}  // namespace

ProjectionOutcome project(const DensityMatrix& rho, const LocalSubspace& s, const Tolerance& tol) {
    if (!(s.parent_shape().dims() == rho.shape().dims())) {
        throw DimensionError("subspace shape " + s.parent_shape().describe() +
                             " does not match state shape " + rho.shape().describe());
    }
    const ComplexMatrix v = s.isometry();
    const ComplexMatrix compressed = v.adjoint() * rho.matrix() * v;
    return classify(compressed, compressed.trace().real(), s.compressed_shape(), tol);
}

ComplexVector embed(const LocalSubspace& s, const ComplexVector& compressed) {
    return s.isometry() * compressed;
}

ComplexMatrix embed(const LocalSubspace& s, const ComplexMatrix& compressed) {
    const ComplexMatrix v = s.isometry();
    return v * compressed * v.adjoint();
}

CertificateCheck check_certificate(const DensityMatrix& rho, const LocalSubspace& s,
                                   const Tolerance& tol) {
    ProjectionOutcome outcome = project(rho, s, tol);
    switch (outcome.classification) {
        case Classification::zero: return Refusal{outcome.classification, "weight zero"};
        case Classification::mixed: return Refusal{outcome.classification, "mixed"};
        case Classification::pure_product: return Refusal{outcome.classification, "product"};
        case Classification::pure_entangled: break;
    }
    return DssCertificate{s, std::move(outcome), {}};
}

std::uint64_t candidate_count(const SystemShape& shape, std::uint64_t cap) {
    std::uint64_t total = 1;
    for (const auto& p : shape.parties()) {
        if (p.dim >= 63) {
            throw CapExceeded("candidate count (more than 2^63 subsets for party '" + p.label +
                                  "'; restrict the bases)",
                              std::numeric_limits<std::uint64_t>::max(), cap);
        }
        const std::uint64_t subsets = (std::uint64_t{1} << p.dim) - 1;
        if (total > cap / subsets) {
            throw CapExceeded("candidate count (restrict the bases or raise the cap)",
                              total > std::numeric_limits<std::uint64_t>::max() / subsets
                                  ? std::numeric_limits<std::uint64_t>::max()
                                  : total * subsets,
                              cap);
        }
        total *= subsets;
    }
    return total;
}

namespace {

// rho expressed in the product of the supplied local bases, plus the data
// used to decide candidates without compressing them.
struct PreparedSearch {
    SystemShape shape;
    std::vector<ComplexMatrix> bases;
    std::vector<std::size_t> dims;
    std::vector<std::size_t> strides;
    std::vector<std::uint64_t> radices;  // 2^d - 1 per party
    ComplexMatrix rho;                   // in the product basis
    // digits[flat * parties + p]: party p's basis index of flat index `flat`.
    std::vector<std::size_t> digits;
    // For each flat index i: (j, q_ij) with q_ij a lower bound on the second
    // eigenvalue of any compression containing both i and j; descending q.
    std::vector<std::vector<std::pair<std::size_t, double>>> witnesses;
};

std::vector<ComplexMatrix> resolve_bases(const SystemShape& shape,
                                         const std::vector<ComplexMatrix>& bases) {
    if (bases.empty()) {
        std::vector<ComplexMatrix> out;
        for (const auto& p : shape.parties()) {
            const auto d = static_cast<Eigen::Index>(p.dim);
            out.push_back(ComplexMatrix::Identity(d, d));
        }
        return out;
    }
    if (bases.size() != shape.party_count()) {
        throw DimensionError("one basis per party required, got " + std::to_string(bases.size()));
    }
    for (std::size_t i = 0; i < bases.size(); ++i) {
        const auto d = static_cast<Eigen::Index>(shape.party(i).dim);
        if (bases[i].rows() != d || bases[i].cols() != d) {
            throw DimensionError("basis for '" + shape.party(i).label + "' must be " +
                                 std::to_string(d) + "x" + std::to_string(d));
        }
        require_finite(bases[i]);
        const double defect = orthonormality_defect(bases[i]);
        if (defect > 1e-9) {
            throw InvariantError("orthonormal", "basis for '" + shape.party(i).label +
                                                    "' deviates by " + std::to_string(defect));
        }
    }
    return bases;
}

PreparedSearch prepare(const DensityMatrix& rho, const std::vector<ComplexMatrix>& bases,
                       const SearchOptions& options, const Tolerance& tol, bool need_witnesses) {
    PreparedSearch s{rho.shape(), resolve_bases(rho.shape(), bases), rho.shape().dims(),
                     {}, {}, {}, {}, {}};
    candidate_count(s.shape, options.candidate_cap);
    const std::size_t parties = s.dims.size();
    s.strides.assign(parties, 1);
    for (std::size_t k = parties; k-- > 1;) s.strides[k - 1] = s.strides[k] * s.dims[k];
    for (auto d : s.dims) s.radices.push_back((std::uint64_t{1} << d) - 1);

    const ComplexMatrix b = kron_all(s.bases);
    s.rho = b.adjoint() * rho.matrix() * b;

    const std::size_t side = s.shape.total_dim();
    s.digits.resize(side * parties);
    for (std::size_t i = 0; i < side; ++i) {
        for (std::size_t p = 0; p < parties; ++p) {
            s.digits[i * parties + p] = (i / s.strides[p]) % s.dims[p];
        }
    }

    // Pair storage grows with side^2; beyond this size only zero-weight pruning runs.
    if (need_witnesses && side <= 1024) {
        s.witnesses.resize(side);
        const double floor = tol.purity_atol * kZeroWeight;
        for (std::size_t i = 0; i < side; ++i) {
            const double di = s.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
            for (std::size_t j = i + 1; j < side; ++j) {
                const double dj =
                    s.rho(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)).real();
                const double sum = di + dj;
                if (!(sum > 0.0)) continue;
                const double off =
                    std::norm(s.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
                // Second eigenvalue of the 2x2 principal block is det / top >= det / trace,
                // and interlacing carries the bound to any compression containing both.
                const double q = (di * dj - off) / sum;
                if (q > floor) {
                    s.witnesses[i].push_back({j, q});
                    s.witnesses[j].push_back({i, q});
                }
            }
        }
        for (auto& w : s.witnesses) {
            std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) {
                return a.second > b.second || (a.second == b.second && a.first < b.first);
            });
        }
    }
    return s;
}

struct Candidate {
    std::vector<std::uint64_t> masks;
    std::vector<std::vector<std::size_t>> indices;  // ascending per party
    std::vector<Eigen::Index> flat;                 // selected flat indices, canonical order
};

Candidate decode(const PreparedSearch& s, std::uint64_t index) {
    const std::size_t parties = s.dims.size();
    Candidate c;
    c.masks.assign(parties, 0);
    for (std::size_t p = parties; p-- > 0;) {
        c.masks[p] = index % s.radices[p] + 1;
        index /= s.radices[p];
    }
    for (std::size_t p = 0; p < parties; ++p) {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < s.dims[p]; ++k) {
            if (c.masks[p] >> k & 1u) idx.push_back(k);
        }
        c.indices.push_back(std::move(idx));
    }
    c.flat = {0};
    for (std::size_t p = 0; p < parties; ++p) {
        std::vector<Eigen::Index> next;
        next.reserve(c.flat.size() * c.indices[p].size());
        for (auto f : c.flat) {
            for (auto k : c.indices[p]) {
                next.push_back(f + static_cast<Eigen::Index>(k * s.strides[p]));
            }
        }
        c.flat = std::move(next);
    }
    return c;
}

double candidate_weight(const PreparedSearch& s, const Candidate& c) {
    double w = 0.0;
    for (auto f : c.flat) w += s.rho(f, f).real();
    return w;
}

bool contains(const PreparedSearch& s, const Candidate& c, std::size_t flat) {
    const std::size_t parties = s.dims.size();
    for (std::size_t p = 0; p < parties; ++p) {
        if (!(c.masks[p] >> s.digits[flat * parties + p] & 1u)) return false;
    }
    return true;
}

// True when some pair of selected indices proves the compression has a second
// eigenvalue above twice the purity threshold.
bool provably_mixed(const PreparedSearch& s, const Candidate& c, double weight,
                    const Tolerance& tol) {
    if (s.witnesses.empty()) return false;
    const double threshold = 2.0 * tol.purity_atol * weight;
    for (auto f : c.flat) {
        for (const auto& [j, q] : s.witnesses[static_cast<std::size_t>(f)]) {
            if (q <= threshold) break;
            if (contains(s, c, j)) return true;
        }
    }
    return false;
}

SystemShape compressed_shape(const PreparedSearch& s, const Candidate& c) {
    std::vector<Party> parties;
    for (std::size_t p = 0; p < s.dims.size(); ++p) {
        const auto k = c.indices[p].size();
        parties.push_back({s.shape.party(p).label, k, {k}});
    }
    return SystemShape(std::move(parties));
}

template <typename Result, typename Fn>
std::vector<Result> run_candidates(const PreparedSearch& s, const SearchOptions& options,
                                   SearchStats& stats, Fn&& evaluate) {
    std::uint64_t total = 1;
    for (auto r : s.radices) total *= r;
    stats.candidates = total;
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::uint64_t>(options.workers, total));

    struct Chunk {
        std::vector<Result> results;
        SearchStats stats;
        std::exception_ptr error;
    };
    std::vector<Chunk> chunks(workers);
    auto work = [&](std::size_t w) {
        const std::uint64_t begin = total * w / workers;
        const std::uint64_t end = total * (w + 1) / workers;
        try {
            for (std::uint64_t i = begin; i < end; ++i) {
                if (auto r = evaluate(decode(s, i), chunks[w].stats)) {
                    chunks[w].results.push_back(std::move(*r));
                }
            }
        } catch (...) {
            chunks[w].error = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
        for (auto& t : threads) t.join();
    }
    std::vector<Result> merged;
    for (auto& chunk : chunks) {
        if (chunk.error) std::rethrow_exception(chunk.error);
        stats.evaluated += chunk.stats.evaluated;
        stats.pruned_zero += chunk.stats.pruned_zero;
        stats.pruned_mixed += chunk.stats.pruned_mixed;
        for (auto& r : chunk.results) merged.push_back(std::move(r));
    }
    return merged;
}

bool has_idle_vector(const ProjectionOutcome& outcome, const Tolerance& tol) {
    const auto& psi = *outcome.pure;
    const auto dims = psi.shape().dims();
    const ComplexMatrix rho = psi.projector();
    for (std::size_t p = 0; p < dims.size(); ++p) {
        const std::size_t keep[] = {p};
        const ComplexMatrix reduced = partial_trace(rho, dims, keep);
        for (Eigen::Index k = 0; k < reduced.rows(); ++k) {
            if (reduced(k, k).real() <= std::max(tol.purity_atol, kZeroWeight)) return true;
        }
    }
    return false;
}

}  // namespace

DssSearch find_dss(const DensityMatrix& rho, const std::vector<ComplexMatrix>& bases,
                   const DssConstraints& constraints, const Tolerance& tol,
                   const SearchOptions& options) {
    if (!constraints.min_signature.empty() &&
        constraints.min_signature.size() != rho.shape().party_count()) {
        throw DimensionError("minimum signature needs one entry per party");
    }
    const PreparedSearch s = prepare(rho, bases, options, tol, options.prune);
    DssSearch out;
    out.certificates = run_candidates<DssCertificate>(
        s, options, out.stats,
        [&](const Candidate& c, SearchStats& stats) -> std::optional<DssCertificate> {
            const double weight = candidate_weight(s, c);
            if (options.prune) {
                if (!(weight > kZeroWeight)) {
                    ++stats.pruned_zero;
                    return std::nullopt;
                }
                if (provably_mixed(s, c, weight, tol)) {
                    ++stats.pruned_mixed;
                    return std::nullopt;
                }
            }
            ++stats.evaluated;
            ProjectionOutcome outcome = classify(s.rho(c.flat, c.flat), weight, compressed_shape(s, c), tol);
            if (outcome.classification != Classification::pure_entangled) return std::nullopt;
            const auto& sig = *outcome.signature;
            if (constraints.require_entangled && !sig.fully_entangled()) return std::nullopt;
            if (!sig.meets(constraints.min_signature)) return std::nullopt;
            if (constraints.minimal_support && has_idle_vector(outcome, tol)) return std::nullopt;
            return DssCertificate{LocalSubspace::from_basis(s.shape, s.bases, c.indices),
                                  std::move(outcome), c.indices};
        });
    return out;
}

std::uint64_t rank_bound(const SystemShape& shape, std::size_t copies,
                         const std::vector<std::size_t>& signature) {
    if (copies == 0) throw DimensionError("rank_bound: copies must be positive");
    if (signature.size() != shape.party_count()) {
        throw DimensionError("rank_bound: signature needs one entry per party");
    }
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t single = 1;
    for (auto d : shape.dims()) {
        if (single > kMax / d) throw CapExceeded("rank bound", kMax, kMax);
        single *= d;
    }
    std::uint64_t total = 1;
    for (std::size_t c = 0; c < copies; ++c) {
        if (total > kMax / single) throw CapExceeded("rank bound", kMax, kMax);
        total *= single;
    }
    std::uint64_t sig = 1;
    for (auto n : signature) {
        if (n < 1) throw InvariantError("signature", "signature entries must be >= 1");
        if (sig > kMax / n) throw CapExceeded("rank bound", kMax, kMax);
        sig *= n;
    }
    if (sig > total) throw InvariantError("signature", "signature exceeds the space dimension");
    return total - sig + 1;
}

RankBoundReport check_rank_bound(const DensityMatrix& rho, std::size_t copies,
                                 const DssCertificate& cert, const Tolerance& tol) {
    if (!cert.outcome.signature) throw InvariantError("certificate", "certificate has no signature");
    const DensityMatrix power = tensor_power(rho, copies);
    if (!(cert.subspace.parent_shape().dims() == power.shape().dims())) {
        throw DimensionError("certificate does not belong to " + std::to_string(copies) +
                             " copies of this state");
    }
    RankBoundReport r;
    r.rank = power.rank(tol);
    r.bound = rank_bound(rho.shape(), copies, cert.outcome.signature->ranks);
    r.satisfied = r.rank <= r.bound;
    return r;
}

PurifyingSearch find_purifying_subspaces(const DensityMatrix& rho,
                                         const std::vector<ComplexMatrix>& bases,
                                         std::optional<double> reference, const Tolerance& tol,
                                         const SearchOptions& options) {
    PurifyingSearch out;
    out.reference = reference ? *reference : concurrence(rho, tol);
    const PreparedSearch s = prepare(rho, bases, options, tol, false);
    std::uint64_t skipped = 0;
    std::mutex skipped_mutex;
    out.subspaces = run_candidates<PurifyingSubspace>(
        s, options, out.stats,
        [&](const Candidate& c, SearchStats& stats) -> std::optional<PurifyingSubspace> {
            if (c.indices.size() != 2 || c.indices[0].size() != 2 || c.indices[1].size() != 2) {
                std::lock_guard lock(skipped_mutex);
                ++skipped;
                return std::nullopt;
            }
            const double weight = candidate_weight(s, c);
            if (!(weight > kZeroWeight)) {
                ++stats.pruned_zero;
                return std::nullopt;
            }
            ++stats.evaluated;
            ProjectionOutcome outcome = classify(s.rho(c.flat, c.flat), weight, compressed_shape(s, c), tol);
            if (outcome.classification != Classification::mixed) return std::nullopt;
            const double after = concurrence(*outcome.state, tol);
            if (!(after > out.reference + tol.purity_atol)) return std::nullopt;
            return PurifyingSubspace{LocalSubspace::from_basis(s.shape, s.bases, c.indices),
                                     c.indices, weight, *outcome.state, out.reference, after};
        });
    out.skipped_shape = skipped;
    return out;
}

PurifyingSearch find_purifying_subspaces(const DensityMatrix& sigma, std::size_t copies,
                                         const std::vector<ComplexMatrix>& bases,
                                         const Tolerance& tol, const SearchOptions& options) {
    return find_purifying_subspaces(tensor_power(sigma, copies), bases, concurrence(sigma, tol), tol,
                                    options);
}

}  // namespace distill
