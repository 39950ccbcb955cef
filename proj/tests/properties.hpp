#pragma once

// Seeded property suites shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "distill/dss.hpp"
#include "distill/entanglement.hpp"
#include "distill/localops.hpp"
#include "support.hpp"

namespace distill::testing {

struct SuiteResult {
    std::size_t trials = 0;
    std::size_t failures = 0;
    std::size_t special = 0;  // suite-specific count (e.g. rank-deficient cases)
    double worst = 0.0;       // suite-specific worst residual
    std::string first_failure;

    void fail(const std::string& what) {
        if (failures++ == 0) first_failure = what;
    }
};

inline const std::vector<std::vector<std::size_t>>& property_shapes() {
    static const std::vector<std::vector<std::size_t>> shapes{{2, 2}, {3, 3}, {2, 2, 2}};
    return shapes;
}

// Random state of random rank, random invertible product operator: rank is kept.
inline SuiteResult rank_invariance_suite(std::size_t trials = 200, std::uint64_t salt = 101) {
    auto g = rng(salt);
    SuiteResult r;
    for (std::size_t t = 0; t < trials; ++t) {
        const SystemShape shape = SystemShape::from_dims(property_shapes()[t % property_shapes().size()]);
        std::uniform_int_distribution<std::size_t> rank_pick(1, shape.total_dim());
        const std::size_t rank = rank_pick(g);
        const DensityMatrix rho = random_density(g, shape, rank);
        const ProductOperator op = random_invertible_product(g, shape);
        const RankInvarianceReport rep = verify_rank_invariance(rho, op);
        ++r.trials;
        if (!rep.full_rank || !rep.consistent || rep.rank_before != rank || rep.rank_after != rank) {
            std::ostringstream os;
            os << "trial " << t << " on " << shape.describe() << ": rank " << rep.rank_before << " -> "
               << rep.rank_after << " (planted " << rank << ", full_rank " << rep.full_rank << ")";
            r.fail(os.str());
        }
    }
    return r;
}

// Random pure state, random invertible product operator: signature is kept.
// Every third state is a planted lower-signature state (random local isometries
// applied to a smaller entangled core) so signatures other than full occur.
inline SuiteResult signature_invariance_suite(std::size_t trials = 200, std::uint64_t salt = 202) {
    auto g = rng(salt);
    SuiteResult r;
    for (std::size_t t = 0; t < trials; ++t) {
        const SystemShape shape = SystemShape::from_dims(property_shapes()[t % property_shapes().size()]);
        PureState psi = random_pure(g, shape);
        if (t % 3 == 2) {
            // product across the first cut, then rotated locally
            std::vector<ComplexMatrix> us;
            ComplexVector v = basis_vector(static_cast<Eigen::Index>(shape.party(0).dim), 0);
            std::vector<std::size_t> rest_dims;
            for (std::size_t i = 1; i < shape.party_count(); ++i) rest_dims.push_back(shape.party(i).dim);
            const PureState rest = random_pure(g, SystemShape::from_dims(rest_dims));
            ComplexVector full = kron(v, rest.amplitudes());
            ComplexMatrix u = random_unitary(g, static_cast<Eigen::Index>(shape.party(0).dim));
            const auto rest_side = static_cast<Eigen::Index>(rest.shape().total_dim());
            full = kron(u, ComplexMatrix::Identity(rest_side, rest_side)) * full;
            psi = PureState::normalized(shape, full);
            ++r.special;
        }
        const ProductOperator op = random_invertible_product(g, shape);
        const SignatureInvarianceReport rep = verify_signature_invariance(psi, op);
        ++r.trials;
        if (!rep.full_rank || !rep.consistent || !(rep.signature_before == rep.signature_after)) {
            r.fail("trial " + std::to_string(t) + " on " + shape.describe() + ": " +
                   rep.signature_before.to_string() + " -> " + rep.signature_after.to_string());
        }
    }
    return r;
}

// Random local factors, a third of them rank-deficient by construction.
inline SuiteResult decomposition_suite(std::size_t trials = 500, std::uint64_t salt = 303) {
    auto g = rng(salt);
    std::uniform_int_distribution<Eigen::Index> dim_pick(1, 6);
    SuiteResult r;
    for (std::size_t t = 0; t < trials; ++t) {
        Eigen::Index n = dim_pick(g);
        ComplexMatrix m;
        Eigen::Index planted = n;
        if (t % 3 == 0) {
            if (n == 1) n = 2;
            std::uniform_int_distribution<Eigen::Index> rank_pick(1, n - 1);
            planted = rank_pick(g);
            m = random_matrix(g, n, planted) * random_matrix(g, planted, n);
            ++r.special;
        } else {
            m = random_matrix(g, n, n);
        }
        const LocalFactor f = LocalFactor::normalized("A", m);
        const LpoLfoLuo d = decompose(f);
        const ComplexMatrix id = ComplexMatrix::Identity(n, n);
        const double recon = max_abs(d.luo * d.lfo * d.lpo - f.matrix());
        const double idem = max_abs(d.lpo * d.lpo - d.lpo);
        const double unit = max_abs(d.luo.adjoint() * d.luo - id);
        r.worst = std::max({r.worst, recon, idem, unit});
        ++r.trials;
        if (recon > 1e-9 || idem > 1e-9 || unit > 1e-9 || static_cast<Eigen::Index>(d.retained_dim) != planted) {
            std::ostringstream os;
            os << "trial " << t << " (n=" << n << ", planted rank " << planted << ", retained " << d.retained_dim
               << "): recon " << recon << ", idempotence " << idem << ", unitarity " << unit;
            r.fail(os.str());
        }
    }
    return r;
}


struct PlantedInstance {
    DensityMatrix rho;
    std::vector<ComplexMatrix> bases;             // empty: computational
    std::vector<std::vector<std::size_t>> planted; // per-party basis indices
};

inline PlantedInstance planted_instance(std::mt19937_64& g, const std::vector<std::size_t>& dims, bool rotated) {
    const SystemShape shape = SystemShape::from_dims(dims);
    std::vector<std::vector<std::size_t>> planted;
    for (std::size_t d : dims) {
        std::vector<std::size_t> idx(d);
        for (std::size_t i = 0; i < d; ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), g);
        std::uniform_int_distribution<std::size_t> size_pick(2, d);
        std::vector<std::size_t> chosen(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(size_pick(g)));
        std::sort(chosen.begin(), chosen.end());
        planted.push_back(chosen);
    }
    // at least one party must leave room for the orthogonal product component
    std::size_t room = dims.size();
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (planted[i].size() < dims[i]) room = i;
    }
    if (room == dims.size()) {
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (planted[i].size() >= 3) room = i;
        }
        planted.at(room).pop_back();
    }
    std::vector<ComplexMatrix> bases;
    for (std::size_t d : dims) {
        const auto n = static_cast<Eigen::Index>(d);
        bases.push_back(rotated ? random_unitary(g, n) : ComplexMatrix::Identity(n, n));
    }
    // entangled core on the planted subspace, written in the chosen bases
    std::vector<std::size_t> core_dims;
    for (const auto& p : planted) core_dims.push_back(p.size());
    const PureState core = random_pure(g, SystemShape::from_dims(core_dims));
    std::vector<ComplexMatrix> iso;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        ComplexMatrix cols(static_cast<Eigen::Index>(dims[i]), static_cast<Eigen::Index>(planted[i].size()));
        for (std::size_t k = 0; k < planted[i].size(); ++k) {
            cols.col(static_cast<Eigen::Index>(k)) = bases[i].col(static_cast<Eigen::Index>(planted[i][k]));
        }
        iso.push_back(cols);
    }
    const ComplexVector psi = kron_all(iso) * core.amplitudes();
    // product component: basis vector outside the planted set on party `room`
    std::vector<ComplexMatrix> prod_cols;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        std::size_t k = 0;
        if (i == room) {
            while (std::find(planted[i].begin(), planted[i].end(), k) != planted[i].end()) ++k;
        } else {
            std::uniform_int_distribution<std::size_t> any(0, dims[i] - 1);
            k = any(g);
        }
        prod_cols.push_back(bases[i].col(static_cast<Eigen::Index>(k)));
    }
    const ComplexVector prod = kron_all(prod_cols).col(0);
    std::uniform_real_distribution<double> q_pick(0.2, 0.8);
    const double q = q_pick(g);
    ComplexMatrix m = q * psi * psi.adjoint() + (1 - q) * prod * prod.adjoint();
    m = 0.5 * (m + m.adjoint());
    return {DensityMatrix(shape, m), rotated ? bases : std::vector<ComplexMatrix>{}, planted};
}

inline const std::vector<std::vector<std::size_t>>& planted_shapes() {
    static const std::vector<std::vector<std::size_t>> shapes{{2, 3}, {3, 3}, {2, 2, 3}, {3, 2, 2}, {4, 4}, {4, 3, 2}};
    return shapes;
}

inline bool same_certificates(const DssSearch& a, const DssSearch& b) {
    if (a.certificates.size() != b.certificates.size()) return false;
    for (std::size_t i = 0; i < a.certificates.size(); ++i) {
        const auto& x = a.certificates[i];
        const auto& y = b.certificates[i];
        if (x.basis_indices != y.basis_indices || x.outcome.weight != y.outcome.weight) return false;
        if (max_abs(x.outcome.state->matrix() - y.outcome.state->matrix()) != 0.0) return false;
    }
    return true;
}

// Planted DSS is recovered, and pruned and unpruned searches agree exactly.
inline SuiteResult planted_suite(std::size_t instances = 60, std::uint64_t salt = 404) {
    auto g = rng(salt);
    SuiteResult r;
    for (std::size_t t = 0; t < instances; ++t) {
        const auto& dims = planted_shapes()[t % planted_shapes().size()];
        const bool rotated = (t / planted_shapes().size()) % 2 == 1;
        const PlantedInstance inst = planted_instance(g, dims, rotated);
        DssConstraints all;  // every certificate, not only minimal ones
        SearchOptions pruned, unpruned;
        unpruned.prune = false;
        const DssSearch a = find_dss(inst.rho, inst.bases, all, {}, pruned);
        const DssSearch b = find_dss(inst.rho, inst.bases, all, {}, unpruned);
        ++r.trials;
        r.special += a.stats.pruned_zero + a.stats.pruned_mixed;
        const bool found = std::any_of(a.certificates.begin(), a.certificates.end(),
                                       [&](const DssCertificate& c) { return c.basis_indices == inst.planted; });
        if (!found) {
            r.fail("instance " + std::to_string(t) + ": planted subspace not recovered");
        } else if (!same_certificates(a, b)) {
            r.fail("instance " + std::to_string(t) + ": pruned and unpruned searches differ");
        }
    }
    return r;
}

}  // namespace distill::testing
