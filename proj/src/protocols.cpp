#include "distill/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "distill/error.hpp"

namespace distill {

bool Predicate::holds(const std::vector<Outcome>& history) const {
    for (auto i : outcomes) {
        if (i >= history.size()) {
            throw DimensionError("predicate refers to outcome " + std::to_string(i) + " but only " +
                                 std::to_string(history.size()) + " were recorded");
        }
    }
    switch (kind) {
        case Kind::parity_odd:
        case Kind::parity_even: {
            std::size_t sum = 0;
            for (auto i : outcomes) sum += history[i].value;
            return (sum % 2 == 1) == (kind == Kind::parity_odd);
        }
        case Kind::equals:
            if (outcomes.empty()) throw DimensionError("equals predicate needs an outcome index");
            return history[outcomes.front()].value == value;
    }
    return false;
}

double RunResult::success_weight() const {
    double total = 0.0;
    for (const auto& b : branches) total += b.probability;
    return total;
}

namespace {

constexpr double kUnitaryAtol = 1e-9;

// Per-party local matrices for the current shape, `fallback` for absent parties.
std::vector<ComplexMatrix> per_party(const PartyMatrices& given, const SystemShape& shape,
                                     std::size_t step, bool square) {
    for (const auto& [label, m] : given) {
        bool found = false;
        for (const auto& p : shape.parties()) found = found || p.label == label;
        if (!found) throw ProtocolError(step, "no party '" + label + "' in shape " + shape.describe());
        (void)m;
    }
    std::vector<ComplexMatrix> out;
    for (const auto& p : shape.parties()) {
        const auto d = static_cast<Eigen::Index>(p.dim);
        auto it = given.find(p.label);
        if (it == given.end()) {
            out.push_back(ComplexMatrix::Identity(d, d));
            continue;
        }
        const auto& m = it->second;
        if (m.rows() != d || (square && m.cols() != d) || m.cols() < 1 || m.cols() > d) {
            throw ProtocolError(step, "matrix for '" + p.label + "' is " +
                                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                          ", party dimension is " + std::to_string(p.dim));
        }
        require_finite(m);
        out.push_back(m);
    }
    return out;
}

struct Context {
    const Tolerance& tol;
    double dropped = 0.0;
};

// Replaces the state with out / q and scales the branch probability; returns
// false when the outcome cannot occur.
bool post_select(BranchTrace& b, const ComplexMatrix& out, const SystemShape& shape, Context& ctx) {
    const double q = out.trace().real();
    if (!(q > kBranchThreshold)) {
        ctx.dropped += b.probability * std::max(q, 0.0);
        return false;
    }
    Tolerance scaled = ctx.tol;
    scaled.herm_atol = std::max(ctx.tol.herm_atol, 1e-14 / q);
    scaled.psd_atol = std::max(ctx.tol.psd_atol, 1e-14 / q);
    ComplexMatrix normalized = out / q;
    normalized = 0.5 * (normalized + normalized.adjoint());
    if (!(shape == b.state.shape())) b.shape_history.push_back(shape);
    b.state = DensityMatrix(shape, std::move(normalized), scaled);
    b.probability *= q;
    return true;
}

std::vector<BranchTrace> run_steps(const Protocol& steps, std::vector<BranchTrace> branches,
                                   Context& ctx, std::size_t top_index, bool nested);

std::vector<BranchTrace> run_step(const ProtocolStep& step, BranchTrace b, Context& ctx,
                                  std::size_t index) {
    const SystemShape shape = b.state.shape();
    const ComplexMatrix& rho = b.state.matrix();
    std::vector<BranchTrace> out;

    if (const auto* s = std::get_if<ProjectStep>(&step.action)) {
        const auto vecs = per_party(s->vectors, shape, index, false);
        std::vector<ComplexMatrix> projectors;
        for (std::size_t i = 0; i < vecs.size(); ++i) {
            const double defect = orthonormality_defect(vecs[i]);
            if (defect > 1e-9) {
                throw ProtocolError(index, "projection vectors for '" + shape.party(i).label +
                                               "' are not orthonormal");
            }
            projectors.push_back(vecs[i] * vecs[i].adjoint());
        }
        const ComplexMatrix p = kron_all(projectors);
        const ComplexMatrix projected = p * rho * p.adjoint();
        const double q = std::clamp(projected.trace().real(), 0.0, 1.0);
        const double before = b.probability;
        if (post_select(b, projected, shape, ctx)) {
            ctx.dropped += before * (1.0 - q);
            out.push_back(std::move(b));
        } else {
            ctx.dropped += before * (1.0 - std::max(q, 0.0));
        }
        return out;
    }

    if (const auto* s = std::get_if<LocalUnitaryStep>(&step.action)) {
        const auto us = per_party(s->unitaries, shape, index, true);
        for (std::size_t i = 0; i < us.size(); ++i) {
            const ComplexMatrix g = us[i].adjoint() * us[i];
            if (max_abs(g - ComplexMatrix::Identity(g.rows(), g.cols())) > kUnitaryAtol) {
                throw ProtocolError(index, "matrix for '" + shape.party(i).label + "' is not unitary");
            }
        }
        const ComplexMatrix u = kron_all(us);
        ComplexMatrix rotated = u * rho * u.adjoint();
        rotated = 0.5 * (rotated + rotated.adjoint());
        b.state = DensityMatrix(shape, std::move(rotated), ctx.tol);
        out.push_back(std::move(b));
        return out;
    }

    if (const auto* s = std::get_if<FilterStep>(&step.action)) {
        const auto fs = per_party(s->factors, shape, index, true);
        for (std::size_t i = 0; i < fs.size(); ++i) {
            const auto sv = svd(fs[i]).singulars;
            if (sv.size() && sv(0) > 1.0 + 1e-9) {
                throw ProtocolError(index, "filter factor for '" + shape.party(i).label +
                                               "' has spectral norm above 1");
            }
        }
        const ComplexMatrix m = kron_all(fs);
        const ComplexMatrix filtered = m * rho * m.adjoint();
        const double q = std::clamp(filtered.trace().real(), 0.0, 1.0);
        const double before = b.probability;
        if (post_select(b, filtered, shape, ctx)) {
            ctx.dropped += before * (1.0 - q);
            out.push_back(std::move(b));
        } else {
            ctx.dropped += before * (1.0 - std::max(q, 0.0));
        }
        return out;
    }

    if (const auto* s = std::get_if<MeasureStep>(&step.action)) {
        std::size_t party = 0;
        try {
            party = shape.index_of(s->party);
        } catch (const DimensionError& e) {
            throw ProtocolError(index, e.what());
        }
        const auto& subdims = shape.party(party).subdims;
        if (s->particle >= subdims.size()) {
            throw ProtocolError(index, "party '" + s->party + "' holds " +
                                           std::to_string(subdims.size()) + " particles, asked for " +
                                           std::to_string(s->particle));
        }
        const auto d = static_cast<Eigen::Index>(subdims[s->particle]);
        const ComplexMatrix basis = s->basis.size() ? s->basis : ComplexMatrix::Identity(d, d);
        if (basis.rows() != d || basis.cols() != d || orthonormality_defect(basis) > 1e-9) {
            throw ProtocolError(index, "measurement basis must be a complete orthonormal " +
                                           std::to_string(d) + "x" + std::to_string(d) + " matrix");
        }
        const auto flat = shape.flat_subdims();
        const std::size_t pos = shape.flat_offset(party) + s->particle;
        std::size_t left = 1, right = 1;
        for (std::size_t i = 0; i < pos; ++i) left *= flat[i];
        for (std::size_t i = pos + 1; i < flat.size(); ++i) right *= flat[i];

        std::vector<Party> parties = shape.parties();
        auto& changed = parties[party];
        changed.subdims.erase(changed.subdims.begin() + static_cast<std::ptrdiff_t>(s->particle));
        changed.dim /= static_cast<std::size_t>(d);
        if (changed.subdims.empty()) parties.erase(parties.begin() + static_cast<std::ptrdiff_t>(party));
        if (parties.empty()) throw ProtocolError(index, "cannot discard the last particle");
        const SystemShape reduced(std::move(parties));

        const auto l = static_cast<Eigen::Index>(left), r = static_cast<Eigen::Index>(right);
        for (Eigen::Index j = 0; j < d; ++j) {
            const ComplexMatrix k =
                kron(kron(ComplexMatrix::Identity(l, l), ComplexMatrix(basis.col(j))),
                     ComplexMatrix::Identity(r, r));
            BranchTrace child = b;
            if (post_select(child, k.adjoint() * rho * k, reduced, ctx)) {
                child.outcomes.push_back({index, s->party, static_cast<std::size_t>(j)});
                out.push_back(std::move(child));
            }
        }
        return out;
    }

    const auto& cond = std::get<ConditionalStep>(step.action);
    bool holds = false;
    try {
        holds = cond.when.holds(b.outcomes);
    } catch (const DimensionError& e) {
        throw ProtocolError(index, e.what());
    }
    if (!holds) {
        out.push_back(std::move(b));
        return out;
    }
    std::vector<BranchTrace> start;
    start.push_back(std::move(b));
    return run_steps(cond.then, std::move(start), ctx, index, true);
}

std::vector<BranchTrace> run_steps(const Protocol& steps, std::vector<BranchTrace> branches,
                                   Context& ctx, std::size_t top_index, bool nested) {
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const std::size_t index = nested ? top_index : i;
        std::vector<BranchTrace> next;
        for (auto& b : branches) {
            auto produced = run_step(steps[i], std::move(b), ctx, index);
            for (auto& p : produced) next.push_back(std::move(p));
        }
        branches = std::move(next);
    }
    return branches;
}

}  // namespace

RunResult run(const Protocol& protocol, const DensityMatrix& rho, const Tolerance& tol) {
    Context ctx{tol};
    BranchTrace root{{}, 1.0, rho, {rho.shape()}};
    std::vector<BranchTrace> start;
    start.push_back(std::move(root));
    RunResult result;
    result.branches = run_steps(protocol, std::move(start), ctx, 0, false);
    result.dropped_weight = ctx.dropped;
    if (result.branches.empty()) throw Error("protocol run: every branch has zero probability");
    return result;
}

ComplexMatrix bell_basis() {
    ComplexMatrix b(4, 4);
    b.col(0) = presets::phi_plus().amplitudes();
    b.col(1) = presets::phi_minus().amplitudes();
    b.col(2) = presets::psi_plus().amplitudes();
    b.col(3) = presets::psi_minus().amplitudes();
    return b;
}

Protocol ghz_protocol(bool correct) {
    ComplexMatrix keep = ComplexMatrix::Zero(4, 2);
    keep(1, 0) = 1.0;  // |01>
    keep(2, 1) = 1.0;  // |10>
    ComplexMatrix h(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    h << s, s, s, -s;
    const ComplexMatrix rotate_second = kron(ComplexMatrix::Identity(2, 2), h);
    ComplexMatrix z = ComplexMatrix::Identity(2, 2);
    z(1, 1) = -1.0;

    Protocol steps;
    steps.push_back({ProjectStep{{{"A", keep}, {"B", keep}, {"C", keep}}}});
    steps.push_back(
        {LocalUnitaryStep{{{"A", rotate_second}, {"B", rotate_second}, {"C", rotate_second}}}});
    for (const char* party : {"A", "B", "C"}) {
        steps.push_back({MeasureStep{party, 1, ComplexMatrix()}});
    }
    if (correct) {
        Protocol flip;
        flip.push_back({LocalUnitaryStep{{{"A", z}}}});
        steps.push_back({ConditionalStep{{Predicate::Kind::parity_odd, {0, 1, 2}, 0}, flip}});
    }
    return steps;
}

GhzExampleReport ghz_from_two_copies(double p, bool correct, const Tolerance& tol) {
    const DensityMatrix two_copies = tensor_power(presets::three_qubit_example(p), 2);
    const RunResult result = run(ghz_protocol(correct), two_copies, tol);
    const PureState ghz = presets::ghz();

    GhzExampleReport report;
    report.p = p;
    report.corrected = correct;
    report.success_probability = result.success_weight();
    for (const auto& b : result.branches) {
        GhzBranch branch;
        for (const auto& o : b.outcomes) branch.outcomes.push_back(o.value);
        branch.probability = b.probability;
        branch.conditional_probability = b.probability / report.success_probability;
        // Remaining shape is three single qubits A, B, C.
        const DensityMatrix remaining(SystemShape::from_dims({2, 2, 2}), b.state.matrix(), tol);
        branch.fidelity = fidelity(ghz, remaining);
        report.branches.push_back(std::move(branch));
    }
    return report;
}

WernerExampleReport werner_two_copy(double fidelity_param, const Tolerance& tol) {
    const DensityMatrix sigma = presets::werner(fidelity_param);
    const DensityMatrix two_copies = tensor_power(sigma, 2);
    const ComplexMatrix bell = bell_basis();

    WernerExampleReport report;
    report.fidelity = fidelity_param;
    report.concurrence_before = concurrence(sigma, tol);
    report.bell_diagonal = true;

    const std::vector<std::pair<std::string, std::vector<std::size_t>>> choices = {
        {"{|01>,|10>}", {1, 2}}, {"{|00>,|11>}", {0, 3}}};
    double weighted = 0.0, total = 0.0;
    for (const auto& [name, idx] : choices) {
        const auto sub = LocalSubspace::computational(two_copies.shape(), {idx, idx});
        const ProjectionOutcome outcome = project(two_copies, sub, tol);
        if (!outcome.state) throw Error("Werner projection has zero weight");
        WernerSubspaceReport r{name, {idx, idx}, outcome.weight, *outcome.state, {}, 0.0, false, 0.0};
        const ComplexMatrix in_bell = bell.adjoint() * outcome.state->matrix() * bell;
        r.bell_weights = in_bell.diagonal().real();
        ComplexMatrix off = in_bell;
        off.diagonal().setZero();
        r.max_bell_offdiagonal = max_abs(off);
        r.bell_diagonal = r.max_bell_offdiagonal <= kBellDiagonalAtol;
        // The compressed state is 2 (x) 2 with the labels A, B.
        r.concurrence = concurrence(DensityMatrix(SystemShape::from_dims({2, 2}), r.state.matrix(), tol), tol);
        report.bell_diagonal = report.bell_diagonal && r.bell_diagonal;
        weighted += r.weight * r.concurrence;
        total += r.weight;
        report.subspaces.push_back(std::move(r));
    }
    report.combined_after = total > 0.0 ? weighted / total : 0.0;
    return report;
}

}  // namespace distill
