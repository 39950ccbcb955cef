#pragma once

// Scripted LOCC protocols with branch tracking, and the two worked multi-copy
// examples (GHZ distillation from two copies, two-copy Werner purification).

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "distill/dss.hpp"
#include "distill/error.hpp"
#include "distill/linalg.hpp"
#include "distill/states.hpp"

namespace distill {

/// Matrices keyed by party label. Parties that are absent are left alone
/// (full local space / identity).
using PartyMatrices = std::map<std::string, ComplexMatrix>;

/// Post-select on the local subspaces spanned by the columns of each matrix.
struct ProjectStep {
    PartyMatrices vectors;
};

struct LocalUnitaryStep {
    PartyMatrices unitaries;
};

/// Projective measurement of one particle of a party in an orthonormal basis
/// (columns; empty means computational). The particle is discarded afterwards
/// and the outcome index is appended to the branch's outcome list.
struct MeasureStep {
    std::string party;
    std::size_t particle = 0;
    ComplexMatrix basis;
};

/// Post-select on the product operator built from the factors (contractions).
struct FilterStep {
    PartyMatrices factors;
};

struct Outcome {
    std::size_t step = 0;
    std::string party;
    std::size_t value = 0;

    bool operator==(const Outcome&) const = default;
};

/// Classical predicate over earlier outcomes, referenced by their position in
/// the branch's outcome list.
struct Predicate {
    enum class Kind { parity_odd, parity_even, equals };
    Kind kind = Kind::parity_odd;
    std::vector<std::size_t> outcomes;
    std::size_t value = 0;  // for equals: outcomes[0] must equal value

    bool holds(const std::vector<Outcome>& history) const;
};

struct ProtocolStep;

struct ConditionalStep {
    Predicate when;
    std::vector<ProtocolStep> then;
};

struct ProtocolStep {
    std::variant<ProjectStep, LocalUnitaryStep, MeasureStep, FilterStep, ConditionalStep> action;
};

using Protocol = std::vector<ProtocolStep>;

struct BranchTrace {
    std::vector<Outcome> outcomes;
    double probability = 1.0;  // absolute, including every post-selection
    DensityMatrix state;
    std::vector<SystemShape> shape_history;  // one entry per shape change, initial first
};

struct RunResult {
    std::vector<BranchTrace> branches;  // depth-first order
    double dropped_weight = 0.0;        // failed post-selections and impossible outcomes

    double success_weight() const;
};

/// Error at a protocol step; `step()` is the zero-based top-level index.
class ProtocolError : public DimensionError {
public:
    ProtocolError(std::size_t step, const std::string& what)
        : DimensionError("step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Runs `protocol` on rho. Throws ProtocolError on a dimensional mismatch and
/// Error when every branch ends with zero probability.
RunResult run(const Protocol& protocol, const DensityMatrix& rho, const Tolerance& tol = {});

/// The distillation script for two copies of the three-qubit example:
/// project each party onto {|01>, |10>}, Hadamard on each party's second
/// particle, measure and discard those particles, then (when `correct`) a Z on
/// A's remaining qubit if the three outcomes have odd parity.
Protocol ghz_protocol(bool correct = true);

struct GhzBranch {
    std::vector<std::size_t> outcomes;  // (s_A, s_B, s_C)
    double probability = 0.0;           // absolute
    double conditional_probability = 0.0;  // given the projection succeeded
    double fidelity = 0.0;              // with |GHZ>
};

struct GhzExampleReport {
    double p = 0.0;
    double success_probability = 0.0;
    bool corrected = true;
    std::vector<GhzBranch> branches;
};

GhzExampleReport ghz_from_two_copies(double p, bool correct = true, const Tolerance& tol = {});

struct WernerSubspaceReport {
    std::string name;
    std::vector<std::vector<std::size_t>> indices;  // computational indices per party
    double weight = 0.0;
    DensityMatrix state;            // compressed 2x2 state
    RealVector bell_weights;        // diagonal in (Phi+, Phi-, Psi+, Psi-)
    double max_bell_offdiagonal = 0.0;
    bool bell_diagonal = false;
    double concurrence = 0.0;
};

struct WernerExampleReport {
    double fidelity = 0.0;
    double concurrence_before = 0.0;
    std::vector<WernerSubspaceReport> subspaces;
    bool bell_diagonal = false;  // all subspaces
    double combined_after = 0.0; // weight-averaged concurrence over both post-selections
};

/// Bell-diagonality threshold on Bell-basis off-diagonal magnitudes.
inline constexpr double kBellDiagonalAtol = 1e-9;

WernerExampleReport werner_two_copy(double fidelity, const Tolerance& tol = {});

/// Columns Phi+, Phi-, Psi+, Psi- in the computational basis.
ComplexMatrix bell_basis();

}  // namespace distill
