#pragma once

#include <string>
#include <vector>

#include "distill/linalg.hpp"
#include "distill/localops.hpp"
#include "distill/states.hpp"

namespace distill {

/// Ranks of the single-party reduced states of a pure state, in party order.
/// A state with signature (n_A, n_B, ...) is an "n_A x n_B x ..." state.
struct DimensionSignature {
    std::vector<std::size_t> ranks;

    /// Some party is entangled with the rest.
    bool entangled() const;
    /// Every party is entangled with the rest.
    bool fully_entangled() const;
    /// Entrywise >= `minimum`; an empty minimum always passes.
    bool meets(const std::vector<std::size_t>& minimum) const;
    std::size_t product() const;
    std::string to_string() const;  // e.g. "2x2x2"

    bool operator==(const DimensionSignature&) const = default;
};

DimensionSignature dimension_signature(const PureState& psi, const Tolerance& tol = {});

/// Schmidt coefficients (descending) of a two-party pure state.
/// Throws DimensionError for any other party count; use the grouped overload.
RealVector schmidt(const PureState& psi);

/// Schmidt coefficients across the cut (group_a | everything else).
RealVector schmidt(const PureState& psi, const std::vector<std::size_t>& group_a);

struct SignatureInvarianceReport {
    DimensionSignature signature_before;
    DimensionSignature signature_after;
    bool full_rank = false;
    bool consistent = false;
};

/// Throws ImpossibleBranch when |M psi|^2 <= kBranchThreshold.
SignatureInvarianceReport verify_signature_invariance(const PureState& psi, const ProductOperator& op,
                           const Tolerance& tol = {});

/// Wootters concurrence of a two-qubit state. Complex conjugation is taken in
/// the computational basis. Throws DimensionError for any other shape.
double concurrence(const DensityMatrix& rho, const Tolerance& tol = {});

double binary_entropy(double x);

/// Two-qubit entanglement of formation as a function of concurrence.
double eof_from_concurrence(double c);

struct EntanglementReport {
    double concurrence = 0.0;
    double eof = 0.0;  // ebits
};

EntanglementReport entanglement_of_formation(const DensityMatrix& rho, const Tolerance& tol = {});

/// The local filter (1/2)|0><0| + (sqrt3/2)|1><1| on party A.
LocalFactor example_filter();

struct FilterComparison {
    double lambda = 0.0;
    EntanglementReport before;
    EntanglementReport after;
    DensityMatrix filtered_state;
    double success_probability = 0.0;
    double lambda_prime = 0.0;  // weight of [Phi+] read off the filtered state
};

/// Applies example_filter() to presets::filter_example(lambda), lambda in (0, 1].
FilterComparison filter_comparison(double lambda, const Tolerance& tol = {});

}  // namespace distill
