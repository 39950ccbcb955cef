#pragma once

// JSON documents that reference states: subspaces, product operators, local
// bases and protocols. Matrices and vectors use the state-file number format.
//
// Subspace:  {"parties": [{"label": "A", "vectors": [{"re": [...], "im": [...]}, ...]},
//                         {"label": "B", "indices": [1, 2]}]}
// Operator:  {"factors": [{"party": "A", "matrix": <matrix>}]}   absent parties: identity
// Bases:     {"bases":   [{"party": "A", "matrix": <matrix>}]}   columns are basis vectors
// Protocol:  {"steps": [
//              {"kind": "project", "subspace": <subspace> | "subspace_file": "path"},
//              {"kind": "local_unitary", "unitaries": [{"party": "A", "matrix": <matrix>}]},
//              {"kind": "measure", "party": "A", "particle": 1, "basis": <matrix>?},
//              {"kind": "filter", "operator": <operator> | "operator_file": "path"},
//              {"kind": "conditional", "when": {"parity": "odd"|"even", "outcomes": [0, 1]}
//                                            | {"equals": 1, "outcome": 0},
//               "then": [<step>, ...]}]}
// Relative file paths resolve against the protocol file's directory.

#include <filesystem>
#include <vector>

#include "distill/dss.hpp"
#include "distill/localops.hpp"
#include "distill/protocols.hpp"
#include "distill/state_io.hpp"

namespace distill {

PartyMatrices subspace_vectors_from_json(const Json& doc);
LocalSubspace subspace_from_json(const Json& doc, const SystemShape& shape);
Json subspace_to_json(const LocalSubspace& s);

/// Factor matrices as listed, without a shape to check against.
PartyMatrices factor_matrices_from_json(const Json& doc);
ProductOperator operator_from_json(const Json& doc, const SystemShape& shape);
Json operator_to_json(const ProductOperator& op);

/// Per-party basis matrices in shape order (identity where absent).
std::vector<ComplexMatrix> bases_from_json(const Json& doc, const SystemShape& shape);

Protocol protocol_from_json(const Json& doc, const std::filesystem::path& base_dir = {});
Json protocol_to_json(const Protocol& protocol);

}  // namespace distill
