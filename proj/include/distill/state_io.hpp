#pragma once

// JSON documents for states, matrices and shapes.
//
//   {
//     "parties": [{"label": "A", "dim": 2}, {"label": "B", "dim": 2, "subdims": [2]}],
//     "matrix": {"re": [[...], ...], "im": [[...], ...]}       // dense
//     "matrix": [{"row": 0, "col": 0, "re": 0.5, "im": 0.0}]    // or sparse
//     "amplitudes": {"re": [...], "im": [...]}                  // or a pure state
//   }
//
// "im" may be omitted for real data. Doubles are written in their shortest
// round-trip form, so a save/load cycle is exact.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "distill/linalg.hpp"
#include "distill/states.hpp"

namespace distill {

using Json = nlohmann::json;

enum class MatrixEncoding { dense, sparse };

Json shape_to_json(const SystemShape& shape);
SystemShape shape_from_json(const Json& doc);

Json matrix_to_json(const ComplexMatrix& m, MatrixEncoding encoding = MatrixEncoding::dense);
/// Reads either encoding; the sparse form needs the expected side lengths.
ComplexMatrix matrix_from_json(const Json& doc, Eigen::Index rows, Eigen::Index cols);

Json vector_to_json(const ComplexVector& v);
ComplexVector vector_from_json(const Json& doc);

Json save_state(const DensityMatrix& rho, MatrixEncoding encoding = MatrixEncoding::dense);
Json save_pure_state(const PureState& psi);

/// Throws SchemaError for structural problems and InvariantError (naming the
/// failed invariant) when the matrix is not a valid density matrix.
DensityMatrix load_state(const Json& doc, const Tolerance& tol = {});

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

}  // namespace distill
