#include "distill/state_io.hpp"

#include <fstream>
#include <sstream>

#include "distill/error.hpp"

namespace distill {

namespace {

double number(const Json& j, const char* what) {
    if (!j.is_number()) throw SchemaError(std::string(what) + " must be a number");
    return j.get<double>();
}

std::size_t index(const Json& j, const char* what) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) {
        throw SchemaError(std::string(what) + " must be an integer");
    }
    const auto v = j.get<long long>();
    if (v < 0) throw SchemaError(std::string(what) + " must be nonnegative");
    return static_cast<std::size_t>(v);
}

const Json& field(const Json& doc, const char* name) {
    if (!doc.is_object() || !doc.contains(name)) {
        throw SchemaError(std::string("missing field '") + name + "'");
    }
    return doc.at(name);
}

}  // namespace

Json shape_to_json(const SystemShape& shape) {
    Json parties = Json::array();
    for (const auto& p : shape.parties()) {
        Json entry = {{"label", p.label}, {"dim", p.dim}};
        if (p.subdims.size() > 1) entry["subdims"] = p.subdims;
        parties.push_back(std::move(entry));
    }
    return parties;
}

SystemShape shape_from_json(const Json& doc) {
    if (!doc.is_array() || doc.empty()) throw SchemaError("'parties' must be a nonempty array");
    std::vector<Party> parties;
    for (const auto& entry : doc) {
        const auto& label = field(entry, "label");
        if (!label.is_string()) throw SchemaError("party label must be a string");
        Party p{label.get<std::string>(), index(field(entry, "dim"), "party dim"), {}};
        if (entry.contains("subdims")) {
            if (!entry["subdims"].is_array()) throw SchemaError("subdims must be an array");
            for (const auto& s : entry["subdims"]) p.subdims.push_back(index(s, "subdim"));
        }
        parties.push_back(std::move(p));
    }
    return SystemShape(std::move(parties));
}

Json matrix_to_json(const ComplexMatrix& m, MatrixEncoding encoding) {
    if (encoding == MatrixEncoding::sparse) {
        Json entries = Json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (m(i, j) == Complex(0.0, 0.0)) continue;
                entries.push_back({{"row", i}, {"col", j}, {"re", m(i, j).real()},
                                   {"im", m(i, j).imag()}});
            }
        }
        return entries;
    }
    Json re = Json::array(), im = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json rr = Json::array(), ir = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            rr.push_back(m(i, j).real());
            ir.push_back(m(i, j).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ir));
    }
    return {{"re", std::move(re)}, {"im", std::move(im)}};
}

ComplexMatrix matrix_from_json(const Json& doc, Eigen::Index rows, Eigen::Index cols) {
    if (doc.is_array()) {
        ComplexMatrix m = ComplexMatrix::Zero(rows, cols);
        for (const auto& e : doc) {
            const auto r = index(field(e, "row"), "row");
            const auto c = index(field(e, "col"), "col");
            if (static_cast<Eigen::Index>(r) >= rows || static_cast<Eigen::Index>(c) >= cols) {
                throw SchemaError("sparse entry (" + std::to_string(r) + ", " +
                                  std::to_string(c) + ") out of range");
            }
            const double re = e.contains("re") ? number(e["re"], "re") : 0.0;
            const double im = e.contains("im") ? number(e["im"], "im") : 0.0;
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += Complex(re, im);
        }
        return m;
    }
    const auto& re = field(doc, "re");
    const Json im = doc.contains("im") ? doc["im"] : Json();
    if (!re.is_array() || static_cast<Eigen::Index>(re.size()) != rows) {
        throw SchemaError("dense 're' must have " + std::to_string(rows) + " rows");
    }
    if (!im.is_null() && (!im.is_array() || im.size() != re.size())) {
        throw SchemaError("dense 'im' must match 're' in shape");
    }
    ComplexMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& rr = re[static_cast<std::size_t>(i)];
        if (!rr.is_array() || static_cast<Eigen::Index>(rr.size()) != cols) {
            throw SchemaError("dense row " + std::to_string(i) + " must have " +
                              std::to_string(cols) + " entries");
        }
        for (Eigen::Index j = 0; j < cols; ++j) {
            double imag = 0.0;
            if (!im.is_null()) {
                const auto& ir = im[static_cast<std::size_t>(i)];
                if (!ir.is_array() || ir.size() != rr.size()) {
                    throw SchemaError("dense 'im' row " + std::to_string(i) + " has wrong length");
                }
                imag = number(ir[static_cast<std::size_t>(j)], "im");
            }
            m(i, j) = Complex(number(rr[static_cast<std::size_t>(j)], "re"), imag);
        }
    }
    return m;
}

Json vector_to_json(const ComplexVector& v) {
    Json re = Json::array(), im = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        re.push_back(v(i).real());
        im.push_back(v(i).imag());
    }
    return {{"re", std::move(re)}, {"im", std::move(im)}};
}

ComplexVector vector_from_json(const Json& doc) {
    const auto& re = field(doc, "re");
    if (!re.is_array() || re.empty()) throw SchemaError("vector 're' must be a nonempty array");
    const Json im = doc.contains("im") ? doc["im"] : Json();
    if (!im.is_null() && (!im.is_array() || im.size() != re.size())) {
        throw SchemaError("vector 'im' must match 're' in length");
    }
    ComplexVector v(static_cast<Eigen::Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) =
            Complex(number(re[i], "re"), im.is_null() ? 0.0 : number(im[i], "im"));
    }
    return v;
}

Json save_state(const DensityMatrix& rho, MatrixEncoding encoding) {
    return {{"parties", shape_to_json(rho.shape())},
            {"matrix", matrix_to_json(rho.matrix(), encoding)}};
}

Json save_pure_state(const PureState& psi) {
    return {{"parties", shape_to_json(psi.shape())},
            {"amplitudes", vector_to_json(psi.amplitudes())}};
}

DensityMatrix load_state(const Json& doc, const Tolerance& tol) {
    if (!doc.is_object()) throw SchemaError("state document must be an object");
    SystemShape shape = shape_from_json(field(doc, "parties"));
    const auto side = static_cast<Eigen::Index>(shape.total_dim());
    if (doc.contains("matrix")) {
        return DensityMatrix(std::move(shape), matrix_from_json(doc["matrix"], side, side), tol);
    }
    if (doc.contains("amplitudes")) {
        ComplexVector v = vector_from_json(doc["amplitudes"]);
        if (v.size() != side) throw SchemaError("amplitude count does not match the parties");
        return DensityMatrix(PureState(std::move(shape), std::move(v)));
    }
    throw SchemaError("state document needs 'matrix' or 'amplitudes'");
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

}  // namespace distill
