#include "distill/protocol_io.hpp"

#include "distill/error.hpp"

namespace distill {

namespace {

const Json& require(const Json& doc, const char* name) {
    if (!doc.is_object() || !doc.contains(name)) {
        throw SchemaError(std::string("missing field '") + name + "'");
    }
    return doc.at(name);
}

std::string label_of(const Json& entry, const char* key) {
    const auto& l = require(entry, key);
    if (!l.is_string()) throw SchemaError(std::string(key) + " must be a string");
    return l.get<std::string>();
}

std::size_t count(const Json& j, const char* what) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) {
        throw SchemaError(std::string(what) + " must be a nonnegative integer");
    }
    const auto v = j.get<long long>();
    if (v < 0) throw SchemaError(std::string(what) + " must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

// Square matrix whose side is taken from the dense rows, or from `side` for sparse input.
ComplexMatrix square_matrix(const Json& doc, Eigen::Index side) {
    if (side < 0) {
        if (!doc.is_object()) throw SchemaError("sparse matrices need a known side length");
        const auto& re = require(doc, "re");
        if (!re.is_array()) throw SchemaError("'re' must be an array");
        side = static_cast<Eigen::Index>(re.size());
    }
    return matrix_from_json(doc, side, side);
}

PartyMatrices keyed_matrices(const Json& list, const char* list_name,
                             const SystemShape* shape) {
    if (!list.is_array()) throw SchemaError(std::string("'") + list_name + "' must be an array");
    PartyMatrices out;
    for (const auto& entry : list) {
        const std::string party = label_of(entry, "party");
        Eigen::Index side = -1;
        if (shape) side = static_cast<Eigen::Index>(shape->party(shape->index_of(party)).dim);
        if (!out.emplace(party, square_matrix(require(entry, "matrix"), side)).second) {
            throw SchemaError("party '" + party + "' listed twice in '" + list_name + "'");
        }
    }
    return out;
}

Json keyed_to_json(const PartyMatrices& m) {
    Json list = Json::array();
    for (const auto& [party, mat] : m) list.push_back({{"party", party}, {"matrix", matrix_to_json(mat)}});
    return list;
}

}  // namespace

PartyMatrices subspace_vectors_from_json(const Json& doc) {
    const auto& parties = require(doc, "parties");
    if (!parties.is_array()) throw SchemaError("'parties' must be an array");
    PartyMatrices out;
    for (const auto& entry : parties) {
        const std::string label = label_of(entry, "label");
        ComplexMatrix cols;
        if (entry.contains("vectors")) {
            const auto& vs = entry["vectors"];
            if (!vs.is_array() || vs.empty()) throw SchemaError("'vectors' must be a nonempty array");
            std::vector<ComplexVector> vecs;
            for (const auto& v : vs) vecs.push_back(vector_from_json(v));
            cols.resize(vecs.front().size(), static_cast<Eigen::Index>(vecs.size()));
            for (std::size_t k = 0; k < vecs.size(); ++k) {
                if (vecs[k].size() != cols.rows()) throw SchemaError("vectors differ in length");
                cols.col(static_cast<Eigen::Index>(k)) = vecs[k];
            }
        } else if (entry.contains("indices")) {
            const auto& idx = entry["indices"];
            if (!idx.is_array() || idx.empty()) throw SchemaError("'indices' must be a nonempty array");
            const std::size_t dim = count(require(entry, "dim"), "dim");
            cols = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(idx.size()));
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const std::size_t i = count(idx[k], "index");
                if (i >= dim) throw SchemaError("index " + std::to_string(i) + " out of range");
                cols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = 1.0;
            }
        } else {
            throw SchemaError("subspace party '" + label + "' needs 'vectors' or 'indices'");
        }
        if (!out.emplace(label, std::move(cols)).second) {
            throw SchemaError("party '" + label + "' listed twice in subspace");
        }
    }
    return out;
}

LocalSubspace subspace_from_json(const Json& doc, const SystemShape& shape) {
    // Index lists may omit "dim"; fill it from the shape before parsing.
    Json filled = doc;
    if (filled.is_object() && filled.contains("parties") && filled["parties"].is_array()) {
        for (auto& entry : filled["parties"]) {
            if (entry.is_object() && entry.contains("indices") && !entry.contains("dim") &&
                entry.contains("label") && entry["label"].is_string()) {
                entry["dim"] = shape.party(shape.index_of(entry["label"].get<std::string>())).dim;
            }
        }
    }
    PartyMatrices vecs = subspace_vectors_from_json(filled);
    std::vector<ComplexMatrix> bases;
    for (const auto& p : shape.parties()) {
        auto it = vecs.find(p.label);
        if (it == vecs.end()) {
            const auto d = static_cast<Eigen::Index>(p.dim);
            bases.push_back(ComplexMatrix::Identity(d, d));
        } else {
            bases.push_back(it->second);
            vecs.erase(it);
        }
    }
    if (!vecs.empty()) throw SchemaError("subspace names unknown party '" + vecs.begin()->first + "'");
    return LocalSubspace(shape, std::move(bases));
}

Json subspace_to_json(const LocalSubspace& s) {
    Json parties = Json::array();
    for (std::size_t i = 0; i < s.bases().size(); ++i) {
        Json vectors = Json::array();
        for (Eigen::Index k = 0; k < s.bases()[i].cols(); ++k) {
            vectors.push_back(vector_to_json(s.bases()[i].col(k)));
        }
        parties.push_back({{"label", s.parent_shape().party(i).label}, {"vectors", std::move(vectors)}});
    }
    return {{"parties", std::move(parties)}};
}

PartyMatrices factor_matrices_from_json(const Json& doc) {
    return keyed_matrices(require(doc, "factors"), "factors", nullptr);
}

ProductOperator operator_from_json(const Json& doc, const SystemShape& shape) {
    PartyMatrices given = keyed_matrices(require(doc, "factors"), "factors", &shape);
    std::vector<LocalFactor> factors;
    for (const auto& p : shape.parties()) {
        auto it = given.find(p.label);
        if (it == given.end()) {
            factors.push_back(LocalFactor::identity(p.label, p.dim));
        } else {
            factors.push_back(LocalFactor::normalized(p.label, it->second));
        }
    }
    return ProductOperator(shape, std::move(factors));
}

Json operator_to_json(const ProductOperator& op) {
    Json factors = Json::array();
    for (const auto& f : op.factors()) {
        factors.push_back({{"party", f.party()}, {"matrix", matrix_to_json(f.matrix())}});
    }
    return {{"factors", std::move(factors)}};
}

std::vector<ComplexMatrix> bases_from_json(const Json& doc, const SystemShape& shape) {
    PartyMatrices given = keyed_matrices(require(doc, "bases"), "bases", &shape);
    std::vector<ComplexMatrix> out;
    for (const auto& p : shape.parties()) {
        auto it = given.find(p.label);
        const auto d = static_cast<Eigen::Index>(p.dim);
        out.push_back(it == given.end() ? ComplexMatrix::Identity(d, d) : it->second);
    }
    return out;
}

namespace {

ProtocolStep step_from_json(const Json& s, const std::filesystem::path& base_dir) {
    const std::string kind = label_of(s, "kind");
    auto load_ref = [&](const char* inline_key, const char* file_key) -> Json {
        if (s.contains(inline_key)) return s[inline_key];
        if (s.contains(file_key)) {
            const auto& f = s[file_key];
            if (!f.is_string()) throw SchemaError(std::string(file_key) + " must be a string");
            std::filesystem::path p = f.get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            return read_json_file(p);
        }
        throw SchemaError("step '" + kind + "' needs '" + inline_key + "' or '" + file_key + "'");
    };
    if (kind == "project") {
        return {ProjectStep{subspace_vectors_from_json(load_ref("subspace", "subspace_file"))}};
    }
    if (kind == "local_unitary") {
        return {LocalUnitaryStep{keyed_matrices(require(s, "unitaries"), "unitaries", nullptr)}};
    }
    if (kind == "filter") {
        const Json op = load_ref("operator", "operator_file");
        return {FilterStep{keyed_matrices(require(op, "factors"), "factors", nullptr)}};
    }
    if (kind == "measure") {
        MeasureStep m{label_of(s, "party"), count(require(s, "particle"), "particle"), ComplexMatrix()};
        if (s.contains("basis")) m.basis = square_matrix(s["basis"], -1);
        return {std::move(m)};
    }
    if (kind == "conditional") {
        const auto& when = require(s, "when");
        Predicate pred;
        if (when.contains("parity")) {
            const std::string parity = label_of(when, "parity");
            if (parity != "odd" && parity != "even") throw SchemaError("parity must be 'odd' or 'even'");
            pred.kind = parity == "odd" ? Predicate::Kind::parity_odd : Predicate::Kind::parity_even;
            const auto& outs = require(when, "outcomes");
            if (!outs.is_array()) throw SchemaError("'outcomes' must be an array");
            for (const auto& o : outs) pred.outcomes.push_back(count(o, "outcome"));
        } else if (when.contains("equals")) {
            pred.kind = Predicate::Kind::equals;
            pred.value = count(when["equals"], "equals");
            pred.outcomes = {count(require(when, "outcome"), "outcome")};
        } else {
            throw SchemaError("conditional 'when' needs 'parity' or 'equals'");
        }
        const auto& then = require(s, "then");
        if (!then.is_array()) throw SchemaError("'then' must be an array");
        ConditionalStep c{pred, {}};
        for (const auto& t : then) c.then.push_back(step_from_json(t, base_dir));
        return {std::move(c)};
    }
    throw SchemaError("unknown step kind '" + kind + "'");
}

Json step_to_json(const ProtocolStep& step) {
    if (const auto* s = std::get_if<ProjectStep>(&step.action)) {
        Json parties = Json::array();
        for (const auto& [label, m] : s->vectors) {
            Json vectors = Json::array();
            for (Eigen::Index k = 0; k < m.cols(); ++k) vectors.push_back(vector_to_json(m.col(k)));
            parties.push_back({{"label", label}, {"vectors", std::move(vectors)}});
        }
        return {{"kind", "project"}, {"subspace", {{"parties", std::move(parties)}}}};
    }
    if (const auto* s = std::get_if<LocalUnitaryStep>(&step.action)) {
        return {{"kind", "local_unitary"}, {"unitaries", keyed_to_json(s->unitaries)}};
    }
    if (const auto* s = std::get_if<FilterStep>(&step.action)) {
        return {{"kind", "filter"}, {"operator", {{"factors", keyed_to_json(s->factors)}}}};
    }
    if (const auto* s = std::get_if<MeasureStep>(&step.action)) {
        Json j = {{"kind", "measure"}, {"party", s->party}, {"particle", s->particle}};
        if (s->basis.size()) j["basis"] = matrix_to_json(s->basis);
        return j;
    }
    const auto& c = std::get<ConditionalStep>(step.action);
    Json when;
    if (c.when.kind == Predicate::Kind::equals) {
        when = {{"equals", c.when.value}, {"outcome", c.when.outcomes.at(0)}};
    } else {
        when = {{"parity", c.when.kind == Predicate::Kind::parity_odd ? "odd" : "even"},
                {"outcomes", c.when.outcomes}};
    }
    Json then = Json::array();
    for (const auto& t : c.then) then.push_back(step_to_json(t));
    return {{"kind", "conditional"}, {"when", std::move(when)}, {"then", std::move(then)}};
}

}  // namespace

Protocol protocol_from_json(const Json& doc, const std::filesystem::path& base_dir) {
    const auto& steps = require(doc, "steps");
    if (!steps.is_array()) throw SchemaError("'steps' must be an array");
    Protocol out;
    for (const auto& s : steps) out.push_back(step_from_json(s, base_dir));
    return out;
}

Json protocol_to_json(const Protocol& protocol) {
    Json steps = Json::array();
    for (const auto& s : protocol) steps.push_back(step_to_json(s));
    return {{"steps", std::move(steps)}};
}

}  // namespace distill
