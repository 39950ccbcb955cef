#include "distill/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "distill/dss.hpp"
#include "distill/entanglement.hpp"
#include "distill/error.hpp"
#include "distill/localops.hpp"
#include "distill/protocol_io.hpp"
#include "distill/protocols.hpp"
#include "distill/report.hpp"
#include "distill/state_io.hpp"
#include "distill/states.hpp"

namespace distill {

namespace {

constexpr double kMaxToleranceOverride = 1e-3;
constexpr double kAmplitudeFloor = 1e-12;

struct Options {
    // state source
    std::string state;
    std::optional<double> p, F, lambda;
    std::size_t copies = 1;
    // tolerance
    std::string tol_profile;
    std::optional<double> rank_rtol, herm_atol, psd_atol, purity_atol;
    // output
    std::string format = "text";
    std::string json_out;
    // dss
    std::string bases_file, subspace_file, min_signature;
    bool require_entangled = false, all = false, no_prune = false;
    std::size_t workers = 1;
    std::uint64_t cap = 2'000'000;
    // decompose
    std::string operator_file, preset_operator;
    // filter-compare / examples
    std::vector<double> lambdas, fidelities;
    std::string grid;
    bool no_correction = false;
    // simulate
    std::string protocol_file;
    // rankbound
    std::string dims, signature;
};

struct CommandResult {
    Report report;
    int code = kExitOk;
};

// ---- parsing helpers ------------------------------------------------------

std::vector<std::size_t> parse_size_list(const std::string& text, char sep, const char* what) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        std::size_t used = 0;
        long long v = -1;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v < 1) {
            throw InvariantError("parameter", std::string(what) + " must be positive integers separated by '" +
                                                  sep + "', got '" + text + "'");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw InvariantError("parameter", std::string(what) + " is empty");
    return out;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || !std::isfinite(v)) {
            throw InvariantError("parameter", "grid must be start:stop:step, got '" + text + "'");
        }
        parts.push_back(v);
    }
    if (parts.size() != 3) throw InvariantError("parameter", "grid must be start:stop:step, got '" + text + "'");
    const double a = parts[0], b = parts[1], step = parts[2];
    if (!(step > 0) || b < a) throw InvariantError("parameter", "grid needs step > 0 and stop >= start");
    const double n = std::floor((b - a) / step + 1e-9);
    if (n > 10000) throw CapExceeded("grid points", static_cast<std::size_t>(n), 10000);
    std::vector<double> out;
    for (std::size_t k = 0; k <= static_cast<std::size_t>(n); ++k) out.push_back(a + static_cast<double>(k) * step);
    return out;
}

Tolerance resolve_tolerance(const Options& o) {
    Tolerance t = o.tol_profile.empty() ? Tolerance::from_environment() : Tolerance::profile(o.tol_profile);
    auto override_with = [](double& slot, const std::optional<double>& v, const char* name) {
        if (!v) return;
        if (!(*v >= 0.0 && *v <= kMaxToleranceOverride)) {
            throw InvariantError("tolerance", std::string(name) + " must lie in [0, 1e-3], got " + format_number(*v));
        }
        slot = *v;
    };
    override_with(t.rank_rtol, o.rank_rtol, "--rank-rtol");
    override_with(t.herm_atol, o.herm_atol, "--herm-atol");
    override_with(t.psd_atol, o.psd_atol, "--psd-atol");
    override_with(t.purity_atol, o.purity_atol, "--purity-atol");
    t.validate();
    return t;
}

double need(const std::optional<double>& v, const char* flag, const std::string& preset) {
    if (!v) throw InvariantError("parameter", "preset '" + preset + "' needs " + flag);
    return *v;
}

DensityMatrix load_state_source(const Options& o, const Tolerance& tol) {
    const std::string& s = o.state;
    if (s.empty()) throw InvariantError("parameter", "--state is required");
    if (s == "example3q") return presets::three_qubit_example(need(o.p, "--p", s));
    if (s == "werner") return presets::werner(need(o.F, "--F", s));
    if (s == "filter") return presets::filter_example(need(o.lambda, "--lambda", s));
    if (s == "ghz") return DensityMatrix(presets::ghz());
    if (s == "w") return DensityMatrix(presets::w_variant());
    if (s == "w-standard") return DensityMatrix(presets::w_standard());
    if (s == "phi-plus") return DensityMatrix(presets::phi_plus());
    if (s == "phi-minus") return DensityMatrix(presets::phi_minus());
    if (s == "psi-plus") return DensityMatrix(presets::psi_plus());
    if (s == "psi-minus") return DensityMatrix(presets::psi_minus());
    if (!std::filesystem::exists(s)) {
        throw SchemaError("'" + s + "' is neither a preset nor a readable state file");
    }
    return load_state(read_json_file(s), tol);
}

// ---- formatting helpers ---------------------------------------------------

std::string index_label(const Party& party, std::size_t i) {
    if (party.subdims.size() <= 1) return std::to_string(i);
    std::vector<std::size_t> digits(party.subdims.size());
    for (std::size_t k = party.subdims.size(); k-- > 0;) {
        digits[k] = i % party.subdims[k];
        i /= party.subdims[k];
    }
    const bool wide = std::any_of(party.subdims.begin(), party.subdims.end(), [](std::size_t d) { return d > 10; });
    std::string s;
    for (std::size_t k = 0; k < digits.size(); ++k) {
        if (wide && k) s += '.';
        s += std::to_string(digits[k]);
    }
    return s;
}

std::string basis_label(const SystemShape& shape, std::size_t flat) {
    std::vector<std::size_t> per(shape.party_count());
    for (std::size_t k = shape.party_count(); k-- > 0;) {
        per[k] = flat % shape.party(k).dim;
        flat /= shape.party(k).dim;
    }
    std::string s = "|";
    for (std::size_t k = 0; k < per.size(); ++k) {
        if (k) s += ',';
        s += index_label(shape.party(k), per[k]);
    }
    return s + ">";
}

ComplexVector canonical_phase(ComplexVector v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > std::abs(v(best)) + 1e-12) best = i;
    }
    if (v.size() && std::abs(v(best)) > 0) v *= std::conj(v(best)) / std::abs(v(best));
    return v;
}

std::string ket(const SystemShape& shape, const ComplexVector& amps) {
    const ComplexVector v = canonical_phase(amps);
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) <= kAmplitudeFloor) continue;
        const double re = v(i).real(), im = v(i).imag();
        std::string coeff;
        bool negative = false;
        if (std::abs(im) < 1e-13) {
            negative = re < 0;
            coeff = format_number(std::abs(re));
        } else if (std::abs(re) < 1e-13) {
            negative = im < 0;
            coeff = format_number(std::abs(im)) + "i";
        } else {
            coeff = "(" + format_number(re) + (im < 0 ? "-" : "+") + format_number(std::abs(im)) + "i)";
        }
        if (s.empty()) {
            s = (negative ? "-" : "") + coeff;
        } else {
            s += negative ? " - " : " + ";
            s += coeff;
        }
        s += basis_label(shape, static_cast<std::size_t>(i));
    }
    return s.empty() ? "0" : s;
}

OrderedJson real_matrix_json(const Eigen::MatrixXd& m) {
    OrderedJson rows = OrderedJson::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        OrderedJson row = OrderedJson::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

OrderedJson complex_matrix_json(const ComplexMatrix& m) {
    OrderedJson j;
    j["re"] = real_matrix_json(m.real());
    if (m.imag().cwiseAbs().maxCoeff() > 1e-15) j["im"] = real_matrix_json(m.imag());
    return j;
}

OrderedJson real_list(const RealVector& v) {
    OrderedJson out = OrderedJson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

std::string signature_text(const std::vector<std::size_t>& s) {
    return DimensionSignature{s}.to_string();
}

std::string digest_of(const Json& inputs) { return fnv1a_digest(inputs.dump()); }

std::string party_vectors(const LocalSubspace& s, std::size_t party, const std::vector<std::size_t>& indices,
                          bool computational) {
    std::string out;
    const Party& p = s.parent_shape().party(party);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (k) out += ", ";
        out += computational ? "|" + index_label(p, indices[k]) + ">" : "b" + std::to_string(indices[k]);
    }
    return out;
}

OrderedJson certificate_json(const DssCertificate& cert, const DensityMatrix& single, std::size_t copies,
                             bool computational, const Tolerance& tol) {
    OrderedJson j;
    OrderedJson sub = OrderedJson::array();
    for (std::size_t i = 0; i < cert.basis_indices.size(); ++i) {
        sub.push_back({{"party", cert.subspace.parent_shape().party(i).label},
                       {"vectors", party_vectors(cert.subspace, i, cert.basis_indices[i], computational)}});
    }
    j["subspace"] = std::move(sub);
    j["basis_indices"] = cert.basis_indices;
    j["weight"] = cert.outcome.weight;
    j["classification"] = to_string(cert.outcome.classification);
    if (cert.outcome.signature) j["signature"] = cert.outcome.signature->to_string();
    if (cert.outcome.pure) {
        j["projected_state"] = ket(cert.outcome.pure->shape(), cert.outcome.pure->amplitudes());
        j["embedded_state"] = ket(cert.subspace.parent_shape(), embed(cert.subspace, cert.outcome.pure->amplitudes()));
    }
    const RankBoundReport rb = check_rank_bound(single, copies, cert, tol);
    j["rank_bound"] = {{"rank", rb.rank}, {"bound", rb.bound}, {"satisfied", rb.satisfied}};
    return j;
}

// ---- commands -------------------------------------------------------------

CommandResult cmd_dss_find(const Options& o) {
    const Tolerance tol = resolve_tolerance(o);
    const DensityMatrix single = load_state_source(o, tol);
    if (o.copies < 1) throw InvariantError("parameter", "--copies must be at least 1");
    const DensityMatrix rho = tensor_power(single, o.copies);

    std::vector<ComplexMatrix> bases;
    Json inputs = {{"state", save_state(single)}, {"copies", o.copies}};
    if (!o.bases_file.empty()) {
        const Json doc = read_json_file(o.bases_file);
        bases = bases_from_json(doc, rho.shape());
        inputs["bases"] = doc;
    }
    DssConstraints constraints;
    if (!o.min_signature.empty()) constraints.min_signature = parse_size_list(o.min_signature, 'x', "--min-signature");
    constraints.require_entangled = o.require_entangled;
    constraints.minimal_support = !o.all;
    SearchOptions search;
    search.prune = !o.no_prune;
    search.workers = std::max<std::size_t>(1, o.workers);
    search.candidate_cap = o.cap;

    const DssSearch found = find_dss(rho, bases, constraints, tol, search);

    CommandResult out;
    Report& r = out.report;
    r.inputs_digest = digest_of(inputs);
    r.results["state_shape"] = single.shape().describe();
    r.results["copies"] = o.copies;
    r.results["search_shape"] = rho.shape().describe();
    r.results["bases"] = bases.empty() ? "computational" : "supplied";
    r.results["minimal_support"] = constraints.minimal_support;
    r.results["candidates"] = found.stats.candidates;
    r.results["evaluated"] = found.stats.evaluated;
    r.results["pruned_zero"] = found.stats.pruned_zero;
    r.results["pruned_mixed"] = found.stats.pruned_mixed;
    r.results["certificate_count"] = found.certificates.size();
    OrderedJson certs = OrderedJson::array();
    for (const auto& c : found.certificates) certs.push_back(certificate_json(c, single, o.copies, bases.empty(), tol));
    r.results["certificates"] = std::move(certs);
    if (found.stats.candidates * 2 >= o.cap) {
        r.warnings.push_back("candidate count " + std::to_string(found.stats.candidates) +
                             " is at least half the cap " + std::to_string(o.cap));
    }
    if (found.certificates.empty()) {
        r.notes.push_back("no DSS found over supplied bases");
        out.code = kExitNotFound;
    }
    return out;
}

CommandResult cmd_dss_check(const Options& o) {
    const Tolerance tol = resolve_tolerance(o);
    const DensityMatrix single = load_state_source(o, tol);
    if (o.copies < 1) throw InvariantError("parameter", "--copies must be at least 1");
    if (o.subspace_file.empty()) throw InvariantError("parameter", "--subspace is required");
    const DensityMatrix rho = tensor_power(single, o.copies);
    const Json doc = read_json_file(o.subspace_file);
    const LocalSubspace s = subspace_from_json(doc, rho.shape());

    CommandResult out;
    Report& r = out.report;
    r.inputs_digest = digest_of({{"state", save_state(single)}, {"copies", o.copies}, {"subspace", doc}});
    r.results["state_shape"] = single.shape().describe();
    r.results["copies"] = o.copies;
    r.results["subspace_dims"] = s.dims();
    const CertificateCheck check = check_certificate(rho, s, tol);
    if (const auto* cert = std::get_if<DssCertificate>(&check)) {
        r.results["verdict"] = "certificate";
        OrderedJson j;
        j["weight"] = cert->outcome.weight;
        j["classification"] = to_string(cert->outcome.classification);
        if (cert->outcome.signature) j["signature"] = cert->outcome.signature->to_string();
        if (cert->outcome.pure) {
            j["projected_state"] = ket(cert->outcome.pure->shape(), cert->outcome.pure->amplitudes());
        }
        const RankBoundReport rb = check_rank_bound(single, o.copies, *cert, tol);
        j["rank_bound"] = {{"rank", rb.rank}, {"bound", rb.bound}, {"satisfied", rb.satisfied}};
        r.results["certificate"] = std::move(j);
    } else {
        const auto& refusal = std::get<Refusal>(check);
        const ProjectionOutcome po = project(rho, s, tol);
        r.results["verdict"] = "refused";
        r.results["classification"] = to_string(refusal.classification);
        r.results["reason"] = refusal.reason;
        r.results["weight"] = po.weight;
        r.results["purity_ratio"] = po.purity_ratio;
        r.notes.push_back("subspace is not a DSS: " + refusal.reason);
        out.code = kExitNotFound;
    }
    return out;
}

CommandResult cmd_decompose(const Options& o) {
    const Tolerance tol = resolve_tolerance(o);
    std::vector<std::pair<std::string, ComplexMatrix>> factors;
    Json inputs;
    if (!o.operator_file.empty() && !o.preset_operator.empty()) {
        throw InvariantError("parameter", "give either --operator or --preset, not both");
    }
    if (!o.operator_file.empty()) {
        const Json doc = read_json_file(o.operator_file);
        for (auto& [party, m] : factor_matrices_from_json(doc)) factors.emplace_back(party, m);
        inputs = doc;
    } else if (o.preset_operator == "filter") {
        const LocalFactor f = example_filter();
        factors.emplace_back(f.party(), f.matrix());
        inputs = {{"preset", "filter"}};
    } else if (!o.preset_operator.empty()) {
        throw InvariantError("parameter", "unknown operator preset '" + o.preset_operator + "'");
    } else {
        throw InvariantError("parameter", "--operator or --preset is required");
    }

    CommandResult out;
    Report& r = out.report;
    r.inputs_digest = digest_of(inputs);
    OrderedJson list = OrderedJson::array();
    for (const auto& [party, m] : factors) {
        const LocalFactor f = LocalFactor::normalized(party, m);
        const LpoLfoLuo d = decompose(f, tol);
        const auto n = m.rows();
        const ComplexMatrix rebuilt = d.luo * d.lfo * d.lpo;
        OrderedJson j;
        j["party"] = party;
        j["dim"] = n;
        j["scale"] = f.scale();
        j["retained_dim"] = d.retained_dim;
        j["weights"] = real_list(d.weights);
        j["lpo"] = complex_matrix_json(d.lpo);
        j["lfo"] = complex_matrix_json(d.lfo);
        j["luo"] = complex_matrix_json(d.luo);
        j["retained_basis"] = complex_matrix_json(d.retained_basis);
        j["reconstruction_error"] = max_abs(rebuilt - f.matrix());
        j["lpo_idempotence_error"] = max_abs(d.lpo * d.lpo - d.lpo);
        j["luo_unitarity_error"] = max_abs(d.luo.adjoint() * d.luo - ComplexMatrix::Identity(n, n));
        list.push_back(std::move(j));
        if (f.scale() != 1.0) {
            r.notes.push_back("factor on " + party + " divided by " + format_number(f.scale()) +
                              " to spectral norm 1");
        }
    }
    r.results["factors"] = std::move(list);
    return out;
}

CommandResult cmd_entanglement(const Options& o) {
    const Tolerance tol = resolve_tolerance(o);
    const DensityMatrix single = load_state_source(o, tol);
    if (o.copies < 1) throw InvariantError("parameter", "--copies must be at least 1");
    const DensityMatrix rho = tensor_power(single, o.copies);

    CommandResult out;
    Report& r = out.report;
    r.inputs_digest = digest_of({{"state", save_state(single)}, {"copies", o.copies}});
    r.results["shape"] = rho.shape().describe();
    const std::size_t rank = rho.rank(tol);
    r.results["rank"] = rank;
    r.results["purity"] = (rho.matrix() * rho.matrix()).trace().real();
    if (rank == 1) {
        const HermitianEigen e = eig_hermitian(rho.matrix(), tol);
        const PureState psi = PureState::normalized(rho.shape(), e.vectors.col(0));
        const DimensionSignature sig = dimension_signature(psi, tol);
        r.results["pure"] = true;
        r.results["state"] = ket(psi.shape(), psi.amplitudes());
        r.results["signature"] = sig.to_string();
        r.results["entangled"] = sig.entangled();
        r.results["fully_entangled"] = sig.fully_entangled();
        if (rho.shape().party_count() == 2) r.results["schmidt"] = real_list(schmidt(psi));
    } else {
        r.results["pure"] = false;
    }
    if (rho.shape().dims() == std::vector<std::size_t>{2, 2}) {
        const EntanglementReport e = entanglement_of_formation(rho, tol);
        r.results["concurrence"] = e.concurrence;
        r.results["eof"] = e.eof;
    } else {
        r.notes.push_back("concurrence and entanglement of formation need a 2x2 shape; not computed for " +
                          rho.shape().describe());
    }
    return out;
}

CommandResult cmd_filter_compare(const Options& o) {
    const Tolerance tol = resolve_tolerance(o);
    std::vector<double> lambdas = o.lambdas;
    if (!o.grid.empty()) {
        const auto g = parse_grid(o.grid);
        lambdas.insert(lambdas.end(), g.begin(), g.end());
    }
    if (lambdas.empty()) throw InvariantError("parameter", "give --lambda or --grid");

    CommandResult out;
    Report& r = out.report;
    r.inputs_digest = digest_of({{"lambda", lambdas}});
    OrderedJson rows = OrderedJson::array();
    std::size_t improved = 0;
    for (double l : lambdas) {
        const FilterComparison c = filter_comparison(l, tol);
        const bool up = c.after.eof > c.before.eof;
        improved += up;
        rows.push_back({{"lambda", l},
                        {"eof_before", c.before.eof},
                        {"eof_after", c.after.eof},
                        {"concurrence_before", c.before.concurrence},
                        {"concurrence_after", c.after.concurrence},
                        {"lambda_prime", c.lambda_prime},
                        {"success_probability", c.success_probability},
                        {"improved", up}});
    }
    r.results["rows"] = std::move(rows);
    r.results["improved"] = improved;
    r.results["total"] = lambdas.size();
    return out;
}

CommandResult cmd_ghz_example(const Options& o) {
    const Tolerance tol = resolve_tolerance(o);
    const double p = need(o.p, "--p", "ghz-example");
    const GhzExampleReport g = ghz_from_two_copies(p, !o.no_correction, tol);

    CommandResult out;
    Report& r = out.report;
    r.inputs_digest = digest_of({{"p", p}, {"corrected", g.corrected}});
    r.results["p"] = p;
    r.results["corrected"] = g.corrected;
    r.results["success_probability"] = g.success_probability;
    OrderedJson rows = OrderedJson::array();
    double min_fid = 1.0;
    for (const auto& b : g.branches) {
        rows.push_back({{"s_A", b.outcomes.at(0)},
                        {"s_B", b.outcomes.at(1)},
                        {"s_C", b.outcomes.at(2)},
                        {"probability", b.probability},
                        {"conditional_probability", b.conditional_probability},
                        {"fidelity", b.fidelity}});
        min_fid = std::min(min_fid, b.fidelity);
    }
    r.results["branch_count"] = g.branches.size();
    r.results["branches"] = std::move(rows);
    r.results["min_fidelity"] = min_fid;
    return out;
}

CommandResult cmd_werner_example(const Options& o) {
    const Tolerance tol = resolve_tolerance(o);
    std::vector<double> fs = o.fidelities;
    if (!o.grid.empty()) {
        const auto g = parse_grid(o.grid);
        fs.insert(fs.end(), g.begin(), g.end());
    }
    if (fs.empty()) throw InvariantError("parameter", "give --F or --grid");

    CommandResult out;
    Report& r = out.report;
    r.inputs_digest = digest_of({{"F", fs}});
    OrderedJson rows = OrderedJson::array();
    bool all_diag = true;
    for (double f : fs) {
        const WernerExampleReport w = werner_two_copy(f, tol);
        all_diag = all_diag && w.bell_diagonal;
        OrderedJson row;
        row["F"] = f;
        row["concurrence_before"] = w.concurrence_before;
        for (const auto& s : w.subspaces) {
            const std::string tag = s.indices.at(0) == std::vector<std::size_t>{1, 2} ? "01_10" : "00_11";
            row["weight_" + tag] = s.weight;
            row["concurrence_" + tag] = s.concurrence;
        }
        row["combined_after"] = w.combined_after;
        row["bell_diagonal"] = w.bell_diagonal;
        rows.push_back(std::move(row));
    }
    r.results["subspaces"] = {"{|01>,|10>} per party", "{|00>,|11>} per party"};
    r.results["rows"] = std::move(rows);
    r.results["bell_diagonal"] = all_diag;
    return out;
}

std::string outcome_text(const std::vector<distill::Outcome>& outcomes) {
    std::string s;
    for (const auto& oc : outcomes) {
        if (!s.empty()) s += ' ';
        s += oc.party + ":" + std::to_string(oc.value);
    }
    return s.empty() ? "-" : s;
}

CommandResult cmd_simulate(const Options& o) {
    const Tolerance tol = resolve_tolerance(o);
    if (o.protocol_file.empty()) throw InvariantError("parameter", "--protocol is required");
    const DensityMatrix single = load_state_source(o, tol);
    if (o.copies < 1) throw InvariantError("parameter", "--copies must be at least 1");
    const DensityMatrix rho = tensor_power(single, o.copies);
    const Json doc = read_json_file(o.protocol_file);
    const Protocol protocol = protocol_from_json(doc, std::filesystem::path(o.protocol_file).parent_path());
    const RunResult res = run(protocol, rho, tol);

    CommandResult out;
    Report& r = out.report;
    r.inputs_digest = digest_of({{"state", save_state(single)}, {"copies", o.copies}, {"protocol", doc}});
    r.results["initial_shape"] = rho.shape().describe();
    r.results["steps"] = protocol.size();
    r.results["success_weight"] = res.success_weight();
    r.results["dropped_weight"] = res.dropped_weight;
    r.results["branch_count"] = res.branches.size();
    OrderedJson rows = OrderedJson::array();
    for (const auto& b : res.branches) {
        const std::size_t rank = b.state.rank(tol);
        std::string state = "mixed";
        if (rank == 1) {
            const HermitianEigen e = eig_hermitian(b.state.matrix(), tol);
            state = ket(b.state.shape(), e.vectors.col(0));
        }
        rows.push_back({{"outcomes", outcome_text(b.outcomes)},
                        {"probability", b.probability},
                        {"shape", b.state.shape().describe()},
                        {"rank", rank},
                        {"state", state}});
    }
    r.results["branches"] = std::move(rows);
    return out;
}

CommandResult cmd_rankbound(const Options& o) {
    const Tolerance tol = resolve_tolerance(o);
    if (o.signature.empty()) throw InvariantError("parameter", "--signature is required");
    if (o.copies < 1) throw InvariantError("parameter", "--copies must be at least 1");
    const std::vector<std::size_t> sig = parse_size_list(o.signature, 'x', "--signature");
    std::optional<DensityMatrix> single;
    std::optional<SystemShape> shape;
    Json inputs = {{"copies", o.copies}, {"signature", sig}};
    if (!o.state.empty()) {
        single = load_state_source(o, tol);
        shape = single->shape();
        inputs["state"] = save_state(*single);
    } else if (!o.dims.empty()) {
        shape = SystemShape::from_dims(parse_size_list(o.dims, ',', "--dims"));
        inputs["dims"] = shape->dims();
    } else {
        throw InvariantError("parameter", "give --state or --dims");
    }
    const std::uint64_t bound = rank_bound(*shape, o.copies, sig);

    CommandResult out;
    Report& r = out.report;
    r.inputs_digest = digest_of(inputs);
    r.results["shape"] = shape->describe();
    r.results["copies"] = o.copies;
    r.results["signature"] = signature_text(sig);
    r.results["bound"] = bound;
    if (single) {
        const std::size_t rank = tensor_power(*single, o.copies).rank(tol);
        r.results["rank"] = rank;
        r.results["satisfied"] = rank <= bound;
        if (rank > bound) {
            r.notes.push_back("rank exceeds the bound: no DSS with signature " + signature_text(sig) + " exists");
        }
    }
    return out;
}

// ---- wiring ---------------------------------------------------------------

void add_state_options(CLI::App* app, Options& o, bool copies = true) {
    app->add_option("--state", o.state,
                    "state file or preset: example3q (--p), werner (--F), filter (--lambda), ghz, w, "
                    "w-standard, phi-plus, phi-minus, psi-plus, psi-minus");
    app->add_option("--p", o.p, "parameter of the example3q preset");
    app->add_option("--F", o.F, "fidelity of the werner preset");
    app->add_option("--lambda", o.lambda, "parameter of the filter preset");
    if (copies) app->add_option("--copies", o.copies, "number of copies (tensor power)")->capture_default_str();
}

void add_common_options(CLI::App* app, Options& o) {
    app->add_option("--tolerance", o.tol_profile, "tolerance profile: default, strict, loose");
    app->add_option("--rank-rtol", o.rank_rtol, "relative rank cutoff, in [0, 1e-3]");
    app->add_option("--herm-atol", o.herm_atol, "Hermiticity tolerance, in [0, 1e-3]");
    app->add_option("--psd-atol", o.psd_atol, "negative-eigenvalue tolerance, in [0, 1e-3]");
    app->add_option("--purity-atol", o.purity_atol, "purity tolerance, in [0, 1e-3]");
    app->add_option("--format", o.format, "stdout format: text or json")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    app->add_option("--json", o.json_out, "also write the JSON report to this path");
}

std::string join_args(const std::vector<std::string>& args) {
    std::string s = "distill";
    for (const auto& a : args) s += " " + a;
    return s;
}

constexpr const char* kFooter =
    "Subcommands:\n"
    "  dss find        search computational or supplied bases for a DSS\n"
    "  dss check       test one subspace\n"
    "  decompose       split local factors into projector, filter and unitary\n"
    "  entanglement    signature, Schmidt coefficients, concurrence, E_F\n"
    "  filter-compare  E_F before and after the local filter\n"
    "  simulate        run a protocol file, or ghz-example / werner-example\n"
    "  rankbound       rank bound for a target signature\n"
    "Exit codes: 0 ok, 1 input or validation error, 2 nothing found.\n"
    "Environment: DISTILL_TOLERANCE selects the default tolerance profile.";

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Finite-copy distillation toolkit", "distill"};
    app.require_subcommand(1);
    app.footer(kFooter);

    std::function<CommandResult(const Options&)> action;
    auto bind = [&](CLI::App* sub, CommandResult (*fn)(const Options&)) {
        sub->callback([&action, fn] { action = fn; });
    };

    auto* dss = app.add_subcommand("dss", "DSS search and certificate checks");
    dss->require_subcommand(1);
    auto* find = dss->add_subcommand("find", "search subsets of per-party bases for a DSS");
    add_state_options(find, o);
    find->add_option("--bases", o.bases_file, "per-party basis file");
    find->add_flag("--require-entangled", o.require_entangled, "every party must keep reduced rank >= 2");
    find->add_option("--min-signature", o.min_signature, "minimum signature, e.g. 2x2x2");
    find->add_flag("--all", o.all, "also list certificates with idle basis vectors");
    find->add_flag("--no-prune", o.no_prune, "evaluate every candidate");
    find->add_option("--workers", o.workers, "worker threads")->capture_default_str();
    find->add_option("--cap", o.cap, "candidate cap")->capture_default_str();
    add_common_options(find, o);
    bind(find, cmd_dss_find);

    auto* check = dss->add_subcommand("check", "test whether one subspace is a DSS");
    add_state_options(check, o);
    check->add_option("--subspace", o.subspace_file, "subspace file")->required();
    add_common_options(check, o);
    bind(check, cmd_dss_check);

    auto* dec = app.add_subcommand("decompose", "projector, filter and unitary parts of local factors");
    dec->add_option("--operator", o.operator_file, "operator file");
    dec->add_option("--preset", o.preset_operator, "operator preset: filter");
    add_common_options(dec, o);
    bind(dec, cmd_decompose);

    auto* ent = app.add_subcommand("entanglement", "entanglement summary of a state");
    add_state_options(ent, o);
    add_common_options(ent, o);
    bind(ent, cmd_entanglement);

    auto* fc = app.add_subcommand("filter-compare", "E_F before and after the local filter");
    fc->add_option("--lambda", o.lambdas, "lambda values (repeatable)");
    fc->add_option("--grid", o.grid, "start:stop:step");
    add_common_options(fc, o);
    bind(fc, cmd_filter_compare);

    auto* sim = app.add_subcommand("simulate", "run a protocol or a built-in example");
    sim->require_subcommand(0, 1);
    add_state_options(sim, o);
    sim->add_option("--protocol", o.protocol_file, "protocol file");
    add_common_options(sim, o);
    bind(sim, cmd_simulate);
    auto* ghz = sim->add_subcommand("ghz-example", "GHZ distillation from two copies of example3q");
    ghz->add_option("--p", o.p, "example3q parameter")->required();
    ghz->add_flag("--no-correction", o.no_correction, "skip the conditional phase flip");
    add_common_options(ghz, o);
    bind(ghz, cmd_ghz_example);
    auto* wer = sim->add_subcommand("werner-example", "two-copy Werner projections");
    wer->add_option("--F", o.fidelities, "Werner fidelity (repeatable)");
    wer->add_option("--grid", o.grid, "start:stop:step");
    add_common_options(wer, o);
    bind(wer, cmd_werner_example);

    auto* rb = app.add_subcommand("rankbound", "rank bound for a target signature");
    add_state_options(rb, o);
    rb->add_option("--dims", o.dims, "per-party dims, e.g. 2,2,2 (instead of --state)");
    rb->add_option("--signature", o.signature, "target signature, e.g. 2x2x2")->required();
    add_common_options(rb, o);
    bind(rb, cmd_rankbound);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitError;
    }
    // simulate's own callback also fires after a nested example; the nested one wins.
    if (!action) {
        err << "error: no command given\n";
        return kExitError;
    }
    if (sim->parsed() && (ghz->parsed() || wer->parsed())) {
        action = ghz->parsed() ? cmd_ghz_example : cmd_werner_example;
    }

    try {
        const auto start = std::chrono::steady_clock::now();
        CommandResult result = action(o);
        const auto stop = std::chrono::steady_clock::now();
        result.report.command = join_args(args);
        result.report.timing_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        const ReportFormat fmt = o.format == "json" ? ReportFormat::json : ReportFormat::text;
        out << render_report(result.report, fmt);
        if (!o.json_out.empty()) {
            std::ofstream f(o.json_out);
            if (!f) throw SchemaError("cannot write '" + o.json_out + "'");
            f << report_to_json(result.report).dump(2) << '\n';
        }
        return result.code;
    } catch (const InvariantError& e) {
        err << "error [" << e.invariant() << "]: " << e.what() << '\n';
    } catch (const SchemaError& e) {
        err << "error [schema]: " << e.what() << '\n';
    } catch (const CapExceeded& e) {
        err << "error [cap]: " << e.what() << '\n';
    } catch (const ImpossibleBranch& e) {
        err << "error [branch]: " << e.what() << '\n';
    } catch (const DimensionError& e) {
        err << "error [dimension]: " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return kExitError;
}

}  // namespace distill
