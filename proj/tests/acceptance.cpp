// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "distill/cli.hpp"
#include "distill/dss.hpp"
#include "distill/entanglement.hpp"
#include "distill/protocols.hpp"
#include "distill/report.hpp"
#include "distill/states.hpp"
#include "oracles.hpp"
#include "properties.hpp"

using namespace distill;
using namespace distill::testing;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "FAILED: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

// certificates from the two-copy search, reused by the rank-bound criterion
std::vector<DssCertificate> g_certificates;
const double kP = 0.5;

void filter_example(Verdict& v) {
    const auto t0 = Clock::now();
    double min_margin = 1e9, worst_state = 0;
    for (double lambda : {0.90, 0.925, 0.95, 0.975, 0.99}) {
        const FilterComparison c = filter_comparison(lambda);
        const double margin = c.after.eof - c.before.eof;
        min_margin = std::min(min_margin, margin);
        v.require(margin > 1e-6, "lambda " + fmt(lambda) + " margin " + fmt(margin));
        const double dev = max_abs(c.filtered_state.matrix() - filtered_oracle(lambda));
        worst_state = std::max(worst_state, dev);
        v.require(dev <= 1e-9, "lambda " + fmt(lambda) + " filtered state off by " + fmt(dev));
        // Wootters value against the X-state closed form
        const double cx = x_state_concurrence(filtered_oracle(lambda));
        v.require(std::abs(c.after.concurrence - cx) <= 1e-9, "concurrence vs closed form");
        v.require(std::abs(c.success_probability - (lambda + 2) / 8) <= 1e-9, "success probability");
    }
    const double ms = ms_since(t0);
    v.require(ms < 1000, "runtime " + fmt(ms) + " ms");
    v.detail << (v.pass ? "" : " | ") << "min E_F margin " << fmt(min_margin) << ", state dev "
             << fmt(worst_state) << ", " << fmt(ms) << " ms";
}

void three_qubit_search(Verdict& v) {
    const auto t0 = Clock::now();
    const CliRun one = cli({"dss", "find", "--state", "example3q", "--p", "0.5", "--format", "json"});
    v.require(one.code == kExitNotFound, "single copy exit " + std::to_string(one.code));
    if (one.code == kExitNotFound) {
        const auto doc = OrderedJson::parse(one.out);
        v.require(doc["results"]["certificates"].empty(), "single copy certificate list not empty");
    }
    const CliRun two = cli({"dss", "find", "--state", "example3q", "--p", "0.5", "--copies", "2"});
    v.require(two.code == kExitOk, "two copy exit " + std::to_string(two.code));

    // library path, also feeding the rank-bound criterion
    const DensityMatrix sigma = presets::three_qubit_example(kP);
    v.require(find_dss(sigma).certificates.empty(), "single copy library search not empty");
    DssConstraints tight;
    tight.minimal_support = true;
    const DssSearch s = find_dss(tensor_power(sigma, 2), {}, tight);
    v.require(s.stats.candidates == 3375, "candidates " + std::to_string(s.stats.candidates));
    v.require(s.certificates.size() == 1, "certificates " + std::to_string(s.certificates.size()));
    g_certificates = s.certificates;
    if (s.certificates.size() == 1) {
        const auto& c = s.certificates[0];
        const std::vector<std::vector<std::size_t>> expect(3, {1, 2});
        v.require(c.basis_indices == expect, "certificate is not {|01>,|10>} per party");
        const double fid = fidelity(presets::ghz(), *c.outcome.state);
        v.require(fid >= 1 - 1e-9, "fidelity " + fmt(fid));
        v.require(std::abs(c.outcome.weight - kP * kP / 2) <= 1e-9, "weight " + fmt(c.outcome.weight));
        v.detail << (v.pass ? "" : " | ") << "fidelity 1-" << fmt(1 - fid) << ", weight "
                 << c.outcome.weight << ", ";
    }
    const double ms = ms_since(t0);
    v.require(ms < 5000, "runtime " + fmt(ms) + " ms");
    v.detail << "3375 candidates, " << fmt(ms) << " ms";
}

void ghz_protocol_criterion(Verdict& v) {
    double worst_fid = 1, worst_prob = 0;
    for (double p : {0.1, 0.5, 0.9}) {
        const GhzExampleReport r = ghz_from_two_copies(p);
        const auto oracle = ghz_oracle(p, true);
        v.require(r.branches.size() == 8, "branches at p=" + fmt(p));
        v.require(std::abs(r.success_probability - p * p / 2) <= 1e-9, "success probability p=" + fmt(p));
        double oracle_total = 0;
        for (const auto& b : oracle) oracle_total += b.probability;
        v.require(std::abs(oracle_total - p * p / 2) <= 1e-9, "oracle success p=" + fmt(p));
        for (std::size_t k = 0; k < r.branches.size() && k < oracle.size(); ++k) {
            const auto& b = r.branches[k];
            worst_fid = std::min(worst_fid, b.fidelity);
            worst_prob = std::max(worst_prob, std::abs(b.probability - oracle[k].probability));
            v.require(b.fidelity >= 1 - 1e-9, "fidelity p=" + fmt(p));
            v.require(oracle[k].fidelity >= 1 - 1e-9, "oracle fidelity p=" + fmt(p));
            v.require(std::abs(b.probability - oracle[k].probability) <= 1e-9, "branch vs oracle p=" + fmt(p));
        }
    }
    v.detail << (v.pass ? "" : " | ") << "8 branches x 3 p, min fidelity 1-" << fmt(1 - worst_fid)
             << ", max branch deviation from 64x64 oracle " << fmt(worst_prob);
}

void werner_criterion(Verdict& v, const std::filesystem::path& golden) {
    double worst_off = 0, worst_c = 0;
    for (double f : {0.6, 0.8, 0.95}) {
        const WernerExampleReport r = werner_two_copy(f);
        const double c = concurrence(presets::werner(f));
        worst_c = std::max(worst_c, std::abs(c - std::max(0.0, 2 * f - 1)));
        v.require(std::abs(c - std::max(0.0, 2 * f - 1)) <= 1e-9, "single-copy concurrence F=" + fmt(f));
        v.require(r.subspaces.size() == 2, "subspace count");
        for (const auto& s : r.subspaces) {
            worst_off = std::max(worst_off, s.max_bell_offdiagonal);
            // Bell-basis off-diagonals recomputed here
            const ComplexMatrix b = bell_basis();
            const ComplexMatrix in_bell = b.adjoint() * s.state.matrix() * b;
            ComplexMatrix off = in_bell;
            off.diagonal().setZero();
            v.require(max_abs(off) <= 1e-9, s.name + " not Bell-diagonal at F=" + fmt(f));
        }
    }
    const CliRun table = cli({"simulate", "werner-example", "--F", "0.6", "--F", "0.8", "--F", "0.95"});
    v.require(table.code == kExitOk, "werner-example exit " + std::to_string(table.code));
    std::ifstream in(golden);
    std::stringstream ss;
    ss << in.rdbuf();
    v.require(std::filesystem::exists(golden), "golden file missing: " + golden.string());
    v.require(ss.str() == table.out, "table differs from golden " + golden.filename().string());
    v.detail << (v.pass ? "" : " | ") << "max Bell off-diagonal " << fmt(worst_off)
             << ", |C - (2F-1)| " << fmt(worst_c) << ", table matches golden";
}

void suite_criterion(Verdict& v, const SuiteResult& r, std::size_t need, const std::string& special) {
    v.require(r.trials >= need, "only " + std::to_string(r.trials) + " trials");
    v.require(r.failures == 0, std::to_string(r.failures) + " failures, first: " + r.first_failure);
    v.detail << (v.pass ? "" : " | ") << r.trials << " trials, " << r.failures << " failures";
    if (!special.empty()) v.detail << ", " << r.special << " " << special;
    if (r.worst > 0) v.detail << ", worst residual " << fmt(r.worst);
}

void rank_bound_criterion(Verdict& v) {
    v.require(!g_certificates.empty(), "no certificates from the search criterion");
    const DensityMatrix sigma = presets::three_qubit_example(kP);
    for (const auto& c : g_certificates) {
        const RankBoundReport r = check_rank_bound(sigma, 2, c);
        v.require(r.satisfied, "rank " + std::to_string(r.rank) + " > bound " + std::to_string(r.bound));
        v.require(r.rank == 4 && r.bound == 57, "expected 4 <= 57, got " + std::to_string(r.rank) +
                                                    " <= " + std::to_string(r.bound));
        v.detail << (v.pass ? "" : " | ") << "rank " << r.rank << " <= " << r.bound << "; ";
    }
    const SuiteResult planted = planted_suite(60);
    v.require(planted.trials >= 50, "planted instances " + std::to_string(planted.trials));
    v.require(planted.failures == 0, "planted: " + planted.first_failure);
    v.detail << "planted " << planted.trials << " instances, " << planted.failures
             << " failures, pruned == unpruned";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    std::uint64_t seed = kDefaultSeed;
    std::string golden_dir = std::string(DISTILL_TEST_DATA) + "/golden";
    app.add_option("--seed", seed, "base seed for the property suites");
    app.add_option("--golden", golden_dir, "golden file directory");
    CLI11_PARSE(app, argc, argv);
    ::setenv("DISTILL_SEED", std::to_string(seed).c_str(), 1);

    struct Criterion {
        int id;
        std::string name;
        std::function<void(Verdict&)> body;
    };
    const std::vector<Criterion> criteria = {
        {1, "filter example E_F comparison", filter_example},
        {2, "three-qubit DSS search", three_qubit_search},
        {3, "GHZ two-copy protocol", ghz_protocol_criterion},
        {4, "Werner two-copy Bell-diagonality",
         [&](Verdict& v) { werner_criterion(v, std::filesystem::path(golden_dir) / "werner_example.txt"); }},
        {5, "rank preserved under invertible local operators",
         [](Verdict& v) { suite_criterion(v, rank_invariance_suite(200), 200, ""); }},
        {6, "signature preserved under invertible local operators",
         [](Verdict& v) { suite_criterion(v, signature_invariance_suite(200), 200, ""); }},
        {7, "local factor decomposition round trip",
         [](Verdict& v) { suite_criterion(v, decomposition_suite(500), 500, "rank-deficient"); }},
        {8, "rank bound and planted-subspace completeness", rank_bound_criterion},
    };

    std::cout << "seed " << seed << "\n";
    int failed = 0;
    for (const auto& c : criteria) {
        Verdict v;
        const auto t0 = Clock::now();
        try {
            c.body(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        if (!v.pass) ++failed;
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << ": "
                  << v.detail.str() << " (" << fmt(ms_since(t0)) << " ms)\n";
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all 8 criteria passed") << "\n";
    return failed ? 1 : 0;
}
