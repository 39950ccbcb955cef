#include "distill/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>

#include "distill/error.hpp"

namespace distill {

std::string fnv1a_digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::abs(x) < 1e-13) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

OrderedJson report_to_json(const Report& r) {
    return OrderedJson{{"command", r.command},     {"inputs_digest", r.inputs_digest},
                       {"results", r.results},     {"notes", r.notes},
                       {"warnings", r.warnings},   {"timing_ms", r.timing_ms}};
}

Report report_from_json(const OrderedJson& doc) {
    try {
        Report r;
        r.command = doc.at("command").get<std::string>();
        r.inputs_digest = doc.at("inputs_digest").get<std::string>();
        r.results = doc.at("results");
        r.notes = doc.at("notes").get<std::vector<std::string>>();
        r.warnings = doc.at("warnings").get<std::vector<std::string>>();
        r.timing_ms = doc.at("timing_ms").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("report: ") + e.what());
    }
}

namespace {

bool is_scalar(const OrderedJson& v) { return !v.is_structured(); }

std::string scalar_text(const OrderedJson& v) {
    if (v.is_null()) return "-";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return format_number(v.get<double>());
    return v.get<std::string>();
}

bool scalar_list(const OrderedJson& v) {
    return v.is_array() && std::all_of(v.begin(), v.end(), is_scalar);
}

bool matrix_like(const OrderedJson& v) {
    return v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), scalar_list);
}

// Rows of flat objects sharing one key order.
bool table_like(const OrderedJson& v) {
    if (!v.is_array() || v.empty() || !v.front().is_object()) return false;
    std::vector<std::string> keys;
    for (auto it = v.front().begin(); it != v.front().end(); ++it) keys.push_back(it.key());
    for (const auto& row : v) {
        if (!row.is_object() || row.size() != keys.size()) return false;
        std::size_t k = 0;
        for (auto it = row.begin(); it != row.end(); ++it, ++k) {
            if (it.key() != keys[k] || !is_scalar(it.value())) return false;
        }
    }
    return true;
}

std::string inline_list(const OrderedJson& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += scalar_text(v[i]);
    }
    return s + "]";
}

void render_table(std::ostringstream& out, const OrderedJson& rows, const std::string& pad) {
    std::vector<std::vector<std::string>> cells(1);
    for (auto it = rows.front().begin(); it != rows.front().end(); ++it) cells[0].push_back(it.key());
    for (const auto& row : rows) {
        cells.emplace_back();
        for (auto it = row.begin(); it != row.end(); ++it) cells.back().push_back(scalar_text(it.value()));
    }
    std::vector<std::size_t> width(cells[0].size(), 0);
    for (const auto& r : cells) {
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    for (const auto& r : cells) {
        std::string line = pad;
        for (std::size_t c = 0; c < r.size(); ++c) {
            line += r[c];
            if (c + 1 < r.size()) line += std::string(width[c] - r[c].size() + 2, ' ');
        }
        out << line << '\n';
    }
}

void render_value(std::ostringstream& out, const std::string& key, const OrderedJson& v,
                  std::size_t indent) {
    const std::string pad(indent, ' ');
    if (is_scalar(v)) {
        out << pad << key << ": " << scalar_text(v) << '\n';
    } else if (scalar_list(v)) {
        out << pad << key << ": " << inline_list(v) << '\n';
    } else if (matrix_like(v)) {
        out << pad << key << ":\n";
        for (const auto& row : v) out << pad << "  " << inline_list(row) << '\n';
    } else if (table_like(v)) {
        out << pad << key << ":\n";
        render_table(out, v, pad + "  ");
    } else if (v.is_array()) {
        out << pad << key << ":\n";
        for (std::size_t i = 0; i < v.size(); ++i) render_value(out, "[" + std::to_string(i) + "]", v[i], indent + 2);
    } else {
        out << pad << key << ":\n";
        for (auto it = v.begin(); it != v.end(); ++it) render_value(out, it.key(), it.value(), indent + 2);
    }
}

}  // namespace

std::string render_report(const Report& r, ReportFormat format) {
    if (format == ReportFormat::json) return report_to_json(r).dump(2) + "\n";
    std::ostringstream out;
    out << "command: " << r.command << '\n';
    out << "inputs: " << r.inputs_digest << '\n';
    out << "results:\n";
    for (auto it = r.results.begin(); it != r.results.end(); ++it) {
        render_value(out, it.key(), it.value(), 2);
    }
    if (!r.notes.empty()) {
        out << "notes:\n";
        for (const auto& n : r.notes) out << "  - " << n << '\n';
    }
    if (!r.warnings.empty()) {
        out << "warnings:\n";
        for (const auto& w : r.warnings) out << "  - " << w << '\n';
    }
    return out.str();
}

}  // namespace distill
