#pragma once

// Command reports: an ordered result tree plus notes and warnings, rendered
// either as diff-friendly text or as JSON.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace distill {

using OrderedJson = nlohmann::ordered_json;

struct Report {
    std::string command;        // echo of the invocation
    std::string inputs_digest;  // "fnv1a64:<hex>" over the serialized inputs
    OrderedJson results = OrderedJson::object();
    std::vector<std::string> notes;
    std::vector<std::string> warnings;
    double timing_ms = 0.0;     // JSON only; left out of text so output is stable

    bool operator==(const Report&) const = default;
};

enum class ReportFormat { text, json };

std::string fnv1a_digest(std::string_view bytes);

/// 12 significant digits; magnitudes below 1e-13 print as 0.
std::string format_number(double x);

OrderedJson report_to_json(const Report& r);
Report report_from_json(const OrderedJson& doc);
std::string render_report(const Report& r, ReportFormat format);

}  // namespace distill
