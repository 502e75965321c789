#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "sphc/analysis.hpp"
#include "sphc/transform.hpp"

namespace sphc {

using Report = nlohmann::ordered_json;

// Flat key-value documents. Field names match the report structs; `prefix`
// namespaces them when several reports share one document.
void append(Report& doc, const EntropyReport& r, const std::string& prefix = "");
void append(Report& doc, const ErrorReport& r, const std::string& prefix = "");
void append(Report& doc, const ComparisonReport& r, const std::string& prefix = "");
void append(Report& doc, const NormReport& r, const std::string& prefix = "");

/// One JSON object per line when `json_style`, otherwise "key: value" lines.
void print_report(std::ostream& out, const Report& doc, bool json_style);

}  // namespace sphc
