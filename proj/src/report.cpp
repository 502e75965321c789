#include "sphc/report.hpp"

#include <ostream>

namespace sphc {

void append(Report& doc, const EntropyReport& r, const std::string& prefix) {
  doc[prefix + "total_bits_per_byte"] = r.total_bits_per_byte;
  doc[prefix + "plane_bits_per_byte"] = r.plane_bits_per_byte;
  doc[prefix + "exponent_entropy_bits"] = r.exponent_entropy_bits;
  doc[prefix + "exponent_unique"] = r.exponent_unique;
  doc[prefix + "exponent_histogram"] = r.exponent_histogram;
}

void append(Report& doc, const ErrorReport& r, const std::string& prefix) {
  doc[prefix + "max_abs"] = r.max_abs;
  doc[prefix + "mean_abs"] = r.mean_abs;
  doc[prefix + "cos_max_err"] = r.cos_max_err;
  doc[prefix + "cross_pair_max_err"] = r.cross_pair_max_err;
  doc[prefix + "cross_pairs"] = r.cross_pairs;
}

void append(Report& doc, const ComparisonReport& r, const std::string& prefix) {
  doc[prefix + "raw_bytes"] = r.raw_bytes;
  doc[prefix + "baseline_bytes"] = r.baseline_bytes;
  doc[prefix + "spherical_bytes"] = r.spherical_bytes;
  doc[prefix + "ratio_baseline"] = r.ratio_baseline;
  doc[prefix + "ratio_spherical"] = r.ratio_spherical;
  doc[prefix + "size_reduction_vs_baseline"] = r.size_reduction_vs_baseline;
  doc[prefix + "ratio_gain_vs_baseline"] = r.ratio_gain_vs_baseline;
}

void append(Report& doc, const NormReport& r, const std::string& prefix) {
  doc[prefix + "max_deviation"] = r.max_deviation;
  doc[prefix + "violations"] = r.violations;
}

void print_report(std::ostream& out, const Report& doc, bool json_style) {
  if (json_style) {
    out << doc.dump() << '\n';
    return;
  }
  for (const auto& [key, value] : doc.items()) {
    out << key << ": ";
    if (value.is_string()) {
      out << value.get<std::string>();
    } else {
      out << value.dump();
    }
    out << '\n';
  }
}

}  // namespace sphc
