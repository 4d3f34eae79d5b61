#pragma once

// Serialization of study reports: JSON with a meta block, tidy CSV.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rshe/ito.hpp"

namespace rshe {

inline constexpr const char* kVersion = "1.0.0";

/// Ordered key/value pairs describing the resolved configuration.
using Meta = std::vector<std::pair<std::string, std::string>>;

/// {"meta": {...}, "reports": [...]}, deterministic key order and number formatting.
std::string reports_to_json(const std::vector<StudyReport>& reports, const Meta& meta);

/// One row per (h, path): h,path,stream,phi,t_grad,t_stoch,t_f1,t_f2,phi_start,phi_end,residual,normalized_residual
void write_rows_csv(std::ostream& os, const std::vector<StudyReport>& reports, const Meta& meta);

/// One row per (h, statistic): kind,phi,h,statistic,value
void write_summary_csv(std::ostream& os, const std::vector<StudyReport>& reports, const Meta& meta);

/// %.17g
std::string format_double(double v);

}  // namespace rshe
