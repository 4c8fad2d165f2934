#pragma once

#include <string>
#include <vector>

#include "meshprot/protsim.hpp"

namespace meshprot {

std::string report_to_json(const RunReport& report);
std::string events_to_csv(const RunReport& report);

enum class TableStyle { StartPsDirection, Rfb };

/// Text table over a set of run reports, one row per (report, relay) with
/// a populated trace. Style 1 shows starting/PS/direction columns, style 2
/// the RFB quantities.
std::string render_table(const std::vector<RunReport>& reports, TableStyle style);

void write_file(const std::string& path, const std::string& content);

}  // namespace meshprot
