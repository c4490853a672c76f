#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "driver/pipeline.hpp"
#include "machine/machine.hpp"

namespace mnt {

nlohmann::ordered_json compile_report_json(const CompileReport& r);
nlohmann::ordered_json metrics_json(const SimMetrics& m, const std::string& design, RunStatus status,
                                    const std::string& failure);

/// One row per process cost and per communication edge.
std::string partition_csv(const ProcessGraph& g);

struct TableOptions {
  bool csv = false;
  bool timing = false; // include the per-pass compile time table
};

/// Comparison tables over compile reports and run metrics. Throws
/// Error(Validation) naming the first missing field.
std::string render_tables(const std::vector<nlohmann::json>& docs, const TableOptions& opt = {});

} // namespace mnt
