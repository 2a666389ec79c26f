#pragma once

#include <cstdint>
#include <string>

#include "rba/config.hpp"
#include "rba/report.hpp"

namespace rba {

// audit runs the full grid + decorrelation + diagnostics (+ foil when the
// dataset has foil records); the other stages run just their slice.
enum class RunStage { audit, decorrelate, foil };

struct RunOutcome {
    AuditReport report;
    int exit_code = 0;  // 0 clean, 2 when cell errors were recorded
};

// enhance -> embed -> score -> stats -> report assembly. Fatal problems
// (unreadable dataset, invalid wiring) throw; per-cell failures are recorded
// in report.errors and never silently drop a cell.
RunOutcome run_audit(const Config& cfg, RunStage stage, bool offline);

// run_audit plus report files under cfg.output_dir.
RunOutcome run_and_write(const Config& cfg, RunStage stage, bool offline);

// Builds the synthetic dataset: every bias type over every seed doc.
void run_generate(const std::string& seeds_path, const std::string& out_path,
                  uint64_t rng_seed);

// Pre-warms the generation cache for every (non-baseline strategy, query) and
// writes the enhanced queries under cfg.output_dir. Returns 0/2 like audit.
int run_enhance(const Config& cfg, const std::string& only_strategy,
                bool offline);

}  // namespace rba
