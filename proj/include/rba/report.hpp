#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rba/enhance.hpp"
#include "rba/stats.hpp"

namespace rba {

// Percentage reduction in |rho| for one feature under one strategy,
// averaged across retrievers.
struct DecorRow {
    std::string feature;
    std::string strategy;
    double pct = 0.0;

    bool operator==(const DecorRow&) const = default;
};

// Per-retriever correlation backing a DecorRow.
struct DecorDetail {
    std::string retriever_id;
    std::string feature;
    std::string strategy;
    double rho = 0.0;
    int n = 0;

    bool operator==(const DecorDetail&) const = default;
};

struct FoilCell {
    std::string retriever_id;
    std::string strategy;
    double accuracy_pct = 0.0;
    size_t ties = 0;
    size_t total = 0;

    bool operator==(const FoilCell&) const = default;
};

// One failed cell or stage. Partial runs keep going and record what broke.
struct CellIssue {
    std::string retriever_id;
    std::string bias_type;
    std::string strategy;
    std::string stage;  // enhance | embed | stats | foil
    std::string message;

    bool operator==(const CellIssue&) const = default;
};

struct AuditReport {
    std::string run_id;
    std::string config_hash;
    std::string dataset_name;
    std::vector<std::string> retriever_order;
    std::vector<std::string> strategy_order;  // baseline first
    std::vector<GridCell> cells;
    std::vector<StrategySummary> summaries;
    // feature -> mean |rho| across retrievers under the baseline condition
    std::map<std::string, double> baseline_abs_rho;
    std::vector<DecorRow> decorrelation;
    std::vector<DecorDetail> decorrelation_detail;
    std::vector<FoilCell> foil;
    std::map<std::string, DiagnosticsSummary> diagnostics;  // by strategy
    size_t rejected_records = 0;
    std::vector<CellIssue> errors;

    bool operator==(const AuditReport&) const = default;
};

enum class ReportFormat { json, csv, markdown };

// Rounds half-even-free: shortest decimal of the value snapped to 6
// significant digits. All rendered numbers pass through this, which is what
// makes rerenders byte-identical.
double round6(double v);

// Filename -> content. json: {"report.json"}; csv: one file per table under
// tables/; markdown: {"report.md"}.
std::map<std::string, std::string> render(const AuditReport& report,
                                          ReportFormat fmt);

// Writes every format under out_dir.
void write_report(const AuditReport& report, const std::string& out_dir);

// Inverse of the json rendering.
AuditReport parse_report(const std::string& json_bytes);

struct HeatmapMatrix {
    std::string strategy;
    std::vector<std::string> retrievers;   // row order
    std::vector<std::string> bias_types;   // column order
    std::vector<std::vector<std::optional<double>>> values;  // |t| or null
};

// |t| grid for one strategy. Orders default to first appearance (retrievers)
// and the canonical bias order; a missing cell stays null.
HeatmapMatrix heatmap_matrix(const std::vector<GridCell>& cells,
                             const std::string& strategy,
                             std::vector<std::string> retriever_order = {},
                             std::vector<std::string> bias_order = {});

}  // namespace rba
