#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "syco/jsonl.hpp"
#include "syco/metrics.hpp"

namespace syco {

struct ReportSpec {
    std::vector<std::string> group_by = {"model", "dataset", "condition"};
    std::vector<std::string> formats = {"json", "csv", "markdown", "svg"};
    int decimals = 2;  // display rounding; stored values stay full precision
};

// Non-empty group_by/formats drawn from the known sets, decimals in 0..9;
// ConfigError otherwise.
void validate_report_spec(const ReportSpec& spec);

// Half-up display rounding (ties away from zero): 0.375 -> 0.38, -0.375 ->
// -0.38 at 2 decimals. Operates on the stored double, so a nominal tie that
// is not exactly representable (0.575 is stored just below it) rounds the
// way the stored value actually lies, same as printf.
double round_half_up(double v, int decimals);

// The one formatter every output format shares; nullopt renders as "-".
std::string format_cell(std::optional<double> v, int decimals);

// One table per dataset: a row per model (per n_q stratum when a model has
// several), a "Vanilla Acc. (%)" column, then Acc/S_r/C_true/S_a per
// condition. `values` holds full-precision numbers aligned with columns[1..];
// formats round them at render time and never recompute anything.
struct ReportTable {
    std::string dataset;
    std::vector<std::string> conditions;
    std::vector<std::string> columns;  // "Model", then numeric column names
    std::vector<std::string> row_labels;
    std::vector<std::vector<std::optional<double>>> values;
};

ReportTable build_table(const std::vector<MetricsSummary>& summaries, const ReportSpec& spec);

std::string render_markdown(const ReportTable& t, const ReportSpec& spec);
std::string render_csv(const ReportTable& t, const ReportSpec& spec);
json table_to_json(const ReportTable& t);

// Grouped bar chart: one group per model, a paired S_r/S_a bar per condition,
// every bar tagged class="bar". Output bytes depend only on the input.
std::string build_chart(const std::vector<MetricsSummary>& summaries, const ReportSpec& spec);

// Groups summaries by dataset and writes report.json / report.csv /
// report.md plus charts/<dataset>.svg for the formats selected in spec.
// Returns the paths written.
std::vector<std::filesystem::path> write_report(const std::vector<MetricsSummary>& summaries,
                                                const ReportSpec& spec,
                                                const std::filesystem::path& out_dir);

}  // namespace syco
