#include "syco/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "syco/errors.hpp"

namespace syco {

namespace {

const std::set<std::string> kKnownGroupKeys = {"model", "dataset", "condition"};
const std::set<std::string> kKnownFormats = {"json", "csv", "markdown", "svg"};

std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out.empty() ? "dataset" : out;
}

// Row identity within a table. A model usually has one stratum; the n_q
// suffix only appears when it has several.
struct RowKey {
    std::string model;
    int n_q;
    bool operator<(const RowKey& o) const {
        if (model != o.model) return model < o.model;
        return n_q < o.n_q;
    }
};

struct RowData {
    std::optional<double> vanilla_pct;
    // condition -> (acc%, s_r, c_true, s_a)
    std::map<std::string, std::array<std::optional<double>, 4>> cells;
};

std::map<RowKey, RowData> group_rows(const std::vector<MetricsSummary>& summaries) {
    std::map<RowKey, RowData> rows;
    for (const auto& s : summaries) {
        RowData& row = rows[RowKey{s.model, s.n_q}];
        if (row.cells.count(s.condition)) {
            throw ValidationError(s.model, "duplicate summary for condition '" + s.condition +
                                               "' at n_q=" + std::to_string(s.n_q));
        }
        const double vanilla_pct = s.vanilla_accuracy * 100.0;
        if (row.vanilla_pct && *row.vanilla_pct != vanilla_pct) {
            throw ValidationError(s.model,
                                  "vanilla accuracy differs across conditions; conditions were "
                                  "run on different question sets");
        }
        row.vanilla_pct = vanilla_pct;
        row.cells[s.condition] = {s.perturbed_accuracy * 100.0, s.s_r, s.c_true, s.s_a};
    }
    return rows;
}

}  // namespace

void validate_report_spec(const ReportSpec& spec) {
    if (spec.group_by.empty()) throw ConfigError("report grouping keys must not be empty");
    for (const auto& k : spec.group_by) {
        if (!kKnownGroupKeys.count(k)) {
            throw ConfigError("unknown report grouping key '" + k + "'");
        }
    }
    if (spec.formats.empty()) throw ConfigError("at least one report format is required");
    for (const auto& f : spec.formats) {
        if (!kKnownFormats.count(f)) throw ConfigError("unknown report format '" + f + "'");
    }
    if (spec.decimals < 0 || spec.decimals > 9) {
        throw ConfigError("report decimals must be in 0..9");
    }
}

double round_half_up(double v, int decimals) {
    if (decimals < 0 || decimals > 9) throw RangeError("decimals must be in 0..9");
    const double p = std::pow(10.0, decimals);
    double r = std::copysign(std::floor(std::abs(v) * p + 0.5) / p, v);
    if (r == 0.0) r = 0.0;  // never print "-0.00"
    return r;
}

std::string format_cell(std::optional<double> v, int decimals) {
    if (!v) return "-";
    return fmt(round_half_up(*v, decimals), decimals);
}

ReportTable build_table(const std::vector<MetricsSummary>& summaries, const ReportSpec& spec) {
    validate_report_spec(spec);
    if (summaries.empty()) throw RangeError("build_table needs at least one summary");
    const std::string& dataset = summaries.front().dataset;
    std::set<std::string> conditions;
    for (const auto& s : summaries) {
        if (s.dataset != dataset) {
            throw RangeError("summaries mix datasets '" + dataset + "' and '" + s.dataset +
                             "'; one table per dataset");
        }
        conditions.insert(s.condition);
    }

    auto rows = group_rows(summaries);

    // Suffix row labels with the stratum only for models that have several.
    std::map<std::string, int> strata_per_model;
    for (const auto& [key, row] : rows) strata_per_model[key.model] += 1;

    ReportTable t;
    t.dataset = dataset;
    t.conditions.assign(conditions.begin(), conditions.end());
    t.columns.push_back("Model");
    t.columns.push_back("Vanilla Acc. (%)");
    for (const auto& c : t.conditions) {
        t.columns.push_back(c + " Acc. (%)");
        t.columns.push_back(c + " S_r");
        t.columns.push_back(c + " C_true");
        t.columns.push_back(c + " S_a");
    }
    for (const auto& [key, row] : rows) {
        std::string label = key.model;
        if (strata_per_model[key.model] > 1) {
            label += " [n_q=" + std::to_string(key.n_q) + "]";
        }
        t.row_labels.push_back(label);
        std::vector<std::optional<double>> vals;
        vals.push_back(row.vanilla_pct);
        for (const auto& c : t.conditions) {
            auto it = row.cells.find(c);
            if (it == row.cells.end()) {
                vals.insert(vals.end(), 4, std::nullopt);
            } else {
                vals.insert(vals.end(), it->second.begin(), it->second.end());
            }
        }
        t.values.push_back(std::move(vals));
    }
    return t;
}

std::string render_markdown(const ReportTable& t, const ReportSpec& spec) {
    std::string out = "| ";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        out += t.columns[i];
        out += " |";
        out += i + 1 < t.columns.size() ? " " : "\n";
    }
    out += "|";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += i == 0 ? "---|" : "---:|";
    out += "\n";
    for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
        out += "| " + t.row_labels[r] + " |";
        for (const auto& v : t.values[r]) out += " " + format_cell(v, spec.decimals) + " |";
        out += "\n";
    }
    return out;
}

std::string render_csv(const ReportTable& t, const ReportSpec& spec) {
    std::string out = "dataset";
    for (const auto& c : t.columns) out += "," + csv_escape(c);
    out += "\n";
    for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
        out += csv_escape(t.dataset) + "," + csv_escape(t.row_labels[r]);
        for (const auto& v : t.values[r]) out += "," + format_cell(v, spec.decimals);
        out += "\n";
    }
    return out;
}

json table_to_json(const ReportTable& t) {
    json rows = json::array();
    for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
        json vals = json::array();
        for (const auto& v : t.values[r]) vals.push_back(v ? json(*v) : json(nullptr));
        rows.push_back({{"label", t.row_labels[r]}, {"values", vals}});
    }
    json j;
    j["record"] = "report_table";
    j["dataset"] = t.dataset;
    j["conditions"] = t.conditions;
    j["columns"] = t.columns;
    j["rows"] = rows;
    return j;
}

std::string build_chart(const std::vector<MetricsSummary>& summaries, const ReportSpec& spec) {
    validate_report_spec(spec);
    ReportTable t = build_table(summaries, spec);  // reuse grouping and validation
    if (t.conditions.empty()) throw RangeError("chart needs at least one condition");

    static const char* kPalette[] = {"#4878a8", "#a9c8e8", "#a85048", "#e8b0a9",
                                     "#58a868", "#b0e0b8", "#a88848", "#e8d8a9"};
    constexpr int kPaletteSize = 8;

    const int bar_w = 16;
    const int bar_gap = 3;       // between S_r and S_a of one condition
    const int cluster_gap = 10;  // between conditions inside a group
    const int group_gap = 28;    // between model groups
    const int ml = 56, mr = 24, mt = 46, mb = 96;
    const int plot_h = 220;

    const int conds = static_cast<int>(t.conditions.size());
    const int groups = static_cast<int>(t.row_labels.size());
    const int cluster_w = 2 * bar_w + bar_gap;
    const int group_w = conds * cluster_w + (conds - 1) * cluster_gap;
    const int width = ml + mr + groups * group_w + (groups > 0 ? (groups - 1) * group_gap : 0);
    const int height = mt + plot_h + mb;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
           std::to_string(width) + " " + std::to_string(height) + "\">\n";
    svg += "<style>text{font-family:sans-serif;font-size:11px;fill:#222}.title{font-size:14px}"
           "</style>\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    svg += "<text class=\"title\" x=\"" + std::to_string(ml) +
           "\" y=\"20\">Raw and adjusted sycophancy by model &#8212; " + t.dataset +
           "</text>\n";

    // y axis: scores 0..1
    for (int tick = 0; tick <= 4; ++tick) {
        const double frac = tick / 4.0;
        const int y = mt + plot_h - static_cast<int>(frac * plot_h);
        svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(y) + "\" x2=\"" +
               std::to_string(width - mr) + "\" y2=\"" + std::to_string(y) +
               "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + std::to_string(ml - 8) + "\" y=\"" + std::to_string(y + 4) +
               "\" text-anchor=\"end\">" + fmt(frac, 2) + "</text>\n";
    }

    // Bars: for each model group, per condition a (S_r, S_a) pair. A missing
    // score (empty Q_c) simply leaves that slot without a bar.
    for (int g = 0; g < groups; ++g) {
        const int gx = ml + g * (group_w + group_gap);
        const auto& vals = t.values[static_cast<std::size_t>(g)];
        for (int c = 0; c < conds; ++c) {
            const int cx = gx + c * (cluster_w + cluster_gap);
            // columns: 0 vanilla, then 4 per condition: acc, s_r, c_true, s_a
            const std::optional<double> s_r = vals[static_cast<std::size_t>(1 + 4 * c + 1)];
            const std::optional<double> s_a = vals[static_cast<std::size_t>(1 + 4 * c + 3)];
            const std::optional<double> pair[2] = {s_r, s_a};
            for (int b = 0; b < 2; ++b) {
                if (!pair[b]) continue;
                const double v = std::clamp(*pair[b], 0.0, 1.0);
                const int h = static_cast<int>(v * plot_h + 0.5);
                const int x = cx + b * (bar_w + bar_gap);
                const int y = mt + plot_h - h;
                const char* color = kPalette[(2 * c + b) % kPaletteSize];
                svg += "<rect class=\"bar\" x=\"" + std::to_string(x) + "\" y=\"" +
                       std::to_string(y) + "\" width=\"" + std::to_string(bar_w) +
                       "\" height=\"" + std::to_string(h) + "\" fill=\"" + color + "\"><title>" +
                       t.row_labels[static_cast<std::size_t>(g)] + " " +
                       t.conditions[static_cast<std::size_t>(c)] + " " +
                       (b == 0 ? "S_r" : "S_a") + "=" + fmt(*pair[b], spec.decimals) +
                       "</title></rect>\n";
            }
        }
        // Model label, angled to keep long ids legible.
        const int lx = gx + group_w / 2;
        const int ly = mt + plot_h + 14;
        svg += "<text x=\"" + std::to_string(lx) + "\" y=\"" + std::to_string(ly) +
               "\" text-anchor=\"end\" transform=\"rotate(-35 " + std::to_string(lx) + " " +
               std::to_string(ly) + ")\">" + t.row_labels[static_cast<std::size_t>(g)] +
               "</text>\n";
    }

    // Legend.
    int lx = ml;
    const int ly = height - 18;
    for (int c = 0; c < conds; ++c) {
        for (int b = 0; b < 2; ++b) {
            const char* color = kPalette[(2 * c + b) % kPaletteSize];
            const std::string label =
                t.conditions[static_cast<std::size_t>(c)] + (b == 0 ? " S_r" : " S_a");
            svg += "<rect x=\"" + std::to_string(lx) + "\" y=\"" + std::to_string(ly - 10) +
                   "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
            svg += "<text x=\"" + std::to_string(lx + 16) + "\" y=\"" + std::to_string(ly) +
                   "\">" + label + "</text>\n";
            lx += 16 + 8 * static_cast<int>(label.size()) + 24;
        }
    }

    svg += "</svg>\n";
    return svg;
}

std::vector<std::filesystem::path> write_report(const std::vector<MetricsSummary>& summaries,
                                                const ReportSpec& spec,
                                                const std::filesystem::path& out_dir) {
    validate_report_spec(spec);
    if (summaries.empty()) throw RangeError("no summaries to report");

    std::map<std::string, std::vector<MetricsSummary>> by_dataset;
    for (const auto& s : summaries) by_dataset[s.dataset].push_back(s);

    const auto wants = [&](const char* f) {
        return std::find(spec.formats.begin(), spec.formats.end(), f) != spec.formats.end();
    };

    std::vector<std::filesystem::path> written;
    std::filesystem::create_directories(out_dir);

    json all_tables = json::array();
    std::string md;
    std::string csv;
    bool first = true;
    for (const auto& [dataset, group] : by_dataset) {
        ReportTable t = build_table(group, spec);
        all_tables.push_back(table_to_json(t));
        md += "## " + dataset + "\n\n" + render_markdown(t, spec) + "\n";
        std::string c = render_csv(t, spec);
        if (!first) c = c.substr(c.find('\n') + 1);  // keep a single header row
        csv += c;
        first = false;
        if (wants("svg")) {
            const auto chart_dir = out_dir / "charts";
            std::filesystem::create_directories(chart_dir);
            const auto path = chart_dir / (sanitize_filename(dataset) + ".svg");
            atomic_write_file(path, build_chart(group, spec));
            written.push_back(path);
        }
    }

    if (wants("json")) {
        json doc;
        doc["record"] = "report";
        doc["tables"] = all_tables;
        const auto path = out_dir / "report.json";
        atomic_write_file(path, doc.dump(2) + "\n");
        written.push_back(path);
    }
    if (wants("csv")) {
        const auto path = out_dir / "report.csv";
        atomic_write_file(path, csv);
        written.push_back(path);
    }
    if (wants("markdown")) {
        const auto path = out_dir / "report.md";
        atomic_write_file(path, md);
        written.push_back(path);
    }
    return written;
}

}  // namespace syco
