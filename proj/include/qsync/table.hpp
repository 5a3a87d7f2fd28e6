#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace qsync {

// ---------------------------------------------------------------------------
// rectangular result tables
// ---------------------------------------------------------------------------

// Numeric table with named, unit-tagged columns. Cells are doubles; NaN (or
// any non-finite value) marks an absent cell and is persisted as an empty
// CSV field. Strings live in the metadata block only. When failed is set the
// rows hold the points completed before the first failure and the CSV gains
// a trailing marker row whose first field is FAILED and second the message.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::string> units;  // parallel to columns; may be empty
    std::vector<std::vector<double>> rows;
    std::vector<std::string> variant_labels;  // labels when a variant column is present
    nlohmann::json metadata;                  // config echo, version, conventions
    bool failed = false;
    std::string failure;
};

// CSV with RFC 4180 quoting, '.' decimal separator, \n line ends and %.17g
// number formatting, so equal tables serialize to equal bytes. The header
// cell is "name [unit]" when the unit is non-empty.
std::string csv_string(const ResultTable& table);
void write_csv(const ResultTable& table, const std::string& path);

// Metadata sidecar: the table's metadata block plus the column schema,
// serialized with sorted keys and fixed indentation.
std::string metadata_string(const ResultTable& table);
void write_metadata(const ResultTable& table, const std::string& path);

// ---------------------------------------------------------------------------
// self-contained SVG plots
// ---------------------------------------------------------------------------

enum class PlotKind { line, heatmap };

// line: first column is x, the rest are series; when the first column is
// named "variant" the second is x and every series is drawn once per variant
// label. heatmap: first two columns are the grid axes and every further
// column becomes one panel, colored by a fixed map with absent cells left
// blank. The output embeds no assets and no timestamps; equal tables give
// equal bytes. Throws std::invalid_argument for tables the kind cannot show.
std::string svg_string(const ResultTable& table, PlotKind kind);
void emit_plot(const ResultTable& table, PlotKind kind, const std::string& path);

}  // namespace qsync
