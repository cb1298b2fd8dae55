#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcakit/core.hpp"
#include "rcakit/discovery.hpp"
#include "rcakit/eval.hpp"

namespace rcakit {

using NameMap = std::map<std::string, std::string>;

struct LoadedCase {
    Dataset data;
    CaseMetadata meta;
    std::optional<CausalGraph> truth;
};

/// Reads data.csv, meta.json and, when present, graph.edges from dir.
/// Loaded cases use a 5-row guard band unless meta.json sets guard_rows.
LoadedCase load_case(const std::filesystem::path& dir, const NameMap* name_map = nullptr);

/// Writes data.csv, meta.json and optionally graph.edges.
void write_case(const std::filesystem::path& dir, const Dataset& data, const CaseMetadata& meta,
                const CausalGraph* truth = nullptr);

/// Parses `time,<metric>,...` text. Rows are sorted by time; the sampling
/// interval is the median time step. Returns the sorted times via `times`.
Dataset parse_csv(std::string_view text, DataKind kind, const NameMap* name_map = nullptr,
                  std::vector<double>* times = nullptr, const std::string& source = "data.csv");
std::string format_csv(const Dataset& data);

std::string format_meta(const CaseMetadata& meta, const Dataset& data);

/// Edge list with `->`, `--`, `<->`; `#` comments. A `# nodes:` line fixes
/// the node set, otherwise nodes come from `nodes` or first appearance.
CausalGraph parse_edges(std::string_view text,
                        const std::optional<std::vector<std::string>>& nodes = std::nullopt,
                        const std::string& source = "graph.edges");
std::string format_edges(const CausalGraph& g);

std::string format_ranking(const Ranking& r);
Ranking parse_ranking(std::string_view text, const std::string& source = "ranking.csv");

enum class ReportFormat { csv, markdown };
std::optional<ReportFormat> parse_report_format(std::string_view text);
std::string emit_report(const EvalReport& report, ReportFormat format);

SuiteConfig parse_suite(std::string_view json_text, const std::string& source = "suite.json");
std::vector<DiscoveryConfig> parse_grid(std::string_view json_text,
                                        const std::string& source = "grid.json");
std::string format_config(const DiscoveryConfig& cfg);
DiscoveryConfig parse_config(std::string_view json_text, const std::string& source = "config.json");
NameMap parse_name_map(std::string_view json_text, const std::string& source = "name map");

std::string read_file(const std::filesystem::path& path);
/// Temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace rcakit
