#include "rcakit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

namespace rcakit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    auto lines = split(text, '\n');
    if (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

json parse_json(std::string_view text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::format, source + ": invalid JSON: " + e.what());
    }
}

template <class T>
T json_get(const json& j, const char* key, const std::string& source) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::format, source + ": key '" + key + "' has the wrong type");
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) fail(ErrorKind::format, "cannot format number");
    return std::string(buf, ptr);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::format, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::format, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) fail(ErrorKind::format, "cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        fail(ErrorKind::format, "cannot move output into place at " + path.string());
    }
}

Dataset parse_csv(std::string_view text, DataKind kind, const NameMap* name_map,
                  std::vector<double>* times, const std::string& source) {
    auto lines = lines_of(text);
    if (lines.empty()) fail(ErrorKind::format, source + ": empty file");
    auto header = split(lines[0], ',');
    if (header.empty() || trim(header[0]) != "time") {
        fail(ErrorKind::format, source + ": first column must be 'time'");
    }
    std::vector<std::string> names;
    for (std::size_t c = 1; c < header.size(); ++c) {
        std::string name(trim(header[c]));
        if (name_map) {
            if (auto it = name_map->find(name); it != name_map->end()) name = it->second;
        }
        names.push_back(std::move(name));
    }
    if (names.empty()) fail(ErrorKind::format, source + ": no metric columns");
    std::size_t n_rows = lines.size() - 1;
    if (n_rows == 0) fail(ErrorKind::format, source + ": no data rows");
    std::vector<double> t(n_rows);
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(names.size()));
    for (std::size_t r = 0; r < n_rows; ++r) {
        auto cells = split(lines[r + 1], ',');
        if (cells.size() != header.size()) {
            fail(ErrorKind::format, source + ": row " + std::to_string(r + 1) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(header.size()));
        }
        auto tv = parse_number(cells[0]);
        if (!tv) fail(ErrorKind::format, source + ": row " + std::to_string(r + 1) + ", column time");
        t[r] = *tv;
        for (std::size_t c = 0; c < names.size(); ++c) {
            auto v = parse_number(cells[c + 1]);
            if (!v) {
                fail(ErrorKind::format,
                     source + ": row " + std::to_string(r + 1) + ", column " + names[c]);
            }
            raw(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
        }
    }
    std::vector<std::size_t> order(n_rows);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });
    Eigen::MatrixXd values(raw.rows(), raw.cols());
    std::vector<double> sorted_t(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
        values.row(static_cast<Eigen::Index>(r)) = raw.row(static_cast<Eigen::Index>(order[r]));
        sorted_t[r] = t[order[r]];
    }
    double interval = 1.0;
    if (n_rows > 1) {
        std::vector<double> diffs;
        for (std::size_t r = 1; r < n_rows; ++r) diffs.push_back(sorted_t[r] - sorted_t[r - 1]);
        std::nth_element(diffs.begin(), diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2),
                         diffs.end());
        double med = diffs[diffs.size() / 2];
        if (med > 0.0) interval = med;
    }
    if (times) *times = sorted_t;
    try {
        return Dataset(std::move(names), std::move(values), interval, kind);
    } catch (const Error& e) {
        fail(ErrorKind::format, source + ": " + e.what());
    }
}

std::string format_csv(const Dataset& data) {
    std::string out = "time";
    for (const auto& n : data.metric_names()) out += "," + n;
    out += "\n";
    for (std::size_t t = 0; t < data.rows(); ++t) {
        out += format_double(static_cast<double>(t) * data.sampling_interval_s());
        for (std::size_t j = 0; j < data.cols(); ++j) {
            out += ",";
            out += format_double(data.values()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
        }
        out += "\n";
    }
    return out;
}

std::string format_meta(const CaseMetadata& meta, const Dataset& data) {
    json j;
    if (meta.inject_index) {
        j["inject_time"] = static_cast<double>(*meta.inject_index) * data.sampling_interval_s();
    }
    if (meta.fault_type) j["fault_type"] = std::string(to_string(*meta.fault_type));
    if (meta.root_cause_service) j["root_cause_service"] = *meta.root_cause_service;
    if (!meta.root_cause_metrics.empty()) j["root_cause_metrics"] = meta.root_cause_metrics;
    j["delta_s"] = meta.delta_s;
    j["guard_rows"] = meta.guard_rows;
    j["data_kind"] = std::string(to_string(data.kind()));
    return j.dump(2) + "\n";
}

LoadedCase load_case(const fs::path& dir, const NameMap* name_map) {
    fs::path data_path = dir / "data.csv";
    fs::path meta_path = dir / "meta.json";
    fs::path graph_path = dir / "graph.edges";
    if (!fs::exists(meta_path)) fail(ErrorKind::format, "missing " + meta_path.string());
    if (!fs::exists(data_path)) fail(ErrorKind::format, "missing " + data_path.string());
    json j = parse_json(read_file(meta_path), meta_path.string());
    if (!j.is_object()) fail(ErrorKind::format, meta_path.string() + ": expected an object");
    DataKind kind = DataKind::continuous;
    if (j.contains("data_kind")) {
        auto k = json_get<std::string>(j, "data_kind", meta_path.string());
        if (k == "discrete") {
            kind = DataKind::discrete;
        } else if (k != "continuous") {
            fail(ErrorKind::format, meta_path.string() + ": unknown data_kind " + k);
        }
    }
    std::vector<double> times;
    Dataset data = parse_csv(read_file(data_path), kind, name_map, &times, data_path.string());

    CaseMetadata meta;
    meta.guard_rows = 5;
    if (j.contains("inject_time") && !j["inject_time"].is_null()) {
        double inject = json_get<double>(j, "inject_time", meta_path.string());
        auto it = std::lower_bound(times.begin(), times.end(), inject - 1e-9);
        if (it == times.end()) {
            fail(ErrorKind::input, meta_path.string() + ": inject_time after the last sample");
        }
        meta.inject_index = static_cast<std::size_t>(it - times.begin());
    }
    if (j.contains("fault_type") && !j["fault_type"].is_null()) {
        auto text = json_get<std::string>(j, "fault_type", meta_path.string());
        meta.fault_type = parse_fault_type(text);
        if (!meta.fault_type) fail(ErrorKind::format, meta_path.string() + ": unknown fault_type " + text);
    }
    if (j.contains("root_cause_service") && !j["root_cause_service"].is_null()) {
        meta.root_cause_service = json_get<std::string>(j, "root_cause_service", meta_path.string());
    }
    if (j.contains("root_cause_metrics") && !j["root_cause_metrics"].is_null()) {
        meta.root_cause_metrics =
            json_get<std::vector<std::string>>(j, "root_cause_metrics", meta_path.string());
        if (name_map) {
            for (auto& m : meta.root_cause_metrics) {
                if (auto it = name_map->find(m); it != name_map->end()) m = it->second;
            }
        }
    }
    if (j.contains("delta_s")) meta.delta_s = json_get<double>(j, "delta_s", meta_path.string());
    if (j.contains("guard_rows")) {
        meta.guard_rows = json_get<std::size_t>(j, "guard_rows", meta_path.string());
    }
    for (const auto& m : meta.root_cause_metrics) {
        if (!data.find(m)) {
            fail(ErrorKind::reference, meta_path.string() + ": unknown root cause metric " + m);
        }
    }
    meta.validate(data);

    LoadedCase out{std::move(data), std::move(meta), std::nullopt};
    if (fs::exists(graph_path)) {
        out.truth = parse_edges(read_file(graph_path), out.data.metric_names(), graph_path.string());
    }
    return out;
}

void write_case(const fs::path& dir, const Dataset& data, const CaseMetadata& meta,
                const CausalGraph* truth) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::format, "cannot create " + dir.string());
    write_file_atomic(dir / "data.csv", format_csv(data));
    write_file_atomic(dir / "meta.json", format_meta(meta, data));
    if (truth) write_file_atomic(dir / "graph.edges", format_edges(*truth));
}

CausalGraph parse_edges(std::string_view text, const std::optional<std::vector<std::string>>& nodes,
                        const std::string& source) {
    struct Parsed {
        std::string a, b;
        EdgeMark mark;
        std::size_t line;
    };
    std::vector<Parsed> parsed;
    std::optional<std::vector<std::string>> declared = nodes;
    std::vector<std::string> seen;
    auto note = [&](const std::string& n) {
        if (std::find(seen.begin(), seen.end(), n) == seen.end()) seen.push_back(n);
    };
    auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = trim(lines[i]);
        if (line.empty()) continue;
        if (line.front() == '#') {
            auto body = trim(line.substr(1));
            if (!nodes && body.rfind("nodes:", 0) == 0) {
                std::vector<std::string> list;
                std::istringstream ss{std::string(body.substr(6))};
                std::string n;
                while (ss >> n) list.push_back(n);
                declared = list;
            }
            continue;
        }
        EdgeMark mark;
        std::size_t pos, width;
        if ((pos = line.find("<->")) != std::string_view::npos) {
            mark = EdgeMark::bidirected, width = 3;
        } else if ((pos = line.find("->")) != std::string_view::npos) {
            mark = EdgeMark::directed, width = 2;
        } else if ((pos = line.find("--")) != std::string_view::npos) {
            mark = EdgeMark::undirected, width = 2;
        } else {
            fail(ErrorKind::format, source + ": line " + std::to_string(i + 1) + ": no edge marker");
        }
        std::string a(trim(line.substr(0, pos)));
        std::string b(trim(line.substr(pos + width)));
        if (a.empty() || b.empty()) {
            fail(ErrorKind::format, source + ": line " + std::to_string(i + 1) + ": missing endpoint");
        }
        note(a);
        note(b);
        parsed.push_back({a, b, mark, i + 1});
    }
    CausalGraph g(declared ? *declared : seen);
    for (const auto& p : parsed) {
        auto a = g.find(p.a);
        auto b = g.find(p.b);
        if (!a || !b) {
            fail(ErrorKind::reference, source + ": line " + std::to_string(p.line) + ": unknown node " +
                                           (a ? p.b : p.a));
        }
        try {
            g.add_edge(*a, *b, p.mark);
        } catch (const Error& e) {
            fail(ErrorKind::format, source + ": line " + std::to_string(p.line) + ": " + e.what());
        }
    }
    return g;
}

std::string format_edges(const CausalGraph& g) {
    std::string out = "# nodes:";
    for (const auto& n : g.nodes()) out += " " + n;
    out += "\n";
    for (const auto& e : g.edges()) {
        out += g.name(e.from) + " " + std::string(to_string(e.mark)) + " " + g.name(e.to) + "\n";
    }
    return out;
}

std::string format_ranking(const Ranking& r) {
    std::string out = "rank,metric,score\n";
    for (std::size_t i = 0; i < r.size(); ++i) {
        out += std::to_string(i + 1) + "," + r[i].metric + "," + format_double(r[i].score) + "\n";
    }
    return out;
}

Ranking parse_ranking(std::string_view text, const std::string& source) {
    auto lines = lines_of(text);
    if (lines.empty() || trim(lines[0]) != "rank,metric,score") {
        fail(ErrorKind::format, source + ": expected header rank,metric,score");
    }
    std::vector<RankEntry> entries;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split(lines[i], ',');
        std::optional<double> score;
        if (cells.size() == 3) score = parse_number(cells[2]);
        if (!score) fail(ErrorKind::format, source + ": row " + std::to_string(i) + " is malformed");
        entries.push_back({std::string(trim(cells[1])), *score});
    }
    return Ranking(std::move(entries));
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
    if (text == "csv") return ReportFormat::csv;
    if (text == "markdown" || text == "md") return ReportFormat::markdown;
    return std::nullopt;
}

std::string emit_report(const EvalReport& report, ReportFormat format) {
    const std::vector<std::string> header{"method", "dataset", "fault_type", "AC@1",  "AC@2",
                                          "AC@3",   "AC@4",    "AC@5",       "Avg@5", "mean_runtime_s",
                                          "F1",     "F1-S",    "SHD"};
    auto fixed = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : report.rows) {
        std::vector<std::string> cells{r.method, r.dataset, r.fault_type};
        for (double a : r.ac) cells.push_back(r.has_ranking ? fixed(a) : "");
        cells.push_back(r.has_ranking ? fixed(r.avg5) : "");
        cells.push_back(fixed(r.mean_runtime_s));
        if (r.graph) {
            cells.push_back(fixed(r.graph->f1));
            cells.push_back(fixed(r.graph->f1_s));
            cells.push_back(fixed(r.graph->shd));
        } else {
            cells.insert(cells.end(), {"", "", ""});
        }
        rows.push_back(std::move(cells));
    }
    std::string out;
    auto join = [](const std::vector<std::string>& cells, const std::string& sep) {
        std::string s;
        for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? sep : "") + cells[i];
        return s;
    };
    if (format == ReportFormat::csv) {
        out += join(header, ",") + "\n";
        for (const auto& r : rows) out += join(r, ",") + "\n";
    } else {
        out += "| " + join(header, " | ") + " |\n";
        out += "|";
        for (std::size_t i = 0; i < header.size(); ++i) out += i < 3 ? "---|" : "---:|";
        out += "\n";
        for (const auto& r : rows) out += "| " + join(r, " | ") + " |\n";
    }
    return out;
}

namespace {

DiscoveryConfig config_from_json(const json& j, const std::string& source) {
    if (!j.is_object()) fail(ErrorKind::format, source + ": discovery config must be an object");
    DiscoveryConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        if (k == "alpha") {
            cfg.alpha = json_get<double>(j, "alpha", source);
        } else if (k == "max_cond_size") {
            if (!it->is_null()) cfg.max_cond_size = json_get<std::size_t>(j, "max_cond_size", source);
        } else if (k == "max_lag") {
            cfg.max_lag = json_get<std::size_t>(j, "max_lag", source);
        } else if (k == "penalty") {
            cfg.penalty = json_get<double>(j, "penalty", source);
        } else {
            fail(ErrorKind::config, source + ": unknown discovery key " + k);
        }
    }
    cfg.validate();
    return cfg;
}

}  // namespace

std::string format_config(const DiscoveryConfig& cfg) {
    json j;
    j["alpha"] = cfg.alpha;
    j["max_cond_size"] = cfg.max_cond_size ? json(*cfg.max_cond_size) : json(nullptr);
    j["max_lag"] = cfg.max_lag;
    j["penalty"] = cfg.penalty;
    return j.dump(2) + "\n";
}

DiscoveryConfig parse_config(std::string_view json_text, const std::string& source) {
    return config_from_json(parse_json(json_text, source), source);
}

std::vector<DiscoveryConfig> parse_grid(std::string_view json_text, const std::string& source) {
    json j = parse_json(json_text, source);
    if (j.is_object() && j.contains("grid")) j = j["grid"];
    if (!j.is_array()) fail(ErrorKind::format, source + ": grid must be an array of configs");
    std::vector<DiscoveryConfig> grid;
    for (const auto& item : j) grid.push_back(config_from_json(item, source));
    if (grid.empty()) fail(ErrorKind::config, source + ": empty grid");
    return grid;
}

SuiteConfig parse_suite(std::string_view json_text, const std::string& source) {
    json j = parse_json(json_text, source);
    if (!j.is_object()) fail(ErrorKind::format, source + ": expected an object");
    SuiteConfig cfg;
    cfg.methods = json_get<std::vector<std::string>>(j, "methods", source);
    if (j.contains("repeats")) cfg.repeats = json_get<std::size_t>(j, "repeats", source);
    if (j.contains("delta_s")) cfg.delta_s = json_get<std::vector<double>>(j, "delta_s", source);
    if (j.contains("timeout_s")) cfg.timeout_s = json_get<double>(j, "timeout_s", source);
    if (j.contains("jobs")) cfg.jobs = json_get<std::size_t>(j, "jobs", source);
    if (j.contains("discovery")) cfg.options.discovery = config_from_json(j["discovery"], source);
    if (j.contains("rcd_chunk_size")) {
        cfg.options.rcd_chunk_size = json_get<std::size_t>(j, "rcd_chunk_size", source);
    }
    if (j.contains("walk_steps")) cfg.options.walk_steps = json_get<std::size_t>(j, "walk_steps", source);
    if (!j.contains("datasets") || !j["datasets"].is_array()) {
        fail(ErrorKind::format, source + ": 'datasets' must be an array");
    }
    fs::path base = fs::path(source).parent_path();
    for (const auto& d : j["datasets"]) {
        SuiteDataset ds;
        ds.name = json_get<std::string>(d, "name", source);
        auto kind = json_get<std::string>(d, "source", source);
        if (kind == "var") {
            ds.source = SuiteSource::var;
        } else if (kind == "discrete") {
            ds.source = SuiteSource::discrete;
        } else if (kind == "directory") {
            ds.source = SuiteSource::directory;
            fs::path p = json_get<std::string>(d, "path", source);
            ds.path = (p.is_relative() && !base.empty() ? base / p : p).string();
        } else {
            fail(ErrorKind::config, source + ": unknown dataset source " + kind);
        }
        if (d.contains("nodes")) ds.nodes = json_get<std::size_t>(d, "nodes", source);
        if (d.contains("edges")) ds.edges = json_get<std::size_t>(d, "edges", source);
        if (d.contains("length")) ds.length = json_get<std::size_t>(d, "length", source);
        if (d.contains("cases")) ds.cases = json_get<std::size_t>(d, "cases", source);
        if (d.contains("inject_index")) ds.inject_index = json_get<std::size_t>(d, "inject_index", source);
        if (d.contains("fault_duration")) ds.fault_duration = json_get<std::size_t>(d, "fault_duration", source);
        if (d.contains("magnitude")) ds.magnitude = json_get<double>(d, "magnitude", source);
        if (d.contains("inject_fault")) ds.inject_fault = json_get<bool>(d, "inject_fault", source);
        cfg.datasets.push_back(std::move(ds));
    }
    return cfg;
}

NameMap parse_name_map(std::string_view json_text, const std::string& source) {
    json j = parse_json(json_text, source);
    if (!j.is_object()) fail(ErrorKind::format, source + ": name map must be an object");
    NameMap map;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it->is_string()) fail(ErrorKind::format, source + ": value for " + it.key() + " must be a string");
        map[it.key()] = it->get<std::string>();
    }
    return map;
}

}  // namespace rcakit
