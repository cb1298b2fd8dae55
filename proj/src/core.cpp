#include "rcakit/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_set>

namespace rcakit {

std::string_view to_string(DataKind kind) {
    return kind == DataKind::continuous ? "continuous" : "discrete";
}

std::string service_of(std::string_view metric) {
    auto pos = metric.find('_');
    return std::string(pos == std::string_view::npos ? metric : metric.substr(0, pos));
}

Dataset::Dataset(std::vector<std::string> metric_names, Eigen::MatrixXd values,
                 double sampling_interval_s, DataKind kind)
    : names_(std::move(metric_names)),
      values_(std::move(values)),
      interval_(sampling_interval_s),
      kind_(kind) {
    if (static_cast<std::size_t>(values_.cols()) != names_.size()) {
        fail(ErrorKind::input, "column count " + std::to_string(values_.cols()) +
                                   " does not match " + std::to_string(names_.size()) +
                                   " metric names");
    }
    if (values_.rows() < 1) fail(ErrorKind::input, "dataset has no rows");
    if (!(sampling_interval_s > 0.0) || !std::isfinite(sampling_interval_s)) {
        fail(ErrorKind::input, "sampling interval must be positive");
    }
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (names_[j].empty()) fail(ErrorKind::input, "empty metric name");
        if (!index_.emplace(names_[j], j).second) {
            fail(ErrorKind::input, "duplicate metric name " + names_[j]);
        }
    }
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        for (Eigen::Index t = 0; t < values_.rows(); ++t) {
            double v = values_(t, j);
            if (!std::isfinite(v)) {
                fail(ErrorKind::input, "non-finite value at row " + std::to_string(t) +
                                           ", column " + names_[j]);
            }
            if (kind_ == DataKind::discrete && (v != std::floor(v) || v < 0.0 || v > 5.0)) {
                fail(ErrorKind::input, "discrete value outside {0..5} at row " +
                                           std::to_string(t) + ", column " + names_[j]);
            }
        }
    }
}

std::optional<std::size_t> Dataset::find(std::string_view metric) const {
    auto it = index_.find(std::string(metric));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Dataset::index_of(std::string_view metric) const {
    auto j = find(metric);
    if (!j) fail(ErrorKind::reference, "unknown metric " + std::string(metric));
    return *j;
}

Dataset Dataset::slice_rows(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > rows()) {
        fail(ErrorKind::input, "invalid row range [" + std::to_string(begin) + ", " +
                                   std::to_string(end) + ")");
    }
    Eigen::MatrixXd sub = values_.middleRows(static_cast<Eigen::Index>(begin),
                                             static_cast<Eigen::Index>(end - begin));
    return Dataset(names_, std::move(sub), interval_, kind_);
}

Dataset Dataset::select_columns(const std::vector<std::size_t>& columns) const {
    Eigen::MatrixXd sub(values_.rows(), static_cast<Eigen::Index>(columns.size()));
    std::vector<std::string> names;
    names.reserve(columns.size());
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (columns[k] >= cols()) fail(ErrorKind::input, "column index out of range");
        sub.col(static_cast<Eigen::Index>(k)) = values_.col(static_cast<Eigen::Index>(columns[k]));
        names.push_back(names_[columns[k]]);
    }
    return Dataset(std::move(names), std::move(sub), interval_, kind_);
}

std::vector<std::string> Dataset::services() const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        auto s = service_of(n);
        if (seen.insert(s).second) out.push_back(std::move(s));
    }
    return out;
}

std::string_view to_string(FaultType type) {
    switch (type) {
    case FaultType::cpu: return "CPU";
    case FaultType::mem: return "MEM";
    case FaultType::disk: return "DISK";
    case FaultType::delay: return "DELAY";
    case FaultType::loss: return "LOSS";
    case FaultType::sim: return "SIM";
    }
    return "SIM";
}

std::optional<FaultType> parse_fault_type(std::string_view text) {
    std::string up(text);
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (auto t : {FaultType::cpu, FaultType::mem, FaultType::disk, FaultType::delay,
                   FaultType::loss, FaultType::sim}) {
        if (up == to_string(t)) return t;
    }
    return std::nullopt;
}

void CaseMetadata::validate(const Dataset& data) const {
    std::size_t end = end_row(data);
    if (end >= data.rows()) fail(ErrorKind::input, "observation_end beyond last row");
    if (observation_start > end) fail(ErrorKind::input, "observation_start after observation_end");
    if (inject_index && (*inject_index < observation_start || *inject_index > end)) {
        fail(ErrorKind::input, "inject_index " + std::to_string(*inject_index) +
                                   " outside observation window");
    }
    if (!(delta_s >= 0.0) || !std::isfinite(delta_s)) fail(ErrorKind::input, "delta_s must be >= 0");
    for (const auto& m : root_cause_metrics) {
        if (!data.find(m)) fail(ErrorKind::reference, "unknown root cause metric " + m);
    }
}

std::string_view to_string(EdgeMark mark) {
    switch (mark) {
    case EdgeMark::directed: return "->";
    case EdgeMark::undirected: return "--";
    case EdgeMark::bidirected: return "<->";
    }
    return "->";
}

CausalGraph::CausalGraph(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i], i).second) {
            fail(ErrorKind::input, "duplicate node " + nodes_[i]);
        }
    }
}

std::optional<std::size_t> CausalGraph::find(std::string_view node) const {
    auto it = index_.find(std::string(node));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t CausalGraph::index_of(std::string_view node) const {
    auto v = find(node);
    if (!v) fail(ErrorKind::reference, "unknown node " + std::string(node));
    return *v;
}

void CausalGraph::check_node(std::size_t v) const {
    if (v >= nodes_.size()) fail(ErrorKind::reference, "node index out of range");
}

Edge CausalGraph::canonical(std::size_t from, std::size_t to, EdgeMark mark) const {
    check_node(from);
    check_node(to);
    if (from == to) fail(ErrorKind::structure, "self loop on " + nodes_[from]);
    if (mark != EdgeMark::directed && nodes_[to] < nodes_[from]) std::swap(from, to);
    return Edge{from, to, mark};
}

void CausalGraph::add_edge(std::size_t from, std::size_t to, EdgeMark mark) {
    Edge e = canonical(from, to, mark);
    auto key = std::minmax(from, to);
    if (!edges_.emplace(key, e).second) {
        fail(ErrorKind::structure,
             "pair " + nodes_[from] + ", " + nodes_[to] + " already has an edge");
    }
}

void CausalGraph::add_edge(std::string_view from, std::string_view to, EdgeMark mark) {
    add_edge(index_of(from), index_of(to), mark);
}

void CausalGraph::set_edge(std::size_t from, std::size_t to, EdgeMark mark) {
    Edge e = canonical(from, to, mark);
    edges_[std::minmax(from, to)] = e;
}

bool CausalGraph::remove_edge(std::size_t a, std::size_t b) {
    return edges_.erase(std::minmax(a, b)) > 0;
}

std::optional<Edge> CausalGraph::edge_between(std::size_t a, std::size_t b) const {
    auto it = edges_.find(std::minmax(a, b));
    if (it == edges_.end()) return std::nullopt;
    return it->second;
}

bool CausalGraph::has_directed(std::size_t a, std::size_t b) const {
    auto e = edge_between(a, b);
    return e && e->mark == EdgeMark::directed && e->from == a;
}

std::vector<Edge> CausalGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(edges_.size());
    for (const auto& [key, e] : edges_) out.push_back(e);
    return out;
}

std::vector<std::size_t> CausalGraph::parents(std::size_t v) const {
    std::vector<std::size_t> out;
    for (const auto& [key, e] : edges_) {
        if (e.mark == EdgeMark::directed && e.to == v) out.push_back(e.from);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> CausalGraph::children(std::size_t v) const {
    std::vector<std::size_t> out;
    for (const auto& [key, e] : edges_) {
        if (e.mark == EdgeMark::directed && e.from == v) out.push_back(e.to);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> CausalGraph::neighbors(std::size_t v) const {
    std::vector<std::size_t> out;
    for (const auto& [key, e] : edges_) {
        if (e.from == v) out.push_back(e.to);
        else if (e.to == v) out.push_back(e.from);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool CausalGraph::operator==(const CausalGraph& other) const {
    if (nodes_.size() != other.nodes_.size() || edges_.size() != other.edges_.size()) {
        return false;
    }
    std::unordered_set<std::string> mine(nodes_.begin(), nodes_.end());
    for (const auto& n : other.nodes_) {
        if (!mine.count(n)) return false;
    }
    for (const auto& [key, e] : edges_) {
        auto a = other.find(nodes_[e.from]);
        auto b = other.find(nodes_[e.to]);
        auto oe = other.edge_between(*a, *b);
        if (!oe || oe->mark != e.mark) return false;
        if (e.mark == EdgeMark::directed && oe->from != *a) return false;
    }
    return true;
}

CausalGraph skeleton(const CausalGraph& g) {
    CausalGraph out(g.nodes());
    for (const auto& e : g.edges()) out.add_edge(e.from, e.to, EdgeMark::undirected);
    return out;
}

namespace {

// Kahn's algorithm over directed edges; returns a partial order on a cycle.
std::vector<std::size_t> kahn(const CausalGraph& g) {
    std::size_t n = g.size();
    std::vector<std::size_t> indeg(n, 0);
    std::vector<std::vector<std::size_t>> out(n);
    for (const auto& e : g.edges()) {
        if (e.mark != EdgeMark::directed) continue;
        out[e.from].push_back(e.to);
        ++indeg[e.to];
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t v = 0; v < n; ++v) {
        if (indeg[v] == 0) ready.push(v);
    }
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (auto c : out[v]) {
            if (--indeg[c] == 0) ready.push(c);
        }
    }
    return order;
}

}  // namespace

bool is_acyclic(const CausalGraph& g) { return kahn(g).size() == g.size(); }

std::vector<std::size_t> topological_order(const CausalGraph& g) {
    auto order = kahn(g);
    if (order.size() != g.size()) fail(ErrorKind::structure, "graph has a directed cycle");
    return order;
}

Ranking::Ranking(std::vector<RankEntry> entries) : entries_(std::move(entries)) {
    std::unordered_set<std::string> seen;
    for (const auto& e : entries_) {
        if (!std::isfinite(e.score)) fail(ErrorKind::input, "non-finite score for " + e.metric);
        if (!seen.insert(e.metric).second) {
            fail(ErrorKind::input, "duplicate metric in ranking: " + e.metric);
        }
    }
    std::sort(entries_.begin(), entries_.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.metric < b.metric;
    });
}

Ranking Ranking::from_order(const std::vector<std::string>& order) {
    std::vector<RankEntry> entries;
    entries.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        entries.push_back({order[i], 1.0 / static_cast<double>(i + 1)});
    }
    return Ranking(std::move(entries));
}

std::optional<std::size_t> Ranking::position(std::string_view metric) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].metric == metric) return i;
    }
    return std::nullopt;
}

std::vector<std::string> Ranking::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.metric);
    return out;
}

Ranking Ranking::by_service() const {
    std::vector<std::string> order;
    std::unordered_set<std::string> seen;
    for (const auto& e : entries_) {
        auto s = service_of(e.metric);
        if (seen.insert(s).second) order.push_back(std::move(s));
    }
    return from_order(order);
}

}  // namespace rcakit
