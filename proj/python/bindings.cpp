// Python bindings for the rcakit core. The Python package re-exports these.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rcakit/datagen.hpp"
#include "rcakit/discovery.hpp"
#include "rcakit/error.hpp"
#include "rcakit/eval.hpp"
#include "rcakit/io.hpp"
#include "rcakit/rca.hpp"

namespace py = pybind11;
using namespace rcakit;

namespace {

EdgeMark parse_mark(const std::string& m) {
    if (m == "->") return EdgeMark::directed;
    if (m == "--") return EdgeMark::undirected;
    if (m == "<->") return EdgeMark::bidirected;
    fail(ErrorKind::input, "edge mark must be '->', '--' or '<->', got '" + m + "'");
}

std::string mark_text(EdgeMark m) {
    switch (m) {
        case EdgeMark::directed: return "->";
        case EdgeMark::undirected: return "--";
        case EdgeMark::bidirected: return "<->";
    }
    return "?";
}

DiscoveryConfig make_config(double alpha, std::optional<std::size_t> max_cond_size,
                            std::size_t max_lag, double penalty) {
    DiscoveryConfig c;
    c.alpha = alpha;
    c.max_cond_size = max_cond_size;
    c.max_lag = max_lag;
    c.penalty = penalty;
    c.validate();
    return c;
}

std::vector<std::pair<std::string, double>> ranking_pairs(const Ranking& r) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& e : r.entries()) out.emplace_back(e.metric, e.score);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Causal discovery and root cause analysis benchmark core";

    static py::exception<Error> rcakit_error(m, "RcakitError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = rcakit_error;
            py::object inst = exc(std::string(e.what()));
            inst.attr("kind") = std::string(to_string(e.kind()));
            PyErr_SetObject(exc.ptr(), inst.ptr());
        }
    });

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](std::vector<std::string> names, Eigen::MatrixXd values, double interval,
                         bool discrete) {
                 return Dataset(std::move(names), std::move(values), interval,
                                discrete ? DataKind::discrete : DataKind::continuous);
             }),
             py::arg("names"), py::arg("values"), py::arg("interval") = 1.0,
             py::arg("discrete") = false)
        .def_property_readonly("names", &Dataset::metric_names)
        .def_property_readonly("values", &Dataset::values)
        .def_property_readonly("interval", &Dataset::sampling_interval_s)
        .def_property_readonly("discrete", [](const Dataset& d) { return d.kind() == DataKind::discrete; })
        .def_property_readonly("shape", [](const Dataset& d) { return std::make_pair(d.rows(), d.cols()); })
        .def("to_csv", &format_csv);

    py::class_<CaseMetadata>(m, "CaseMetadata")
        .def(py::init<>())
        .def_readwrite("inject_index", &CaseMetadata::inject_index)
        .def_readwrite("delta_s", &CaseMetadata::delta_s)
        .def_readwrite("guard_rows", &CaseMetadata::guard_rows)
        .def_readwrite("root_cause_metrics", &CaseMetadata::root_cause_metrics)
        .def_readwrite("root_cause_service", &CaseMetadata::root_cause_service);

    py::class_<CausalGraph>(m, "CausalGraph")
        .def(py::init<std::vector<std::string>>(), py::arg("nodes"))
        .def_property_readonly("nodes", &CausalGraph::nodes)
        .def("add_edge",
             [](CausalGraph& g, const std::string& a, const std::string& b, const std::string& mark) {
                 g.add_edge(a, b, parse_mark(mark));
             },
             py::arg("source"), py::arg("target"), py::arg("mark") = "->")
        .def("edges",
             [](const CausalGraph& g) {
                 std::vector<std::tuple<std::string, std::string, std::string>> out;
                 for (const auto& e : g.edges()) out.emplace_back(g.name(e.from), g.name(e.to), mark_text(e.mark));
                 return out;
             })
        .def("is_acyclic", [](const CausalGraph& g) { return is_acyclic(g); })
        .def("to_edges", &format_edges)
        .def_static("from_edges", [](const std::string& text) { return parse_edges(text); })
        .def("__eq__", [](const CausalGraph& a, const CausalGraph& b) { return a == b; })
        .def("__len__", &CausalGraph::edge_count);

    py::class_<GeneratedCase>(m, "Case")
        .def_readonly("data", &GeneratedCase::data)
        .def_readonly("meta", &GeneratedCase::meta)
        .def_readonly("truth", &GeneratedCase::truth);

    m.def("random_dag", &random_dag, py::arg("n_nodes"), py::arg("n_edges"), py::arg("seed"));

    m.def("generate_case",
          [](std::size_t nodes, std::size_t edges, std::size_t length, std::uint64_t seed,
             const std::string& source, bool inject_fault, std::optional<std::size_t> inject_index,
             double magnitude) {
              SuiteDataset spec;
              if (source == "var") {
                  spec.source = SuiteSource::var;
              } else if (source == "discrete") {
                  spec.source = SuiteSource::discrete;
              } else {
                  fail(ErrorKind::config, "source must be 'var' or 'discrete'");
              }
              spec.nodes = nodes;
              spec.edges = edges;
              spec.length = length;
              spec.inject_fault = inject_fault;
              spec.inject_index = inject_index;
              spec.magnitude = magnitude;
              return generate_case(spec, seed);
          },
          py::arg("nodes"), py::arg("edges"), py::arg("length"), py::arg("seed"),
          py::arg("source") = "var", py::arg("inject_fault") = true, py::arg("inject_index") = py::none(),
          py::arg("magnitude") = 10.0);

    m.def("discover",
          [](const std::string& method, const Dataset& data, double alpha,
             std::optional<std::size_t> max_cond_size, std::size_t max_lag, double penalty) {
              py::gil_scoped_release release;
              return discover(method, data, make_config(alpha, max_cond_size, max_lag, penalty));
          },
          py::arg("method"), py::arg("data"), py::arg("alpha") = 0.05, py::arg("max_cond_size") = py::none(),
          py::arg("max_lag") = 5, py::arg("penalty") = 1.0);

    m.def("discovery_methods", &discovery_methods);
    m.def("rca_methods", &rca_methods);

    m.def("rca",
          [](const std::string& method, const Dataset& data, const CaseMetadata& meta, std::uint64_t seed,
             const CausalGraph* graph, double alpha, std::size_t rcd_chunk_size) {
              RcaOptions o;
              o.seed = seed;
              o.graph = graph;
              o.discovery.alpha = alpha;
              o.rcd_chunk_size = rcd_chunk_size;
              py::gil_scoped_release release;
              return ranking_pairs(run_rca(method, data, meta, o).ranking);
          },
          py::arg("method"), py::arg("data"), py::arg("meta"), py::arg("seed") = 0,
          py::arg("graph") = nullptr, py::arg("alpha") = 0.05, py::arg("rcd_chunk_size") = 5,
          "Ranking as a list of (metric, score), best first.");

    m.def("graph_f1",
          [](const CausalGraph& est, const CausalGraph& truth, const std::string& mode) {
              GraphMode gm = GraphMode::directed;
              if (mode == "skeleton") {
                  gm = GraphMode::skeleton;
              } else if (mode != "directed") {
                  fail(ErrorKind::config, "mode must be 'directed' or 'skeleton'");
              }
              auto s = graph_f1(est, truth, gm);
              return py::make_tuple(s.precision, s.recall, s.f1);
          },
          py::arg("est"), py::arg("truth"), py::arg("mode") = "directed",
          "(precision, recall, f1)");
    m.def("shd", &shd, py::arg("est"), py::arg("truth"));

    auto to_cases = [](const std::vector<std::vector<std::string>>& rankings,
                       const std::vector<std::vector<std::string>>& roots) {
        if (rankings.size() != roots.size()) fail(ErrorKind::input, "rankings and roots differ in length");
        std::vector<RankedCase> cases;
        for (std::size_t i = 0; i < rankings.size(); ++i) {
            cases.push_back({Ranking::from_order(rankings[i]), roots[i]});
        }
        return cases;
    };
    m.def("ac_at_k",
          [to_cases](const std::vector<std::vector<std::string>>& rankings,
                     const std::vector<std::vector<std::string>>& roots,
                     std::size_t k) { return ac_at_k(to_cases(rankings, roots), k); },
          py::arg("rankings"), py::arg("roots"), py::arg("k"));
    m.def("avg_at_k",
          [to_cases](const std::vector<std::vector<std::string>>& rankings,
                     const std::vector<std::vector<std::string>>& roots,
                     std::size_t k) { return avg_at_k(to_cases(rankings, roots), k); },
          py::arg("rankings"), py::arg("roots"), py::arg("k") = 5);

    m.def("load_case",
          [](const std::filesystem::path& dir) {
              auto c = load_case(dir);
              return GeneratedCase{std::move(c.data), std::move(c.meta), std::move(c.truth)};
          },
          py::arg("path"));
    m.def("write_case",
          [](const std::filesystem::path& dir, const Dataset& data, const CaseMetadata& meta,
             const CausalGraph* truth) { write_case(dir, data, meta, truth); },
          py::arg("path"), py::arg("data"), py::arg("meta"), py::arg("truth") = nullptr);

    m.def("run_suite",
          [](const std::string& suite_json, std::uint64_t seed, const std::string& format) {
              auto cfg = parse_suite(suite_json);
              cfg.validate();
              auto fmt = parse_report_format(format);
              if (!fmt) fail(ErrorKind::config, "format must be csv or markdown");
              py::gil_scoped_release release;
              return emit_report(run_suite(cfg, seed), *fmt);
          },
          py::arg("suite_json"), py::arg("seed") = 0, py::arg("format") = "csv",
          "Runs a suite given as JSON text and returns the report table.");
}
