#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <limits>
#include <random>

#include "rcakit/core.hpp"
#include "rcakit/error.hpp"
#include "rcakit/stats.hpp"
#include "test_util.hpp"

using namespace rcakit;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an rcakit::Error";
    return ErrorKind::input;
}

CausalGraph abc() { return CausalGraph({"A", "B", "C"}); }

}  // namespace

TEST(Dataset, ValidatesShapeNamesAndValues) {
    Eigen::MatrixXd v(2, 2);
    v << 1, 2, 3, 4;
    EXPECT_EQ(kind_of([&] { Dataset({"a"}, v); }), ErrorKind::input);
    EXPECT_EQ(kind_of([&] { Dataset({"a", "a"}, v); }), ErrorKind::input);
    EXPECT_EQ(kind_of([&] { Dataset({"a", ""}, v); }), ErrorKind::input);
    EXPECT_EQ(kind_of([&] { Dataset({"a", "b"}, Eigen::MatrixXd(0, 2)); }), ErrorKind::input);
    EXPECT_EQ(kind_of([&] { Dataset({"a", "b"}, v, 0.0); }), ErrorKind::input);
    Eigen::MatrixXd bad = v;
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(kind_of([&] { Dataset({"a", "b"}, bad); }), ErrorKind::input);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    EXPECT_EQ(kind_of([&] { Dataset({"a", "b"}, bad); }), ErrorKind::input);
    Eigen::MatrixXd six(1, 2);
    six << 0, 6;
    EXPECT_EQ(kind_of([&] { Dataset({"a", "b"}, six, 1.0, DataKind::discrete); }), ErrorKind::input);
    Eigen::MatrixXd frac(1, 2);
    frac << 1.5, 2;
    EXPECT_EQ(kind_of([&] { Dataset({"a", "b"}, frac, 1.0, DataKind::discrete); }), ErrorKind::input);
    Eigen::MatrixXd ok(1, 2);
    ok << 0, 5;
    EXPECT_NO_THROW(Dataset({"a", "b"}, ok, 1.0, DataKind::discrete));
}

TEST(Dataset, LookupSliceAndServices) {
    Eigen::MatrixXd v(4, 3);
    v << 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11;
    Dataset d({"cart_cpu", "cart_mem", "front_latency"}, v, 5.0);
    EXPECT_EQ(d.index_of("cart_mem"), 1u);
    EXPECT_FALSE(d.find("nope"));
    EXPECT_EQ(kind_of([&] { d.index_of("nope"); }), ErrorKind::reference);
    Dataset s = d.slice_rows(1, 3);
    EXPECT_EQ(s.rows(), 2u);
    EXPECT_EQ(s.values()(0, 0), 3.0);
    EXPECT_EQ(s.sampling_interval_s(), 5.0);
    Dataset c = d.select_columns({2, 0});
    EXPECT_EQ(c.metric_names(), (std::vector<std::string>{"front_latency", "cart_cpu"}));
    EXPECT_EQ(d.services(), (std::vector<std::string>{"cart", "front"}));
    EXPECT_EQ(service_of("cartservice_cpu"), "cartservice");
    EXPECT_EQ(service_of("a_b_c"), "a");
    EXPECT_EQ(service_of("plain"), "plain");
}

TEST(CaseMetadata, ValidatesWindowAndRoots) {
    Dataset d({"a_x", "b_x"}, Eigen::MatrixXd::Zero(10, 2));
    CaseMetadata m;
    m.inject_index = 5;
    m.root_cause_metrics = {"a_x"};
    EXPECT_NO_THROW(m.validate(d));
    m.root_cause_metrics = {"zz"};
    EXPECT_EQ(kind_of([&] { m.validate(d); }), ErrorKind::reference);
    m.root_cause_metrics = {};
    m.observation_start = 6;
    EXPECT_EQ(kind_of([&] { m.validate(d); }), ErrorKind::input);
    m.observation_start = 0;
    m.inject_index = 10;
    EXPECT_EQ(kind_of([&] { m.validate(d); }), ErrorKind::input);
}

TEST(FaultType, ParseIsCaseInsensitive) {
    EXPECT_EQ(parse_fault_type("cpu"), FaultType::cpu);
    EXPECT_EQ(parse_fault_type("Delay"), FaultType::delay);
    EXPECT_FALSE(parse_fault_type("boom"));
    EXPECT_EQ(to_string(FaultType::loss), "LOSS");
}

TEST(CausalGraph, CanonicalStorageAndEquality) {
    CausalGraph g({"B", "A"});
    g.add_edge("B", "A", EdgeMark::undirected);
    CausalGraph h({"A", "B"});
    h.add_edge("A", "B", EdgeMark::undirected);
    EXPECT_EQ(g, h);
    auto e = g.edges().front();
    EXPECT_EQ(g.name(e.from), "A");
    CausalGraph d1({"A", "B"}), d2({"A", "B"});
    d1.add_edge("A", "B");
    d2.add_edge("B", "A");
    EXPECT_FALSE(d1 == d2);
}

TEST(CausalGraph, RejectsSelfLoopsDuplicatesAndUnknownNodes) {
    auto g = abc();
    g.add_edge("A", "B");
    EXPECT_EQ(kind_of([&] { g.add_edge("B", "A"); }), ErrorKind::structure);
    EXPECT_EQ(kind_of([&] { g.add_edge("A", "A"); }), ErrorKind::structure);
    EXPECT_THROW(g.add_edge("A", "Z"), Error);
    EXPECT_EQ(kind_of([&] { CausalGraph({"A", "A"}); }), ErrorKind::input);
}

TEST(CausalGraph, ParentsChildrenNeighbors) {
    auto g = abc();
    g.add_edge("A", "B");
    g.add_edge("C", "B", EdgeMark::undirected);
    EXPECT_EQ(g.parents(1), std::vector<std::size_t>{0});
    EXPECT_EQ(g.children(0), std::vector<std::size_t>{1});
    EXPECT_EQ(g.neighbors(1).size(), 2u);
    EXPECT_TRUE(g.has_directed(0, 1));
    EXPECT_FALSE(g.has_directed(1, 0));
    EXPECT_TRUE(g.remove_edge(1, 0));
    EXPECT_FALSE(g.adjacent(0, 1));
}

TEST(Skeleton, SpecExamples) {
    auto g = abc();
    g.add_edge("A", "B");
    auto want = abc();
    want.add_edge("A", "B", EdgeMark::undirected);
    EXPECT_EQ(skeleton(g), want);

    auto h = abc();
    h.add_edge("A", "B", EdgeMark::bidirected);
    h.add_edge("B", "C", EdgeMark::undirected);
    auto want2 = abc();
    want2.add_edge("A", "B", EdgeMark::undirected);
    want2.add_edge("B", "C", EdgeMark::undirected);
    EXPECT_EQ(skeleton(h), want2);
    EXPECT_EQ(skeleton(abc()), abc());
    EXPECT_EQ(skeleton(skeleton(h)), skeleton(h));
}

TEST(Acyclicity, SpecExamples) {
    auto g = abc();
    g.add_edge("A", "B");
    g.add_edge("B", "C");
    EXPECT_TRUE(is_acyclic(g));
    CausalGraph two({"A", "B", "C"});
    two.add_edge("A", "B");
    two.add_edge("B", "C");
    two.add_edge("C", "A");
    EXPECT_FALSE(is_acyclic(two));
    EXPECT_EQ(kind_of([&] { topological_order(two); }), ErrorKind::structure);
    CausalGraph u({"A", "B"});
    u.add_edge("A", "B", EdgeMark::undirected);
    EXPECT_TRUE(is_acyclic(u));
}

TEST(Acyclicity, InvariantUnderRelabeling) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 6;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        CausalGraph g(names), h(names);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                if (a < b && rng() % 3 == 0) {
                    auto [from, to] = rng() % 2 ? std::pair(a, b) : std::pair(b, a);
                    g.add_edge(from, to);
                    h.add_edge(perm[from], perm[to]);
                }
            }
        }
        EXPECT_EQ(is_acyclic(g), is_acyclic(h));
    }
}

TEST(TopologicalOrder, RespectsEdges) {
    CausalGraph g({"A", "B", "C", "D"});
    g.add_edge("D", "A");
    g.add_edge("A", "C");
    g.add_edge("B", "C");
    auto order = topological_order(g);
    std::vector<std::size_t> pos(4);
    for (std::size_t i = 0; i < 4; ++i) pos[order[i]] = i;
    for (const auto& e : g.edges()) EXPECT_LT(pos[e.from], pos[e.to]);
}

TEST(Ranking, SortsByScoreThenName) {
    Ranking r({{"b", 1.0}, {"a", 1.0}, {"c", 2.0}});
    EXPECT_EQ(r.names(), (std::vector<std::string>{"c", "a", "b"}));
    EXPECT_EQ(r.position("b"), 2u);
    EXPECT_EQ(kind_of([] { Ranking({{"a", 1.0}, {"a", 2.0}}); }), ErrorKind::input);
    EXPECT_EQ(kind_of([] { Ranking({{"a", std::nan("")}}); }), ErrorKind::input);
}

TEST(Ranking, FromOrderAndServiceCollapse) {
    auto r = Ranking::from_order({"x_cpu", "y_mem", "x_mem", "z_lat"});
    EXPECT_EQ(r.names(), (std::vector<std::string>{"x_cpu", "y_mem", "x_mem", "z_lat"}));
    EXPECT_DOUBLE_EQ(r[1].score, 0.5);
    auto s = r.by_service();
    EXPECT_EQ(s.names(), (std::vector<std::string>{"x", "y", "z"}));
}

TEST(Stats, DescriptiveAgainstHandValues) {
    Eigen::VectorXd x(4);
    x << 1, 2, 3, 10;
    EXPECT_DOUBLE_EQ(stats::mean(x), 4.0);
    EXPECT_DOUBLE_EQ(stats::stddev(x), std::sqrt(((9.0 + 4 + 1 + 36) / 4.0)));
    EXPECT_DOUBLE_EQ(stats::stddev(x, 1), std::sqrt(50.0 / 3.0));
    EXPECT_DOUBLE_EQ(stats::median({5, 1, 3}), 3.0);
    EXPECT_DOUBLE_EQ(stats::median({4, 1, 3, 2}), 2.5);
    // Linear interpolation: position q*(n-1).
    EXPECT_DOUBLE_EQ(stats::quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
    EXPECT_DOUBLE_EQ(stats::quantile({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(stats::iqr({1, 2, 3, 4, 5}), 2.0);
}

TEST(Stats, TailProbabilities) {
    EXPECT_NEAR(stats::normal_two_sided_p(1.959963984540054), 0.05, 1e-12);
    EXPECT_NEAR(stats::chi2_sf(3.841458820694124, 1), 0.05, 1e-12);
    EXPECT_NEAR(stats::f_sf(4.0, 1, 1000), 0.0457636, 1e-5);
    // Log tails stay finite far past double underflow.
    EXPECT_TRUE(std::isfinite(stats::normal_two_sided_log_p(60.0)));
    EXPECT_LT(stats::normal_two_sided_log_p(60.0), stats::normal_two_sided_log_p(50.0));
    EXPECT_TRUE(std::isfinite(stats::chi2_log_sf(5000.0, 3)));
    EXPECT_NEAR(stats::normal_two_sided_log_p(2.0), std::log(stats::normal_two_sided_p(2.0)), 1e-12);
}

TEST(Stats, OlsRecoversCoefficients) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    Eigen::MatrixXd X(500, 2);
    Eigen::VectorXd y(500);
    for (int i = 0; i < 500; ++i) {
        X(i, 0) = n(rng);
        X(i, 1) = n(rng);
        y(i) = 1.5 + 2.0 * X(i, 0) - 3.0 * X(i, 1);
    }
    auto fit = stats::ols(X, y, true);
    EXPECT_NEAR(fit.coefficients(0), 1.5, 1e-9);
    EXPECT_NEAR(fit.coefficients(1), 2.0, 1e-9);
    EXPECT_NEAR(fit.coefficients(2), -3.0, 1e-9);
    EXPECT_NEAR(fit.rss, 0.0, 1e-12);
    EXPECT_EQ(fit.rank, 3);
}
