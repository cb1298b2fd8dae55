#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rcakit/datagen.hpp"
#include "rcakit/discovery.hpp"
#include "rcakit/error.hpp"
#include "test_util.hpp"

using namespace rcakit;
using oracle::Shape;

namespace {

const std::vector<std::string> k_abc{"A", "B", "C"};

CausalGraph graph_of(const std::vector<std::string>& nodes,
                     std::initializer_list<std::tuple<const char*, const char*, EdgeMark>> edges) {
    CausalGraph g(nodes);
    for (auto [a, b, m] : edges) g.add_edge(a, b, m);
    return g;
}

constexpr auto D = EdgeMark::directed;
constexpr auto U = EdgeMark::undirected;

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an rcakit::Error";
    return ErrorKind::input;
}

}  // namespace

TEST(Config, ValidationAndDefaults) {
    DiscoveryConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.effective_max_cond(50), std::numeric_limits<std::size_t>::max());
    EXPECT_EQ(c.effective_max_cond(51), 3u);
    c.max_cond_size = 1;
    EXPECT_EQ(c.effective_max_cond(100), 1u);
    c.alpha = 0.0;
    EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::config);
    c = {};
    c.max_lag = 0;
    EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::config);
    c = {};
    c.penalty = -1;
    EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::config);
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::chain, 100, 1));
    EXPECT_EQ(kind_of([&] { discover("nope", d, {}); }), ErrorKind::config);
    EXPECT_TRUE(is_discovery_method("ges"));
    EXPECT_FALSE(is_discovery_method("nsigma"));
}

TEST(Pc, ChainGivesUndirectedSkeleton) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::chain, 5000, 21));
    EXPECT_EQ(pc(d, {}), graph_of(k_abc, {{"A", "B", U}, {"B", "C", U}}));
}

TEST(Pc, ColliderIsOriented) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::collider, 5000, 21));
    EXPECT_EQ(pc(d, {}), graph_of(k_abc, {{"A", "C", D}, {"B", "C", D}}));
}

TEST(Pc, MeekPropagatesBelowCollider) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    Eigen::MatrixXd v(5000, 4);
    for (Eigen::Index t = 0; t < 5000; ++t) {
        double a = n(rng), b = n(rng);
        double c = 0.8 * a + 0.8 * b + n(rng);
        v.row(t) << a, b, c, 0.8 * c + n(rng);
    }
    std::vector<std::string> names{"A", "B", "C", "D"};
    auto g = pc(oracle::continuous(names, v), {});
    EXPECT_EQ(g, graph_of(names, {{"A", "C", D}, {"B", "C", D}, {"C", "D", D}}));
}

TEST(Pc, ConstantColumnIsolatedWithWarning) {
    Eigen::MatrixXd m = oracle::sem(Shape::chain, 500, 2);
    m.col(2).setConstant(1.0);
    Warnings w;
    auto g = pc(oracle::continuous(k_abc, m), {}, &w);
    EXPECT_TRUE(g.neighbors(2).empty());
    EXPECT_TRUE(g.adjacent(0, 1));
    ASSERT_EQ(w.size(), 1u);
    EXPECT_NE(w[0].find("C"), std::string::npos);
}

TEST(Pc, MaxCondZeroKeepsChainEnds) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::chain, 5000, 21));
    DiscoveryConfig c;
    c.max_cond_size = 0;
    EXPECT_TRUE(pc(d, c).adjacent(0, 2));
}

TEST(Fci, ColliderHasArrowheadsIntoC) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::collider, 5000, 8));
    auto g = fci(d, {});
    EXPECT_FALSE(g.adjacent(0, 1));
    auto ac = g.edge_between(0, 2);
    auto bc = g.edge_between(1, 2);
    ASSERT_TRUE(ac && bc);
    EXPECT_TRUE(g.has_directed(0, 2));
    EXPECT_TRUE(g.has_directed(1, 2));
}

TEST(Fci, SkeletonMatchesPcOnChain) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::chain, 5000, 8));
    EXPECT_EQ(skeleton(fci(d, {})), skeleton(pc(d, {})));
}

TEST(Fci, LatentConfounderGivesBidirectedEdge) {
    // A -> X <- U -> Y <- B with U dropped. The observed parents A and B make
    // both endpoints colliders, so X <-> Y is identifiable.
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n;
    Eigen::MatrixXd v(10000, 4);
    for (Eigen::Index t = 0; t < 10000; ++t) {
        double a = n(rng), b = n(rng), u = n(rng);
        v.row(t) << a, 0.8 * a + 0.8 * u + n(rng), 0.8 * u + 0.8 * b + n(rng), b;
    }
    std::vector<std::string> names{"A", "X", "Y", "B"};
    auto g = fci(oracle::continuous(names, v), {});
    auto xy = g.edge_between(1, 2);
    ASSERT_TRUE(xy);
    EXPECT_EQ(xy->mark, EdgeMark::bidirected);
    EXPECT_TRUE(g.has_directed(0, 1));
    EXPECT_TRUE(g.has_directed(3, 2));
    EXPECT_EQ(g.edge_count(), 3u);
}

TEST(Fci, IndependentColumnsGiveEmptyGraph) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::independent, 2000, 12));
    EXPECT_EQ(fci(d, {}).edge_count(), 0u);
    EXPECT_EQ(pc(d, {}).edge_count(), 0u);
}

TEST(Granger, RecoversLaggedDriver) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n;
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2000, 3);
    for (Eigen::Index t = 1; t < 2000; ++t) {
        v(t, 0) = 0.5 * v(t - 1, 0) + n(rng);
        v(t, 1) = 0.8 * v(t - 1, 0) + n(rng);
        v(t, 2) = n(rng);
    }
    DiscoveryConfig c;
    c.max_lag = 2;
    c.alpha = 0.01;
    auto g = granger(oracle::continuous(k_abc, v), c);
    EXPECT_EQ(g, graph_of(k_abc, {{"A", "B", D}}));
}

TEST(Granger, ShortSeriesRejected) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::chain, 19, 1));
    EXPECT_EQ(kind_of([&] { granger(d, {}); }), ErrorKind::sample_size);
}

TEST(Lingam, RecoversOrderWithUniformNoise) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd v(3000, 3);
    for (Eigen::Index t = 0; t < 3000; ++t) {
        double c = u(rng);
        double a = 1.5 * c + u(rng);
        double b = -1.2 * a + u(rng);
        v.row(t) << a, b, c;
    }
    auto fit = direct_lingam_fit(oracle::continuous(k_abc, v));
    EXPECT_EQ(fit.order, (std::vector<std::size_t>{2, 0, 1}));
    EXPECT_NEAR(fit.coefficients(2, 0), 1.5, 0.1);
    EXPECT_NEAR(fit.coefficients(0, 1), -1.2, 0.1);
    EXPECT_EQ(fit.graph, graph_of(k_abc, {{"C", "A", D}, {"A", "B", D}}));
    EXPECT_EQ(kind_of([&] { direct_lingam(oracle::continuous(k_abc, v.topRows(12))); }),
              ErrorKind::sample_size);
}

TEST(Bic, LocalTermMatchesGaussianLikelihood) {
    Eigen::MatrixXd m = oracle::sem(Shape::collider, 400, 3);
    Eigen::VectorXd r = oracle::residualize(m.col(2), m.leftCols(2));
    double T = 400.0;
    double var = r.squaredNorm() / T;
    double expected = T * std::log(var) + T * (1 + std::log(2 * M_PI)) + 2.0 * 3 * std::log(T);
    EXPECT_NEAR(local_bic(m, 2, {0, 1}, 2.0), expected, 1e-8);

    auto d = oracle::continuous(k_abc, m);
    auto g = graph_of(k_abc, {{"A", "C", D}, {"B", "C", D}});
    double total = local_bic(m, 0, {}, 1.0) + local_bic(m, 1, {}, 1.0) + local_bic(m, 2, {0, 1}, 1.0);
    EXPECT_NEAR(bic_score(d, g), total, 1e-8);
    EXPECT_LT(bic_score(d, g), bic_score(d, CausalGraph(k_abc)));
}

TEST(Bic, RejectsNonDags) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::chain, 100, 1));
    EXPECT_EQ(kind_of([&] { bic_score(d, graph_of(k_abc, {{"A", "B", U}})); }), ErrorKind::structure);
    auto cyc = graph_of(k_abc, {{"A", "B", D}, {"B", "C", D}, {"C", "A", D}});
    EXPECT_EQ(kind_of([&] { bic_score(d, cyc); }), ErrorKind::structure);
    EXPECT_EQ(kind_of([&] { bic_score(d, CausalGraph({"A"})); }), ErrorKind::input);
}

TEST(Cpdag, ChainUndirectedColliderKept) {
    EXPECT_EQ(dag_to_cpdag(graph_of(k_abc, {{"A", "B", D}, {"B", "C", D}})),
              graph_of(k_abc, {{"A", "B", U}, {"B", "C", U}}));
    auto coll = graph_of(k_abc, {{"A", "C", D}, {"B", "C", D}});
    EXPECT_EQ(dag_to_cpdag(coll), coll);
}

TEST(Cpdag, MarkovEquivalentDagsShareCpdag) {
    // Reversing a covered edge (parents of the head equal parents of the tail
    // plus the tail) preserves the equivalence class.
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto dag = random_dag(7, 10, seed);
        auto cp = dag_to_cpdag(dag);
        EXPECT_EQ(skeleton(cp), skeleton(dag));
        for (const auto& e : dag.edges()) {
            auto pa_to = dag.parents(e.to);
            auto pa_from = dag.parents(e.from);
            pa_from.push_back(e.from);
            std::sort(pa_from.begin(), pa_from.end());
            if (pa_to != pa_from) continue;
            CausalGraph rev = dag;
            rev.set_edge(e.to, e.from);
            EXPECT_EQ(dag_to_cpdag(rev), cp) << "seed " << seed;
        }
    }
}

TEST(Ges, RecoversColliderAndChainClass) {
    auto coll = oracle::continuous(k_abc, oracle::sem(Shape::collider, 3000, 17));
    EXPECT_EQ(ges(coll, {}), graph_of(k_abc, {{"A", "C", D}, {"B", "C", D}}));
    auto chain = oracle::continuous(k_abc, oracle::sem(Shape::chain, 3000, 17));
    EXPECT_EQ(ges(chain, {}), graph_of(k_abc, {{"A", "B", U}, {"B", "C", U}}));
}

TEST(Ges, HugePenaltyGivesEmptyGraph) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::chain, 300, 17, 0.3));
    DiscoveryConfig c;
    c.penalty = 1e6;
    EXPECT_EQ(ges(d, c).edge_count(), 0u);
}

TEST(Discover, DispatchMatchesDirectCalls) {
    auto d = oracle::continuous(k_abc, oracle::sem(Shape::collider, 1000, 2));
    EXPECT_EQ(discover("pc", d, {}), pc(d, {}));
    EXPECT_EQ(discover("ges", d, {}), ges(d, {}));
    EXPECT_EQ(discover("lingam", d, {}), direct_lingam(d));
}
