#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "rcakit/datagen.hpp"
#include "rcakit/error.hpp"
#include "rcakit/scoring.hpp"

using namespace rcakit;

namespace {

// Dense linear-solve PageRank on the reversed graph, dangling mass
// redistributed along p. Independent of the power iteration.
std::vector<double> pagerank_oracle(const CausalGraph& g, double d, const std::vector<double>& p) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd pv = Eigen::Map<const Eigen::VectorXd>(p.data(), n);
    for (Eigen::Index u = 0; u < n; ++u) {
        auto pa = g.parents(static_cast<std::size_t>(u));
        if (pa.empty()) {
            M.col(u) = pv;
        } else {
            for (auto v : pa) M(static_cast<Eigen::Index>(v), u) = 1.0 / static_cast<double>(pa.size());
        }
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - d * M;
    Eigen::VectorXd x = A.lu().solve((1 - d) * pv);
    x /= x.sum();
    return {x.data(), x.data() + n};
}

double score_of(const Ranking& r, const std::string& m) { return r[*r.position(m)].score; }

}  // namespace

TEST(Pagerank, TwoNodeClosedForm) {
    CausalGraph g({"A", "B"});
    g.add_edge("A", "B");
    // Reversed edge B -> A; A is dangling. With d = 0.85 and uniform p:
    // x_B = 0.5 (1 - d) + 0.5 d x_A, x_A = x_B d + 0.5 d x_A + 0.5 (1 - d).
    double d = 0.85;
    Eigen::Matrix2d A;
    A << 1 - 0.5 * d, -d, -0.5 * d, 1;
    Eigen::Vector2d x = A.lu().solve(Eigen::Vector2d::Constant(0.5 * (1 - d)));
    x /= x.sum();
    auto r = pagerank(g, d);
    EXPECT_NEAR(score_of(r, "A"), x(0), 1e-8);
    EXPECT_NEAR(score_of(r, "B"), x(1), 1e-8);
    EXPECT_EQ(r[0].metric, "A");
}

TEST(Pagerank, MatchesLinearSolveOnRandomDags) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto g = random_dag(9, 14, seed);
        std::vector<double> p(9, 1.0 / 9);
        auto x = pagerank_oracle(g, 0.85, p);
        auto r = pagerank(g);
        double sum = 0.0;
        for (std::size_t v = 0; v < 9; ++v) {
            EXPECT_NEAR(score_of(r, g.name(v)), x[v], 1e-7);
            sum += score_of(r, g.name(v));
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(Pagerank, PersonalizationFollowsEvidence) {
    auto g = random_dag(6, 7, 3);
    AnomalyEvidence ev;
    std::vector<double> p(6, 0.0);
    for (std::size_t v = 0; v < 6; ++v) {
        ev.scores[g.name(v)] = static_cast<double>(v + 1);
        p[v] = static_cast<double>(v + 1) / 21.0;
    }
    auto x = pagerank_oracle(g, 0.7, p);
    auto r = pagerank(g, 0.7, ev);
    for (std::size_t v = 0; v < 6; ++v) EXPECT_NEAR(score_of(r, g.name(v)), x[v], 1e-7);
}

TEST(Pagerank, Errors) {
    CausalGraph g({"A"});
    EXPECT_THROW(pagerank(g, 1.0), Error);
    EXPECT_THROW(pagerank(CausalGraph{}), Error);
    AnomalyEvidence bad;
    bad.scores["Z"] = 1.0;
    try {
        pagerank(g, 0.85, bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::reference);
    }
    bad.scores = {{"A", -1.0}};
    EXPECT_THROW(pagerank(g, 0.85, bad), Error);
}

TEST(RandomWalk, DeterministicAndFavoursUpstreamAnomaly) {
    // front <- mid <- root; walks move from effect to cause.
    CausalGraph g({"front", "mid", "root", "other"});
    g.add_edge("mid", "front");
    g.add_edge("root", "mid");
    g.add_edge("other", "front");
    AnomalyEvidence ev;
    ev.scores = {{"front", 5}, {"mid", 5}, {"root", 9}, {"other", 0}};
    ev.frontend = "front";
    auto a = random_walk(g, ev, 5000, 0.1, 42);
    auto b = random_walk(g, ev, 5000, 0.1, 42);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a[0].metric, "root");
    EXPECT_GT(score_of(a, "mid"), score_of(a, "other"));
    double total = 0.0;
    for (const auto& e : a.entries()) total += e.score;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_THROW(random_walk(g, ev, 0, 0.1, 1), Error);
    EXPECT_THROW(random_walk(g, ev, 10, 1.0, 1), Error);
}

TEST(DfsRoots, GroupsRootsThenAbnormalThenNormal) {
    CausalGraph g({"a", "b", "c", "d"});
    g.add_edge("a", "b");
    g.add_edge("b", "c");
    g.add_edge("d", "c");
    AnomalyEvidence ev;
    ev.scores = {{"a", 4}, {"b", 10}, {"c", 8}, {"d", 1}};
    EXPECT_EQ(dfs_roots(g, ev, 3.0).names(), (std::vector<std::string>{"a", "b", "c", "d"}));
    ev.scores["a"] = 0.5;
    EXPECT_EQ(dfs_roots(g, ev, 3.0).names(), (std::vector<std::string>{"b", "c", "d", "a"}));
}

TEST(RootNodes, ParentlessFirst) {
    CausalGraph g({"x", "y", "z"});
    g.add_edge("x", "y");
    g.add_edge("z", "y");
    EXPECT_EQ(root_nodes(g).names(), (std::vector<std::string>{"x", "z", "y"}));
    AnomalyEvidence ev;
    ev.scores = {{"z", 2.0}, {"y", 100.0}};
    EXPECT_EQ(root_nodes(g, ev).names(), (std::vector<std::string>{"z", "x", "y"}));
}
