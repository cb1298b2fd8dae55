#include "rcakit/citest.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rcakit/stats.hpp"

namespace rcakit {

namespace {

constexpr double min_variance = 1e-12;
constexpr double max_abs_r = 1.0 - 1e-12;

void check_pair(std::size_t cols, std::size_t x, std::size_t y, const ColumnSet& z) {
    if (x >= cols || y >= cols) fail(ErrorKind::input, "CI test column out of range");
    if (x == y) fail(ErrorKind::input, "CI test needs two distinct columns");
    for (auto c : z) {
        if (c >= cols) fail(ErrorKind::input, "conditioning column out of range");
        if (c == x || c == y) fail(ErrorKind::input, "conditioning set contains a tested column");
    }
}

CIResult decide(double statistic, double p, double log_p, double alpha) {
    return CIResult{statistic, p, p > alpha, log_p};
}

}  // namespace

CITester::CITester(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::config, "alpha must lie in (0, 1)");
}

FisherZTester::FisherZTester(const Dataset& data, double alpha)
    : CITester(alpha), n_(data.rows()) {
    const auto& X = data.values();
    Eigen::RowVectorXd mu = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - mu;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n_);
    Eigen::VectorXd sd = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    for (Eigen::Index j = 0; j < sd.size(); ++j) {
        if (cov(j, j) < min_variance) {
            fail(ErrorKind::degeneracy, "constant column " + data.name(static_cast<std::size_t>(j)));
        }
    }
    corr_ = cov.array() / (sd * sd.transpose()).array();
    corr_.diagonal().setOnes();
}

double FisherZTester::partial_correlation(std::size_t x, std::size_t y, const ColumnSet& z) const {
    check_pair(static_cast<std::size_t>(corr_.cols()), x, y, z);
    double r;
    if (z.empty()) {
        r = corr_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    } else {
        std::vector<Eigen::Index> idx{static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)};
        for (auto c : z) idx.push_back(static_cast<Eigen::Index>(c));
        auto k = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd sub(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = corr_(idx[i], idx[j]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) fail(ErrorKind::degeneracy, "singular correlation submatrix");
        Eigen::MatrixXd prec = lu.inverse();
        double den = std::sqrt(prec(0, 0) * prec(1, 1));
        if (!(den > 0.0) || !std::isfinite(den)) {
            fail(ErrorKind::degeneracy, "singular correlation submatrix");
        }
        r = -prec(0, 1) / den;
    }
    return std::clamp(r, -1.0, 1.0);
}

CIResult FisherZTester::test(std::size_t x, std::size_t y, const ColumnSet& z) const {
    if (n_ <= z.size() + 3) {
        fail(ErrorKind::sample_size, "fisher_z needs more than |Z| + 3 = " +
                                         std::to_string(z.size() + 3) + " rows");
    }
    double r = std::clamp(partial_correlation(x, y, z), -max_abs_r, max_abs_r);
    double stat = 0.5 * std::log((1.0 + r) / (1.0 - r)) *
                  std::sqrt(static_cast<double>(n_ - z.size() - 3));
    return decide(stat, stats::normal_two_sided_p(stat), stats::normal_two_sided_log_p(stat),
                  alpha_);
}

GSquareTester::GSquareTester(const Dataset& data, double alpha)
    : CITester(alpha), n_(data.rows()) {
    columns_.resize(data.cols());
    levels_.resize(data.cols());
    for (std::size_t j = 0; j < data.cols(); ++j) {
        auto col = data.column(j);
        auto& out = columns_[j];
        out.resize(n_);
        int max_level = 0;
        for (std::size_t t = 0; t < n_; ++t) {
            double v = col(static_cast<Eigen::Index>(t));
            if (v < 0.0 || v != std::floor(v) || v > 255.0) {
                fail(ErrorKind::input, "g_square needs small non-negative integer codes in column " +
                                           data.name(j));
            }
            out[t] = static_cast<int>(v);
            max_level = std::max(max_level, out[t]);
        }
        levels_[j] = max_level + 1;
    }
}

CIResult GSquareTester::test(std::size_t x, std::size_t y, const ColumnSet& z) const {
    check_pair(columns_.size(), x, y, z);
    const int lx = levels_[x];
    const int ly = levels_[y];
    const auto& cx = columns_[x];
    const auto& cy = columns_[y];

    // Stratum ids in mixed radix; dense when small, hashed otherwise.
    std::vector<std::size_t> stratum(n_, 0);
    double n_strata = 1.0;
    for (auto c : z) n_strata *= levels_[c];
    for (auto c : z) {
        const auto& cz = columns_[c];
        auto lz = static_cast<std::size_t>(levels_[c]);
        for (std::size_t t = 0; t < n_; ++t) stratum[t] = stratum[t] * lz + static_cast<std::size_t>(cz[t]);
    }
    std::vector<std::size_t> compact(n_);
    std::size_t used = 0;
    if (n_strata <= 1e6) {
        std::vector<std::size_t> remap(static_cast<std::size_t>(n_strata), SIZE_MAX);
        for (std::size_t t = 0; t < n_; ++t) {
            auto& slot = remap[stratum[t]];
            if (slot == SIZE_MAX) slot = used++;
            compact[t] = slot;
        }
    } else {
        std::unordered_map<std::size_t, std::size_t> remap;
        for (std::size_t t = 0; t < n_; ++t) {
            auto [it, inserted] = remap.emplace(stratum[t], used);
            if (inserted) ++used;
            compact[t] = it->second;
        }
    }

    const std::size_t cell = static_cast<std::size_t>(lx * ly);
    std::vector<double> counts(used * cell, 0.0);
    for (std::size_t t = 0; t < n_; ++t) {
        counts[compact[t] * cell + static_cast<std::size_t>(cx[t] * ly + cy[t])] += 1.0;
    }

    double g2 = 0.0;
    double df = 0.0;
    std::vector<double> nx(static_cast<std::size_t>(lx)), ny(static_cast<std::size_t>(ly));
    for (std::size_t s = 0; s < used; ++s) {
        const double* tab = counts.data() + s * cell;
        std::fill(nx.begin(), nx.end(), 0.0);
        std::fill(ny.begin(), ny.end(), 0.0);
        double total = 0.0;
        for (int i = 0; i < lx; ++i) {
            for (int j = 0; j < ly; ++j) {
                double c = tab[i * ly + j];
                nx[static_cast<std::size_t>(i)] += c;
                ny[static_cast<std::size_t>(j)] += c;
                total += c;
            }
        }
        int ox = 0, oy = 0;
        for (double c : nx) ox += c > 0.0;
        for (double c : ny) oy += c > 0.0;
        if (ox < 2 || oy < 2) continue;
        df += static_cast<double>((ox - 1) * (oy - 1));
        for (int i = 0; i < lx; ++i) {
            for (int j = 0; j < ly; ++j) {
                double c = tab[i * ly + j];
                if (c > 0.0) {
                    g2 += c * std::log(c * total / (nx[static_cast<std::size_t>(i)] *
                                                    ny[static_cast<std::size_t>(j)]));
                }
            }
        }
    }
    g2 = std::max(0.0, 2.0 * g2);
    if (df <= 0.0) return decide(0.0, 1.0, 0.0, alpha_);
    return decide(g2, stats::chi2_sf(g2, df), stats::chi2_log_sf(g2, df), alpha_);
}

std::unique_ptr<CITester> make_ci_tester(const Dataset& data, double alpha) {
    if (data.kind() == DataKind::discrete) return std::make_unique<GSquareTester>(data, alpha);
    return std::make_unique<FisherZTester>(data, alpha);
}

namespace {

// Restricts a dataset to (x, y, Z) so unrelated columns cannot trip the
// per-dataset checks of the testers.
std::pair<Dataset, ColumnSet> restrict(const Dataset& data, std::size_t x, std::size_t y,
                                       const ColumnSet& z) {
    check_pair(data.cols(), x, y, z);
    ColumnSet cols{x, y};
    cols.insert(cols.end(), z.begin(), z.end());
    ColumnSet local;
    for (std::size_t k = 2; k < cols.size(); ++k) local.push_back(k);
    return {data.select_columns(cols), local};
}

}  // namespace

double partial_correlation(const Dataset& data, std::size_t x, std::size_t y, const ColumnSet& z) {
    auto [sub, local] = restrict(data, x, y, z);
    return FisherZTester(sub, 0.05).partial_correlation(0, 1, local);
}

CIResult fisher_z(const Dataset& data, std::size_t x, std::size_t y, const ColumnSet& z,
                  double alpha) {
    auto [sub, local] = restrict(data, x, y, z);
    return FisherZTester(sub, alpha).test(0, 1, local);
}

CIResult g_square(const Dataset& data, std::size_t x, std::size_t y, const ColumnSet& z,
                  double alpha) {
    auto [sub, local] = restrict(data, x, y, z);
    return GSquareTester(sub, alpha).test(0, 1, local);
}

}  // namespace rcakit
