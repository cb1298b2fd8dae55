#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "rcakit/core.hpp"

namespace rcakit {

struct CIResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool independent = true;
    /// ln(p_value), still finite when p_value underflows to 0.
    double log_p_value = 0.0;
};

using ColumnSet = std::vector<std::size_t>;

double partial_correlation(const Dataset& data, std::size_t x, std::size_t y, const ColumnSet& z);
CIResult fisher_z(const Dataset& data, std::size_t x, std::size_t y, const ColumnSet& z,
                  double alpha);
CIResult g_square(const Dataset& data, std::size_t x, std::size_t y, const ColumnSet& z,
                  double alpha);

/// Reusable CI test bound to one dataset. Discovery algorithms issue many
/// queries against the same columns, so per-dataset work is done once.
class CITester {
public:
    virtual ~CITester() = default;
    virtual CIResult test(std::size_t x, std::size_t y, const ColumnSet& z) const = 0;
    virtual std::size_t sample_size() const = 0;
    double alpha() const { return alpha_; }

protected:
    explicit CITester(double alpha);
    double alpha_;
};

/// Partial correlation on a precomputed correlation matrix.
class FisherZTester : public CITester {
public:
    FisherZTester(const Dataset& data, double alpha);
    CIResult test(std::size_t x, std::size_t y, const ColumnSet& z) const override;
    std::size_t sample_size() const override { return n_; }
    double partial_correlation(std::size_t x, std::size_t y, const ColumnSet& z) const;

private:
    Eigen::MatrixXd corr_;
    std::size_t n_;
};

/// Likelihood-ratio test on integer-coded columns.
class GSquareTester : public CITester {
public:
    GSquareTester(const Dataset& data, double alpha);
    CIResult test(std::size_t x, std::size_t y, const ColumnSet& z) const override;
    std::size_t sample_size() const override { return n_; }

private:
    std::vector<std::vector<int>> columns_;
    std::vector<int> levels_;
    std::size_t n_;
};

/// fisher_z for continuous data, g_square for discrete.
std::unique_ptr<CITester> make_ci_tester(const Dataset& data, double alpha);

}  // namespace rcakit
