#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace rcakit::stats {

double mean(const Eigen::Ref<const Eigen::VectorXd>& x);
/// ddof = 0 gives the population standard deviation.
double stddev(const Eigen::Ref<const Eigen::VectorXd>& x, int ddof = 0);
double median(std::vector<double> x);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> x, double q);
double iqr(const std::vector<double>& x);
double pearson(const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::Ref<const Eigen::VectorXd>& y);

/// Two-sided standard normal tail P(|Z| > |z|) and its natural log.
double normal_two_sided_p(double z);
double normal_two_sided_log_p(double z);

/// Chi-square upper tail and its natural log (finite even when the tail
/// underflows double precision).
double chi2_sf(double x, double df);
double chi2_log_sf(double x, double df);

/// F distribution upper tail.
double f_sf(double x, double d1, double d2);

struct OlsFit {
    Eigen::VectorXd coefficients;  // intercept first when requested
    Eigen::VectorXd residuals;
    double rss = 0.0;
    int rank = 0;
};

/// Least squares of y on the columns of X. Rank is reported, callers decide
/// whether a deficient design is an error.
OlsFit ols(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
           bool intercept);

}  // namespace rcakit::stats
