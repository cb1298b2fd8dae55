#include "rcakit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "rcakit/error.hpp"

namespace rcakit::stats {

double mean(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() == 0) fail(ErrorKind::input, "mean of empty sample");
    return x.mean();
}

double stddev(const Eigen::Ref<const Eigen::VectorXd>& x, int ddof) {
    if (x.size() <= ddof) fail(ErrorKind::input, "sample too small for stddev");
    double m = x.mean();
    double ss = (x.array() - m).square().sum();
    return std::sqrt(ss / static_cast<double>(x.size() - ddof));
}

double quantile(std::vector<double> x, double q) {
    if (x.empty()) fail(ErrorKind::input, "quantile of empty sample");
    std::sort(x.begin(), x.end());
    double pos = q * static_cast<double>(x.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, x.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return x[lo] + frac * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double iqr(const std::vector<double>& x) { return quantile(x, 0.75) - quantile(x, 0.25); }

double pearson(const Eigen::Ref<const Eigen::VectorXd>& x,
               const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::input, "pearson needs paired samples");
    Eigen::ArrayXd a = x.array() - x.mean();
    Eigen::ArrayXd b = y.array() - y.mean();
    double den = std::sqrt(a.square().sum() * b.square().sum());
    if (den <= 0.0) return 0.0;
    return std::clamp((a * b).sum() / den, -1.0, 1.0);
}

double normal_two_sided_p(double z) {
    return std::min(1.0, boost::math::erfc(std::abs(z) / std::sqrt(2.0)));
}

double normal_two_sided_log_p(double z) {
    double p = normal_two_sided_p(z);
    if (p > 1e-300) return std::log(p);
    // Mills ratio asymptotic for the far tail.
    double a = std::abs(z);
    return std::log(2.0) - 0.5 * a * a - std::log(a) - 0.5 * std::log(2.0 * M_PI) +
           std::log1p(-1.0 / (a * a));
}

double chi2_sf(double x, double df) {
    if (df <= 0.0) return 1.0;
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

double chi2_log_sf(double x, double df) {
    double p = chi2_sf(x, df);
    if (p > 1e-300) return std::log(p);
    // Q(a, y) ~ y^(a-1) e^-y / Gamma(a) * (1 + (a-1)/y + (a-1)(a-2)/y^2)
    double a = df / 2.0;
    double y = x / 2.0;
    double series = 1.0 + (a - 1.0) / y + (a - 1.0) * (a - 2.0) / (y * y);
    return (a - 1.0) * std::log(y) - y - std::lgamma(a) + std::log(std::max(series, 1e-300));
}

double f_sf(double x, double d1, double d2) {
    if (x <= 0.0) return 1.0;
    if (!std::isfinite(x)) return 0.0;
    boost::math::fisher_f dist(d1, d2);
    return boost::math::cdf(boost::math::complement(dist, x));
}

OlsFit ols(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
           bool intercept) {
    Eigen::Index n = y.size();
    if (X.rows() != n) fail(ErrorKind::input, "ols design rows do not match response");
    Eigen::Index p = X.cols() + (intercept ? 1 : 0);
    OlsFit fit;
    if (p == 0) {
        fit.residuals = y;
        fit.rss = y.squaredNorm();
        return fit;
    }
    Eigen::MatrixXd design(n, p);
    if (intercept) {
        design.col(0).setOnes();
        design.rightCols(X.cols()) = X;
    } else {
        design = X;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    fit.rank = static_cast<int>(qr.rank());
    fit.coefficients = qr.solve(y);
    fit.residuals = y - design * fit.coefficients;
    fit.rss = fit.residuals.squaredNorm();
    return fit;
}

}  // namespace rcakit::stats
