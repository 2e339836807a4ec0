#include "superres/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <stdexcept>

namespace superres {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846); }

double normal_upper_fractile(double alpha) {
    check_alpha(alpha);
    return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<>(), alpha));
}

double chi2_upper_fractile(double dof, double alpha) {
    check_alpha(alpha);
    if (!(dof > 0.0)) throw std::invalid_argument("chi-square needs positive degrees of freedom");
    return boost::math::quantile(boost::math::complement(boost::math::chi_squared_distribution<>(dof), alpha));
}

double chi2_cdf(double dof, double x) {
    if (x <= 0.0) return 0.0;
    return boost::math::cdf(boost::math::chi_squared_distribution<>(dof), x);
}

double scaled_normal_cdf(double x) {
    if (x < -30.0) {
        // Mills-ratio series; the neglected term is below 1e-11 relative at |x| = 30.
        const double x2 = x * x;
        return (1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)) / (-x * std::sqrt(2.0 * 3.14159265358979323846));
    }
    if (x < 0.0) return 0.5 * std::exp(0.5 * x * x + std::log(std::erfc(-x / std::sqrt(2.0))));
    return std::exp(0.5 * x * x) * normal_cdf(x);
}

double kolmogorov_pvalue(double d, std::size_t n) {
    if (n == 0) throw std::invalid_argument("KS test needs samples");
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double binomial_se(double p, std::size_t n) {
    if (n == 0) return 0.0;
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace superres
