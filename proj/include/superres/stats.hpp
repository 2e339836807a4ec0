#pragma once

#include <span>
#include <utility>

namespace superres {

/// Standard normal distribution function.
[[nodiscard]] double normal_cdf(double x);
[[nodiscard]] double normal_pdf(double x);

/// Upper fractile U with Phi(U) = 1 - alpha.
[[nodiscard]] double normal_upper_fractile(double alpha);

/// Fractile c with P{X <= c} = 1 - alpha for X ~ chi^2 with `dof` degrees of freedom.
[[nodiscard]] double chi2_upper_fractile(double dof, double alpha);
[[nodiscard]] double chi2_cdf(double dof, double x);

/// e^{x^2/2} Phi(x), evaluated without overflow or cancellation for large |x|.
[[nodiscard]] double scaled_normal_cdf(double x);

/// Asymptotic Kolmogorov p-value for sup-distance `d` from n samples.
[[nodiscard]] double kolmogorov_pvalue(double d, std::size_t n);

/// One-sample Kolmogorov-Smirnov distance of `samples` (sorted in place) against `cdf`.
template <class Cdf>
[[nodiscard]] double ks_distance(std::span<double> samples, Cdf&& cdf);

/// Standard error sqrt(p (1 - p) / n).
[[nodiscard]] double binomial_se(double p, std::size_t n);

/// Wilson score interval at the given normal fractile.
[[nodiscard]] std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

}  // namespace superres

#include <algorithm>
#include <cmath>

template <class Cdf>
double superres::ks_distance(std::span<double> samples, Cdf&& cdf) {
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}
