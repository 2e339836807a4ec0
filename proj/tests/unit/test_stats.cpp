#include <doctest.h>

#include "superres/stats.hpp"
#include "superres/types.hpp"

#include <random>
#include <vector>

using namespace superres;

TEST_CASE("normal and chi-square helpers") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(normal_upper_fractile(0.1)) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(chi2_cdf(4.0, chi2_upper_fractile(4.0, 0.05)) == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(chi2_upper_fractile(2.0, 0.05) == doctest::Approx(-2.0 * std::log(0.05)).epsilon(1e-12));
}

TEST_CASE("scaled normal CDF is continuous across its branches") {
    for (double x : {-5.0, 0.0, 3.0}) CHECK(scaled_normal_cdf(x) == doctest::Approx(std::exp(0.5 * x * x) * normal_cdf(x)).epsilon(1e-12));
    CHECK(scaled_normal_cdf(-30.0 - 1e-9) == doctest::Approx(scaled_normal_cdf(-30.0 + 1e-9)).epsilon(1e-9));
    CHECK(scaled_normal_cdf(-1e6) == doctest::Approx(1.0 / (1e6 * std::sqrt(2.0 * pi))).epsilon(1e-9));
}

TEST_CASE("Kolmogorov-Smirnov helpers") {
    Rng rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(5000);
    for (auto& v : x) v = u(rng);
    const double d = ks_distance(std::span(x), [](double t) { return t; });
    CHECK(kolmogorov_pvalue(d, x.size()) > 0.01);
    for (auto& v : x) v = v * v;
    CHECK(kolmogorov_pvalue(ks_distance(std::span(x), [](double t) { return t; }), x.size()) < 1e-6);
    CHECK(kolmogorov_pvalue(0.0, 100) == doctest::Approx(1.0));
}

TEST_CASE("binomial helpers") {
    CHECK(binomial_se(0.5, 100) == doctest::Approx(0.05));
    const auto [lo, hi] = wilson_interval(50, 100);
    CHECK(lo < 0.5);
    CHECK(hi > 0.5);
    CHECK(lo == doctest::Approx(1.0 - hi));
}
