#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "specshift/metrics.hpp"
#include "specshift/synthetic.hpp"

using namespace specshift;

TEST_CASE("effective dimension closed forms") {
    CHECK(effective_dimension({1.0, 1.0, 1.0}, 1.0) == Catch::Approx(1.5).margin(1e-15));
    // mu = k^{-2}, m = 3, lambda = 1/2: 2/3 + 1/3 + 2/11
    std::vector<double> mu{1.0, 0.25, 1.0 / 9.0};
    CHECK(effective_dimension(mu, 0.5) == Catch::Approx(1.0 + 2.0 / 11.0).epsilon(1e-14));
    auto kernel = KernelSpec::truncated_basis(mu);
    CHECK(effective_dimension(kernel, 0.5) == effective_dimension(mu, 0.5));

    CHECK_THROWS_AS(effective_dimension(mu, 0.0), contract_error);
    CHECK_THROWS_AS(effective_dimension(std::vector<double>{}, 0.5), contract_error);
    CHECK_THROWS_AS(effective_dimension(KernelSpec::gaussian_rbf(0.2), 0.5), contract_error);
}

TEST_CASE("effective dimension is decreasing while N(lambda) * lambda increases") {
    // Two monotonicity facts that hold for every spectrum: N(lambda) falls
    // with lambda, and lambda * N(lambda) = sum lambda*mu/(lambda+mu) rises.
    auto p = make_problem(0.5, 1.0, 256);
    const auto& mu = p.kernel.eigenvalues();
    double prev_n = std::numeric_limits<double>::infinity();
    double prev_prod = 0.0;
    for (double lg = -4.0; lg <= 0.0; lg += 0.25) {
        const double lambda = std::pow(10.0, lg);
        const double n_eff = effective_dimension(mu, lambda);
        CHECK(n_eff < prev_n);
        const double prod = n_eff * lambda;
        CHECK(prod > prev_prod);
        prev_n = n_eff;
        prev_prod = prod;
    }
}

TEST_CASE("exact excess risk of the zero estimator is the target norm") {
    auto p = make_problem(0.5, 1.0, 32);
    SpectralEstimator zero({0.5}, {1.0}, {0.0}, p.kernel, 1.0, 0.1);
    double expected = 0.0;
    for (double d : p.target_coeffs) expected += d * d;
    CHECK(excess_risk_exact(zero, p) == Catch::Approx(expected).epsilon(1e-14));
}

TEST_CASE("exact and Monte Carlo risks agree") {
    auto p = make_problem(0.5, 1.0, 32);
    auto data = sample_train(p, ShiftSpec::none(), 60, 9, 0);
    auto est = fit(data, p.kernel, FilterSpec::tikhonov(), 0.05, WeightScheme::unweighted());
    const double exact = excess_risk_exact(est, p);
    const double mc = excess_risk_mc(est, p, 100000, 123);
    REQUIRE(exact > 0.0);
    CHECK(std::abs(mc - exact) <= 0.1 * exact + 1e-4);
}

TEST_CASE("exact risk requires the problem's own kernel") {
    auto p = make_problem(0.5, 1.0, 32);
    auto other = make_problem(0.5, 1.0, 16);
    auto data = sample_train(p, ShiftSpec::none(), 20, 9, 0);
    auto est = fit(data, other.kernel, FilterSpec::tikhonov(), 0.05, WeightScheme::unweighted());
    CHECK_THROWS_AS(excess_risk_exact(est, p), contract_error);
    CHECK_THROWS_AS(excess_risk_mc(est, p, 0, 1), contract_error);
}

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median({5.0}) == 5.0);
    CHECK_THROWS_AS(median({}), contract_error);
}

TEST_CASE("rate estimation recovers an exact power law") {
    std::vector<RatePoint> pts;
    for (std::size_t n : {100, 200, 400, 800, 1600}) {
        pts.push_back({n, 3.7 * std::pow(static_cast<double>(n), -0.8)});
    }
    auto fit = estimate_rate(pts);
    CHECK(fit.levels == 5);
    CHECK(fit.slope == Catch::Approx(-0.8).margin(1e-12));
    CHECK(fit.stderr_ <= 1e-12);
    CHECK(fit.intercept == Catch::Approx(std::log(3.7)).margin(1e-10));
}

TEST_CASE("rate estimation uses per-level medians") {
    std::vector<RatePoint> pts;
    for (std::size_t n : {100, 200, 400}) {
        const double r = std::pow(static_cast<double>(n), -0.8);
        pts.push_back({n, r});
        pts.push_back({n, r});
        pts.push_back({n, r});
    }
    pts.push_back({200, 1e6});  // outlier: median of level 200 is unchanged
    auto fit = estimate_rate(pts);
    CHECK(fit.slope == Catch::Approx(-0.8).margin(1e-12));
}

TEST_CASE("rate estimation contracts") {
    CHECK_THROWS_AS(estimate_rate({{100, 1.0}, {100, 2.0}}), contract_error);  // one level
    CHECK_THROWS_AS(estimate_rate({{100, 1.0}, {200, 0.0}}), contract_error);
    CHECK_THROWS_AS(estimate_rate({{100, 1.0}, {200, std::nan("")}}), contract_error);
    CHECK_THROWS_AS(estimate_rate({{0, 1.0}, {200, 1.0}}), contract_error);
    // Two levels: slope defined, standard error not.
    auto fit = estimate_rate({{100, 1.0}, {200, 0.5}});
    CHECK(fit.levels == 2);
    CHECK(std::isinf(fit.stderr_));
}
