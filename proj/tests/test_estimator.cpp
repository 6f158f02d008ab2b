#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "specshift/estimator.hpp"
#include "specshift/model_io.hpp"
#include "specshift/rng.hpp"

using namespace specshift;

namespace {

Dataset random_dataset(rng_stream& rs, int n, bool with_weights) {
    Dataset d;
    for (int i = 0; i < n; ++i) {
        d.x.push_back(rs.uniform_open0());
        d.y.push_back(rs.normal());
        if (with_weights) d.raw_weights.push_back(0.2 + 2.0 * rs.uniform());
    }
    return d;
}

KernelSpec random_basis_kernel(rng_stream& rs, int max_rank = 8) {
    const int m = 1 + static_cast<int>(rs.bits() % static_cast<std::uint64_t>(max_rank));
    std::vector<double> mu(static_cast<std::size_t>(m));
    double cur = 0.3 + rs.uniform();
    for (int k = 0; k < m; ++k) {
        mu[static_cast<std::size_t>(k)] = cur;
        cur *= 0.3 + 0.6 * rs.uniform();
    }
    return KernelSpec::truncated_basis(mu);
}

}  // namespace

TEST_CASE("single-point closed forms") {
    auto k1 = KernelSpec::truncated_basis({1.0});  // K == 1, kappa == 1
    auto tik = FilterSpec::tikhonov();

    // Unweighted, y=2, lambda=1: M=1, c = 2/(1+1), f = c = 1.
    Dataset d1{{0.5}, {2.0}, {}};
    CHECK(fit(d1, k1, tik, 1.0, WeightScheme::unweighted()).predict(0.9) ==
          Catch::Approx(1.0).margin(1e-14));

    // Exact weight 4: M=4, rescale=4, f = 4y/(lambda+4) = 0.8.
    Dataset d2{{0.5}, {1.0}, {4.0}};
    auto e2 = fit(d2, k1, tik, 1.0, WeightScheme::exact());
    CHECK(e2.predict(0.1) == Catch::Approx(0.8).margin(1e-14));
    CHECK(e2.rescale() == Catch::Approx(4.0).margin(1e-14));

    // Normalization maps the single weight to 1: f = y/(1+1) = 0.5.
    CHECK(fit(d2, k1, tik, 1.0, WeightScheme::normalized()).predict(0.1) ==
          Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("tikhonov spectral path equals the direct linear solve") {
    rng_stream rs(2025);
    for (int rep = 0; rep < 12; ++rep) {
        const int n = 5 + static_cast<int>(rs.bits() % 96);
        auto kernel = rep % 3 == 0 ? KernelSpec::gaussian_rbf(0.1 + 0.4 * rs.uniform())
                                   : random_basis_kernel(rs);
        auto d = random_dataset(rs, n, true);
        // Normalized weights have mean one, and kappa^2 >= mu_1 >= 0.3 for the
        // kernels drawn here, so any lambda <= 0.15 stays inside the rescaled
        // spectral range.
        const double lambda = 0.15 * std::pow(10.0, -2.0 * rs.uniform());
        auto est = fit(d, kernel, FilterSpec::tikhonov(), lambda, WeightScheme::normalized());

        // Direct: c = (lambda I + M)^{-1} (s .* y), M = (1/n) diag(s) K diag(s).
        auto v = effective_weights(d, WeightScheme::normalized());
        Eigen::VectorXd s(n), z(n);
        for (int i = 0; i < n; ++i) {
            s(i) = std::sqrt(v[static_cast<std::size_t>(i)]);
            z(i) = s(i) * d.y[static_cast<std::size_t>(i)];
        }
        Eigen::MatrixXd m =
            (s * s.transpose()).cwiseProduct(kernel.gram(d.x)) / static_cast<double>(n);
        Eigen::VectorXd c =
            (lambda * Eigen::MatrixXd::Identity(n, n) + m).ldlt().solve(z);
        double scale = 0.0, diff = 0.0;
        for (int i = 0; i < n; ++i) {
            diff = std::max(diff, std::abs(c(i) - est.coefficients()[static_cast<std::size_t>(i)]));
            scale = std::max(scale, std::abs(c(i)));
        }
        INFO("rep=" << rep << " n=" << n);
        CHECK(diff <= 1e-8 * std::max(scale, 1.0));
    }
}

TEST_CASE("landweber spectral path equals the explicit iteration") {
    rng_stream rs(77);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 5 + static_cast<int>(rs.bits() % 60);
        auto kernel = rep % 2 == 0 ? random_basis_kernel(rs)
                                   : KernelSpec::gaussian_rbf(0.1 + 0.4 * rs.uniform());
        auto d = random_dataset(rs, n, true);
        // 1/t must not exceed the rescaled spectral range, so start the step
        // count at ceil(1/rho) for this dataset's actual rescale factor.
        const auto v = effective_weights(d, WeightScheme::exact());
        const double rho = kernel.kappa() * kernel.kappa() * *std::max_element(v.begin(), v.end());
        const long t = static_cast<long>(std::ceil(1.0 / rho)) +
                       static_cast<long>(rs.bits() % 60);
        auto spec = fit(d, kernel, FilterSpec::landweber(t), 1.0 / static_cast<double>(t),
                        WeightScheme::exact());
        auto iter = fit_landweber_iterative(d, kernel, t, WeightScheme::exact());
        for (double x : {0.05, 0.3, 0.62, 0.99}) {
            CHECK(spec.predict(x) == Catch::Approx(iter.predict(x)).margin(1e-8));
        }
    }
}

TEST_CASE("factored and dense paths agree for finite-rank kernels") {
    rng_stream rs(303);
    FitOptions dense;
    dense.force_dense = true;
    for (int rep = 0; rep < 8; ++rep) {
        auto kernel = random_basis_kernel(rs);
        auto d = random_dataset(rs, 40, true);
        for (auto filter : {FilterSpec::tikhonov(), FilterSpec::spectral_cutoff()}) {
            const double lambda = 0.15 * std::pow(10.0, -2.0 * rs.uniform());
            auto ef = fit(d, kernel, filter, lambda, WeightScheme::normalized());
            auto ed = fit(d, kernel, filter, lambda, WeightScheme::normalized(), dense);
            for (double x : {0.12, 0.5, 0.88}) {
                CHECK(ef.predict(x) == Catch::Approx(ed.predict(x)).margin(1e-10));
            }
        }
    }
}

TEST_CASE("under unit weights every scheme produces the same fit") {
    rng_stream rs(11);
    for (int rep = 0; rep < 5; ++rep) {
        auto kernel = random_basis_kernel(rs);
        auto d = random_dataset(rs, 30, false);
        d.raw_weights.assign(d.size(), 1.0);  // no shift: density ratio is 1
        const double lambda = 0.05;
        auto base = fit(d, kernel, FilterSpec::tikhonov(), lambda, WeightScheme::unweighted());
        for (auto scheme : {WeightScheme::exact(), WeightScheme::normalized(),
                            WeightScheme::clipped(2.0)}) {
            auto est = fit(d, kernel, FilterSpec::tikhonov(), lambda, scheme);
            for (double x : {0.2, 0.7}) {
                CHECK(std::abs(est.predict(x) - base.predict(x)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("basis expansion reproduces the kernel-sum prediction") {
    rng_stream rs(404);
    auto kernel = KernelSpec::truncated_basis({1.0, 0.5, 0.25, 0.125});
    auto d = random_dataset(rs, 25, false);
    auto est = fit(d, kernel, FilterSpec::tikhonov(), 0.02, WeightScheme::unweighted());
    REQUIRE(est.has_basis_expansion());
    CHECK(est.basis_expansion().size() == 4);
    for (double x : {0.05, 0.44, 0.93}) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            acc += est.sqrt_weights()[i] * est.coefficients()[i] * kernel(x, est.anchors()[i]);
        }
        acc /= static_cast<double>(d.size());
        CHECK(est.predict(x) == Catch::Approx(acc).margin(1e-12));
    }
}

TEST_CASE("weights change the fit when they are not constant") {
    rng_stream rs(505);
    auto kernel = KernelSpec::gaussian_rbf(0.25);
    auto d = random_dataset(rs, 30, true);
    auto unw = fit(d, kernel, FilterSpec::tikhonov(), 0.05, WeightScheme::unweighted());
    auto wtd = fit(d, kernel, FilterSpec::tikhonov(), 0.05, WeightScheme::exact());
    double diff = 0.0;
    for (double x : {0.1, 0.5, 0.9}) diff = std::max(diff, std::abs(unw.predict(x) - wtd.predict(x)));
    CHECK(diff > 1e-6);
}

TEST_CASE("fit contracts") {
    auto kernel = KernelSpec::truncated_basis({1.0});
    auto tik = FilterSpec::tikhonov();

    Dataset bad_x{{1.5}, {0.0}, {}};
    CHECK_THROWS_AS(fit(bad_x, kernel, tik, 0.1, WeightScheme::unweighted()), contract_error);
    Dataset zero_x{{0.0}, {0.0}, {}};
    CHECK_THROWS_AS(fit(zero_x, kernel, tik, 0.1, WeightScheme::unweighted()), contract_error);
    Dataset bad_y{{0.5}, {std::nan("")}, {}};
    CHECK_THROWS_AS(fit(bad_y, kernel, tik, 0.1, WeightScheme::unweighted()), contract_error);
    Dataset no_w{{0.5}, {1.0}, {}};
    CHECK_THROWS_AS(fit(no_w, kernel, tik, 0.1, WeightScheme::exact()), contract_error);
    Dataset ok{{0.5}, {1.0}, {}};
    CHECK_THROWS_AS(fit(ok, kernel, tik, 0.0, WeightScheme::unweighted()), contract_error);
    CHECK_THROWS_AS(fit(ok, kernel, tik, -1.0, WeightScheme::unweighted()), contract_error);
    // lambda above the rescaled spectral range (rho = kappa^2 = 1 here)
    CHECK_THROWS_AS(fit(ok, kernel, tik, 1.5, WeightScheme::unweighted()), contract_error);
    // Landweber lambda must equal 1/t
    CHECK_THROWS_AS(fit(ok, kernel, FilterSpec::landweber(4), 0.3, WeightScheme::unweighted()),
                    contract_error);
    CHECK_NOTHROW(fit(ok, kernel, FilterSpec::landweber(4), 0.25, WeightScheme::unweighted()));
    // degenerate all-zero weights
    Dataset zw{{0.5, 0.6}, {1.0, 1.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(fit(zw, kernel, tik, 0.1, WeightScheme::exact()), contract_error);
    CHECK_THROWS_AS(fit_landweber_iterative(ok, kernel, 0, WeightScheme::unweighted()),
                    contract_error);
}

TEST_CASE("predict validates its argument") {
    Dataset d{{0.5}, {1.0}, {}};
    auto est = fit(d, KernelSpec::truncated_basis({1.0}), FilterSpec::tikhonov(), 0.5,
                   WeightScheme::unweighted());
    CHECK_THROWS_AS(est.predict(std::nan("")), std::domain_error);
}

TEST_CASE("model save/load round-trips bit-exactly") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "specshift_model_io_test";
    fs::create_directories(dir);
    const std::string path = (dir / "model.txt").string();

    rng_stream rs(606);
    for (auto kernel : {KernelSpec::truncated_basis({1.0, 0.31, 0.07}),
                        KernelSpec::gaussian_rbf(0.17)}) {
        auto d = random_dataset(rs, 20, true);
        auto est = fit(d, kernel, FilterSpec::tikhonov(), 0.03, WeightScheme::exact());
        save_model(est, path);
        auto back = load_model(path);
        CHECK(back.kernel() == est.kernel());
        CHECK(back.rescale() == est.rescale());
        CHECK(back.lambda_effective() == est.lambda_effective());
        CHECK(back.anchors() == est.anchors());
        CHECK(back.sqrt_weights() == est.sqrt_weights());
        CHECK(back.coefficients() == est.coefficients());
        for (double x : {0.21, 0.84}) CHECK(back.predict(x) == est.predict(x));
    }
    fs::remove_all(dir);
}

TEST_CASE("model loader rejects malformed files") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "specshift_model_io_bad";
    fs::create_directories(dir);
    const std::string path = (dir / "bad.txt").string();

    auto write = [&](const char* text) {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        REQUIRE(f != nullptr);
        std::fputs(text, f);
        std::fclose(f);
    };
    write("not-a-model\n");
    CHECK_THROWS_AS(load_model(path), contract_error);
    write("specshift-model 1\nkernel rbf 0.2\nrescale 1\nlambda 0.1\nn 2\nanchors 0.5\n");
    CHECK_THROWS_AS(load_model(path), contract_error);  // anchor count mismatch
    write("specshift-model 1\nkernel warp 3\n");
    CHECK_THROWS_AS(load_model(path), contract_error);  // unknown kernel type
    CHECK_THROWS_AS(load_model((dir / "missing.txt").string()), contract_error);
    fs::remove_all(dir);
}
