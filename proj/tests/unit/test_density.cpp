#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "face/density.hpp"
#include "face/error.hpp"
#include "oracles.hpp"

using namespace face;
namespace ft = face::testing;

namespace {

std::vector<std::vector<double>> partition_1d(double a, double b, std::size_t n) {
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i <= n; ++i)
        pts.push_back({a + (b - a) * static_cast<double>(i) / static_cast<double>(n)});
    return pts;
}

double exp_density(std::span<const double> x) { return std::exp(x[0]) / (std::numbers::e - 1.0); }

double clamped_oracle() {
    const double kink = std::log(std::numbers::e - 1.0);
    auto f = [](double x) { return std::max(-std::log(std::exp(x) / (std::numbers::e - 1.0)), 0.0); };
    return ft::integrate(f, 0.0, kink) + ft::integrate(f, kink, 1.0);
}

}  // namespace

TEST_CASE("KDE hand evaluation") {
    KdeModel m({0.0}, 1, 1.0);
    const std::vector<double> origin{0.0};
    CHECK(m.estimate(origin) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(m(origin) == m.estimate(origin));

    // Two points in 2-d, evaluated directly from the kernel formula.
    const double h = 0.7;
    KdeModel m2({0.0, 0.0, 1.0, 2.0}, 2, h);
    const std::vector<double> x{0.3, -0.4};
    const double k1 = std::exp(-(0.09 + 0.16) / (2 * h * h));
    const double k2 = std::exp(-(0.49 + 5.76) / (2 * h * h));
    const double expected = (k1 + k2) / (2 * h * h * 2 * std::numbers::pi);
    CHECK(m2.estimate(x) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("KDE symmetry, decay, permutation invariance") {
    KdeModel m({-1.3, 1.3}, 1, 0.5);
    for (double a : {0.1, 0.9, 2.5}) {
        const std::vector<double> p{a}, q{-a};
        CHECK(m.estimate(p) == doctest::Approx(m.estimate(q)).epsilon(1e-15));
    }
    const std::vector<double> far{1.3 + 100 * 0.5};
    CHECK(m.estimate(far) < 1e-12);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> pts(60);
    for (auto& v : pts) v = g(rng);
    std::vector<double> perm;
    std::vector<std::size_t> order(30);
    for (std::size_t i = 0; i < 30; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
        perm.push_back(pts[2 * i]);
        perm.push_back(pts[2 * i + 1]);
    }
    KdeModel a(pts, 2, 0.4), b(perm, 2, 0.4);
    for (int t = 0; t < 20; ++t) {
        const std::vector<double> x{g(rng), g(rng)};
        CHECK(a.estimate(x) == doctest::Approx(b.estimate(x)).epsilon(1e-12));
    }
}

TEST_CASE("KDE integrates to one on a grid") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;

    std::vector<double> p1(40);
    for (auto& v : p1) v = g(rng);
    KdeModel m1(p1, 1, 0.3);
    const double step1 = 0.01;
    double s1 = 0.0;
    for (double x = -8.0; x < 8.0; x += step1) {
        const std::vector<double> pt{x + step1 / 2};
        s1 += m1.estimate(pt) * step1;
    }
    CHECK(std::abs(s1 - 1.0) < 0.02);

    std::vector<double> p2(60);
    for (auto& v : p2) v = g(rng);
    KdeModel m2(p2, 2, 0.4);
    const double step2 = 0.05;
    double s2 = 0.0;
    for (double x = -7.0; x < 7.0; x += step2)
        for (double y = -7.0; y < 7.0; y += step2) {
            const std::vector<double> pt{x + step2 / 2, y + step2 / 2};
            s2 += m2.estimate(pt) * step2 * step2;
        }
    CHECK(std::abs(s2 - 1.0) < 0.02);
}

TEST_CASE("KDE errors") {
    KdeModel m({0.0, 0.0}, 2, 1.0);
    const std::vector<double> x{0.0};
    CHECK_THROWS_AS(m.estimate(x), Error);
    CHECK_THROWS_AS(KdeModel({0.0}, 1, 0.0), Error);
    CHECK_THROWS_AS(KdeModel({0.0}, 1, -1.0), Error);
}

TEST_CASE("fit_kde bandwidth selection") {
    Dataset d({0, 0, 1, 2, 2, 4, 3, 6}, 4, 2, {0, 1, 0, 1}, 2);
    // Hand-evaluated Scott's rule: stds sqrt(5/3) and 2*sqrt(5/3).
    const double mean_std = 1.5 * std::sqrt(5.0 / 3.0);
    const double expected = std::pow(4.0, -1.0 / 6.0) * mean_std;
    CHECK(scott_bandwidth(d) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(fit_kde(d).bandwidth() == doctest::Approx(expected).epsilon(1e-14));
    CHECK(fit_kde(d, 0.25).bandwidth() == 0.25);
    CHECK(fit_kde(d).size() == 4);
    CHECK(fit_kde(d).dim() == 2);
    CHECK_THROWS_AS(fit_kde(d, 0.0), Error);
    CHECK_THROWS_AS(fit_kde(d, -2.0), Error);

    Dataset flat({1, 1, 1, 1}, 2, 2, {0, 1}, 2);
    CHECK_THROWS_AS(fit_kde(flat), Error);
    CHECK_NOTHROW(fit_kde(flat, 1.0));
}

TEST_CASE("apply_weight") {
    WeightFunction neg_log{};
    CHECK(apply_weight(neg_log, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(apply_weight(neg_log, 1.0) == 0.0);
    CHECK(apply_weight(neg_log, 1.25) == 0.0);
    CHECK(apply_weight(WeightFunction{WeightKind::neg_log, 0.3}, 1.25) == 0.3);
    CHECK(apply_weight(WeightFunction{WeightKind::identity}, 2.5) == 2.5);
    CHECK(apply_weight(WeightFunction{WeightKind::inverse}, 4.0) == 0.25);
    CHECK(apply_weight(WeightFunction{WeightKind::inverse, 1.0}, 4.0) == 1.0);
    WeightFunction custom{WeightKind::custom, 0.0, [](double z) { return z * z - 1.0; }};
    CHECK(apply_weight(custom, 3.0) == 8.0);
    CHECK(apply_weight(custom, 0.5) == 0.0);

    CHECK_THROWS_AS(apply_weight(neg_log, 0.0), DomainError);
    CHECK_THROWS_AS(apply_weight(neg_log, -1.0), DomainError);
    CHECK_THROWS_AS(apply_weight(WeightFunction{WeightKind::identity}, 0.0), DomainError);

    CHECK(parse_weight_kind("neg_log") == WeightKind::neg_log);
    CHECK(parse_weight_kind(to_string(WeightKind::inverse)) == WeightKind::inverse);
    CHECK_THROWS_AS(parse_weight_kind("log"), Error);
}

TEST_CASE("volume_unit_ball") {
    CHECK(volume_unit_ball(1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(volume_unit_ball(2) == doctest::Approx(std::numbers::pi).epsilon(1e-15));
    CHECK(volume_unit_ball(3) == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-15));
    for (int d = 1; d <= 20; ++d)
        CHECK(ft::relative_error(volume_unit_ball(d), ft::unit_ball_volume_gamma(d)) < 1e-13);
    CHECK_THROWS_AS(volume_unit_ball(0), Error);
    CHECK_THROWS_AS(volume_unit_ball(-3), Error);
}

TEST_CASE("path_f_length basics") {
    WeightFunction w{};
    DensityFn half = [](std::span<const double>) { return 0.5; };

    const std::vector<std::vector<double>> same{{1.0, 2.0}, {1.0, 2.0}};
    CHECK(path_f_length(same, half, w) == 0.0);

    const std::vector<std::vector<double>> seg{{0.0, 0.0}, {3.0, 4.0}};
    CHECK(path_f_length(seg, half, w) == doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-14));

    const std::vector<std::vector<double>> one{{0.0}};
    CHECK_THROWS_AS(path_f_length(one, half, w), Error);

    DensityFn zero = [](std::span<const double>) { return 0.0; };
    CHECK_THROWS_AS(path_f_length(seg, zero, w), DomainError);
}

TEST_CASE("path_f_length converges to the quadrature oracle") {
    WeightFunction w{};
    const double oracle = clamped_oracle();
    CHECK(oracle == doctest::Approx(std::pow(std::log(std::numbers::e - 1.0), 2) / 2).epsilon(1e-12));

    double prev_err = INFINITY;
    for (std::size_t n : {2500u, 5000u, 10000u}) {
        const auto pts = partition_1d(0.0, 1.0, n);
        const double err = std::abs(path_f_length(pts, exp_density, w) - oracle) / oracle;
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 1e-3);
}

TEST_CASE("path_f_length with a smooth non-clamped integrand") {
    // identity weight on a Gaussian bump: the integrand is smooth everywhere.
    WeightFunction w{WeightKind::identity};
    DensityFn bump = [](std::span<const double> x) { return std::exp(-x[0] * x[0]); };
    const double oracle = ft::integrate([](double x) { return std::exp(-x * x); }, -1.0, 2.0);
    double prev = INFINITY;
    for (std::size_t n : {10u, 20u, 40u, 80u}) {
        const double err = std::abs(path_f_length(partition_1d(-1.0, 2.0, n), bump, w) - oracle);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-4);
}
