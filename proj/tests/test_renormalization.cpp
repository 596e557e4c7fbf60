#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "anderson/error.hpp"
#include "anderson/renormalization.hpp"

using namespace anderson;

namespace {

spectral_decomposition from_vectors(std::vector<double> energies, std::vector<double> vectors) {
    return spectral_decomposition::from_eigenpairs(std::move(energies), std::move(vectors), 1e-12);
}

std::vector<double> aligned(std::span<const double> v, std::span<const double> ref) {
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * ref[i];
    std::vector<double> out(v.begin(), v.end());
    if (dot < 0.0)
        for (double& x : out) x = -x;
    return out;
}

double v_of(const disorder_realization& r, long center, std::span<const double> ref) {
    const auto d = diagonalize(r);
    const auto k = track_state(d, static_cast<std::size_t>(center), ref);
    double v = 0.0;
    for (double a : d.vector(k)) v += a * a * a * a;
    return v;
}

disorder_realization shifted(disorder_realization r, std::size_t j, double h) {
    r.epsilon[j] += h;
    return r;
}

} // namespace

TEST_CASE("inverse participation of the center state") {
    SUBCASE("delta localized") {
        const auto d = from_vectors({0.0, 1.0}, {1.0, 0.0, 0.0, 1.0});
        CHECK(overlap_v0(d, 0) == 1.0);
    }
    SUBCASE("uniform over four sites") {
        std::vector<double> v(16, 0.0);
        for (std::size_t i = 0; i < 4; ++i) v[i] = 0.5;
        v[4 + 0] = 0.5; v[4 + 1] = 0.5; v[4 + 2] = -0.5; v[4 + 3] = -0.5;
        v[8 + 0] = 0.5; v[8 + 1] = -0.5; v[8 + 2] = -0.5; v[8 + 3] = 0.5;
        v[12 + 0] = 0.5; v[12 + 1] = -0.5; v[12 + 2] = 0.5; v[12 + 3] = -0.5;
        const auto d = from_vectors({0.0, 1.0, 2.0, 3.0}, v);
        for (long c = 0; c < 4; ++c) CHECK(overlap_v0(d, c) == doctest::Approx(0.25));
    }
    SUBCASE("grows with disorder on average") {
        double prev = 0.0;
        for (double disorder : {0.5, 1.0, 2.0}) {
            double mean = 0.0;
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                const auto d = diagonalize(sample_disorder({200, disorder}, seed),
                                           {.method = eigen_method::inverse_iteration});
                const double v = overlap_v0(d, 100);
                CHECK(v > 0.0);
                CHECK(v <= 1.0);
                mean += v / 100.0;
            }
            CHECK(mean > prev);
            prev = mean;
        }
    }
}

TEST_CASE("renormalized combination") {
    const auto d = diagonalize(sample_disorder({80, 1.0}, 12));
    const combination_spec base{{{1, 40}, {-1, 20}}};
    const double f = eval_combination(base, d);
    CHECK(eval_renormalized({base, 0.0, 40}, d) == f);
    CHECK(eval_renormalized({base, 0.7, 41}, d) == f);
    CHECK(std::abs(eval_renormalized({base, 0.1, 40}, d) - f - 0.1 * overlap_v0(d, 40)) <= 1e-12);
    // affine in beta with slope c0 V
    const renorm_spec minus{base, 0.0, 20};
    for (double beta : {0.05, 0.2, 1.0}) {
        auto s = minus;
        s.beta = beta;
        CHECK(eval_renormalized(s, d) == doctest::Approx(f - beta * overlap_v0(d, 20)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(eval_renormalized({base, -0.1, 40}, d), invalid_argument);
    CHECK_THROWS_AS(overlap_v0(d, 90), missing_center);
}

TEST_CASE("eigenvector derivative on two sites") {
    // H = [[a, 1], [1, b]]: upper state (cos t, sin t) with tan 2t = 2 / (a - b),
    // so dt/da = -1 / ((a - b)^2 + 4) and d psi / da = (-sin t, cos t) dt/da.
    const double a = 0.7, b = -0.4;
    const auto d = diagonalize(make_realization({2, 1.0}, {a, b}));
    const double t = 0.5 * std::atan2(2.0, a - b);
    const double dt = -1.0 / ((a - b) * (a - b) + 4.0);
    const auto dpsi = perturbative_vec_derivative(d, 1, 0);
    CHECK(std::abs(dpsi[0] - (-std::sin(t) * dt)) <= 1e-10);
    CHECK(std::abs(dpsi[1] - std::cos(t) * dt) <= 1e-10);
    // through site b: dt/db = -dt
    const auto dpsi_b = perturbative_vec_derivative(d, 1, 1);
    CHECK(std::abs(dpsi_b[0] - std::sin(t) * dt) <= 1e-10);
    CHECK(std::abs(dpsi_b[1] + std::cos(t) * dt) <= 1e-10);
}

TEST_CASE("eigenvector derivative keeps the norm") {
    const auto d = diagonalize(sample_disorder({100, 1.0}, 3));
    for (std::size_t n : {0u, 37u, 99u}) {
        for (std::size_t j : {0u, 50u, 98u}) {
            const auto dpsi = perturbative_vec_derivative(d, n, j);
            double dot = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) dot += dpsi[i] * d.amplitude(n, i);
            CHECK(std::abs(dot) <= 1e-10);
        }
    }
}

TEST_CASE("eigenvector derivative matches finite differences") {
    const auto r = sample_disorder({100, 1.0}, 17);
    const auto d = diagonalize(r);
    const double h = 1e-6;
    for (long center : {30l, 50l, 71l}) {
        const auto n = static_cast<std::size_t>(d.state_at(center));
        const auto ref = d.vector(n);
        for (std::size_t j : {static_cast<std::size_t>(center), static_cast<std::size_t>(center) + 3}) {
            const auto up = diagonalize(shifted(r, j, h));
            const auto down = diagonalize(shifted(r, j, -h));
            const auto vu = aligned(up.vector(track_state(up, static_cast<std::size_t>(center), ref)), ref);
            const auto vd = aligned(down.vector(track_state(down, static_cast<std::size_t>(center), ref)), ref);
            const auto dpsi = perturbative_vec_derivative(d, n, j);
            double err = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                err = std::max(err, std::abs((vu[i] - vd[i]) / (2.0 * h) - dpsi[i]));
                scale = std::max(scale, std::abs(dpsi[i]));
            }
            CHECK(err / scale <= 1e-4);
        }
    }
}

TEST_CASE("derivative of the inverse participation") {
    const auto r = sample_disorder({100, 1.0}, 29);
    const auto d = diagonalize(r);
    const long center = 50;
    const auto ref = d.vector(static_cast<std::size_t>(d.state_at(center)));
    const double v0 = overlap_v0(d, center);
    const auto grad = v_gradient(d, center);

    SUBCASE("central differences") {
        const double h = 1e-6;
        for (std::size_t j : {48u, 50u, 53u, 60u}) {
            const double fd = (v_of(shifted(r, j, h), center, ref) - v_of(shifted(r, j, -h), center, ref)) / (2.0 * h);
            CHECK(std::abs(fd - grad[j]) <= 1e-4 * std::abs(grad[j]));
            CHECK(v_derivative(d, center, j) == grad[j]);
        }
    }
    SUBCASE("first-order remainder shrinks like h^2") {
        const std::size_t j = 51;
        std::vector<double> rem;
        for (double h : {1e-4, 1e-5, 1e-6})
            rem.push_back(std::abs(v_of(shifted(r, j, h), center, ref) - v0 - h * grad[j]));
        for (std::size_t i = 0; i + 1 < rem.size(); ++i) {
            const double ratio = rem[i] / rem[i + 1];
            CHECK(ratio >= 100.0 / 3.0);
            CHECK(ratio <= 300.0);
        }
    }
    SUBCASE("paired form") {
        CHECK(v_derivative_paired(d, center, 50) == doctest::Approx((grad[50] + grad[51]) / std::sqrt(2.0)));
        CHECK_THROWS_AS(v_derivative_paired(d, center, 99), invalid_argument);
    }
    SUBCASE("bounded at the center") {
        const auto n = static_cast<std::size_t>(d.state_at(center));
        const auto dpsi = perturbative_vec_derivative(d, n, 50);
        double cubes = 0.0, sup = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            cubes += std::pow(std::abs(d.amplitude(n, i)), 3);
            sup = std::max(sup, std::abs(dpsi[i]));
        }
        CHECK(std::abs(grad[50]) <= 4.0 * cubes * sup);
    }
}

TEST_CASE("degenerate levels are rejected") {
    // two decoupled copies of the same level
    const auto d = from_vectors({1.0, 1.0, 2.0}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    CHECK_THROWS_AS(perturbative_vec_derivative(d, 0, 0), degenerate_level);
    CHECK_THROWS_AS(v_gradient(d, 0), degenerate_level);
}

TEST_CASE("renormalized paired gradient") {
    const auto d = diagonalize(sample_disorder({80, 1.0}, 4));
    const combination_spec base{{{1, 40}}};
    CHECK(renormalized_paired_gradient({base, 0.0, 40}, d, 45) == paired_gradient(base, d, 45));
    const auto g = v_gradient(d, 40);
    CHECK(renormalized_paired_gradient({base, 0.2, 40}, d, 45) ==
          doctest::Approx(paired_gradient(base, d, 45) + 0.2 * (g[45] + g[46])));
}

TEST_CASE("beta threshold") {
    CHECK(beta_threshold(0.3, 0.3, 17) == 1.0);
    CHECK(beta_threshold(0.3, 0.3, 17, 2.5) == 2.5);
    CHECK(beta_threshold(0.1, 0.2, 10) == doctest::Approx(std::exp(-2.0)));
    CHECK(beta_threshold(0.1, 0.2, 10) == doctest::Approx(0.1353).epsilon(1e-3));
    CHECK(beta_threshold(0.1, 0.2, -10) == beta_threshold(0.1, 0.2, 10));
    CHECK_THROWS_AS(beta_threshold(0.0, 0.2, 10), invalid_argument);
    CHECK_THROWS_AS(beta_threshold(0.3, 0.2, 10), invalid_argument);
}

TEST_CASE("Chebyshev tail bound holds on the empirical measure") {
    std::vector<double> samples;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto d = diagonalize(sample_disorder({60, 1.0}, seed));
        samples.push_back(v_derivative_paired(d, 30, 38));
    }
    const double s = 0.5;
    const double moment = trimmed_power_mean(samples, s, 0.0);
    for (double t : {1e-8, 1e-5, 1e-3, 1e-2, 0.1, 1.0}) {
        const auto tail = std::count_if(samples.begin(), samples.end(), [&](double x) { return std::abs(x) >= t; });
        CHECK(static_cast<double>(tail) / static_cast<double>(samples.size()) <= moment / std::pow(t, s));
    }
    CHECK(trimmed_power_mean(samples, s, 0.1) <= moment);
    const std::vector<double> plain = {4.0, 1.0, 100.0};
    CHECK(trimmed_power_mean(plain, 0.5, 0.0) == doctest::Approx(13.0 / 3.0));
    CHECK(trimmed_power_mean(plain, 0.5, 0.2) == doctest::Approx(1.5));
}
