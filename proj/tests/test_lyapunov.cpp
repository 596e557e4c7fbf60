#include <doctest.h>

#include <cmath>
#include <numbers>

#include "anderson/error.hpp"
#include "anderson/lyapunov.hpp"
#include "oracles.hpp"

using namespace anderson;

namespace {

// Outside the clean band, the decay rate of the growing transfer solution.
double clean_chain_gamma(double e) { return std::abs(e) <= 2.0 ? 0.0 : std::acosh(std::abs(e) / 2.0); }

dos_estimate clean_chain_dos(double bin_width) {
    return dos_estimate::from_integrated(energy_grid(-2.0, 2.0, bin_width), oracle::free_chain_ids);
}

} // namespace

TEST_CASE("transfer matrices on the clean chain") {
    const model_params clean{2, 0.0};
    CHECK(clean_chain_gamma(2.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const auto outside = lyapunov_transfer(clean, 2.5, 10000, 1);
    CHECK(std::abs(outside.gamma - std::log(2.0)) <= 1e-6);
    const auto inside = lyapunov_transfer(clean, 1.0, 10000, 1);
    CHECK(std::abs(inside.gamma) <= 1e-4);
}

TEST_CASE("log-norm accumulation does not depend on the renormalization interval") {
    const model_params p{2, 1.0};
    const double ref = lyapunov_transfer(p, 0.3, 100000, 5, {.renormalize_every = 32}).gamma;
    for (std::size_t k : {8u, 128u}) {
        const double g = lyapunov_transfer(p, 0.3, 100000, 5, {.renormalize_every = k}).gamma;
        CHECK(std::abs(g - ref) <= 1e-9 * ref);
    }
}

TEST_CASE("transfer estimate rejects short runs and renormalization that underflows") {
    CHECK_THROWS_AS(lyapunov_transfer({2, 1.0}, 0.0, 100, 1), invalid_argument);
    // |E| = 1e3 grows by ~1e3 per step; 200 steps between renormalizations overflows.
    CHECK_THROWS_AS(lyapunov_transfer({2, 1.0}, 1e3, 10000, 1, {.renormalize_every = 200}),
                    degenerate_direction);
}

TEST_CASE("transfer rate matches the decay of disordered eigenvectors near E = 0.5") {
    const model_params p{600, 1.0};
    const double gamma = lyapunov_transfer(p, 0.5, 1000000, 3).gamma;

    // Average log envelope of eigenvectors with energy near 0.5, versus distance.
    const std::size_t max_n = 150, min_n = 20;
    std::vector<double> log_env(max_n + 1, 0.0);
    std::size_t samples = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto d = diagonalize(sample_disorder(p, 1000 + seed), {.method = eigen_method::inverse_iteration});
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (std::abs(d.energy(k) - 0.5) > 0.1) continue;
            const auto c = localization_center(d.vector(k));
            if (c < 200 || c > 400) continue;
            const auto v = d.vector(k);
            for (std::size_t n = min_n; n <= max_n; ++n) {
                const double right = v[c + n] * v[c + n] + v[c + n + 1] * v[c + n + 1];
                const double left = v[c - n] * v[c - n] + v[c - n - 1] * v[c - n - 1];
                log_env[n] += 0.25 * (std::log(right) + std::log(left));
            }
            ++samples;
        }
    }
    REQUIRE(samples > 50);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    for (std::size_t n = min_n; n <= max_n; ++n) {
        const double x = static_cast<double>(n), y = log_env[n] / static_cast<double>(samples);
        sx += x; sy += y; sxx += x * x; sxy += x * y; m += 1;
    }
    const double fitted = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(std::abs(fitted - gamma) <= 0.1 * gamma);
}

TEST_CASE("density of states") {
    SUBCASE("single decomposition is normalized") {
        const auto d = diagonalize(sample_disorder({100, 1.0}, 2));
        const auto dos = estimate_dos(std::span(&d, 1), 1.0);
        CHECK(dos.cumulative.back() == 1.0);
        double mass = 0.0;
        for (std::size_t b = 0; b < dos.bins(); ++b) mass += dos.mass(b);
        CHECK(std::abs(mass - 1.0) <= 1e-9);
        CHECK(dos.sample_count == 100);
        CHECK(dos.sup_density == *std::max_element(dos.density.begin(), dos.density.end()));
        CHECK(dos.bin_edges.front() == -3.0);
        CHECK(dos.bin_edges.back() >= 3.0);
    }
    SUBCASE("clean chain follows 1 / (pi sqrt(4 - E^2))") {
        const std::vector<std::vector<double>> spectra = {oracle::free_chain_spectrum(2000)};
        const auto dos = estimate_dos(spectra, 0.0);
        double measured = 0.0, exact = 0.0;
        int bins = 0;
        for (std::size_t b = 0; b < dos.bins(); ++b) {
            const double mid = 0.5 * (dos.bin_edges[b] + dos.bin_edges[b + 1]);
            if (std::abs(mid) > 0.2) continue;
            measured += dos.density[b];
            exact += 1.0 / (std::numbers::pi * std::sqrt(4.0 - mid * mid));
            ++bins;
        }
        CHECK(1.0 / (std::numbers::pi * 2.0) == doctest::Approx(0.159).epsilon(0.01));
        CHECK(std::abs(measured - exact) <= 0.1 * exact);
        // piles up toward the band edges
        CHECK(dos.density_at(1.95) > 2.0 * dos.density_at(0.0));
        CHECK(dos.density_at(2.5) == 0.0);
    }
    SUBCASE("nothing outside the spectral bound") {
        const auto d = diagonalize(sample_disorder({200, 1.0}, 3));
        const auto dos = estimate_dos(std::span(&d, 1), 1.0, 0.03);
        CHECK(dos.density_at(3.5) == 0.0);
        CHECK(dos.density_at(-3.01) == 0.0);
        CHECK(dos.cumulative_at(-3.5) == 0.0);
        CHECK(dos.cumulative_at(3.5) == 1.0);
    }
    SUBCASE("empty input") {
        std::vector<std::vector<double>> none;
        CHECK_THROWS_AS(estimate_dos(none, 1.0), empty_ensemble);
        const std::vector<std::vector<double>> one = {{0.0}};
        CHECK_THROWS_AS(estimate_dos(one, 1.0, 0.0), invalid_argument);
    }
}

TEST_CASE("Thouless formula on the exact clean-chain DOS") {
    const auto dos = clean_chain_dos(0.001);
    CHECK(std::abs(lyapunov_thouless(dos, 2.5) - std::log(2.0)) <= 0.01);
    CHECK(std::abs(lyapunov_thouless(dos, 0.0)) <= 0.02);
    // the singular bin is integrated exactly, so a grid point on an edge is fine
    CHECK(std::isfinite(lyapunov_thouless(dos, 0.5)));
}

TEST_CASE("Thouless and transfer agree for moderate disorder") {
    const model_params p{300, 1.0};
    std::vector<std::vector<double>> spectra;
    for (std::uint64_t seed = 0; seed < 300; ++seed) spectra.push_back(eigenvalues(sample_disorder(p, seed)));
    const auto dos = estimate_dos(spectra, 1.0);
    const auto grid = energy_grid(-1.5, 1.5, 0.5);
    const auto transfer = transfer_curve(p, grid, 300000, 7);
    const auto thouless = thouless_curve(dos, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, std::abs(transfer.gamma[i] - thouless.gamma[i]));
    CHECK(worst <= 0.1 * transfer.gamma_max);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(transfer.gamma[i] >= -2.0 * transfer.std_error[i]);
}

TEST_CASE("gamma extrema") {
    SUBCASE("constant curve") {
        lyapunov_curve c{{-1, 0, 1}, {0.3, 0.3, 0.3}, {0, 0, 0}, 0.3, 0.3, lyapunov_method::transfer};
        const auto [lo, hi] = gamma_extrema(c);
        CHECK(lo == 0.3);
        CHECK(hi == 0.3);
    }
    SUBCASE("clean chain inside the band") {
        const auto c = transfer_curve({2, 0.0}, energy_grid(-1.5, 1.5, 0.25), 10000, 1);
        const auto [lo, hi] = gamma_extrema(c);
        CHECK(lo == doctest::Approx(0.0).epsilon(1e-4).scale(1));
        CHECK(hi <= 1e-4);
    }
    SUBCASE("edge exclusion uses the integrated DOS") {
        const auto dos = clean_chain_dos(0.01);
        lyapunov_curve c{{-1.9999, 0.0, 1.9999}, {5.0, 0.1, 7.0}, {0, 0, 0}, 0.1, 7.0,
                         lyapunov_method::thouless};
        const auto [lo, hi] = gamma_extrema(c, &dos);
        CHECK(lo == 0.1);
        CHECK(hi == 0.1);
    }
    SUBCASE("disordered chain has a positive minimum") {
        const model_params p{2, 1.0};
        const auto c = transfer_curve(p, energy_grid(-2.5, 2.5, 0.5), 200000, 9);
        const auto [lo, hi] = gamma_extrema(c);
        std::size_t arg = 0;
        for (std::size_t i = 0; i < c.gamma.size(); ++i)
            if (c.gamma[i] == lo) arg = i;
        CHECK(lo - 1.645 * c.std_error[arg] > 0.0);
        CHECK(hi > lo);
    }
}

TEST_CASE("curve interpolation and slope") {
    lyapunov_curve c{{0, 1, 2}, {0.1, 0.3, 0.2}, {0, 0, 0}, 0.1, 0.3, lyapunov_method::transfer};
    CHECK(c.at(0.5) == doctest::Approx(0.2));
    CHECK(c.at(-1.0) == 0.1);
    CHECK(c.at(5.0) == 0.2);
    const auto s = c.slope();
    CHECK(s[0] == doctest::Approx(0.2));
    CHECK(s[1] == doctest::Approx(0.05));
}
