#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "anderson/model.hpp"
#include "anderson/spectrum.hpp"

namespace anderson {

// Histogram density of states on [-2 - disorder, 2 + disorder].
struct dos_estimate {
    std::vector<double> bin_edges;  // nb + 1 edges, ascending
    std::vector<double> density;    // per bin
    std::vector<double> cumulative; // integrated DOS at each bin's upper edge
    double sup_density = 0.0;
    std::size_t sample_count = 0;

    std::size_t bins() const noexcept { return density.size(); }
    double bin_width(std::size_t b) const { return bin_edges[b + 1] - bin_edges[b]; }
    double mass(std::size_t b) const { return density[b] * bin_width(b); }
    // Zero outside the binned range.
    double density_at(double e) const;
    // Integrated DOS, linear inside a bin.
    double cumulative_at(double e) const;

    // Bins filled from an analytic integrated DOS.
    static dos_estimate from_integrated(std::vector<double> edges,
                                        const std::function<double(double)>& integrated);
};

struct lyapunov_estimate {
    double gamma = 0.0;
    double std_error = 0.0;
};

struct transfer_options {
    std::size_t renormalize_every = 32;
    std::size_t batches = 100;
    // Steps discarded before accumulation so the vector aligns with the
    // growing direction.
    std::size_t burn_in = 1000;
};

// gamma(E) = lim (1/n) ln ||T_n ... T_1 v|| with T_x = [[E - eps_x, -1], [1, 0]]
// and eps_x drawn fresh from `seed`. standard error from batch means.
lyapunov_estimate lyapunov_transfer(const model_params& params, double energy, std::size_t steps,
                                    std::uint64_t seed, const transfer_options& opts = {});

// Normalized eigenvalue histogram; bins of `bin_width` starting at -2 - disorder.
dos_estimate estimate_dos(std::span<const std::vector<double>> spectra, double disorder,
                          double bin_width = 0.02);
dos_estimate estimate_dos(std::span<const spectral_decomposition> ensemble, double disorder,
                          double bin_width = 0.02);

// Thouless formula on a histogram DOS: sum over bins of the exact integral of
// ln|E - x| against the bin's constant density, clamped at zero.
double lyapunov_thouless(const dos_estimate& dos, double energy);

enum class lyapunov_method { transfer, thouless };

struct lyapunov_curve {
    std::vector<double> energies;
    std::vector<double> gamma;
    std::vector<double> std_error;
    double gamma_min = 0.0;
    double gamma_max = 0.0;
    lyapunov_method method = lyapunov_method::transfer;

    // Linear interpolation, clamped to the end values outside the grid.
    double at(double energy) const;
    // Centered finite-difference d gamma / dE on the grid (diagnostic only).
    std::vector<double> slope() const;
};

lyapunov_curve transfer_curve(const model_params& params, std::span<const double> grid,
                              std::size_t steps, std::uint64_t seed,
                              const transfer_options& opts = {});
lyapunov_curve thouless_curve(const dos_estimate& dos, std::span<const double> grid);

// Extremes of gamma over grid energies whose integrated DOS lies in
// [lower_mass, upper_mass]; without a DOS, over the whole grid.
std::pair<double, double> gamma_extrema(const lyapunov_curve& curve, const dos_estimate* dos = nullptr,
                                        double lower_mass = 0.01, double upper_mass = 0.99);

std::vector<double> energy_grid(double lo, double hi, double step);

} // namespace anderson
