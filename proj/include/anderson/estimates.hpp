#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "anderson/lyapunov.hpp"
#include "anderson/model.hpp"
#include "anderson/spectrum.hpp"

namespace anderson {

// f = sum_k c_k E_{i_k}, energies labelled by localization center.
struct combination_term {
    int coefficient = 1;
    long site = 0;
};

struct combination_spec {
    std::vector<combination_term> terms;

    // At least one term, nonzero coefficients, distinct non-negative sites.
    void validate() const;
    std::size_t size() const noexcept { return terms.size(); }
    long abs_coefficient_sum() const noexcept;
    long max_site() const;
    long min_site() const;
};

// Spectral index of every term's state; throws missing_center.
std::vector<std::size_t> resolve_states(const combination_spec& spec, const spectral_decomposition& d);

double eval_combination(const combination_spec& spec, const spectral_decomposition& d);

// df/d eps_j = sum_k c_k |psi_{i_k}(j)|^2 for every site j.
std::vector<double> fh_gradient(const combination_spec& spec, const spectral_decomposition& d);

// df/d eps_j + df/d eps_{j+1}.
double paired_gradient(const combination_spec& spec, const spectral_decomposition& d, std::size_t j);

// --- eigenfunction lower bound ---------------------------------------------

struct decay_profile {
    std::size_t center = 0;
    std::vector<std::size_t> distances;
    // (|psi(n)|^2 + |psi(n+1)|^2)^(1/2) at distance n, larger of the two sides.
    std::vector<double> envelope;
    double gamma_ref = 0.0;
    double epsilon = 0.0;
    std::optional<std::size_t> n_star;
};

decay_profile decay_profile_from_amplitudes(std::span<const double> psi, std::size_t center,
                                            double gamma_ref, double epsilon);
// Profile of state k around its assigned center.
decay_profile make_decay_profile(const spectral_decomposition& d, std::size_t k, double gamma_ref,
                                 double epsilon);

// Least n with envelope(m) >= exp(-(gamma_ref + epsilon) m) for every sampled
// m >= n; nullopt when the last sampled distance still violates the bound.
std::optional<std::size_t> estimate_n_star(const decay_profile& profile);

// Sorted centers split wherever consecutive centers are at least
// gamma_min * n_star / eta apart.
std::vector<std::vector<long>> cluster_decomposition(std::span<const long> centers, std::size_t n_star,
                                                     double gamma_min, double eta);
std::vector<std::vector<long>> cluster_by_gap(std::span<const long> centers, double gap);

// --- empirical probabilities ------------------------------------------------

struct floor_options {
    // Fixed C; when empty each realization uses its own reference floor.
    std::optional<double> threshold;
    // gamma(E) used for the reference floor C_j = exp(-2 (gamma~ + eps) j).
    const lyapunov_curve* curve = nullptr;
    double epsilon = 0.1;
};

struct gradient_floor_point {
    long offset = 0;
    std::size_t hits = 0;
    std::size_t trials = 0;
    double probability = 0.0;
    double mean_reference_floor = 0.0; // NaN without a curve
};

// For each offset beyond the largest center, the fraction of realizations
// with |paired_gradient| <= C.
std::vector<gradient_floor_point> gradient_floor_probability(const combination_spec& spec,
                                                             std::span<const spectral_decomposition> ensemble,
                                                             std::span<const long> offsets,
                                                             const floor_options& opts);

struct level_stat_point {
    double length = 0.0;
    std::size_t windows = 0; // windows per spectrum
    std::size_t trials = 0;  // windows x spectra
    std::size_t at_least_one = 0;
    std::size_t at_least_two = 0;
    double p_at_least_one = 0.0;
    double p_at_least_two = 0.0;
    double wegner_reference = 0.0; // pi ||rho|| I L
    double minami_reference = 0.0; // (pi ||rho|| I L)^2
};

// Counts eigenvalues in windows [a, a + I) sliding by I/4 across [lo, hi].
// Spectra must be sorted ascending.
std::vector<level_stat_point> level_statistics(std::span<const std::vector<double>> spectra,
                                               std::span<const double> lengths, std::size_t box_size,
                                               double sup_density, double lo, double hi);

struct probability_point {
    double threshold = 0.0;
    std::size_t hits = 0;
    std::size_t trials = 0;
    double probability = 0.0;
};

// Pr(|gamma(E_i) - gamma(E_k)| <= t) over pairs of the spec's states that
// share a cluster (centers closer than `cluster_gap`).
std::vector<probability_point> gamma_gap_probability(const combination_spec& spec,
                                                     std::span<const spectral_decomposition> ensemble,
                                                     const lyapunov_curve& curve,
                                                     std::span<const double> thresholds,
                                                     double cluster_gap);

// --- sign of the paired gradient under a sweep of eps_j^+ --------------------

struct sign_flip {
    std::size_t cell = 0; // flip between grid[cell] and grid[cell + 1]
    double lower = 0.0;
    double upper = 0.0;
    double min_gap = 0.0; // smallest adjacent-level gap of a tracked state in the refined cell
};

struct sign_scan {
    std::vector<double> grid;     // eps_j^+ values
    std::vector<double> gradient; // paired gradient of the tracked states
    std::vector<double> gaps;     // smallest adjacent-level gap of any tracked state
    std::vector<sign_flip> flips;
};

// Range of eps_j^+ = (eps_j + eps_{j+1}) / sqrt 2 keeping both potentials in
// [-disorder, disorder] at fixed eps_j^-.
std::pair<double, double> admissible_plus_range(const disorder_realization& r, std::size_t j);
std::vector<double> default_scan_grid(const disorder_realization& r, std::size_t j, std::size_t points = 200);

// Realization with eps_j^+ replaced by `plus`, eps_j^- held fixed.
disorder_realization with_plus_coordinate(const disorder_realization& r, std::size_t j, double plus);

sign_scan sign_change_scan(const combination_spec& spec, const disorder_realization& r, std::size_t j,
                           std::span<const double> grid, std::size_t refine = 4,
                           const solver_options& solver = {});

// --- fractional moments -----------------------------------------------------

struct moment_report {
    double s = 0.0;
    double delta = 0.0;
    std::size_t sample_count = 0;
    std::size_t trim_count = 0;
    double trimmed_mean = 0.0;
    double untrimmed_mean = 0.0;
};

// Mean of |f|^-s after dropping the ceil(delta M) largest values.
moment_report fractional_moment(std::span<const double> f_samples, double s, double delta);

// ceil(delta * count), robust to representation error in delta * count.
std::size_t trim_count(double delta, std::size_t count);

// The value left at the bottom after discarding the ceil(delta M) smallest |g|.
double empirical_floor(std::span<const double> values, double delta);

// Q = (2 + disorder) sum |c_k|.
double combination_bound(const combination_spec& spec, double disorder);
// D = Q^(1-s) / (C 2 disorder (1 - s)).
double theorem_bound(double q, double s, double disorder, double c_delta);

} // namespace anderson
