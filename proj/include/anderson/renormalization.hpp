#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "anderson/estimates.hpp"
#include "anderson/spectrum.hpp"

namespace anderson {

// Combination whose level at `center` is shifted by beta * V, V = sum psi^4.
struct renorm_spec {
    combination_spec base;
    double beta = 0.0;
    long center = 0;

    void validate() const;
    // Coefficient attached to `center` in the base spec, 0 if absent.
    int center_coefficient() const noexcept;
};

// Levels closer than this are treated as degenerate in the perturbative sums.
inline constexpr double degeneracy_cutoff = 1e-12;

// Sum over sites of psi^4 for the state localized at `center`.
double overlap_v0(const spectral_decomposition& d, long center);

double eval_renormalized(const renorm_spec& spec, const spectral_decomposition& d);

// d psi_n(i) / d eps_j for every site i, first order.
std::vector<double> perturbative_vec_derivative(const spectral_decomposition& d, std::size_t n, std::size_t j);

// d V / d eps_j for every site j, at the state localized at `center`.
std::vector<double> v_gradient(const spectral_decomposition& d, long center);
double v_derivative(const spectral_decomposition& d, long center, std::size_t j);
// (d/d eps_j + d/d eps_{j+1}) V / sqrt 2.
double v_derivative_paired(const spectral_decomposition& d, long center, std::size_t j);

// Same sum convention as paired_gradient: d f'/d eps_j + d f'/d eps_{j+1}.
double renormalized_paired_gradient(const renorm_spec& spec, const spectral_decomposition& d, std::size_t j);

// Largest beta that keeps the correction subordinate:
// scale * exp(-2 (gamma_max - gamma_min) |x_delta|).
double beta_threshold(double gamma_min, double gamma_max, long x_delta, double scale = 1.0);

// Mean of |x|^s after dropping the ceil(delta M) largest values.
double trimmed_power_mean(std::span<const double> values, double s, double delta);

} // namespace anderson
