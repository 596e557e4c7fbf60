#include "anderson/renormalization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "anderson/error.hpp"

namespace anderson {

void renorm_spec::validate() const {
    base.validate();
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw invalid_argument("beta must be finite and non-negative");
    if (center < 0) throw invalid_argument("renormalized center must be a site");
}

int renorm_spec::center_coefficient() const noexcept {
    for (const auto& t : base.terms)
        if (t.site == center) return t.coefficient;
    return 0;
}

namespace {

std::size_t state_of(const spectral_decomposition& d, long center) {
    const long k = d.state_at(center);
    if (k == no_state) throw missing_center(center);
    return static_cast<std::size_t>(k);
}

} // namespace

double overlap_v0(const spectral_decomposition& d, long center) {
    const auto psi = d.vector(state_of(d, center));
    double v = 0.0;
    for (double a : psi) v += a * a * a * a;
    return v;
}

double eval_renormalized(const renorm_spec& spec, const spectral_decomposition& d) {
    spec.validate();
    const double f = eval_combination(spec.base, d);
    const int c0 = spec.center_coefficient();
    if (c0 == 0 || spec.beta == 0.0) return f;
    return f + spec.beta * c0 * overlap_v0(d, spec.center);
}

std::vector<double> perturbative_vec_derivative(const spectral_decomposition& d, std::size_t n, std::size_t j) {
    const std::size_t size = d.size();
    if (n >= size || j >= size) throw invalid_argument("state or site outside the box");
    std::vector<double> out(size, 0.0);
    const double en = d.energy(n);
    for (std::size_t k = 0; k < size; ++k) {
        if (k == n) continue;
        const double gap = en - d.energy(k);
        if (std::abs(gap) < degeneracy_cutoff) throw degenerate_level(n, k);
        const double w = d.amplitude(k, j) / gap;
        const auto psi_k = d.vector(k);
        for (std::size_t i = 0; i < size; ++i) out[i] += w * psi_k[i];
    }
    const double pj = d.amplitude(n, j);
    for (double& x : out) x *= pj;
    return out;
}

std::vector<double> v_gradient(const spectral_decomposition& d, long center) {
    // dV/d eps_j = 4 psi_0(j) sum_k psi_k(j) <psi_0^3, psi_k> / (E_0 - E_k)
    const std::size_t n = state_of(d, center);
    const std::size_t size = d.size();
    const auto psi0 = d.vector(n);
    std::vector<double> cube(size);
    for (std::size_t i = 0; i < size; ++i) cube[i] = psi0[i] * psi0[i] * psi0[i];

    std::vector<double> weight(size, 0.0);
    for (std::size_t k = 0; k < size; ++k) {
        if (k == n) continue;
        const double gap = d.energy(n) - d.energy(k);
        if (std::abs(gap) < degeneracy_cutoff) throw degenerate_level(n, k);
        const auto psi_k = d.vector(k);
        double overlap = 0.0;
        for (std::size_t i = 0; i < size; ++i) overlap += cube[i] * psi_k[i];
        weight[k] = overlap / gap;
    }

    std::vector<double> grad(size, 0.0);
    for (std::size_t k = 0; k < size; ++k) {
        if (weight[k] == 0.0) continue;
        const auto psi_k = d.vector(k);
        for (std::size_t j = 0; j < size; ++j) grad[j] += weight[k] * psi_k[j];
    }
    for (std::size_t j = 0; j < size; ++j) grad[j] *= 4.0 * psi0[j];
    return grad;
}

double v_derivative(const spectral_decomposition& d, long center, std::size_t j) {
    if (j >= d.size()) throw invalid_argument("site outside the box");
    return v_gradient(d, center)[j];
}

double v_derivative_paired(const spectral_decomposition& d, long center, std::size_t j) {
    if (j + 1 >= d.size()) throw invalid_argument("paired site j + 1 outside the box");
    const auto g = v_gradient(d, center);
    return (g[j] + g[j + 1]) / std::numbers::sqrt2;
}

double renormalized_paired_gradient(const renorm_spec& spec, const spectral_decomposition& d, std::size_t j) {
    spec.validate();
    const double base = paired_gradient(spec.base, d, j);
    const int c0 = spec.center_coefficient();
    if (c0 == 0 || spec.beta == 0.0) return base;
    const auto g = v_gradient(d, spec.center);
    return base + spec.beta * c0 * (g[j] + g[j + 1]);
}

double beta_threshold(double gamma_min, double gamma_max, long x_delta, double scale) {
    if (!(gamma_min > 0.0) || gamma_max < gamma_min) throw invalid_argument("need gamma_max >= gamma_min > 0");
    return scale * std::exp(-2.0 * (gamma_max - gamma_min) * static_cast<double>(std::labs(x_delta)));
}

double trimmed_power_mean(std::span<const double> values, double s, double delta) {
    if (values.empty()) throw empty_ensemble();
    if (!(s > 0.0) || !(delta >= 0.0 && delta < 1.0)) throw invalid_argument("need s > 0 and 0 <= delta < 1");
    std::vector<double> p(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) p[i] = std::pow(std::abs(values[i]), s);
    std::sort(p.begin(), p.end());
    const std::size_t keep = p.size() - std::min(trim_count(delta, p.size()), p.size() - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < keep; ++i) sum += p[i];
    return sum / static_cast<double>(keep);
}

} // namespace anderson
