#include "anderson/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "anderson/error.hpp"

namespace anderson {

void model_params::validate() const {
    if (box_size < 2)
        throw invalid_argument("box size must be at least 2, got " + std::to_string(box_size));
    if (!(disorder >= 0.0) || !std::isfinite(disorder))
        throw invalid_argument("disorder half-width must be finite and non-negative");
}

disorder_realization sample_disorder(const model_params& params, std::uint64_t seed) {
    params.validate();
    // mt19937_64 output is fixed by the standard, and the float mapping is
    // ours, so the stream is identical on every platform.
    std::mt19937_64 engine(seed);
    disorder_realization r{params, seed, std::vector<double>(params.box_size)};
    for (auto& e : r.epsilon)
        e = params.disorder * (2.0 * unit_interval(engine()) - 1.0);
    return r;
}

disorder_realization make_realization(const model_params& params, std::vector<double> epsilon,
                                      std::uint64_t seed) {
    params.validate();
    if (epsilon.size() != params.box_size)
        throw invalid_argument("potential length does not match the box size");
    for (double e : epsilon)
        if (!(std::abs(e) <= params.disorder))
            throw invalid_argument("on-site potential outside [-disorder, disorder]");
    return {params, seed, std::move(epsilon)};
}

void tridiagonal_hamiltonian::apply(std::span<const double> psi, std::span<double> out) const {
    const std::size_t n = diag_.size();
    if (psi.size() != n || out.size() != n)
        throw invalid_argument("vector length does not match the Hamiltonian");
    for (std::size_t x = 0; x < n; ++x) {
        double v = diag_[x] * psi[x];
        if (x > 0) v += psi[x - 1];
        if (x + 1 < n) v += psi[x + 1];
        out[x] = v;
    }
}

std::vector<double> tridiagonal_hamiltonian::apply(std::span<const double> psi) const {
    std::vector<double> out(diag_.size());
    apply(psi, out);
    return out;
}

double tridiagonal_hamiltonian::norm_inf() const noexcept {
    const std::size_t n = diag_.size();
    double best = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        double row = std::abs(diag_[x]) + (x > 0 ? 1.0 : 0.0) + (x + 1 < n ? 1.0 : 0.0);
        best = std::max(best, row);
    }
    return best;
}

} // namespace anderson
