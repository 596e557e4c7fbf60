#include "anderson/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <tuple>

#include "anderson/error.hpp"
#include "anderson/tridiagonal.hpp"

namespace anderson {

namespace {

// Sites of one state in matching order, materialized lazily.
struct candidate_list {
    std::vector<std::uint32_t> sites;
    bool complete = false;
};

constexpr std::size_t initial_candidates = 4;

void fill_candidates(candidate_list& list, const double* psi, std::size_t n, std::size_t want) {
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    auto better = [psi](std::uint32_t a, std::uint32_t b) {
        const double wa = psi[a] * psi[a], wb = psi[b] * psi[b];
        return wa > wb || (wa == wb && a < b);
    };
    if (want >= n) {
        std::sort(idx.begin(), idx.end(), better);
        list.complete = true;
    } else {
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(want), idx.end(),
                          better);
        idx.resize(want);
    }
    list.sites = std::move(idx);
}

} // namespace

std::size_t localization_center(std::span<const double> psi) {
    if (psi.empty()) throw invalid_argument("empty vector");
    std::size_t best = 0;
    double best_w = psi[0] * psi[0];
    for (std::size_t x = 1; x < psi.size(); ++x) {
        const double w = psi[x] * psi[x];
        if (w > best_w) {
            best_w = w;
            best = x;
        }
    }
    return best;
}

std::vector<std::size_t> index_by_center(std::span<const double> vectors, std::size_t sites) {
    if (sites == 0 || vectors.size() % sites != 0)
        throw invalid_argument("vector block is not a whole number of rows");
    const std::size_t count = vectors.size() / sites;
    if (count > sites) throw invalid_argument("more states than sites");

    std::vector<candidate_list> lists(count);
    std::vector<std::size_t> cursor(count, 0);
    std::vector<char> taken(sites, 0);
    std::vector<std::size_t> assignment(count, 0);

    // (weight, state, site); top of the heap is the next triple in matching order.
    using entry = std::tuple<double, std::size_t, std::size_t>;
    auto later = [](const entry& a, const entry& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
        if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
        return std::get<2>(a) > std::get<2>(b);
    };
    std::priority_queue<entry, std::vector<entry>, decltype(later)> heap(later);

    auto push_next = [&](std::size_t k) {
        const double* psi = vectors.data() + k * sites;
        auto& list = lists[k];
        if (cursor[k] >= list.sites.size()) {
            if (list.complete) throw invalid_argument("state ran out of candidate sites");
            fill_candidates(list, psi, sites, list.sites.empty() ? initial_candidates : sites);
        }
        const std::size_t x = list.sites[cursor[k]];
        heap.emplace(psi[x] * psi[x], k, x);
    };

    for (std::size_t k = 0; k < count; ++k) push_next(k);
    while (!heap.empty()) {
        const auto [w, k, x] = heap.top();
        heap.pop();
        if (!taken[x]) {
            taken[x] = 1;
            assignment[k] = x;
        } else {
            ++cursor[k];
            push_next(k);
        }
    }
    return assignment;
}

long spectral_decomposition::state_at(long site) const noexcept {
    if (site < 0 || static_cast<std::size_t>(site) >= site_to_state_.size()) return no_state;
    return site_to_state_[static_cast<std::size_t>(site)];
}

void spectral_decomposition::assign_centers() {
    const std::size_t n = size();
    state_to_site_ = index_by_center(vectors_, n);
    site_to_state_.assign(n, no_state);
    reassigned_ = 0;
    for (std::size_t k = 0; k < state_to_site_.size(); ++k) {
        site_to_state_[state_to_site_[k]] = static_cast<long>(k);
        if (state_to_site_[k] != localization_center(vector(k))) ++reassigned_;
    }
}

spectral_decomposition spectral_decomposition::from_eigenpairs(std::vector<double> energies,
                                                               std::vector<double> vectors,
                                                               double residual_tol) {
    if (energies.empty() || vectors.size() != energies.size() * energies.size())
        throw invalid_argument("eigenpair block must be n energies and n vectors of length n");
    spectral_decomposition d;
    d.energies_ = std::move(energies);
    d.vectors_ = std::move(vectors);
    d.residual_tol_ = residual_tol;
    d.assign_centers();
    return d;
}

std::vector<double> eigenvalues(const disorder_realization& r, int sweep_budget) {
    const std::vector<double> off(r.size() - 1, tridiagonal_hamiltonian::hopping);
    return tridiag::ql_eigenvalues(r.epsilon, off, sweep_budget);
}

spectral_decomposition diagonalize(const disorder_realization& r, const solver_options& opts) {
    const std::size_t n = r.size();
    if (n == 0) throw invalid_argument("empty realization");
    if (opts.tol < 0.0) throw invalid_argument("tolerance must be positive");

    const tridiagonal_hamiltonian h(r);
    const double tol = opts.tol > 0.0 ? opts.tol : 1e-10 * h.norm_inf();
    const std::vector<double> off(n - 1, tridiagonal_hamiltonian::hopping);

    spectral_decomposition d;
    eigen_method method = opts.method;
    if (method == eigen_method::automatic)
        method = n < opts.automatic_threshold ? eigen_method::ql_accumulate
                                              : eigen_method::inverse_iteration;
    if (method == eigen_method::ql_accumulate) {
        tridiag::ql_eigensystem(r.epsilon, off, d.energies_, d.vectors_, opts.sweep_budget);
    } else {
        d.energies_ = tridiag::ql_eigenvalues(r.epsilon, off, opts.sweep_budget);
        d.vectors_ = tridiag::inverse_iteration(r.epsilon, off, d.energies_);
    }

    // Sign convention: positive entry at the raw localization center.
    std::vector<double> hpsi(n);
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::span<double> psi(d.vectors_.data() + k * n, n);
        if (psi[localization_center(psi)] < 0.0)
            for (auto& v : psi) v = -v;
        h.apply(psi, hpsi);
        double res = 0.0;
        for (std::size_t x = 0; x < n; ++x)
            res = std::max(res, std::abs(hpsi[x] - d.energies_[k] * psi[x]));
        if (!(res <= tol)) throw convergence_failure(k);
        worst = std::max(worst, res);
    }
    d.residual_tol_ = tol;
    d.max_residual_ = worst;
    d.potential_ = r.epsilon;
    d.assign_centers();
    return d;
}

std::size_t track_state(const spectral_decomposition& next, std::size_t site,
                        std::span<const double> previous_vector) {
    const std::size_t n = next.size();
    if (previous_vector.size() != n) throw invalid_argument("tracked vector has the wrong length");
    auto overlap = [&](std::size_t k) {
        const auto v = next.vector(k);
        double s = 0.0;
        for (std::size_t x = 0; x < n; ++x) s += v[x] * previous_vector[x];
        return std::abs(s);
    };
    const long by_center = next.state_at(static_cast<long>(site));
    if (by_center != no_state && overlap(static_cast<std::size_t>(by_center)) >= std::sqrt(0.5))
        return static_cast<std::size_t>(by_center);
    std::size_t best = 0;
    double best_overlap = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double o = overlap(k);
        if (o > best_overlap) {
            best_overlap = o;
            best = k;
        }
    }
    return best;
}

} // namespace anderson
