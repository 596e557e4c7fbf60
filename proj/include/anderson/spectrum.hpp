#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "anderson/model.hpp"

namespace anderson {

enum class eigen_method {
    ql_accumulate,     // implicit QL with explicit eigenvector accumulation, O(n^3)
    inverse_iteration, // QL eigenvalues, then inverse iteration per eigenvalue, O(n^2)
    automatic,         // accumulation for small boxes, inverse iteration above
};

struct solver_options {
    // Residual tolerance; 0 selects 1e-10 * ||H||_inf.
    double tol = 0.0;
    eigen_method method = eigen_method::ql_accumulate;
    int sweep_budget = 50;
    // Box size at which `automatic` switches to inverse iteration.
    std::size_t automatic_threshold = 256;
};

inline constexpr long no_state = -1;

// All eigenpairs of a finite-box Hamiltonian, energies ascending, with the
// one-to-one assignment of states to localization-center sites.
class spectral_decomposition {
public:
    spectral_decomposition() = default;

    // Assembles a decomposition from given eigenpairs and assigns centers by
    // greedy matching. Vectors are row-major, one per energy.
    static spectral_decomposition from_eigenpairs(std::vector<double> energies,
                                                  std::vector<double> vectors, double residual_tol);

    std::size_t size() const noexcept { return energies_.size(); }
    std::span<const double> energies() const noexcept { return energies_; }
    double energy(std::size_t k) const { return energies_.at(k); }
    std::span<const double> vector(std::size_t k) const {
        return std::span<const double>(vectors_).subspan(k * size(), size());
    }
    double amplitude(std::size_t k, std::size_t x) const { return vectors_[k * size() + x]; }

    // Spectral index of the state localized at `site`, or no_state.
    long state_at(long site) const noexcept;
    // Assigned localization center of state k.
    std::size_t center_of_state(std::size_t k) const { return state_to_site_.at(k); }
    std::span<const long> center_map() const noexcept { return site_to_state_; }

    double residual_tol() const noexcept { return residual_tol_; }
    double max_residual() const noexcept { return max_residual_; }
    // Number of states whose assigned center differs from their raw argmax.
    std::size_t reassigned_centers() const noexcept { return reassigned_; }

    // Potential the decomposition was computed for (empty for synthetic input).
    std::span<const double> potential() const noexcept { return potential_; }

private:
    friend spectral_decomposition diagonalize(const disorder_realization&, const solver_options&);
    void assign_centers();

    std::vector<double> energies_;
    std::vector<double> vectors_;
    std::vector<double> potential_;
    std::vector<std::size_t> state_to_site_;
    std::vector<long> site_to_state_;
    double residual_tol_ = 0.0;
    double max_residual_ = 0.0;
    std::size_t reassigned_ = 0;
};

spectral_decomposition diagonalize(const disorder_realization& r, const solver_options& opts = {});

// Eigenvalues only, ascending.
std::vector<double> eigenvalues(const disorder_realization& r, int sweep_budget = 50);

// argmax_x |psi(x)|^2, ties to the smallest site.
std::size_t localization_center(std::span<const double> psi);

// Greedy matching of states to sites on weights |psi_k(x)|^2, processed in
// the order (weight desc, state asc, site asc). `vectors` holds `count`
// rows of length `sites`; returns the site of every state.
std::vector<std::size_t> index_by_center(std::span<const double> vectors, std::size_t sites);

// Follows the state labelled by `site` from one decomposition to the next:
// keeps the state now localized at `site` if it still overlaps the previous
// vector by at least 1/sqrt(2), otherwise takes the state of maximal overlap.
std::size_t track_state(const spectral_decomposition& next, std::size_t site,
                        std::span<const double> previous_vector);

} // namespace anderson
