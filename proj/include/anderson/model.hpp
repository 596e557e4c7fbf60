#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace anderson {

enum class boundary_condition { open };

struct model_params {
    std::size_t box_size = 2;
    double disorder = 1.0; // potential uniform on [-disorder, disorder]
    boundary_condition boundary = boundary_condition::open;

    // |box| >= 2 and disorder >= 0; disorder == 0 is the clean chain.
    void validate() const;
};

// One draw of the on-site potential. Regenerating from (params, seed)
// reproduces `epsilon` bit for bit.
struct disorder_realization {
    model_params params;
    std::uint64_t seed = 0;
    std::vector<double> epsilon;

    std::size_t size() const noexcept { return epsilon.size(); }
};

// Maps a raw 64-bit draw onto [0, 1) using the top 53 bits.
inline double unit_interval(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

disorder_realization sample_disorder(const model_params& params, std::uint64_t seed);

// Realization with a caller supplied potential (checks |eps| <= disorder).
disorder_realization make_realization(const model_params& params, std::vector<double> epsilon,
                                      std::uint64_t seed = 0);

// Nearest-neighbour hopping 1 and on-site potential epsilon, open ends.
class tridiagonal_hamiltonian {
public:
    explicit tridiagonal_hamiltonian(const disorder_realization& r) : diag_(r.epsilon) {}
    explicit tridiagonal_hamiltonian(std::vector<double> diag) : diag_(std::move(diag)) {}

    std::size_t size() const noexcept { return diag_.size(); }
    std::span<const double> diagonal() const noexcept { return diag_; }
    static constexpr double hopping = 1.0;

    // (H psi)(x) = psi(x-1) + psi(x+1) + eps_x psi(x), psi = 0 outside the box.
    void apply(std::span<const double> psi, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> psi) const;

    // Maximum absolute row sum.
    double norm_inf() const noexcept;

private:
    std::vector<double> diag_;
};

inline tridiagonal_hamiltonian build_hamiltonian(const disorder_realization& r) {
    return tridiagonal_hamiltonian(r);
}

} // namespace anderson
