#pragma once

#include <span>
#include <vector>

// Dense eigensolvers for real symmetric tridiagonal matrices.
//
// `diag` has n entries, `offdiag` has n-1 entries (offdiag[i] couples i and
// i+1). Eigenvector k is stored contiguously at vectors[k*n, (k+1)*n).

namespace anderson::tridiag {

inline constexpr int default_sweep_budget = 50;

// Implicit-shift QL, eigenvalues only, ascending. O(n^2).
std::vector<double> ql_eigenvalues(std::span<const double> diag, std::span<const double> offdiag,
                                   int sweep_budget = default_sweep_budget);

// Implicit-shift QL with eigenvector accumulation, ascending. O(n^3).
void ql_eigensystem(std::span<const double> diag, std::span<const double> offdiag,
                    std::vector<double>& values, std::vector<double>& vectors,
                    int sweep_budget = default_sweep_budget);

// Eigenvectors for given ascending eigenvalues by inverse iteration on a
// pivoted LU factorization, with Gram-Schmidt inside clusters of close
// eigenvalues. O(n^2) overall for well separated spectra.
std::vector<double> inverse_iteration(std::span<const double> diag, std::span<const double> offdiag,
                                      std::span<const double> values);

} // namespace anderson::tridiag
