#include "anderson/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "anderson/error.hpp"

namespace anderson::tridiag {

namespace {

constexpr double machine_eps = std::numeric_limits<double>::epsilon();

void check_shapes(std::span<const double> diag, std::span<const double> offdiag) {
    if (diag.empty())
        throw invalid_argument("empty tridiagonal matrix");
    if (offdiag.size() + 1 != diag.size())
        throw invalid_argument("off-diagonal must have n-1 entries");
}

// QL iteration in place on (d, e) where e[i] couples i and i+1 and e[n-1] = 0.
// When `z` is non-null, the rotations are applied to its rows.
void ql_implicit(std::vector<double>& d, std::vector<double>& e, double* z, int sweep_budget) {
    const std::size_t n = d.size();
    for (std::size_t l = 0; l < n; ++l) {
        int sweeps = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= machine_eps * dd) break;
            }
            if (m == l) break;
            if (sweeps++ == sweep_budget) throw convergence_failure(l);

            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            bool underflow = false;
            for (std::size_t i = m; i-- > l;) {
                const double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if (z) {
                    double* zi = z + i * n;
                    double* zj = zi + n;
                    for (std::size_t k = 0; k < n; ++k) {
                        const double t = zj[k];
                        zj[k] = s * zi[k] + c * t;
                        zi[k] = c * zi[k] - s * t;
                    }
                }
            }
            if (underflow) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (m != l);
    }
}

// Tridiagonal LU with partial pivoting (the dgttrf layout).
struct pivoted_lu {
    std::vector<double> dl, d, du, du2;
    std::vector<unsigned char> swapped;

    pivoted_lu(std::span<const double> diag, std::span<const double> off, double shift, double tiny)
        : dl(off.begin(), off.end()), d(diag.size()), du(off.begin(), off.end()),
          du2(diag.size() > 2 ? diag.size() - 2 : 0, 0.0), swapped(diag.size(), 0) {
        const std::size_t n = diag.size();
        for (std::size_t i = 0; i < n; ++i) d[i] = diag[i] - shift;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(d[i]) >= std::abs(dl[i])) {
                if (d[i] == 0.0) d[i] = tiny;
                const double fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                const double fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                const double t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - fact * d[i + 1];
                if (i + 2 < n) {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = 1;
            }
        }
        for (auto& p : d)
            if (std::abs(p) < tiny) p = std::copysign(tiny, p);
    }

    void solve(std::vector<double>& b) const {
        const std::size_t n = d.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!swapped[i]) {
                b[i + 1] -= dl[i] * b[i];
            } else {
                const double t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - dl[i] * b[i];
            }
        }
        b[n - 1] /= d[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for (std::size_t i = n > 2 ? n - 2 : 0; i-- > 0;)
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
};

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void normalize(std::vector<double>& v) {
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return;
    for (auto& x : v) x /= scale;
    const double norm = std::sqrt(dot(v.data(), v.data(), v.size()));
    for (auto& x : v) x /= norm;
}

} // namespace

std::vector<double> ql_eigenvalues(std::span<const double> diag, std::span<const double> offdiag,
                                   int sweep_budget) {
    check_shapes(diag, offdiag);
    std::vector<double> d(diag.begin(), diag.end());
    std::vector<double> e(offdiag.begin(), offdiag.end());
    e.push_back(0.0);
    ql_implicit(d, e, nullptr, sweep_budget);
    std::sort(d.begin(), d.end());
    return d;
}

void ql_eigensystem(std::span<const double> diag, std::span<const double> offdiag,
                    std::vector<double>& values, std::vector<double>& vectors, int sweep_budget) {
    check_shapes(diag, offdiag);
    const std::size_t n = diag.size();
    std::vector<double> d(diag.begin(), diag.end());
    std::vector<double> e(offdiag.begin(), offdiag.end());
    e.push_back(0.0);
    std::vector<double> z(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
    ql_implicit(d, e, z.data(), sweep_budget);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });
    values.resize(n);
    vectors.resize(n * n);
    for (std::size_t k = 0; k < n; ++k) {
        values[k] = d[order[k]];
        std::copy_n(z.begin() + static_cast<std::ptrdiff_t>(order[k] * n), n,
                    vectors.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
}

std::vector<double> inverse_iteration(std::span<const double> diag, std::span<const double> offdiag,
                                      std::span<const double> values) {
    check_shapes(diag, offdiag);
    const std::size_t n = diag.size();
    if (values.size() != n)
        throw invalid_argument("need one eigenvalue per row");

    double tnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = std::abs(diag[i]);
        if (i > 0) row += std::abs(offdiag[i - 1]);
        if (i + 1 < n) row += std::abs(offdiag[i]);
        tnorm = std::max(tnorm, row);
    }
    if (tnorm == 0.0) tnorm = 1.0;
    const double ortho_tol = 1e-3 * tnorm;
    const double tiny = machine_eps * tnorm;

    std::vector<double> vectors(n * n);
    std::vector<double> b(n);
    std::size_t cluster_start = 0;
    double shift_prev = 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        double shift = values[k];
        if (k > 0) {
            if (values[k] - values[k - 1] > ortho_tol) {
                cluster_start = k;
            } else {
                // Separate coincident shifts so the factorizations differ.
                const double pert = 10.0 * machine_eps * std::max(std::abs(shift), 1.0);
                shift = std::max(shift, shift_prev + pert);
            }
        }
        shift_prev = shift;

        pivoted_lu lu(diag, offdiag, shift, tiny);
        std::mt19937_64 start(0x9e3779b97f4a7c15ULL ^ k);
        for (auto& x : b) x = 2.0 * (static_cast<double>(start() >> 11) * 0x1.0p-53) - 1.0;

        for (int iter = 0; iter < 3; ++iter) {
            normalize(b);
            lu.solve(b);
            // Two Gram-Schmidt passes keep the cluster orthogonal to working precision.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t q = cluster_start; q < k; ++q) {
                    const double* vq = vectors.data() + q * n;
                    const double proj = dot(vq, b.data(), n);
                    for (std::size_t x = 0; x < n; ++x) b[x] -= proj * vq[x];
                }
            }
        }
        normalize(b);
        std::copy(b.begin(), b.end(), vectors.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
    return vectors;
}

} // namespace anderson::tridiag
