#include "anderson/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "anderson/error.hpp"

namespace anderson {

double dos_estimate::density_at(double e) const {
    if (bins() == 0 || e < bin_edges.front() || e > bin_edges.back()) return 0.0;
    auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), e);
    std::size_t b = static_cast<std::size_t>(std::distance(bin_edges.begin(), it));
    b = std::clamp<std::size_t>(b, 1, bins()) - 1;
    return density[b];
}

double dos_estimate::cumulative_at(double e) const {
    if (bins() == 0 || e <= bin_edges.front()) return 0.0;
    if (e >= bin_edges.back()) return 1.0;
    auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), e);
    const std::size_t b = static_cast<std::size_t>(std::distance(bin_edges.begin(), it)) - 1;
    const double below = b == 0 ? 0.0 : cumulative[b - 1];
    return below + mass(b) * (e - bin_edges[b]) / bin_width(b);
}

dos_estimate dos_estimate::from_integrated(std::vector<double> edges,
                                           const std::function<double(double)>& integrated) {
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
        throw invalid_argument("need at least two ascending bin edges");
    dos_estimate dos;
    dos.bin_edges = std::move(edges);
    const std::size_t nb = dos.bin_edges.size() - 1;
    const double total = integrated(dos.bin_edges.back()) - integrated(dos.bin_edges.front());
    dos.density.resize(nb);
    dos.cumulative.resize(nb);
    double running = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        const double m = (integrated(dos.bin_edges[b + 1]) - integrated(dos.bin_edges[b])) / total;
        dos.density[b] = m / dos.bin_width(b);
        running += m;
        dos.cumulative[b] = running;
    }
    dos.cumulative.back() = 1.0;
    dos.sup_density = *std::max_element(dos.density.begin(), dos.density.end());
    return dos;
}

lyapunov_estimate lyapunov_transfer(const model_params& params, double energy, std::size_t steps,
                                    std::uint64_t seed, const transfer_options& opts) {
    params.validate();
    if (steps < 10000) throw invalid_argument("transfer estimate needs at least 1e4 steps");
    if (opts.renormalize_every == 0 || opts.batches < 2 || opts.batches > steps)
        throw invalid_argument("bad transfer-matrix options");

    std::mt19937_64 engine(seed);
    auto next_eps = [&] { return params.disorder * (2.0 * unit_interval(engine()) - 1.0); };
    const double angle = 2.0 * 3.141592653589793 * unit_interval(engine());
    double cur = std::cos(angle), prev = std::sin(angle);

    auto renormalize = [&]() {
        const double norm = std::hypot(cur, prev);
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw degenerate_direction("transfer vector lost its norm; renormalize more often");
        cur /= norm;
        prev /= norm;
        return std::log(norm);
    };
    auto step = [&]() {
        const double next = (energy - next_eps()) * cur - prev;
        prev = cur;
        cur = next;
    };

    for (std::size_t i = 0; i < opts.burn_in; ++i) {
        step();
        if ((i + 1) % opts.renormalize_every == 0) renormalize();
    }
    renormalize();

    std::vector<double> batch_rate(opts.batches);
    double total = 0.0;
    std::size_t done = 0;
    for (std::size_t b = 0; b < opts.batches; ++b) {
        const std::size_t end = steps * (b + 1) / opts.batches;
        const std::size_t len = end - done;
        double log_growth = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            step();
            if ((i + 1) % opts.renormalize_every == 0) log_growth += renormalize();
        }
        log_growth += renormalize();
        batch_rate[b] = log_growth / static_cast<double>(len);
        total += log_growth;
        done = end;
    }

    const double gamma = total / static_cast<double>(steps);
    double var = 0.0;
    for (double r : batch_rate) var += (r - gamma) * (r - gamma);
    var /= static_cast<double>(opts.batches - 1);
    return {std::max(gamma, 0.0), std::sqrt(var / static_cast<double>(opts.batches))};
}

namespace {

dos_estimate histogram(const std::vector<double>& edges, const std::vector<std::size_t>& counts,
                       std::size_t total) {
    dos_estimate dos;
    dos.bin_edges = edges;
    const std::size_t nb = counts.size();
    dos.density.resize(nb);
    dos.cumulative.resize(nb);
    std::size_t running = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        running += counts[b];
        dos.density[b] = static_cast<double>(counts[b]) / static_cast<double>(total) / dos.bin_width(b);
        dos.cumulative[b] = static_cast<double>(running) / static_cast<double>(total);
    }
    dos.sup_density = *std::max_element(dos.density.begin(), dos.density.end());
    dos.sample_count = total;
    return dos;
}

template <typename Range, typename Get>
dos_estimate build_dos(const Range& ensemble, Get energies_of, double disorder, double bin_width) {
    if (ensemble.empty()) throw empty_ensemble();
    if (!(bin_width > 0.0)) throw invalid_argument("bin width must be positive");
    const double lo = -2.0 - disorder, hi = 2.0 + disorder;
    const double span = (hi - lo) / bin_width;
    if (!(span <= 1e7)) throw invalid_argument("DOS histogram would need more than 1e7 bins");
    const auto nb = static_cast<std::size_t>(std::ceil(span - 1e-9));
    std::vector<double> edges(nb + 1);
    for (std::size_t b = 0; b <= nb; ++b) edges[b] = lo + static_cast<double>(b) * bin_width;
    std::vector<std::size_t> counts(nb, 0);
    std::size_t total = 0;
    for (const auto& item : ensemble) {
        for (double e : energies_of(item)) {
            const double pos = std::floor((e - lo) / bin_width);
            const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(nb - 1)));
            ++counts[b];
            ++total;
        }
    }
    if (total == 0) throw empty_ensemble();
    return histogram(edges, counts, total);
}

// Antiderivative of ln|u|.
double log_antiderivative(double u) {
    return u == 0.0 ? 0.0 : u * std::log(std::abs(u)) - u;
}

} // namespace

dos_estimate estimate_dos(std::span<const std::vector<double>> spectra, double disorder, double bin_width) {
    return build_dos(spectra, [](const std::vector<double>& e) -> const std::vector<double>& { return e; },
                     disorder, bin_width);
}

dos_estimate estimate_dos(std::span<const spectral_decomposition> ensemble, double disorder,
                          double bin_width) {
    return build_dos(ensemble, [](const spectral_decomposition& d) { return d.energies(); }, disorder,
                     bin_width);
}

double lyapunov_thouless(const dos_estimate& dos, double energy) {
    double gamma = 0.0;
    for (std::size_t b = 0; b < dos.bins(); ++b) {
        const double m = dos.mass(b);
        if (m == 0.0) continue;
        const double lo = dos.bin_edges[b] - energy, hi = dos.bin_edges[b + 1] - energy;
        gamma += m * (log_antiderivative(hi) - log_antiderivative(lo)) / (hi - lo);
    }
    return std::max(gamma, 0.0);
}

double lyapunov_curve::at(double energy) const {
    if (energies.empty()) throw invalid_argument("empty Lyapunov curve");
    if (energy <= energies.front()) return gamma.front();
    if (energy >= energies.back()) return gamma.back();
    auto it = std::upper_bound(energies.begin(), energies.end(), energy);
    const std::size_t i = static_cast<std::size_t>(std::distance(energies.begin(), it));
    const double t = (energy - energies[i - 1]) / (energies[i] - energies[i - 1]);
    return gamma[i - 1] + t * (gamma[i] - gamma[i - 1]);
}

std::vector<double> lyapunov_curve::slope() const {
    const std::size_t n = energies.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? i : i + 1;
        out[i] = (gamma[b] - gamma[a]) / (energies[b] - energies[a]);
    }
    return out;
}

namespace {

void finish_curve(lyapunov_curve& c) {
    if (c.gamma.empty()) throw invalid_argument("empty energy grid");
    const auto [lo, hi] = std::minmax_element(c.gamma.begin(), c.gamma.end());
    c.gamma_min = *lo;
    c.gamma_max = *hi;
}

} // namespace

lyapunov_curve transfer_curve(const model_params& params, std::span<const double> grid, std::size_t steps,
                              std::uint64_t seed, const transfer_options& opts) {
    lyapunov_curve c;
    c.method = lyapunov_method::transfer;
    c.energies.assign(grid.begin(), grid.end());
    for (double e : grid) {
        const auto est = lyapunov_transfer(params, e, steps, seed, opts);
        c.gamma.push_back(est.gamma);
        c.std_error.push_back(est.std_error);
    }
    finish_curve(c);
    return c;
}

lyapunov_curve thouless_curve(const dos_estimate& dos, std::span<const double> grid) {
    lyapunov_curve c;
    c.method = lyapunov_method::thouless;
    c.energies.assign(grid.begin(), grid.end());
    for (double e : grid) {
        c.gamma.push_back(lyapunov_thouless(dos, e));
        c.std_error.push_back(0.0);
    }
    finish_curve(c);
    return c;
}

std::pair<double, double> gamma_extrema(const lyapunov_curve& curve, const dos_estimate* dos,
                                        double lower_mass, double upper_mass) {
    if (curve.energies.empty()) throw invalid_argument("empty Lyapunov curve");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < curve.energies.size(); ++i) {
        if (dos) {
            const double n = dos->cumulative_at(curve.energies[i]);
            if (n < lower_mass || n > upper_mass) continue;
        }
        lo = std::min(lo, curve.gamma[i]);
        hi = std::max(hi, curve.gamma[i]);
    }
    if (lo > hi) throw invalid_argument("no grid energy inside the retained spectral mass");
    return {lo, hi};
}

std::vector<double> energy_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw invalid_argument("bad energy grid");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = lo + static_cast<double>(i) * step;
    return g;
}

} // namespace anderson
