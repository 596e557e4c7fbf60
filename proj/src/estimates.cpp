#include "anderson/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "anderson/error.hpp"

namespace anderson {

void combination_spec::validate() const {
    if (terms.empty()) throw invalid_argument("a combination needs at least one term");
    std::set<long> sites;
    for (const auto& t : terms) {
        if (t.coefficient == 0) throw invalid_argument("combination coefficients must be nonzero");
        if (t.site < 0) throw invalid_argument("combination sites must be non-negative");
        if (!sites.insert(t.site).second)
            throw invalid_argument("combination sites must be distinct");
    }
}

long combination_spec::abs_coefficient_sum() const noexcept {
    long s = 0;
    for (const auto& t : terms) s += std::abs(t.coefficient);
    return s;
}

long combination_spec::max_site() const {
    validate();
    long m = terms.front().site;
    for (const auto& t : terms) m = std::max(m, t.site);
    return m;
}

long combination_spec::min_site() const {
    validate();
    long m = terms.front().site;
    for (const auto& t : terms) m = std::min(m, t.site);
    return m;
}

std::vector<std::size_t> resolve_states(const combination_spec& spec, const spectral_decomposition& d) {
    spec.validate();
    std::vector<std::size_t> states;
    states.reserve(spec.size());
    for (const auto& t : spec.terms) {
        const long k = d.state_at(t.site);
        if (k == no_state) throw missing_center(t.site);
        states.push_back(static_cast<std::size_t>(k));
    }
    return states;
}

double eval_combination(const combination_spec& spec, const spectral_decomposition& d) {
    const auto states = resolve_states(spec, d);
    double f = 0.0;
    for (std::size_t t = 0; t < states.size(); ++t)
        f += spec.terms[t].coefficient * d.energy(states[t]);
    return f;
}

std::vector<double> fh_gradient(const combination_spec& spec, const spectral_decomposition& d) {
    const auto states = resolve_states(spec, d);
    std::vector<double> g(d.size(), 0.0);
    for (std::size_t t = 0; t < states.size(); ++t) {
        const auto psi = d.vector(states[t]);
        const double c = spec.terms[t].coefficient;
        for (std::size_t x = 0; x < g.size(); ++x) g[x] += c * psi[x] * psi[x];
    }
    return g;
}

double paired_gradient(const combination_spec& spec, const spectral_decomposition& d, std::size_t j) {
    if (j + 1 >= d.size()) throw invalid_argument("paired gradient needs sites j and j+1 inside the box");
    const auto states = resolve_states(spec, d);
    double g = 0.0;
    for (std::size_t t = 0; t < states.size(); ++t) {
        const double a = d.amplitude(states[t], j), b = d.amplitude(states[t], j + 1);
        g += spec.terms[t].coefficient * (a * a + b * b);
    }
    return g;
}

// --- decay ------------------------------------------------------------------

decay_profile decay_profile_from_amplitudes(std::span<const double> psi, std::size_t center,
                                            double gamma_ref, double epsilon) {
    if (!(epsilon > 0.0)) throw invalid_argument("slack epsilon must be positive");
    if (center >= psi.size()) throw invalid_argument("center outside the box");
    const std::size_t n = psi.size();
    auto sq = [&](long x) {
        return x < 0 || static_cast<std::size_t>(x) >= n ? 0.0 : psi[static_cast<std::size_t>(x)] * psi[static_cast<std::size_t>(x)];
    };
    decay_profile p;
    p.center = center;
    p.gamma_ref = gamma_ref;
    p.epsilon = epsilon;
    const std::size_t reach = std::max(center, n - 1 - center);
    const long c = static_cast<long>(center);
    for (std::size_t dist = 0; dist <= reach; ++dist) {
        const long m = static_cast<long>(dist);
        double best = 0.0;
        if (center + dist < n) best = std::max(best, sq(c + m) + sq(c + m + 1));
        if (dist <= center) best = std::max(best, sq(c - m) + sq(c - m - 1));
        p.distances.push_back(dist);
        p.envelope.push_back(std::sqrt(best));
    }
    p.n_star = estimate_n_star(p);
    return p;
}

decay_profile make_decay_profile(const spectral_decomposition& d, std::size_t k, double gamma_ref,
                                 double epsilon) {
    return decay_profile_from_amplitudes(d.vector(k), d.center_of_state(k), gamma_ref, epsilon);
}

std::optional<std::size_t> estimate_n_star(const decay_profile& profile) {
    const double rate = profile.gamma_ref + profile.epsilon;
    for (std::size_t i = profile.envelope.size(); i-- > 0;) {
        const double bound = std::exp(-rate * static_cast<double>(profile.distances[i]));
        if (profile.envelope[i] < bound) {
            if (i + 1 == profile.envelope.size()) return std::nullopt;
            return profile.distances[i + 1];
        }
    }
    return profile.distances.empty() ? std::optional<std::size_t>{} : profile.distances.front();
}

std::vector<std::vector<long>> cluster_by_gap(std::span<const long> centers, double gap) {
    std::vector<long> sorted(centers.begin(), centers.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::vector<long>> clusters;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i == 0 || static_cast<double>(sorted[i] - sorted[i - 1]) >= gap) clusters.emplace_back();
        clusters.back().push_back(sorted[i]);
    }
    return clusters;
}

std::vector<std::vector<long>> cluster_decomposition(std::span<const long> centers, std::size_t n_star,
                                                     double gamma_min, double eta) {
    if (!(eta > 0.0) || !(gamma_min > 0.0))
        throw invalid_argument("cluster decomposition needs eta > 0 and gamma_min > 0");
    return cluster_by_gap(centers, gamma_min * static_cast<double>(n_star) / eta);
}

// --- probabilities ------------------------------------------------------------

std::vector<gradient_floor_point> gradient_floor_probability(const combination_spec& spec,
                                                             std::span<const spectral_decomposition> ensemble,
                                                             std::span<const long> offsets,
                                                             const floor_options& opts) {
    if (ensemble.empty()) throw empty_ensemble();
    if (!opts.threshold && !opts.curve)
        throw invalid_argument("gradient floor needs a fixed threshold or a Lyapunov curve");
    const long last = spec.max_site();
    std::vector<gradient_floor_point> out;
    for (long off : offsets) {
        if (off <= 0) throw invalid_argument("offsets must be positive");
        gradient_floor_point pt;
        pt.offset = off;
        double floor_sum = 0.0;
        for (const auto& d : ensemble) {
            const auto site = static_cast<std::size_t>(last + off);
            const double g = paired_gradient(spec, d, site);
            double reference = std::numeric_limits<double>::quiet_NaN();
            if (opts.curve) {
                double gamma_tilde = std::numeric_limits<double>::infinity();
                for (auto k : resolve_states(spec, d)) gamma_tilde = std::min(gamma_tilde, opts.curve->at(d.energy(k)));
                reference = std::exp(-2.0 * (gamma_tilde + opts.epsilon) * static_cast<double>(off));
                floor_sum += reference;
            }
            const double c = opts.threshold ? *opts.threshold : reference;
            if (std::abs(g) <= c) ++pt.hits;
            ++pt.trials;
        }
        pt.probability = static_cast<double>(pt.hits) / static_cast<double>(pt.trials);
        pt.mean_reference_floor = opts.curve ? floor_sum / static_cast<double>(pt.trials)
                                             : std::numeric_limits<double>::quiet_NaN();
        out.push_back(pt);
    }
    return out;
}

std::vector<level_stat_point> level_statistics(std::span<const std::vector<double>> spectra,
                                               std::span<const double> lengths, std::size_t box_size,
                                               double sup_density, double lo, double hi) {
    if (spectra.empty()) throw empty_ensemble();
    if (!(hi > lo)) throw invalid_argument("empty energy range");
    std::vector<level_stat_point> out;
    for (double len : lengths) {
        if (!(len > 0.0)) throw invalid_argument("interval lengths must be positive");
        level_stat_point pt;
        pt.length = len;
        const double step = len / 4.0;
        pt.windows = len >= hi - lo ? 1 : static_cast<std::size_t>(std::floor((hi - lo - len) / step + 1e-9)) + 1;
        for (const auto& e : spectra) {
            std::size_t left = 0, right = 0;
            for (std::size_t w = 0; w < pt.windows; ++w) {
                const double a = lo + static_cast<double>(w) * step;
                while (left < e.size() && e[left] < a) ++left;
                while (right < e.size() && e[right] < a + len) ++right;
                const std::size_t count = right - left;
                if (count >= 1) ++pt.at_least_one;
                if (count >= 2) ++pt.at_least_two;
            }
            pt.trials += pt.windows;
        }
        pt.p_at_least_one = static_cast<double>(pt.at_least_one) / static_cast<double>(pt.trials);
        pt.p_at_least_two = static_cast<double>(pt.at_least_two) / static_cast<double>(pt.trials);
        pt.wegner_reference = std::numbers::pi * sup_density * len * static_cast<double>(box_size);
        pt.minami_reference = pt.wegner_reference * pt.wegner_reference;
        out.push_back(pt);
    }
    return out;
}

std::vector<probability_point> gamma_gap_probability(const combination_spec& spec,
                                                     std::span<const spectral_decomposition> ensemble,
                                                     const lyapunov_curve& curve,
                                                     std::span<const double> thresholds,
                                                     double cluster_gap) {
    if (ensemble.empty()) throw empty_ensemble();
    std::vector<double> gaps;
    std::vector<long> sites;
    for (const auto& t : spec.terms) sites.push_back(t.site);
    const auto clusters = cluster_by_gap(sites, cluster_gap);
    auto cluster_of = [&](long site) {
        for (std::size_t c = 0; c < clusters.size(); ++c)
            if (std::find(clusters[c].begin(), clusters[c].end(), site) != clusters[c].end()) return c;
        return clusters.size();
    };
    for (const auto& d : ensemble) {
        const auto states = resolve_states(spec, d);
        for (std::size_t a = 0; a < states.size(); ++a)
            for (std::size_t b = a + 1; b < states.size(); ++b) {
                if (cluster_of(spec.terms[a].site) != cluster_of(spec.terms[b].site)) continue;
                gaps.push_back(std::abs(curve.at(d.energy(states[a])) - curve.at(d.energy(states[b]))));
            }
    }
    std::vector<probability_point> out;
    for (double t : thresholds) {
        probability_point pt;
        pt.threshold = t;
        pt.trials = gaps.size();
        pt.hits = static_cast<std::size_t>(std::count_if(gaps.begin(), gaps.end(), [t](double g) { return g <= t; }));
        pt.probability = pt.trials ? static_cast<double>(pt.hits) / static_cast<double>(pt.trials) : 0.0;
        out.push_back(pt);
    }
    return out;
}

// --- sign scan -----------------------------------------------------------------

std::pair<double, double> admissible_plus_range(const disorder_realization& r, std::size_t j) {
    if (j + 1 >= r.size()) throw invalid_argument("sweep site must have a right neighbour");
    const double minus = (r.epsilon[j] - r.epsilon[j + 1]) / std::numbers::sqrt2;
    const double reach = std::numbers::sqrt2 * r.params.disorder - std::abs(minus);
    return {-reach, reach};
}

std::vector<double> default_scan_grid(const disorder_realization& r, std::size_t j, std::size_t points) {
    if (points < 2) throw invalid_argument("scan grid needs at least two points");
    const auto [lo, hi] = admissible_plus_range(r, j);
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

disorder_realization with_plus_coordinate(const disorder_realization& r, std::size_t j, double plus) {
    const auto [lo, hi] = admissible_plus_range(r, j);
    const double slack = 1e-12 * std::max(1.0, r.params.disorder);
    if (plus < lo - slack || plus > hi + slack)
        throw grid_out_of_range("eps_j^+ = " + std::to_string(plus) + " leaves the admissible range");
    const double minus = (r.epsilon[j] - r.epsilon[j + 1]) / std::numbers::sqrt2;
    disorder_realization out = r;
    const double cap = r.params.disorder;
    out.epsilon[j] = std::clamp((plus + minus) / std::numbers::sqrt2, -cap, cap);
    out.epsilon[j + 1] = std::clamp((plus - minus) / std::numbers::sqrt2, -cap, cap);
    return out;
}

namespace {

struct tracked_point {
    double gradient = 0.0;
    double gap = 0.0;
    std::vector<std::vector<double>> vectors; // one per term
};

double adjacent_gap(const spectral_decomposition& d, std::size_t k) {
    double g = std::numeric_limits<double>::infinity();
    if (k > 0) g = std::min(g, d.energy(k) - d.energy(k - 1));
    if (k + 1 < d.size()) g = std::min(g, d.energy(k + 1) - d.energy(k));
    return g;
}

tracked_point evaluate_tracked(const combination_spec& spec, const disorder_realization& r, std::size_t j,
                               double plus, const tracked_point* previous, const solver_options& solver) {
    const auto d = diagonalize(with_plus_coordinate(r, j, plus), solver);
    std::vector<std::size_t> states;
    if (!previous) {
        states = resolve_states(spec, d);
    } else {
        for (std::size_t t = 0; t < spec.size(); ++t)
            states.push_back(track_state(d, static_cast<std::size_t>(spec.terms[t].site), previous->vectors[t]));
    }
    tracked_point pt;
    pt.gap = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < states.size(); ++t) {
        const auto psi = d.vector(states[t]);
        pt.gradient += spec.terms[t].coefficient * (psi[j] * psi[j] + psi[j + 1] * psi[j + 1]);
        pt.gap = std::min(pt.gap, adjacent_gap(d, states[t]));
        pt.vectors.emplace_back(psi.begin(), psi.end());
    }
    return pt;
}

} // namespace

sign_scan sign_change_scan(const combination_spec& spec, const disorder_realization& r, std::size_t j,
                           std::span<const double> grid, std::size_t refine, const solver_options& solver) {
    spec.validate();
    if (grid.size() < 2) throw invalid_argument("scan grid needs at least two points");
    const auto [lo, hi] = admissible_plus_range(r, j);
    const double slack = 1e-12 * std::max(1.0, r.params.disorder);
    for (double p : grid)
        if (p < lo - slack || p > hi + slack) throw grid_out_of_range("scan grid leaves the admissible range");

    sign_scan out;
    out.grid.assign(grid.begin(), grid.end());
    std::vector<tracked_point> points;
    points.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        points.push_back(evaluate_tracked(spec, r, j, grid[i], i ? &points.back() : nullptr, solver));
        out.gradient.push_back(points.back().gradient);
        out.gaps.push_back(points.back().gap);
    }
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if ((out.gradient[i] > 0.0) == (out.gradient[i + 1] > 0.0)) continue;
        sign_flip flip{i, grid[i], grid[i + 1], std::min(out.gaps[i], out.gaps[i + 1])};
        const tracked_point* prev = &points[i];
        tracked_point sub;
        for (std::size_t s = 1; s < refine; ++s) {
            const double p = grid[i] + (grid[i + 1] - grid[i]) * static_cast<double>(s) / static_cast<double>(refine);
            sub = evaluate_tracked(spec, r, j, p, prev, solver);
            flip.min_gap = std::min(flip.min_gap, sub.gap);
            prev = &sub;
        }
        out.flips.push_back(flip);
    }
    return out;
}

// --- moments ---------------------------------------------------------------------

std::size_t trim_count(double delta, std::size_t count) {
    if (!(delta >= 0.0 && delta < 1.0)) throw invalid_argument("delta must lie in [0, 1)");
    return static_cast<std::size_t>(std::ceil(delta * static_cast<double>(count) - 1e-9));
}

moment_report fractional_moment(std::span<const double> f_samples, double s, double delta) {
    if (!(s > 0.0 && s < 1.0)) throw invalid_argument("s must lie in (0, 1)");
    if (f_samples.empty()) throw invalid_argument("no samples");
    if (std::all_of(f_samples.begin(), f_samples.end(), [](double f) { return f == 0.0; }))
        throw all_samples_zero();
    moment_report rep;
    rep.s = s;
    rep.delta = delta;
    rep.sample_count = f_samples.size();
    rep.trim_count = trim_count(delta, f_samples.size());
    if (rep.trim_count >= f_samples.size()) throw invalid_argument("trim removes every sample");

    std::vector<double> v;
    v.reserve(f_samples.size());
    for (double f : f_samples)
        v.push_back(f == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(std::abs(f), -s));
    std::sort(v.begin(), v.end());
    const std::size_t kept = v.size() - rep.trim_count;
    double sum = 0.0;
    for (std::size_t i = 0; i < kept; ++i) sum += v[i];
    rep.trimmed_mean = sum / static_cast<double>(kept);
    for (std::size_t i = kept; i < v.size(); ++i) sum += v[i];
    rep.untrimmed_mean = sum / static_cast<double>(v.size());
    return rep;
}

double empirical_floor(std::span<const double> values, double delta) {
    if (values.empty()) throw empty_ensemble();
    std::vector<double> a;
    a.reserve(values.size());
    for (double v : values) a.push_back(std::abs(v));
    std::sort(a.begin(), a.end());
    const std::size_t drop = trim_count(delta, a.size());
    if (drop >= a.size()) throw invalid_argument("trim removes every sample");
    return a[drop];
}

double combination_bound(const combination_spec& spec, double disorder) {
    spec.validate();
    return (2.0 + disorder) * static_cast<double>(spec.abs_coefficient_sum());
}

double theorem_bound(double q, double s, double disorder, double c_delta) {
    if (!(s > 0.0 && s < 1.0)) throw invalid_argument("s must lie in (0, 1)");
    if (!(c_delta > 0.0)) throw invalid_argument("C_delta must be positive");
    if (!(disorder > 0.0)) throw invalid_argument("disorder must be positive");
    return std::pow(q, 1.0 - s) / (c_delta * 2.0 * disorder * (1.0 - s));
}

} // namespace anderson
