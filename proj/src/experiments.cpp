#include "anderson/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <thread>

#include "anderson/error.hpp"
#include "anderson/estimates.hpp"
#include "anderson/lyapunov.hpp"
#include "anderson/renormalization.hpp"
#include "anderson/stats.hpp"

namespace anderson {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ index);
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                stop.store(true);
                return;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

namespace {

using clock_type = std::chrono::steady_clock;

// Stream tags for draws that are not realizations.
constexpr std::uint64_t transfer_stream = 0xffffffffffff0001ULL;

// Results of one batch of realizations, indexed by realization; empty slots
// were excluded with the recorded reason.
template <typename R>
struct batch {
    std::vector<std::optional<R>> results;
    std::vector<std::string> reasons;
};

template <typename F>
auto run_batch(std::size_t count, std::size_t threads, F&& fn) {
    using R = decltype(fn(std::size_t{0}));
    batch<R> b;
    b.results.resize(count);
    b.reasons.resize(count);
    parallel_for(count, threads, [&](std::size_t i) {
        try {
            b.results[i] = fn(i);
        } catch (const convergence_failure&) {
            b.reasons[i] = "convergence_failure";
        } catch (const degenerate_level&) {
            b.reasons[i] = "degenerate_level";
        } catch (const degenerate_direction&) {
            b.reasons[i] = "degenerate_direction";
        } catch (const missing_center&) {
            b.reasons[i] = "missing_center";
        }
    });
    return b;
}

// Books the batch's exclusions and enforces the 1% budget.
template <typename R>
void account(ensemble_report& report, const batch<R>& b) {
    std::size_t excluded = 0;
    for (const auto& reason : b.reasons) {
        if (reason.empty()) continue;
        ++report.exclusions[reason];
        ++excluded;
    }
    report.included += b.results.size() - excluded;
    if (static_cast<double>(excluded) > 0.01 * static_cast<double>(b.results.size()))
        throw failure_budget_exceeded(std::to_string(excluded) + " of " + std::to_string(b.results.size()) +
                                      " realizations failed numerically (budget 1%)");
}

solver_options solver_of(const experiment_config& c) {
    return {.method = c.solver, .sweep_budget = c.sweep_budget};
}

histogram_entry histogram_of(const dos_estimate& dos) {
    histogram_entry h;
    h.edges = dos.bin_edges;
    for (std::size_t b = 0; b < dos.bins(); ++b)
        h.counts.push_back(static_cast<std::size_t>(std::llround(dos.mass(b) * static_cast<double>(dos.sample_count))));
    return h;
}

std::vector<std::vector<double>> included_spectra(const batch<std::vector<double>>& b) {
    std::vector<std::vector<double>> out;
    for (const auto& r : b.results)
        if (r) out.push_back(*r);
    return out;
}

// Eigenvalues of M realizations at the configured size, for the DOS.
batch<std::vector<double>> spectra_batch(const experiment_config& c) {
    return run_batch(c.realizations, c.threads, [&](std::size_t i) {
        return eigenvalues(sample_disorder(c.model, realization_seed(c.master_seed, i)), c.sweep_budget);
    });
}

lyapunov_curve parallel_transfer_curve(const experiment_config& c) {
    const auto grid = energy_grid(c.lyapunov.energy_min, c.lyapunov.energy_max, c.lyapunov.energy_step);
    const std::uint64_t seed = realization_seed(c.master_seed, transfer_stream);
    std::vector<lyapunov_estimate> est(grid.size());
    parallel_for(grid.size(), c.threads,
                 [&](std::size_t i) { est[i] = lyapunov_transfer(c.model, grid[i], c.lyapunov.steps, seed); });
    lyapunov_curve curve;
    curve.method = lyapunov_method::transfer;
    curve.energies = grid;
    for (const auto& e : est) {
        curve.gamma.push_back(e.gamma);
        curve.std_error.push_back(e.std_error);
    }
    const auto [lo, hi] = std::minmax_element(curve.gamma.begin(), curve.gamma.end());
    curve.gamma_min = *lo;
    curve.gamma_max = *hi;
    return curve;
}

void put_curve(ensemble_report& report, const std::string& name, const lyapunov_curve& curve) {
    report.series[name] = {curve.energies, curve.gamma};
    if (curve.method == lyapunov_method::transfer) report.series[name + "_std_error"] = {curve.energies, curve.std_error};
}

std::pair<double, double> edge_excluded_extrema(const lyapunov_curve& curve, const dos_estimate& dos, double edge) {
    return gamma_extrema(curve, &dos, edge, 1.0 - edge);
}

// Energy where the integrated DOS reaches `mass`.
double energy_at_mass(const dos_estimate& dos, double mass) {
    double below = 0.0;
    for (std::size_t b = 0; b < dos.bins(); ++b) {
        const double above = dos.cumulative[b];
        if (above >= mass && dos.mass(b) > 0.0)
            return dos.bin_edges[b] + (mass - below) / dos.mass(b) * dos.bin_width(b);
        below = above;
    }
    return dos.bin_edges.back();
}

void put_probabilities(ensemble_report& report, const std::string& name, std::span<const double> x,
                       std::span<const std::size_t> hits, std::span<const std::size_t> trials) {
    auto& out = report.probabilities[name];
    for (std::size_t i = 0; i < x.size(); ++i) out.push_back(probability_entry::from_counts(x[i], hits[i], trials[i]));
}

bool nonincreasing(std::span<const probability_entry> p) {
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i].probability > p[i - 1].probability) return false;
    return true;
}

std::vector<double> as_doubles(std::span<const long> v) { return {v.begin(), v.end()}; }
std::vector<double> as_doubles(std::span<const std::size_t> v) { return {v.begin(), v.end()}; }

// --- experiments ---------------------------------------------------------------

struct spectrum_item {
    std::uint64_t seed;
    std::vector<double> energies;
    std::vector<std::size_t> centers;
    std::optional<double> f;
    double max_residual;
    std::size_t reassigned;
};

void run_spectrum(const experiment_config& c, ensemble_report& report, sample_table* table) {
    const auto b = run_batch(c.realizations, c.threads, [&](std::size_t i) {
        spectrum_item it;
        it.seed = realization_seed(c.master_seed, i);
        const auto d = diagonalize(sample_disorder(c.model, it.seed), solver_of(c));
        it.energies.assign(d.energies().begin(), d.energies().end());
        for (std::size_t k = 0; k < d.size(); ++k) it.centers.push_back(d.center_of_state(k));
        if (c.spec) it.f = eval_combination(*c.spec, d);
        it.max_residual = d.max_residual();
        it.reassigned = d.reassigned_centers();
        return it;
    });
    account(report, b);

    if (table) table->header = {"seed", "size", "state", "energy", "center"};
    std::vector<std::vector<double>> spectra;
    auto& energies = report.samples["energies"];
    double max_residual = 0.0, reassigned = 0.0, spacing = 0.0;
    std::vector<double> fs;
    for (const auto& r : b.results) {
        if (!r) continue;
        energies.insert(energies.end(), r->energies.begin(), r->energies.end());
        spectra.push_back(r->energies);
        max_residual = std::max(max_residual, r->max_residual);
        reassigned += static_cast<double>(r->reassigned);
        spacing += (r->energies.back() - r->energies.front()) / static_cast<double>(r->energies.size() - 1);
        if (r->f) fs.push_back(*r->f);
        if (table)
            for (std::size_t k = 0; k < r->energies.size(); ++k)
                table->add_row({std::to_string(r->seed), std::to_string(c.model.box_size), std::to_string(k),
                                format_number(r->energies[k]), std::to_string(r->centers[k])});
    }
    const double n = static_cast<double>(spectra.size());
    const auto dos = estimate_dos(spectra, c.model.disorder, c.dos_bin_width);
    report.histograms["dos"] = histogram_of(dos);
    report.scalars["sup_density"] = dos.sup_density;
    report.scalars["mean_level_spacing"] = spacing / n;
    if (!fs.empty()) {
        report.samples["f"] = fs;
        report.scalars["f_mean"] = ordered_mean(fs);
    }
    report.diagnostics["max_residual"] = max_residual;
    report.diagnostics["mean_reassigned_centers"] = reassigned / n;
}

void run_lyapunov(const experiment_config& c, ensemble_report& report, sample_table* table) {
    const auto b = spectra_batch(c);
    account(report, b);
    const auto dos = estimate_dos(included_spectra(b), c.model.disorder, c.dos_bin_width);
    const auto transfer = parallel_transfer_curve(c);
    const auto thouless = thouless_curve(dos, transfer.energies);
    put_curve(report, "gamma_transfer", transfer);
    put_curve(report, "gamma_thouless", thouless);
    report.histograms["dos"] = histogram_of(dos);

    double worst = 0.0;
    for (std::size_t i = 0; i < transfer.energies.size(); ++i)
        worst = std::max(worst, std::abs(transfer.gamma[i] - thouless.gamma[i]));
    const auto [lo, hi] = edge_excluded_extrema(transfer, dos, c.lyapunov.edge_mass);
    report.scalars["gamma_min"] = lo;
    report.scalars["gamma_max"] = hi;
    report.scalars["max_deviation"] = worst;
    report.scalars["max_deviation_relative"] = worst / transfer.gamma_max;
    if (table) {
        table->header = {"energy", "gamma_transfer", "std_error", "gamma_thouless"};
        for (std::size_t i = 0; i < transfer.energies.size(); ++i)
            table->add_row({format_number(transfer.energies[i]), format_number(transfer.gamma[i]),
                            format_number(transfer.std_error[i]), format_number(thouless.gamma[i])});
    }
}

void run_dos(const experiment_config& c, ensemble_report& report, sample_table* table) {
    const auto b = spectra_batch(c);
    account(report, b);
    const auto dos = estimate_dos(included_spectra(b), c.model.disorder, c.dos_bin_width);
    report.histograms["dos"] = histogram_of(dos);
    std::vector<double> mids;
    for (std::size_t i = 0; i < dos.bins(); ++i) mids.push_back(0.5 * (dos.bin_edges[i] + dos.bin_edges[i + 1]));
    report.series["density"] = {mids, dos.density};
    report.series["integrated"] = {std::vector<double>(dos.bin_edges.begin() + 1, dos.bin_edges.end()), dos.cumulative};
    report.scalars["sup_density"] = dos.sup_density;
    report.scalars["sample_count"] = static_cast<double>(dos.sample_count);
    if (table) {
        table->header = {"bin_low", "bin_high", "count", "density", "integrated"};
        const auto h = histogram_of(dos);
        for (std::size_t i = 0; i < dos.bins(); ++i)
            table->add_row({format_number(dos.bin_edges[i]), format_number(dos.bin_edges[i + 1]),
                            std::to_string(h.counts[i]), format_number(dos.density[i]),
                            format_number(dos.cumulative[i])});
    }
}

struct floor_item {
    std::uint64_t seed;
    std::vector<double> gradient;  // per offset
    std::vector<double> reference; // per offset
    std::vector<std::size_t> hits;
};

void run_gradient_floor(const experiment_config& c, ensemble_report& report, sample_table* table) {
    const auto& spec = *c.spec;
    const auto curve = parallel_transfer_curve(c);
    floor_options opts;
    opts.threshold = c.floor_threshold;
    opts.curve = &curve;
    opts.epsilon = c.epsilon;

    std::mutex spectra_mutex;
    const auto b = run_batch(c.realizations, c.threads, [&](std::size_t i) {
        floor_item it;
        it.seed = realization_seed(c.master_seed, i);
        const auto d = diagonalize(sample_disorder(c.model, it.seed), solver_of(c));
        const auto pts = gradient_floor_probability(spec, std::span(&d, 1), c.offsets, opts);
        for (std::size_t o = 0; o < c.offsets.size(); ++o) {
            it.gradient.push_back(paired_gradient(spec, d, static_cast<std::size_t>(spec.max_site() + c.offsets[o])));
            it.reference.push_back(pts[o].mean_reference_floor);
            it.hits.push_back(pts[o].hits);
        }
        return it;
    });
    account(report, b);

    const std::size_t no = c.offsets.size();
    std::vector<std::size_t> hits(no, 0), trials(no, 0);
    std::vector<std::vector<double>> grads(no), refs(no);
    if (table) {
        table->header = {"seed", "size"};
        for (long off : c.offsets) {
            table->header.push_back("paired_gradient_" + std::to_string(off));
            table->header.push_back("reference_floor_" + std::to_string(off));
        }
    }
    for (const auto& r : b.results) {
        if (!r) continue;
        std::vector<std::string> row = {std::to_string(r->seed), std::to_string(c.model.box_size)};
        for (std::size_t o = 0; o < no; ++o) {
            hits[o] += r->hits[o];
            ++trials[o];
            grads[o].push_back(r->gradient[o]);
            refs[o].push_back(r->reference[o]);
            row.push_back(format_number(r->gradient[o]));
            row.push_back(format_number(r->reference[o]));
        }
        if (table) table->add_row(std::move(row));
    }
    const auto x = as_doubles(std::span<const long>(c.offsets));
    put_probabilities(report, "below_floor", x, hits, trials);
    std::vector<double> floors, mean_refs;
    for (std::size_t o = 0; o < no; ++o) {
        report.samples["paired_gradient_" + std::to_string(c.offsets[o])] = grads[o];
        floors.push_back(empirical_floor(grads[o], c.delta));
        mean_refs.push_back(ordered_mean(refs[o]));
    }
    report.series["empirical_floor"] = {x, floors};
    report.series["mean_reference_floor"] = {x, mean_refs};
    if (no >= 2 && std::all_of(floors.begin(), floors.end(), [](double v) { return v > 0.0; })) {
        report.fits["empirical_floor"] = fit_entry::make("loglinear", x, floors);
        report.scalars["floor_decay_rate"] = -report.fits["empirical_floor"].slope;
    }
    report.scalars["probability_nonincreasing"] = nonincreasing(report.probabilities["below_floor"]) ? 1.0 : 0.0;
    report.scalars["gamma_min_grid"] = curve.gamma_min;
    report.scalars["gamma_max_grid"] = curve.gamma_max;
    put_curve(report, "gamma_transfer", curve);
}

void run_level_stats(const experiment_config& c, ensemble_report& report, sample_table* table) {
    const auto b = spectra_batch(c);
    account(report, b);
    const auto spectra = included_spectra(b);
    const auto dos = estimate_dos(spectra, c.model.disorder, c.dos_bin_width);
    double spacing = 0.0;
    for (const auto& s : spectra) spacing += (s.back() - s.front()) / static_cast<double>(s.size() - 1);
    spacing /= static_cast<double>(spectra.size());

    std::vector<double> lengths = c.interval_lengths;
    if (lengths.empty()) {
        // one decade below the mean spacing, log-spaced
        for (std::size_t i = 0; i < c.interval_count; ++i)
            lengths.push_back(spacing * std::pow(10.0, -1.0 + static_cast<double>(i) / static_cast<double>(c.interval_count - 1)));
    }
    const double lo = -2.0 - c.model.disorder, hi = 2.0 + c.model.disorder;
    const auto pts = level_statistics(spectra, lengths, c.model.box_size, dos.sup_density, lo, hi);

    std::vector<double> x, p1, p2, wegner, minami;
    std::vector<std::size_t> h1, h2, trials;
    bool minami_holds = true;
    for (const auto& pt : pts) {
        x.push_back(pt.length);
        h1.push_back(pt.at_least_one);
        h2.push_back(pt.at_least_two);
        trials.push_back(pt.trials);
        p1.push_back(pt.p_at_least_one);
        p2.push_back(pt.p_at_least_two);
        wegner.push_back(pt.wegner_reference);
        minami.push_back(pt.minami_reference);
        if (pt.p_at_least_two > pt.minami_reference) minami_holds = false;
    }
    put_probabilities(report, "at_least_one", x, h1, trials);
    put_probabilities(report, "at_least_two", x, h2, trials);
    report.series["wegner_reference"] = {x, wegner};
    report.series["minami_reference"] = {x, minami};
    if (std::all_of(p2.begin(), p2.end(), [](double v) { return v > 0.0; })) {
        report.fits["minami"] = fit_entry::make("loglog", x, p2);
        report.scalars["minami_exponent"] = report.fits["minami"].slope;
    }
    if (std::all_of(p1.begin(), p1.end(), [](double v) { return v > 0.0; })) {
        report.fits["wegner"] = fit_entry::make("loglog", x, p1);
        report.scalars["wegner_exponent"] = report.fits["wegner"].slope;
    }
    report.scalars["minami_bound_holds"] = minami_holds ? 1.0 : 0.0;
    report.scalars["sup_density"] = dos.sup_density;
    report.scalars["mean_level_spacing"] = spacing;
    report.histograms["dos"] = histogram_of(dos);
    if (table) {
        table->header = {"length", "windows", "p_at_least_one", "p_at_least_two", "wegner_reference", "minami_reference"};
        for (const auto& pt : pts)
            table->add_row({format_number(pt.length), std::to_string(pt.windows), format_number(pt.p_at_least_one),
                            format_number(pt.p_at_least_two), format_number(pt.wegner_reference),
                            format_number(pt.minami_reference)});
    }
}

struct scan_item {
    std::uint64_t seed;
    std::size_t flips;
    std::vector<double> flip_gaps;
    double smallest_gap;
};

void run_sign_scan(const experiment_config& c, ensemble_report& report, sample_table* table) {
    const auto& spec = *c.spec;
    const auto site = static_cast<std::size_t>(c.scan.site.value_or(spec.max_site() + 10));
    const auto b = run_batch(c.realizations, c.threads, [&](std::size_t i) {
        scan_item it;
        it.seed = realization_seed(c.master_seed, i);
        const auto r = sample_disorder(c.model, it.seed);
        const auto grid = default_scan_grid(r, site, c.scan.points);
        const auto scan = sign_change_scan(spec, r, site, grid, c.scan.refine, solver_of(c));
        it.flips = scan.flips.size();
        for (const auto& f : scan.flips) it.flip_gaps.push_back(f.min_gap);
        it.smallest_gap = *std::min_element(scan.gaps.begin(), scan.gaps.end());
        return it;
    });
    account(report, b);

    std::size_t any = 0, trials = 0;
    std::vector<double> counts, gaps, smallest;
    if (table) table->header = {"seed", "size", "site", "flips", "smallest_gap"};
    for (const auto& r : b.results) {
        if (!r) continue;
        ++trials;
        if (r->flips > 0) ++any;
        counts.push_back(static_cast<double>(r->flips));
        gaps.insert(gaps.end(), r->flip_gaps.begin(), r->flip_gaps.end());
        smallest.push_back(r->smallest_gap);
        if (table)
            table->add_row({std::to_string(r->seed), std::to_string(c.model.box_size), std::to_string(site),
                            std::to_string(r->flips), format_number(r->smallest_gap)});
    }
    const std::vector<double> x = {static_cast<double>(site)};
    const std::vector<std::size_t> h = {any}, t = {trials};
    put_probabilities(report, "any_sign_change", x, h, t);
    report.samples["sign_changes"] = counts;
    report.samples["flip_gap"] = gaps;
    report.samples["smallest_gap"] = smallest;
    report.scalars["mean_sign_changes"] = ordered_mean(counts);
    report.scalars["median_smallest_gap"] = quantile(smallest, 0.5);
    if (!gaps.empty()) report.scalars["median_flip_gap"] = quantile(gaps, 0.5);
}

struct moment_item {
    std::uint64_t seed;
    double f;
    double gradient;
};

void run_moments(const experiment_config& c, ensemble_report& report, sample_table* table) {
    const auto& spec = *c.spec;
    const std::vector<std::size_t> sizes = c.sizes.empty() ? std::vector<std::size_t>{c.model.box_size} : c.sizes;
    const auto floor_site = static_cast<std::size_t>(spec.max_site() + 1);
    const double q = combination_bound(spec, c.model.disorder);
    std::vector<double> x, trimmed, untrimmed, floors, bounds;
    if (table) table->header = {"seed", "size", "f", "abs_f_pow_minus_s", "paired_gradient"};
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        model_params p = c.model;
        p.box_size = sizes[si];
        const auto b = run_batch(c.realizations, c.threads, [&](std::size_t i) {
            moment_item it;
            it.seed = realization_seed(c.master_seed, si * c.realizations + i);
            const auto d = diagonalize(sample_disorder(p, it.seed), solver_of(c));
            it.f = eval_combination(spec, d);
            it.gradient = floor_site + 1 < d.size() ? paired_gradient(spec, d, floor_site) : 0.0;
            return it;
        });
        account(report, b);
        std::vector<double> fs, gs;
        for (const auto& r : b.results) {
            if (!r) continue;
            fs.push_back(r->f);
            gs.push_back(r->gradient);
            if (table)
                table->add_row({std::to_string(r->seed), std::to_string(p.box_size), format_number(r->f),
                                format_number(std::pow(std::abs(r->f), -c.s)), format_number(r->gradient)});
        }
        const auto m = fractional_moment(fs, c.s, c.delta);
        const double floor = empirical_floor(gs, c.delta);
        x.push_back(static_cast<double>(p.box_size));
        trimmed.push_back(m.trimmed_mean);
        untrimmed.push_back(m.untrimmed_mean);
        floors.push_back(floor);
        bounds.push_back(floor > 0.0 ? theorem_bound(q, c.s, c.model.disorder, floor)
                                     : std::numeric_limits<double>::infinity());
        report.samples["f_" + std::to_string(p.box_size)] = fs;
        report.scalars["trim_count_" + std::to_string(p.box_size)] = static_cast<double>(m.trim_count);
    }
    report.series["trimmed_mean"] = {x, trimmed};
    report.series["untrimmed_mean"] = {x, untrimmed};
    report.series["gradient_floor"] = {x, floors};
    report.series["theorem_bound"] = {x, bounds};
    const auto [lo, hi] = std::minmax_element(trimmed.begin(), trimmed.end());
    report.scalars["trimmed_ratio"] = *hi / *lo;
    report.scalars["combination_bound"] = q;
}

struct decay_item {
    std::uint64_t seed;
    std::vector<double> n_star; // inf when the bound fails at the box edge
    std::vector<double> energy;
};

void run_decay(const experiment_config& c, ensemble_report& report, sample_table* table) {
    const auto pilot = spectra_batch(c);
    const auto dos = estimate_dos(included_spectra(pilot), c.model.disorder, c.dos_bin_width);
    const double e_lo = energy_at_mass(dos, c.mid_spectrum_low), e_hi = energy_at_mass(dos, c.mid_spectrum_high);
    const auto curve = parallel_transfer_curve(c);

    const auto b = run_batch(c.realizations, c.threads, [&](std::size_t i) {
        decay_item it;
        it.seed = realization_seed(c.master_seed, i);
        const auto d = diagonalize(sample_disorder(c.model, it.seed), solver_of(c));
        for (std::size_t k = 0; k < d.size(); ++k) {
            const double e = d.energy(k);
            if (e < e_lo || e > e_hi) continue;
            const auto p = make_decay_profile(d, k, curve.at(e), c.epsilon);
            it.n_star.push_back(p.n_star ? static_cast<double>(*p.n_star) : std::numeric_limits<double>::infinity());
            it.energy.push_back(e);
        }
        return it;
    });
    account(report, b);

    const std::size_t nt = c.decay_thresholds.size();
    std::vector<std::size_t> hits(nt, 0), trials(nt, 0);
    std::vector<double> all;
    if (table) table->header = {"seed", "size", "energy", "n_star"};
    for (const auto& r : b.results) {
        if (!r) continue;
        for (std::size_t s = 0; s < r->n_star.size(); ++s) {
            const double ns = r->n_star[s];
            all.push_back(ns);
            for (std::size_t t = 0; t < nt; ++t) {
                ++trials[t];
                if (ns > static_cast<double>(c.decay_thresholds[t])) ++hits[t];
            }
            if (table)
                table->add_row({std::to_string(r->seed), std::to_string(c.model.box_size), format_number(r->energy[s]),
                                format_number(ns)});
        }
    }
    put_probabilities(report, "violation_beyond", as_doubles(std::span<const std::size_t>(c.decay_thresholds)), hits,
                      trials);
    report.samples["n_star"] = all;
    report.scalars["states"] = static_cast<double>(all.size());
    report.scalars["mid_energy_low"] = e_lo;
    report.scalars["mid_energy_high"] = e_hi;
    report.scalars["violation_nonincreasing"] = nonincreasing(report.probabilities["violation_beyond"]) ? 1.0 : 0.0;
    put_curve(report, "gamma_transfer", curve);
}

struct renorm_item {
    std::uint64_t seed;
    std::vector<double> energies;
    double v;
    std::vector<double> dv; // paired, per distance
    double base_gradient;
    double renormalized_gradient;
};

void run_renorm(const experiment_config& c, ensemble_report& report, sample_table* table) {
    const auto& rs = *c.renorm;
    const long center = rs.center.value_or(static_cast<long>(c.model.box_size / 2));
    const combination_spec base = c.spec ? *c.spec : combination_spec{{{1, center}}};
    const renorm_spec spec{base, rs.beta, center};
    const long x_delta = rs.x_delta.value_or(c.distances.back());
    const auto floor_site = static_cast<std::size_t>(std::min<long>(center + std::labs(x_delta),
                                                                    static_cast<long>(c.model.box_size) - 2));

    const auto b = run_batch(c.realizations, c.threads, [&](std::size_t i) {
        renorm_item it;
        it.seed = realization_seed(c.master_seed, i);
        const auto d = diagonalize(sample_disorder(c.model, it.seed), solver_of(c));
        it.energies.assign(d.energies().begin(), d.energies().end());
        it.v = overlap_v0(d, center);
        const auto g = v_gradient(d, center);
        for (long x : c.distances) {
            const auto j = static_cast<std::size_t>(center + x);
            it.dv.push_back((g[j] + g[j + 1]) / std::numbers::sqrt2);
        }
        it.base_gradient = paired_gradient(base, d, floor_site);
        const int c0 = spec.center_coefficient();
        it.renormalized_gradient = it.base_gradient + rs.beta * c0 * (g[floor_site] + g[floor_site + 1]);
        return it;
    });
    account(report, b);

    const std::size_t nd = c.distances.size();
    std::vector<std::vector<double>> dv(nd);
    std::vector<std::vector<double>> spectra;
    std::vector<double> vs, base_g, ren_g;
    if (table) {
        table->header = {"seed", "size", "v"};
        for (long x : c.distances) table->header.push_back("dv_paired_" + std::to_string(x));
    }
    for (const auto& r : b.results) {
        if (!r) continue;
        spectra.push_back(r->energies);
        vs.push_back(r->v);
        base_g.push_back(r->base_gradient);
        ren_g.push_back(r->renormalized_gradient);
        std::vector<std::string> row = {std::to_string(r->seed), std::to_string(c.model.box_size), format_number(r->v)};
        for (std::size_t k = 0; k < nd; ++k) {
            dv[k].push_back(r->dv[k]);
            row.push_back(format_number(r->dv[k]));
        }
        if (table) table->add_row(std::move(row));
    }

    const auto dos = estimate_dos(spectra, c.model.disorder, c.dos_bin_width);
    const auto curve = parallel_transfer_curve(c);
    const auto [gmin, gmax] = edge_excluded_extrema(curve, dos, c.lyapunov.edge_mass);

    const auto x = as_doubles(std::span<const long>(c.distances));
    std::vector<double> trimmed, plain;
    bool chebyshev = true;
    for (std::size_t k = 0; k < nd; ++k) {
        trimmed.push_back(trimmed_power_mean(dv[k], c.s, c.delta));
        plain.push_back(trimmed_power_mean(dv[k], c.s, 0.0));
        report.samples["dv_paired_" + std::to_string(c.distances[k])] = dv[k];
        for (double t : {1e-6, 1e-4, 1e-3, 1e-2, 1e-1}) {
            const auto tail = std::count_if(dv[k].begin(), dv[k].end(), [&](double v) { return std::abs(v) >= t; });
            if (static_cast<double>(tail) / static_cast<double>(dv[k].size()) > plain.back() / std::pow(t, c.s))
                chebyshev = false;
        }
    }
    report.series["dv_moment"] = {x, trimmed};
    report.series["dv_moment_untrimmed"] = {x, plain};
    report.fits["dv_moment"] = fit_entry::make("loglinear", x, trimmed);
    report.fits["dv_moment_untrimmed"] = fit_entry::make("loglinear", x, plain);
    const double expected = 2.0 * gmin * c.s;
    report.scalars["decay_rate"] = -report.fits["dv_moment"].slope;
    report.scalars["decay_rate_untrimmed"] = -report.fits["dv_moment_untrimmed"].slope;
    report.scalars["expected_rate"] = expected;
    report.scalars["decay_rate_ratio"] = report.scalars["decay_rate"] / expected;
    report.scalars["decay_rate_untrimmed_ratio"] = report.scalars["decay_rate_untrimmed"] / expected;
    report.scalars["gamma_min"] = gmin;
    report.scalars["gamma_max"] = gmax;
    report.scalars["chebyshev_holds"] = chebyshev ? 1.0 : 0.0;
    report.scalars["v_mean"] = ordered_mean(vs);

    const double threshold = beta_threshold(gmin, gmax, x_delta, rs.scale);
    const double floor_base = empirical_floor(base_g, c.delta);
    const double floor_ren = empirical_floor(ren_g, c.delta);
    report.scalars["beta"] = rs.beta;
    report.scalars["beta_threshold"] = threshold;
    report.scalars["beta_below_threshold"] = rs.beta <= threshold ? 1.0 : 0.0;
    report.scalars["floor_base"] = floor_base;
    report.scalars["floor_renormalized"] = floor_ren;
    report.scalars["floor_relative_change"] =
        floor_base > 0.0 ? std::abs(floor_ren - floor_base) / floor_base : std::numeric_limits<double>::infinity();
    report.scalars["floor_site"] = static_cast<double>(floor_site);
    put_curve(report, "gamma_transfer", curve);
}

} // namespace

ensemble_report run_experiment(const experiment_config& c, sample_table* table) {
    c.validate();
    const auto start = clock_type::now();
    ensemble_report report;
    report.experiment = std::string(to_string(c.experiment));
    report.config = config_to_json(c);
    report.threads = c.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : c.threads;

    sample_table local;
    sample_table* t = table ? table : (c.table_path.empty() ? nullptr : &local);

    switch (c.experiment) {
    case experiment_kind::spectrum: run_spectrum(c, report, t); break;
    case experiment_kind::lyapunov: run_lyapunov(c, report, t); break;
    case experiment_kind::dos: run_dos(c, report, t); break;
    case experiment_kind::gradient_floor: run_gradient_floor(c, report, t); break;
    case experiment_kind::level_stats: run_level_stats(c, report, t); break;
    case experiment_kind::sign_scan: run_sign_scan(c, report, t); break;
    case experiment_kind::moments: run_moments(c, report, t); break;
    case experiment_kind::decay: run_decay(c, report, t); break;
    case experiment_kind::renorm: run_renorm(c, report, t); break;
    }
    const std::size_t blocks = c.experiment == experiment_kind::moments && !c.sizes.empty() ? c.sizes.size() : 1;
    report.realizations = c.realizations * blocks;
    report.wall_time_seconds = std::chrono::duration<double>(clock_type::now() - start).count();

    if (!c.output_path.empty()) write_report(report, c.output_path);
    if (t && !c.table_path.empty()) write_table(*t, c.table_path);
    return report;
}

} // namespace anderson
