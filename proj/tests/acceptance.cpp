// Acceptance suite: one PASS/FAIL line per criterion, all at master seed 1.
//
// Usage: acceptance [--only N]... [--known-failure N]...
// Exit status is 0 when every failing criterion was listed as a known failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "anderson/config.hpp"
#include "anderson/estimates.hpp"
#include "anderson/experiments.hpp"
#include "anderson/lyapunov.hpp"
#include "anderson/renormalization.hpp"
#include "anderson/spectrum.hpp"
#include "oracles.hpp"

using namespace anderson;

namespace {

constexpr std::uint64_t master = 1;

struct outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

experiment_config base_config(experiment_kind kind, std::size_t box, std::size_t realizations) {
    experiment_config c;
    c.experiment = kind;
    c.model = {box, 1.0};
    c.realizations = realizations;
    c.master_seed = master;
    c.threads = 0;
    return c;
}

const combination_spec three_term{{{1, 30}, {-2, 50}, {1, 70}}};

bool nonincreasing(const std::vector<probability_entry>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i].probability > v[i - 1].probability) return false;
    return true;
}

std::string probabilities_text(const std::vector<probability_entry>& v) {
    std::string s;
    for (const auto& e : v) s += fmt("%s%g:%.4f", s.empty() ? "" : " ", e.x, e.probability);
    return s;
}

outcome clean_spectrum() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto d = diagonalize(sample_disorder({1000, 0.0}, master));
    const double elapsed = seconds_since(t0);
    const auto exact = oracle::free_chain_spectrum(1000);
    double worst = 0.0;
    for (std::size_t k = 0; k < exact.size(); ++k) worst = std::max(worst, std::abs(d.energy(k) - exact[k]));
    return {worst <= 1e-9 && elapsed < 5.0, fmt("max deviation %.3g, %.2f s", worst, elapsed)};
}

double residual(const tridiagonal_hamiltonian& h, const spectral_decomposition& d, std::size_t k) {
    const auto hv = h.apply(d.vector(k));
    double r = 0.0;
    for (std::size_t i = 0; i < hv.size(); ++i) r = std::max(r, std::abs(hv[i] - d.energy(k) * d.amplitude(k, i)));
    return r;
}

outcome solver_oracle() {
    double worst_value = 0.0, worst_residual = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto r = sample_disorder({200, 1.0}, realization_seed(master, i));
        const auto h = build_hamiltonian(r);
        const auto exact = oracle::bisection_eigenvalues(r.epsilon);
        for (auto method : {eigen_method::ql_accumulate, eigen_method::inverse_iteration}) {
            const auto d = diagonalize(r, {.method = method});
            for (std::size_t k = 0; k < d.size(); ++k) {
                worst_value = std::max(worst_value, std::abs(d.energy(k) - exact[k]));
                worst_residual = std::max(worst_residual, residual(h, d, k) / h.norm_inf());
            }
        }
    }
    return {worst_value <= 1e-8 && worst_residual <= 1e-10,
            fmt("max eigenvalue error %.3g, max residual / ||H|| %.3g", worst_value, worst_residual)};
}

outcome feynman_hellmann() {
    const double h = 1e-5;
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto r = sample_disorder({100, 1.0}, realization_seed(master, i));
        const auto base = diagonalize(r);
        const auto states = resolve_states(three_term, base);
        const auto g = fh_gradient(three_term, base);
        double err = 0.0, scale = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            double side[2];
            for (int s = 0; s < 2; ++s) {
                auto moved = r;
                moved.epsilon[j] += s == 0 ? h : -h;
                const auto d = diagonalize(moved);
                double f = 0.0;
                for (std::size_t t = 0; t < states.size(); ++t) {
                    const auto site = static_cast<std::size_t>(three_term.terms[t].site);
                    f += three_term.terms[t].coefficient * d.energy(track_state(d, site, base.vector(states[t])));
                }
                side[s] = f;
            }
            err = std::max(err, std::abs((side[0] - side[1]) / (2.0 * h) - g[j]));
            scale = std::max(scale, std::abs(g[j]));
        }
        worst = std::max(worst, err / scale);
    }
    return {worst <= 1e-5, fmt("max relative error %.3g over 20 seeds", worst)};
}

outcome lyapunov_crosscheck() {
    auto c = base_config(experiment_kind::lyapunov, 400, 2000);
    c.lyapunov.energy_min = -1.5;
    c.lyapunov.energy_max = 1.5;
    c.lyapunov.energy_step = 0.5;
    c.lyapunov.steps = 1000000;
    const auto rep = run_experiment(c);
    const double rel = rep.scalars.at("max_deviation_relative");
    const auto clean = lyapunov_transfer({2, 0.0}, 2.5, 1000000, master);
    const double clean_err = std::abs(clean.gamma - std::numbers::ln2);
    return {rel <= 0.05 && clean_err <= 1e-3,
            fmt("deviation %.2f%% of gamma_max, clean gamma(2.5) - ln 2 = %.2g", 100.0 * rel, clean_err)};
}

outcome minami_scaling() {
    const auto c = base_config(experiment_kind::level_stats, 200, 5000);
    const auto rep = run_experiment(c);
    const double exponent = rep.scalars.at("minami_exponent");
    const double rho = rep.scalars.at("sup_density");
    bool bound = true;
    for (const auto& e : rep.probabilities.at("at_least_two")) {
        const double ref = std::pow(std::numbers::pi * rho * e.x * 200.0, 2);
        bound = bound && e.probability <= ref;
    }
    return {std::abs(exponent - 2.0) <= 0.3 && bound,
            fmt("exponent %.3f, Minami bound %s at every length", exponent, bound ? "holds" : "violated")};
}

outcome size_independence() {
    auto c = base_config(experiment_kind::moments, 100, 2000);
    c.spec = three_term;
    c.sizes = {100, 200, 400, 800};
    c.s = 0.5;
    c.delta = 0.05;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = run_experiment(c);
    const double elapsed = seconds_since(t0);
    const auto& trimmed = rep.series.at("trimmed_mean").y;
    const auto& plain = rep.series.at("untrimmed_mean").y;
    const auto [lo, hi] = std::minmax_element(trimmed.begin(), trimmed.end());
    std::string untrimmed;
    for (double v : plain) untrimmed += fmt(" %.3g", v);
    return {*hi / *lo <= 2.0,
            fmt("trimmed max/min %.3f, untrimmed%s, %.0f s", *hi / *lo, untrimmed.c_str(), elapsed)};
}

outcome decay_bound() {
    auto c = base_config(experiment_kind::decay, 400, 500);
    c.epsilon = 0.1;
    c.decay_thresholds = {10, 20, 30};
    const auto rep = run_experiment(c);
    const auto& p = rep.probabilities.at("violation_beyond");
    const double at30 = p.back().probability;
    return {at30 < 0.05 && nonincreasing(p), "violation fraction " + probabilities_text(p)};
}

outcome gradient_floor() {
    auto c = base_config(experiment_kind::gradient_floor, 200, 500);
    c.spec = combination_spec{{{1, 100}}};
    c.offsets = {10, 20, 30};
    c.epsilon = 0.1;
    const auto rep = run_experiment(c);
    const auto& p = rep.probabilities.at("below_floor");
    return {nonincreasing(p), "Pr(|paired gradient| <= C_j) " + probabilities_text(p)};
}

outcome renormalization_decay() {
    auto c = base_config(experiment_kind::renorm, 200, 1000);
    c.renorm = renorm_settings{};
    c.s = 0.5;
    c.delta = 0.0;
    const auto rep = run_experiment(c);
    const double ratio = rep.scalars.at("decay_rate_ratio");
    const bool rate_ok = std::abs(ratio - 1.0) <= 0.3;

    const double h = 1e-6;
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto r = sample_disorder({200, 1.0}, realization_seed(master, i));
        const auto d = diagonalize(r);
        const long center = 100;
        const auto n = static_cast<std::size_t>(d.state_at(center));
        const auto ref = d.vector(n);
        for (std::size_t j : {100u, 103u, 110u}) {
            std::vector<double> side[2];
            for (int s = 0; s < 2; ++s) {
                auto moved = r;
                moved.epsilon[j] += s == 0 ? h : -h;
                const auto e = diagonalize(moved);
                const auto v = e.vector(track_state(e, static_cast<std::size_t>(center), ref));
                double dot = 0.0;
                for (std::size_t x = 0; x < v.size(); ++x) dot += v[x] * ref[x];
                side[s].assign(v.begin(), v.end());
                if (dot < 0.0)
                    for (double& a : side[s]) a = -a;
            }
            const auto dpsi = perturbative_vec_derivative(d, n, j);
            double err = 0.0, scale = 0.0;
            for (std::size_t x = 0; x < dpsi.size(); ++x) {
                err = std::max(err, std::abs((side[0][x] - side[1][x]) / (2.0 * h) - dpsi[x]));
                scale = std::max(scale, std::abs(dpsi[x]));
            }
            worst = std::max(worst, err / scale);
        }
    }
    const bool fd_ok = worst <= 1e-4;
    return {rate_ok && fd_ok, fmt("decay rate %.4f vs expected %.4f (ratio %.3f), eigenvector derivative rel. error %.2g",
                                  rep.scalars.at("decay_rate"), rep.scalars.at("expected_rate"), ratio, worst)};
}

outcome determinism() {
    std::string failed;
    for (auto kind : all_experiments()) {
        auto c = base_config(kind, 120, 40);
        c.spec = combination_spec{{{1, 40}, {-2, 60}, {1, 80}}};
        c.renorm = renorm_settings{};
        c.sizes = {100, 120};
        c.lyapunov.steps = 50000;
        c.lyapunov.energy_step = 0.25;
        c.offsets = {5, 10, 15};
        c.scan.points = 40;
        std::string first;
        for (std::size_t threads : {1u, 2u, 5u}) {
            c.threads = threads;
            const auto payload = run_experiment(c).payload().dump();
            if (first.empty()) first = payload;
            else if (payload != first) failed += " " + std::string(to_string(kind));
        }
    }
    return {failed.empty(), failed.empty() ? "payloads identical for 1, 2 and 5 threads in every experiment"
                                           : "payload differs in" + failed};
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only, known;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        const int n = std::atoi(argv[i + 1]);
        if (flag == "--only") only.insert(n);
        else if (flag == "--known-failure") known.insert(n);
        else {
            std::fprintf(stderr, "unknown option %s\n", argv[i]);
            return 2;
        }
    }

    const std::vector<std::pair<const char*, std::function<outcome()>>> criteria = {
        {"clean-chain spectrum", clean_spectrum},
        {"solver oracle", solver_oracle},
        {"Feynman-Hellmann gradient", feynman_hellmann},
        {"Lyapunov cross-check", lyapunov_crosscheck},
        {"Minami scaling", minami_scaling},
        {"size independence of the trimmed moment", size_independence},
        {"eigenfunction decay bound", decay_bound},
        {"gradient floor", gradient_floor},
        {"renormalization decay", renormalization_decay},
        {"determinism", determinism},
    };

    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const bool listed = known.count(id) > 0;
        std::printf("AC%-2d %s  %s: %s%s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str(),
                    !o.pass && listed ? " [known failure]" : "");
        std::fflush(stdout);
        if (!o.pass && !listed) ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
