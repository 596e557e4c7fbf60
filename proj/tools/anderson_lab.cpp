// Command-line front end: one subcommand per experiment, plus `aggregate`.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anderson/config.hpp"
#include "anderson/error.hpp"
#include "anderson/experiments.hpp"

using namespace anderson;

namespace {

constexpr int exit_config = 2;
constexpr int exit_budget = 3;

struct overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> realizations;
    std::optional<std::size_t> size;
    std::optional<double> disorder;
    std::optional<std::size_t> threads;
    std::string spec;
    std::string out;
    std::string table;
};

// "1@30,-2@50,1@70" -> terms (coefficient @ site).
combination_spec parse_spec(const std::string& text) {
    combination_spec spec;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto at = item.find('@');
        if (at == std::string::npos) throw config_error("spec term '" + item + "' is not coefficient@site");
        try {
            spec.terms.push_back({std::stoi(item.substr(0, at)), std::stol(item.substr(at + 1))});
        } catch (const std::logic_error&) {
            throw config_error("spec term '" + item + "' is not coefficient@site");
        }
    }
    return spec;
}

experiment_config build_config(experiment_kind kind, const overrides& o) {
    experiment_config c;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw config_error("cannot open config file '" + o.config_path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(buf.str(), nullptr, true, true);
        } catch (const nlohmann::json::parse_error& e) {
            throw config_error(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw config_error("config must be a JSON object");
        if (!j.contains("experiment")) j["experiment"] = std::string(to_string(kind));
        c = config_from_json(j);
        if (c.experiment != kind)
            throw config_error("config is for experiment '" + std::string(to_string(c.experiment)) +
                               "' but the subcommand is '" + std::string(to_string(kind)) + "'");
    } else {
        c.experiment = kind;
        c.model = {200, 1.0};
        c.realizations = 100;
        c.master_seed = 1;
    }
    if (o.seed) c.master_seed = *o.seed;
    if (o.realizations) c.realizations = *o.realizations;
    if (o.size) c.model.box_size = *o.size;
    if (o.disorder) c.model.disorder = *o.disorder;
    if (o.threads) c.threads = *o.threads;
    if (!o.spec.empty()) c.spec = parse_spec(o.spec);
    if (!o.out.empty()) c.output_path = o.out;
    if (!o.table.empty()) c.table_path = o.table;
    if (kind == experiment_kind::renorm && !c.renorm) c.renorm = renorm_settings{};
    return c;
}

void print_summary(const ensemble_report& r) {
    std::fprintf(stderr, "%s: %zu realizations, %zu included, %zu excluded, %.2f s\n", r.experiment.c_str(),
                 r.realizations, r.included, r.excluded(), r.wall_time_seconds);
    for (const auto& [k, v] : r.scalars) std::fprintf(stderr, "  %-28s %.6g\n", k.c_str(), v);
    for (const auto& [k, entries] : r.probabilities)
        for (const auto& e : entries)
            std::fprintf(stderr, "  P[%s](%g) = %.4f  [%.4f, %.4f]  (%zu/%zu)\n", k.c_str(), e.x, e.probability,
                         e.lower, e.upper, e.hits, e.trials);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo laboratory for the one-dimensional Anderson model"};
    app.require_subcommand(1);

    overrides o;
    experiment_kind chosen = experiment_kind::spectrum;
    bool run = false;
    for (auto kind : all_experiments()) {
        auto* sub = app.add_subcommand(std::string(to_string(kind)), "run the " + std::string(to_string(kind)) + " experiment");
        sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--realizations", o.realizations, "number of disorder realizations M");
        sub->add_option("--size", o.size, "box size |Lambda|");
        sub->add_option("--disorder", o.disorder, "disorder strength Delta");
        sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
        sub->add_option("--spec", o.spec, "combination as coefficient@site list, e.g. 1@30,-2@50,1@70");
        sub->add_option("--out", o.out, "report path (JSON); stdout when omitted");
        sub->add_option("--table", o.table, "per-sample CSV path");
        sub->callback([&, kind] {
            chosen = kind;
            run = true;
        });
    }

    std::vector<std::string> inputs;
    std::string merged_out;
    auto* agg = app.add_subcommand("aggregate", "merge reports of the same experiment");
    agg->add_option("reports", inputs, "report files")->required()->check(CLI::ExistingFile);
    agg->add_option("--out", merged_out, "merged report path; stdout when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (run) {
            const auto config = build_config(chosen, o);
            const auto report = run_experiment(config);
            print_summary(report);
            if (config.output_path.empty()) std::cout << report.to_json().dump(2) << '\n';
            return 0;
        }
        std::vector<ensemble_report> reports;
        for (const auto& path : inputs) reports.push_back(read_report(path));
        const auto merged = aggregate(reports);
        if (merged_out.empty())
            std::cout << merged.to_json().dump(2) << '\n';
        else
            write_report(merged, merged_out);
        print_summary(merged);
        return 0;
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const failure_budget_exceeded& e) {
        std::fprintf(stderr, "numerical failure budget exceeded: %s\n", e.what());
        return exit_budget;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
