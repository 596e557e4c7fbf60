#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "anderson/estimates.hpp"
#include "anderson/model.hpp"
#include "anderson/spectrum.hpp"

namespace anderson {

enum class experiment_kind { spectrum, lyapunov, dos, gradient_floor, level_stats, sign_scan, moments, decay, renorm };

std::string_view to_string(experiment_kind k) noexcept;
experiment_kind parse_experiment(std::string_view name); // throws config_error
const std::vector<experiment_kind>& all_experiments();

struct lyapunov_settings {
    double energy_min = -3.0;
    double energy_max = 3.0;
    double energy_step = 0.1;
    std::size_t steps = 200000;
    // Integrated-DOS window kept when taking gamma_min / gamma_max.
    double edge_mass = 0.01;
};

struct renorm_settings {
    double beta = 0.0;
    std::optional<long> center; // defaults to the box center
    double scale = 1.0;         // the constant in the beta threshold
    std::optional<long> x_delta; // defaults to the largest distance
};

struct scan_settings {
    std::optional<long> site; // defaults to the spec's largest site + 10
    std::size_t points = 200;
    std::size_t refine = 4;
};

struct experiment_config {
    experiment_kind experiment = experiment_kind::spectrum;
    model_params model;
    std::optional<combination_spec> spec;
    std::optional<renorm_settings> renorm;
    std::size_t realizations = 1;
    std::uint64_t master_seed = 0;
    std::size_t threads = 0; // 0 = hardware concurrency
    std::string output_path;
    std::string table_path;
    eigen_method solver = eigen_method::automatic;
    int sweep_budget = 50; // QL sweeps allowed per eigenvalue

    // Box sizes for the moments experiment; empty means model.box_size only.
    std::vector<std::size_t> sizes;
    double s = 0.5;
    double delta = 0.05;
    double epsilon = 0.1;
    double eta = 0.1;
    double dos_bin_width = 0.02;
    lyapunov_settings lyapunov;

    std::vector<long> offsets = {10, 20, 30};
    std::optional<double> floor_threshold;

    // Window lengths for level statistics; empty selects one decade below
    // the mean level spacing.
    std::vector<double> interval_lengths;
    std::size_t interval_count = 6;

    std::vector<std::size_t> decay_thresholds = {10, 20, 30};
    double mid_spectrum_low = 0.25;
    double mid_spectrum_high = 0.75;

    scan_settings scan;

    std::vector<long> distances = {5, 10, 15, 20};

    // Throws config_error when a field required by the experiment is missing
    // or a value is out of range.
    void validate() const;
};

experiment_config config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const experiment_config& c);
// Parses a JSON file; // and /* */ comments are allowed.
experiment_config load_config(const std::string& path);

} // namespace anderson
