#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "anderson/stats.hpp"

namespace anderson {

inline constexpr int report_schema = 1;

struct probability_entry {
    double x = 0.0;
    std::size_t hits = 0;
    std::size_t trials = 0;
    double probability = 0.0;
    double lower = 0.0; // Wilson 95%
    double upper = 0.0;

    static probability_entry from_counts(double x, std::size_t hits, std::size_t trials);
    bool operator==(const probability_entry&) const = default;
};

struct histogram_entry {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
    bool operator==(const histogram_entry&) const = default;
};

struct series_entry {
    std::vector<double> x;
    std::vector<double> y;
    bool operator==(const series_entry&) const = default;
};

// Fitted line kept together with the points, so pooled reports can refit.
struct fit_entry {
    std::string kind; // "loglog" or "loglinear"
    std::vector<double> x;
    std::vector<double> y;
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;

    static fit_entry make(std::string kind, std::vector<double> x, std::vector<double> y);
    void refit();
    bool operator==(const fit_entry&) const = default;
};

struct ensemble_report {
    int schema = report_schema;
    std::string experiment;
    nlohmann::ordered_json config;
    std::size_t realizations = 0;
    std::size_t included = 0;
    std::map<std::string, std::size_t> exclusions; // reason -> count

    std::map<std::string, double> scalars;
    std::map<std::string, series_entry> series;
    std::map<std::string, histogram_entry> histograms;
    std::map<std::string, std::vector<probability_entry>> probabilities;
    std::map<std::string, fit_entry> fits;
    std::map<std::string, std::vector<double>> samples;
    std::map<std::string, double> diagnostics;

    // Run details that vary between identical runs; not part of the payload.
    double wall_time_seconds = 0.0;
    std::size_t threads = 0;

    std::size_t excluded() const;

    // Everything except the run details, serialized deterministically.
    nlohmann::ordered_json payload() const;
    nlohmann::ordered_json to_json() const;
    static ensemble_report from_json(const nlohmann::ordered_json& j); // throws schema_mismatch

    bool operator==(const ensemble_report& other) const;
};

// Merges reports of the same experiment and config apart from seed and
// realization count: counts add, samples concatenate, fits refit on the
// pooled points. Scalars and series are taken from the first report.
ensemble_report aggregate(std::span<const ensemble_report> reports);

void write_report(const ensemble_report& r, const std::string& path); // throws io_error
ensemble_report read_report(const std::string& path);

// Comma-separated table with a header row.
struct sample_table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    std::string to_csv() const;
};

std::string format_number(double v);
void write_table(const sample_table& t, const std::string& path);

} // namespace anderson
