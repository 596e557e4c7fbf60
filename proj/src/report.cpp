#include "anderson/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "anderson/error.hpp"

namespace anderson {

using ojson = nlohmann::ordered_json;

namespace {

// JSON has no inf / nan; those travel as strings.
ojson number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double read_number(const ojson& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw schema_mismatch("expected a number in the report");
}

ojson numbers(const std::vector<double>& v) {
    auto a = ojson::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

std::vector<double> read_numbers(const ojson& j) {
    std::vector<double> v;
    for (const auto& x : j) v.push_back(read_number(x));
    return v;
}

bool same_number(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same_numbers(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_number(a[i], b[i])) return false;
    return true;
}

} // namespace

probability_entry probability_entry::from_counts(double x, std::size_t hits, std::size_t trials) {
    probability_entry e;
    e.x = x;
    e.hits = hits;
    e.trials = trials;
    e.probability = trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials);
    const auto ci = wilson_interval(hits, trials);
    e.lower = ci.lower;
    e.upper = ci.upper;
    return e;
}

fit_entry fit_entry::make(std::string kind, std::vector<double> x, std::vector<double> y) {
    fit_entry f;
    f.kind = std::move(kind);
    f.x = std::move(x);
    f.y = std::move(y);
    f.refit();
    return f;
}

void fit_entry::refit() {
    line_fit lf;
    if (kind == "loglog")
        lf = fit_exponent(x, y);
    else if (kind == "loglinear")
        lf = fit_log_linear(x, y);
    else if (kind == "linear")
        lf = fit_line(x, y);
    else
        throw schema_mismatch("unknown fit kind '" + kind + "'");
    slope = lf.slope;
    intercept = lf.intercept;
    std_error = lf.std_error;
}

std::size_t ensemble_report::excluded() const {
    std::size_t n = 0;
    for (const auto& [reason, count] : exclusions) n += count;
    return n;
}

ojson ensemble_report::payload() const {
    ojson j;
    j["schema"] = schema;
    j["experiment"] = experiment;
    j["config"] = config;
    j["realizations"] = realizations;
    j["included"] = included;
    j["excluded"] = exclusions;
    ojson sc = ojson::object();
    for (const auto& [k, v] : scalars) sc[k] = number(v);
    j["scalars"] = sc;
    ojson se = ojson::object();
    for (const auto& [k, v] : series) se[k] = {{"x", numbers(v.x)}, {"y", numbers(v.y)}};
    j["series"] = se;
    ojson hi = ojson::object();
    for (const auto& [k, v] : histograms) hi[k] = {{"edges", numbers(v.edges)}, {"counts", v.counts}};
    j["histograms"] = hi;
    ojson pr = ojson::object();
    for (const auto& [k, v] : probabilities) {
        auto a = ojson::array();
        for (const auto& e : v)
            a.push_back({{"x", number(e.x)},
                         {"hits", e.hits},
                         {"trials", e.trials},
                         {"probability", e.probability},
                         {"lower", e.lower},
                         {"upper", e.upper}});
        pr[k] = a;
    }
    j["probabilities"] = pr;
    ojson fi = ojson::object();
    for (const auto& [k, v] : fits)
        fi[k] = {{"kind", v.kind},           {"slope", number(v.slope)}, {"intercept", number(v.intercept)},
                 {"std_error", number(v.std_error)}, {"x", numbers(v.x)},        {"y", numbers(v.y)}};
    j["fits"] = fi;
    ojson sa = ojson::object();
    for (const auto& [k, v] : samples) sa[k] = numbers(v);
    j["samples"] = sa;
    ojson di = ojson::object();
    for (const auto& [k, v] : diagnostics) di[k] = number(v);
    j["diagnostics"] = di;
    return j;
}

ojson ensemble_report::to_json() const {
    auto j = payload();
    j["run"] = {{"wall_time_seconds", wall_time_seconds}, {"threads", threads}};
    return j;
}

ensemble_report ensemble_report::from_json(const ojson& j) {
    try {
        ensemble_report r;
        r.schema = j.at("schema").get<int>();
        if (r.schema != report_schema)
            throw schema_mismatch("report schema " + std::to_string(r.schema) + " is not supported");
        r.experiment = j.at("experiment").get<std::string>();
        r.config = j.at("config");
        r.realizations = j.at("realizations").get<std::size_t>();
        r.included = j.at("included").get<std::size_t>();
        r.exclusions = j.at("excluded").get<std::map<std::string, std::size_t>>();
        for (const auto& [k, v] : j.at("scalars").items()) r.scalars[k] = read_number(v);
        for (const auto& [k, v] : j.at("series").items())
            r.series[k] = {read_numbers(v.at("x")), read_numbers(v.at("y"))};
        for (const auto& [k, v] : j.at("histograms").items())
            r.histograms[k] = {read_numbers(v.at("edges")), v.at("counts").get<std::vector<std::size_t>>()};
        for (const auto& [k, v] : j.at("probabilities").items()) {
            auto& out = r.probabilities[k];
            for (const auto& e : v)
                out.push_back({read_number(e.at("x")), e.at("hits").get<std::size_t>(), e.at("trials").get<std::size_t>(),
                               e.at("probability").get<double>(), e.at("lower").get<double>(),
                               e.at("upper").get<double>()});
        }
        for (const auto& [k, v] : j.at("fits").items()) {
            fit_entry f;
            f.kind = v.at("kind").get<std::string>();
            f.x = read_numbers(v.at("x"));
            f.y = read_numbers(v.at("y"));
            f.slope = read_number(v.at("slope"));
            f.intercept = read_number(v.at("intercept"));
            f.std_error = read_number(v.at("std_error"));
            r.fits[k] = std::move(f);
        }
        for (const auto& [k, v] : j.at("samples").items()) r.samples[k] = read_numbers(v);
        for (const auto& [k, v] : j.at("diagnostics").items()) r.diagnostics[k] = read_number(v);
        if (j.contains("run")) {
            r.wall_time_seconds = j["run"].value("wall_time_seconds", 0.0);
            r.threads = j["run"].value("threads", std::size_t{0});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw schema_mismatch(std::string("malformed report: ") + e.what());
    }
}

bool ensemble_report::operator==(const ensemble_report& o) const {
    auto same_map = [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return false;
        for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
            if (ia->first != ib->first || !same_number(ia->second, ib->second)) return false;
        return true;
    };
    if (schema != o.schema || experiment != o.experiment || config != o.config || realizations != o.realizations ||
        included != o.included || exclusions != o.exclusions || histograms != o.histograms ||
        probabilities != o.probabilities)
        return false;
    if (!same_map(scalars, o.scalars) || !same_map(diagnostics, o.diagnostics)) return false;
    if (series.size() != o.series.size() || fits.size() != o.fits.size() || samples.size() != o.samples.size())
        return false;
    for (auto a = series.begin(), b = o.series.begin(); a != series.end(); ++a, ++b)
        if (a->first != b->first || !same_numbers(a->second.x, b->second.x) || !same_numbers(a->second.y, b->second.y))
            return false;
    for (auto a = fits.begin(), b = o.fits.begin(); a != fits.end(); ++a, ++b)
        if (a->first != b->first || a->second.kind != b->second.kind || !same_numbers(a->second.x, b->second.x) ||
            !same_numbers(a->second.y, b->second.y) || !same_number(a->second.slope, b->second.slope) ||
            !same_number(a->second.intercept, b->second.intercept) ||
            !same_number(a->second.std_error, b->second.std_error))
            return false;
    for (auto a = samples.begin(), b = o.samples.begin(); a != samples.end(); ++a, ++b)
        if (a->first != b->first || !same_numbers(a->second, b->second)) return false;
    return true;
}

namespace {

nlohmann::ordered_json comparable_config(nlohmann::ordered_json c) {
    c.erase("master_seed");
    c.erase("realizations");
    return c;
}

} // namespace

ensemble_report aggregate(std::span<const ensemble_report> reports) {
    if (reports.empty()) throw empty_ensemble();
    ensemble_report out = reports.front();
    const auto reference = comparable_config(out.config);
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const auto& r = reports[i];
        if (r.schema != out.schema || r.experiment != out.experiment)
            throw schema_mismatch("cannot merge reports of different experiments or schemas");
        if (comparable_config(r.config) != reference)
            throw schema_mismatch("cannot merge reports with different configurations");
        out.realizations += r.realizations;
        out.included += r.included;
        for (const auto& [k, v] : r.exclusions) out.exclusions[k] += v;

        if (r.histograms.size() != out.histograms.size()) throw schema_mismatch("histogram sets differ");
        for (const auto& [k, h] : r.histograms) {
            auto it = out.histograms.find(k);
            if (it == out.histograms.end() || it->second.edges != h.edges)
                throw schema_mismatch("histogram '" + k + "' has different bins");
            for (std::size_t b = 0; b < h.counts.size(); ++b) it->second.counts[b] += h.counts[b];
        }
        if (r.probabilities.size() != out.probabilities.size()) throw schema_mismatch("probability sets differ");
        for (const auto& [k, entries] : r.probabilities) {
            auto it = out.probabilities.find(k);
            if (it == out.probabilities.end() || it->second.size() != entries.size())
                throw schema_mismatch("probability table '" + k + "' differs");
            for (std::size_t e = 0; e < entries.size(); ++e) {
                auto& mine = it->second[e];
                if (mine.x != entries[e].x) throw schema_mismatch("probability table '" + k + "' has different x");
                mine = probability_entry::from_counts(mine.x, mine.hits + entries[e].hits,
                                                      mine.trials + entries[e].trials);
            }
        }
        if (r.fits.size() != out.fits.size()) throw schema_mismatch("fit sets differ");
        for (const auto& [k, f] : r.fits) {
            auto it = out.fits.find(k);
            if (it == out.fits.end() || it->second.kind != f.kind) throw schema_mismatch("fit '" + k + "' differs");
            it->second.x.insert(it->second.x.end(), f.x.begin(), f.x.end());
            it->second.y.insert(it->second.y.end(), f.y.begin(), f.y.end());
        }
        for (const auto& [k, v] : r.samples) {
            auto& mine = out.samples[k];
            mine.insert(mine.end(), v.begin(), v.end());
        }
        out.wall_time_seconds += r.wall_time_seconds;
    }
    for (auto& [k, f] : out.fits) f.refit();
    out.config["realizations"] = out.realizations;
    return out;
}

void write_report(const ensemble_report& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write report to '" + path + "'");
    out << r.to_json().dump(2) << '\n';
    if (!out) throw io_error("failed while writing '" + path + "'");
}

ensemble_report read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read report '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return ensemble_report::from_json(ojson::parse(buf.str()));
    } catch (const nlohmann::json::parse_error& e) {
        throw schema_mismatch(std::string("report is not valid JSON: ") + e.what());
    }
}

void sample_table::add_row(std::vector<std::string> row) {
    if (row.size() != header.size()) throw invalid_argument("table row width does not match the header");
    rows.push_back(std::move(row));
}

std::string sample_table::to_csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_table(const sample_table& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write table to '" + path + "'");
    out << t.to_csv();
    if (!out) throw io_error("failed while writing '" + path + "'");
}

} // namespace anderson
