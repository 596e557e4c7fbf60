#include "anderson/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "anderson/error.hpp"

namespace anderson {

namespace {

struct named_experiment {
    experiment_kind kind;
    std::string_view name;
};

constexpr named_experiment experiment_names[] = {
    {experiment_kind::spectrum, "spectrum"},
    {experiment_kind::lyapunov, "lyapunov"},
    {experiment_kind::dos, "dos"},
    {experiment_kind::gradient_floor, "gradient_floor"},
    {experiment_kind::level_stats, "level_stats"},
    {experiment_kind::sign_scan, "sign_scan"},
    {experiment_kind::moments, "moments"},
    {experiment_kind::decay, "decay"},
    {experiment_kind::renorm, "renorm"},
};

std::string_view solver_name(eigen_method m) {
    switch (m) {
    case eigen_method::ql_accumulate: return "ql";
    case eigen_method::inverse_iteration: return "inverse_iteration";
    case eigen_method::automatic: return "automatic";
    }
    return "automatic";
}

eigen_method parse_solver(const std::string& s) {
    if (s == "ql") return eigen_method::ql_accumulate;
    if (s == "inverse_iteration") return eigen_method::inverse_iteration;
    if (s == "automatic") return eigen_method::automatic;
    throw config_error("unknown solver '" + s + "' (expected ql, inverse_iteration or automatic)");
}

// Reads the keys of one JSON object and rejects anything it was not asked for.
class object_reader {
public:
    object_reader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw config_error(where_ + " must be an object");
    }

    bool has(const std::string& key) {
        known_.insert(key);
        return j_.contains(key);
    }

    template <typename T>
    T required(const std::string& key) {
        if (!has(key)) throw config_error("missing field '" + path(key) + "'");
        return convert<T>(key);
    }

    template <typename T>
    void optional(const std::string& key, T& out) {
        if (has(key)) out = convert<T>(key);
    }

    template <typename T>
    void optional(const std::string& key, std::optional<T>& out) {
        if (has(key)) out = convert<T>(key);
    }

    const nlohmann::json& child(const std::string& key) {
        known_.insert(key);
        return j_.at(key);
    }

    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!known_.count(key)) throw config_error("unknown key '" + path(key) + "'");
    }

private:
    template <typename T>
    T convert(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw config_error("field '" + path(key) + "' has the wrong type");
        }
    }

    const nlohmann::json& j_;
    std::string where_;
    std::set<std::string> known_;
};

model_params read_model(const nlohmann::json& j) {
    object_reader r(j, "model");
    model_params m;
    m.box_size = r.required<std::size_t>("box_size");
    m.disorder = r.required<double>("disorder");
    if (r.has("boundary") && r.child("boundary") != "open")
        throw config_error("only open boundaries are supported");
    r.finish();
    return m;
}

combination_spec read_spec(const nlohmann::json& j) {
    if (!j.is_array()) throw config_error("spec must be a list of {coefficient, site} terms");
    combination_spec spec;
    for (std::size_t i = 0; i < j.size(); ++i) {
        object_reader r(j[i], "spec[" + std::to_string(i) + "]");
        combination_term t;
        t.coefficient = r.required<int>("coefficient");
        t.site = r.required<long>("site");
        r.finish();
        spec.terms.push_back(t);
    }
    return spec;
}

renorm_settings read_renorm(const nlohmann::json& j) {
    object_reader r(j, "renorm");
    renorm_settings s;
    s.beta = r.required<double>("beta");
    r.optional("center", s.center);
    r.optional("scale", s.scale);
    r.optional("x_delta", s.x_delta);
    r.finish();
    return s;
}

lyapunov_settings read_lyapunov(const nlohmann::json& j) {
    object_reader r(j, "lyapunov");
    lyapunov_settings s;
    r.optional("energy_min", s.energy_min);
    r.optional("energy_max", s.energy_max);
    r.optional("energy_step", s.energy_step);
    r.optional("steps", s.steps);
    r.optional("edge_mass", s.edge_mass);
    r.finish();
    return s;
}

scan_settings read_scan(const nlohmann::json& j) {
    object_reader r(j, "scan");
    scan_settings s;
    r.optional("site", s.site);
    r.optional("points", s.points);
    r.optional("refine", s.refine);
    r.finish();
    return s;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw config_error(what);
}

} // namespace

std::string_view to_string(experiment_kind k) noexcept {
    for (const auto& e : experiment_names)
        if (e.kind == k) return e.name;
    return "unknown";
}

experiment_kind parse_experiment(std::string_view name) {
    for (const auto& e : experiment_names)
        if (e.name == name) return e.kind;
    throw config_error("unknown experiment '" + std::string(name) + "'");
}

const std::vector<experiment_kind>& all_experiments() {
    static const std::vector<experiment_kind> all = [] {
        std::vector<experiment_kind> v;
        for (const auto& e : experiment_names) v.push_back(e.kind);
        return v;
    }();
    return all;
}

void experiment_config::validate() const {
    try {
        model.validate();
    } catch (const invalid_argument& e) {
        throw config_error(std::string("model: ") + e.what());
    }
    require(realizations >= 1, "realizations must be at least 1");
    require(sweep_budget >= 1, "sweep_budget must be at least 1");

    const bool needs_spec = experiment == experiment_kind::gradient_floor || experiment == experiment_kind::sign_scan ||
                            experiment == experiment_kind::moments;
    if (needs_spec && !spec) throw config_error("experiment '" + std::string(to_string(experiment)) + "' needs a spec");
    if (experiment == experiment_kind::renorm && !renorm) throw config_error("experiment 'renorm' needs a renorm block");

    std::size_t smallest = model.box_size;
    for (auto n : sizes) {
        require(n >= 2, "sizes must be at least 2");
        smallest = std::min(smallest, n);
    }
    if (spec) {
        try {
            spec->validate();
        } catch (const invalid_argument& e) {
            throw config_error(std::string("spec: ") + e.what());
        }
        require(spec->max_site() < static_cast<long>(smallest), "spec site outside the smallest box");
    }

    require(s > 0.0 && s < 1.0, "s must lie in (0, 1)");
    require(delta >= 0.0 && delta < 1.0, "delta must lie in [0, 1)");
    require(epsilon > 0.0, "epsilon must be positive");
    require(eta > 0.0, "eta must be positive");
    require(dos_bin_width > 0.0, "dos_bin_width must be positive");
    require(lyapunov.energy_step > 0.0 && lyapunov.energy_max >= lyapunov.energy_min, "bad lyapunov energy grid");
    require(lyapunov.steps >= 10000, "lyapunov.steps must be at least 10000");
    require(lyapunov.edge_mass >= 0.0 && lyapunov.edge_mass < 0.5, "lyapunov.edge_mass must lie in [0, 0.5)");

    if (experiment == experiment_kind::gradient_floor) {
        require(!offsets.empty(), "offsets must not be empty");
        for (long off : offsets) {
            require(off > 0, "offsets must be positive");
            require(spec->max_site() + off + 1 < static_cast<long>(model.box_size), "offset runs past the box edge");
        }
        if (floor_threshold) require(*floor_threshold >= 0.0, "floor_threshold must be non-negative");
    }
    for (double len : interval_lengths) require(len > 0.0, "interval_lengths must be positive");
    require(interval_count >= 2, "interval_count must be at least 2");
    require(!decay_thresholds.empty() && std::is_sorted(decay_thresholds.begin(), decay_thresholds.end()),
            "decay_thresholds must be a non-empty ascending list");
    require(mid_spectrum_low >= 0.0 && mid_spectrum_low < mid_spectrum_high && mid_spectrum_high <= 1.0,
            "mid_spectrum must satisfy 0 <= low < high <= 1");
    require(scan.points >= 2, "scan.points must be at least 2");
    if (experiment == experiment_kind::sign_scan) {
        const long site = scan.site.value_or(spec->max_site() + 10);
        require(site >= 0 && site + 1 < static_cast<long>(model.box_size), "scan.site outside the box");
    }
    if (experiment == experiment_kind::renorm) {
        require(renorm->beta >= 0.0, "renorm.beta must be non-negative");
        const long center = renorm->center.value_or(static_cast<long>(model.box_size / 2));
        require(center >= 0 && center < static_cast<long>(model.box_size), "renorm.center outside the box");
        require(distances.size() >= 2, "renorm needs at least two distances");
        for (long x : distances) {
            require(x > 0, "distances must be positive");
            require(center + x + 1 < static_cast<long>(model.box_size), "distance runs past the box edge");
        }
        if (spec) require(spec->max_site() + 1 < static_cast<long>(model.box_size), "spec too close to the box edge");
    }
}

experiment_config config_from_json(const nlohmann::json& j) {
    object_reader r(j, "");
    experiment_config c;
    c.experiment = parse_experiment(r.required<std::string>("experiment"));
    if (!r.has("model")) throw config_error("missing field 'model'");
    c.model = read_model(r.child("model"));
    c.realizations = r.required<std::size_t>("realizations");
    c.master_seed = r.required<std::uint64_t>("master_seed");
    if (r.has("spec")) c.spec = read_spec(r.child("spec"));
    if (r.has("renorm")) c.renorm = read_renorm(r.child("renorm"));
    if (r.has("lyapunov")) c.lyapunov = read_lyapunov(r.child("lyapunov"));
    if (r.has("scan")) c.scan = read_scan(r.child("scan"));
    if (r.has("solver")) c.solver = parse_solver(r.required<std::string>("solver"));
    if (r.has("mid_spectrum")) {
        const auto w = r.required<std::vector<double>>("mid_spectrum");
        if (w.size() != 2) throw config_error("mid_spectrum must be [low, high]");
        c.mid_spectrum_low = w[0];
        c.mid_spectrum_high = w[1];
    }
    r.optional("sweep_budget", c.sweep_budget);
    r.optional("threads", c.threads);
    r.optional("output", c.output_path);
    r.optional("table", c.table_path);
    r.optional("sizes", c.sizes);
    r.optional("s", c.s);
    r.optional("delta", c.delta);
    r.optional("epsilon", c.epsilon);
    r.optional("eta", c.eta);
    r.optional("dos_bin_width", c.dos_bin_width);
    r.optional("offsets", c.offsets);
    r.optional("floor_threshold", c.floor_threshold);
    r.optional("interval_lengths", c.interval_lengths);
    r.optional("interval_count", c.interval_count);
    r.optional("decay_thresholds", c.decay_thresholds);
    r.optional("distances", c.distances);
    r.finish();
    return c;
}

nlohmann::ordered_json config_to_json(const experiment_config& c) {
    nlohmann::ordered_json j;
    j["experiment"] = std::string(to_string(c.experiment));
    j["model"] = {{"box_size", c.model.box_size}, {"disorder", c.model.disorder}};
    j["realizations"] = c.realizations;
    j["master_seed"] = c.master_seed;
    j["solver"] = std::string(solver_name(c.solver));
    j["sweep_budget"] = c.sweep_budget;
    if (c.spec) {
        auto terms = nlohmann::ordered_json::array();
        for (const auto& t : c.spec->terms) terms.push_back({{"coefficient", t.coefficient}, {"site", t.site}});
        j["spec"] = terms;
    }
    if (c.renorm) {
        nlohmann::ordered_json r;
        r["beta"] = c.renorm->beta;
        if (c.renorm->center) r["center"] = *c.renorm->center;
        r["scale"] = c.renorm->scale;
        if (c.renorm->x_delta) r["x_delta"] = *c.renorm->x_delta;
        j["renorm"] = r;
    }
    if (!c.sizes.empty()) j["sizes"] = c.sizes;
    j["s"] = c.s;
    j["delta"] = c.delta;
    j["epsilon"] = c.epsilon;
    j["eta"] = c.eta;
    j["dos_bin_width"] = c.dos_bin_width;
    j["lyapunov"] = {{"energy_min", c.lyapunov.energy_min},
                     {"energy_max", c.lyapunov.energy_max},
                     {"energy_step", c.lyapunov.energy_step},
                     {"steps", c.lyapunov.steps},
                     {"edge_mass", c.lyapunov.edge_mass}};
    j["offsets"] = c.offsets;
    if (c.floor_threshold) j["floor_threshold"] = *c.floor_threshold;
    if (!c.interval_lengths.empty()) j["interval_lengths"] = c.interval_lengths;
    j["interval_count"] = c.interval_count;
    j["decay_thresholds"] = c.decay_thresholds;
    j["mid_spectrum"] = {c.mid_spectrum_low, c.mid_spectrum_high};
    nlohmann::ordered_json scan;
    if (c.scan.site) scan["site"] = *c.scan.site;
    scan["points"] = c.scan.points;
    scan["refine"] = c.scan.refine;
    j["scan"] = scan;
    j["distances"] = c.distances;
    return j;
}

experiment_config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str(), nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

} // namespace anderson
