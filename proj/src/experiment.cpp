#include "pushforward/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "pushforward/dynamics.hpp"
#include "pushforward/entropy.hpp"
#include "pushforward/measures.hpp"
#include "pushforward/metrics.hpp"
#include "pushforward/random.hpp"

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace pushforward {

using nlohmann::json;

namespace {

json from_toml(const toml::node& node) {
    if (auto t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = from_toml(v);
        return out;
    }
    if (auto a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(from_toml(v));
        return out;
    }
    if (auto v = node.as_integer()) return v->get();
    if (auto v = node.as_floating_point()) return v->get();
    if (auto v = node.as_boolean()) return v->get();
    if (auto v = node.as_string()) return v->get();
    // Dates and times are kept as their TOML text.
    std::ostringstream s;
    node.visit([&](const auto& v) { s << v; });
    return s.str();
}

// ---------------------------------------------------------------------------
// Validation. Each section is read through a Reader that fills defaults into
// a normalized copy, records field errors and flags unknown keys.

class Reader {
public:
    Reader(const json& in, std::string prefix, std::vector<FieldError>& errors)
        : in_(in.is_object() ? in : json::object()), prefix_(std::move(prefix)), errors_(errors) {
        if (!in.is_null() && !in.is_object()) fail("", "must be a table");
    }

    json& out() { return out_; }
    std::string field(const std::string& key) const {
        return prefix_.empty() ? key : key.empty() ? prefix_ : prefix_ + "." + key;
    }
    void fail(const std::string& key, const std::string& message) { errors_.push_back({field(key), message}); }
    bool has(const std::string& key) const { return in_.contains(key); }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return in_.at(key);
    }

    std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t lo, std::int64_t hi) {
        std::int64_t v = def;
        if (has(key)) {
            const json& j = raw(key);
            if (!j.is_number_integer()) {
                fail(key, "must be an integer");
            } else {
                v = j.get<std::int64_t>();
                if (v < lo || v > hi) fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            }
        }
        out_[key] = v;
        return v;
    }

    std::int64_t required_integer(const std::string& key, std::int64_t lo, std::int64_t hi) {
        if (!has(key)) fail(key, "is required");
        return integer(key, lo, lo, hi);
    }

    double real(const std::string& key, double def, double lo, double hi, bool open_lo = false, bool open_hi = false) {
        double v = def;
        if (has(key)) {
            const json& j = raw(key);
            if (!j.is_number()) {
                fail(key, "must be a number");
            } else {
                v = j.get<double>();
                const bool ok = std::isfinite(v) && (open_lo ? v > lo : v >= lo) && (open_hi ? v < hi : v <= hi);
                if (!ok) {
                    fail(key, std::string("must lie in ") + (open_lo ? "(" : "[") + format_number(lo) + ", " +
                                  format_number(hi) + (open_hi ? ")" : "]"));
                }
            }
        }
        out_[key] = v;
        return v;
    }

    bool boolean(const std::string& key, bool def) {
        bool v = def;
        if (has(key)) {
            const json& j = raw(key);
            if (!j.is_boolean()) fail(key, "must be true or false");
            else v = j.get<bool>();
        }
        out_[key] = v;
        return v;
    }

    std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
        std::string v = def;
        if (has(key)) {
            const json& j = raw(key);
            if (!j.is_string()) {
                fail(key, "must be a string");
            } else {
                v = j.get<std::string>();
                if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
                    std::string list;
                    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
                    fail(key, "must be one of: " + list);
                }
            }
        }
        out_[key] = v;
        return v;
    }

    std::vector<double> reals(const std::string& key, std::vector<double> def, bool positive) {
        std::vector<double> v = std::move(def);
        if (has(key)) {
            const json& j = raw(key);
            v.clear();
            if (!j.is_array() || j.empty()) {
                fail(key, "must be a nonempty array of numbers");
            } else {
                for (const auto& e : j) {
                    if (!e.is_number() || !std::isfinite(e.get<double>())) {
                        fail(key, "must contain only finite numbers");
                        break;
                    }
                    v.push_back(e.get<double>());
                }
                if (positive && std::any_of(v.begin(), v.end(), [](double x) { return !(x > 0.0); })) {
                    fail(key, "values must be > 0");
                }
            }
        }
        out_[key] = v;
        return v;
    }

    std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> def, std::int64_t lo,
                                       std::int64_t hi) {
        std::vector<std::int64_t> v = std::move(def);
        if (has(key)) {
            const json& j = raw(key);
            v.clear();
            if (!j.is_array()) {
                fail(key, "must be an array of integers");
            } else {
                for (const auto& e : j) {
                    if (!e.is_number_integer()) {
                        fail(key, "must contain only integers");
                        break;
                    }
                    v.push_back(e.get<std::int64_t>());
                    if (v.back() < lo || v.back() > hi) {
                        fail(key, "values must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
                        break;
                    }
                }
            }
        }
        out_[key] = v;
        return v;
    }

    void finish() {
        for (const auto& [k, v] : in_.items())
            if (!seen_.count(k)) fail(k, "unknown field");
    }

private:
    json in_;
    std::string prefix_;
    std::vector<FieldError>& errors_;
    json out_ = json::object();
    std::set<std::string> seen_;
};

std::optional<ModelSpace> space_from_name(const std::string& name, std::int64_t size) {
    if (name == "circle") return ModelSpace::circle();
    if (name == "interval") return ModelSpace::interval();
    if (name == "square") return ModelSpace::square();
    if (name == "solid_torus") return ModelSpace::solid_torus();
    if (name == "finite" && size >= 1) return ModelSpace::finite(static_cast<std::size_t>(size));
    return std::nullopt;
}

const std::vector<std::string> kSpaceNames{"finite", "circle", "interval", "square", "solid_torus"};
const std::vector<std::string> kSystemNames{"finite_table", "cycle",       "finite_doubling", "shift",
                                            "identity",     "rotation",    "circle_doubling", "contraction",
                                            "square_attractor", "solenoid"};

// Normalized system table, or nullopt after recording errors.
std::optional<SystemMap> read_system(const json& spec, const std::string& prefix, std::vector<FieldError>& errors,
                                     json& echo) {
    const std::size_t before = errors.size();
    if (!spec.is_object() || !spec.contains("name")) {
        errors.push_back({prefix + ".name", "is required"});
        return std::nullopt;
    }
    Reader r(spec, prefix, errors);
    const std::string name = r.choice("name", "", kSystemNames);
    std::optional<SystemMap> system;
    auto attempt = [&](auto&& make) {
        if (errors.size() != before) return;
        try {
            system = make();
        } catch (const Error& e) {
            errors.push_back({prefix, e.what()});
        }
    };
    if (name == "finite_table") {
        auto table = r.integers("table", {}, 0, 1 << 20);
        if (!r.has("table")) r.fail("table", "is required");
        attempt([&] { return SystemMap::finite_table(std::vector<std::size_t>(table.begin(), table.end())); });
    } else if (name == "cycle" || name == "finite_doubling" || name == "shift") {
        const auto n = static_cast<std::size_t>(r.required_integer("n", 1, 1 << 20));
        attempt([&] {
            return name == "cycle" ? SystemMap::cycle(n)
                                   : name == "shift" ? SystemMap::shift(n) : SystemMap::finite_doubling(n);
        });
    } else if (name == "identity") {
        const std::string s = r.choice("space", "circle", kSpaceNames);
        const auto size = r.integer("size", 0, 0, 1 << 20);
        auto space = space_from_name(s, size);
        if (!space) r.fail("size", "finite spaces need size >= 1");
        else attempt([&] { return SystemMap::identity(*space); });
    } else if (name == "rotation") {
        const double alpha = r.real("alpha", (std::sqrt(5.0) - 1.0) / 2.0, -1e6, 1e6);
        attempt([&] { return SystemMap::rotation(alpha); });
    } else if (name == "circle_doubling") {
        const auto d = r.integer("degree", 2, 1, 1 << 20);
        attempt([&] { return SystemMap::circle_doubling(static_cast<int>(d)); });
    } else if (name == "contraction") {
        const double c = r.real("c", 0.5, 0.0, 1.0, false, true);
        const double p = r.real("fixed_point", 0.5, 0.0, 1.0);
        attempt([&] { return SystemMap::contraction(c, p); });
    } else if (name == "square_attractor") {
        attempt([&] { return SystemMap::square_attractor(); });
    } else if (name == "solenoid") {
        const double lambda = r.real("lambda", 0.25, 0.0, 0.5, true, true);
        attempt([&] { return SystemMap::solenoid(lambda); });
    }
    r.finish();
    echo = r.out();
    return errors.size() == before ? system : std::nullopt;
}

// Measure fields: {random_atoms = k}, {points = [...], weights = [...]} or {uniform = true}.
void read_measure(Reader& parent, const std::string& key, const std::optional<ModelSpace>& space,
                  std::vector<FieldError>& errors, const json& def, bool allow_uniform) {
    json spec = parent.has(key) ? parent.raw(key) : def;
    Reader r(spec, parent.field(key), errors);
    const std::size_t before = errors.size();
    const int kinds = r.has("random_atoms") + r.has("points") + r.has("uniform");
    if (kinds != 1) r.fail("", "give exactly one of random_atoms, points, uniform");
    if (r.has("random_atoms")) {
        r.integer("random_atoms", 1, 1, 10000);
    } else if (r.has("uniform")) {
        if (!r.boolean("uniform", true)) r.fail("uniform", "must be true when given");
        if (!allow_uniform && space && !space->is_finite()) r.fail("uniform", "only allowed on finite spaces here");
    } else if (r.has("points")) {
        const json& pts = r.raw("points");
        if (!pts.is_array() || pts.empty()) {
            r.fail("points", "must be a nonempty array");
        } else if (space) {
            for (const auto& p : pts) {
                try {
                    Point x = p.is_array() ? Point::from_coords(p.get<std::vector<double>>()) : Point(p.get<double>());
                    space->validate(x);
                } catch (const std::exception& e) {
                    r.fail("points", std::string("invalid point: ") + e.what());
                    break;
                }
            }
        }
        r.out()["points"] = pts;
        if (r.has("weights")) {
            auto w = r.reals("weights", {}, true);
            double total = 0.0;
            for (double x : w) total += x;
            if (pts.is_array() && w.size() != pts.size()) r.fail("weights", "needs one weight per point");
            else if (std::fabs(total - 1.0) > 1e-9) r.fail("weights", "must sum to 1");
        }
    }
    r.finish();
    if (errors.size() == before) parent.out()[key] = r.out();
}

std::uint64_t stream_of(const std::string& key) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : key) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    return h;
}

AtomicMeasure build_measure(const ModelSpace& space, const json& spec, std::uint64_t seed, const std::string& key) {
    if (spec.contains("random_atoms")) {
        Rng rng(derive_seed(seed, stream_of(key)));
        return random_measure_with(space, rng, spec.at("random_atoms").get<std::size_t>());
    }
    if (spec.contains("uniform")) {
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < space.size(); ++i) atoms.push_back({Point::index(i), 1.0 / space.size()});
        return AtomicMeasure(space, atoms);
    }
    const json& pts = spec.at("points");
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const json& p = pts[i];
        Point x = p.is_array() ? Point::from_coords(p.get<std::vector<double>>()) : Point(p.get<double>());
        const double w = spec.contains("weights") ? spec["weights"][i].get<double>() : 1.0 / pts.size();
        atoms.push_back({x, w});
    }
    return AtomicMeasure(space, atoms);
}

std::vector<std::int64_t> default_range(std::int64_t lo, std::int64_t hi) {
    std::vector<std::int64_t> r;
    for (auto n = lo; n <= hi; ++n) r.push_back(n);
    return r;
}

struct Resolved {
    std::optional<SystemMap> system;
    std::optional<SystemMap> system_b;
    std::optional<ModelSpace> space;
    json echo;
    json params;
};

Resolved resolve(const ExperimentConfig& config, std::vector<FieldError>& errors) {
    Resolved res;
    const std::string& ex = config.experiment;
    if (std::find(kExperiments.begin(), kExperiments.end(), ex) == kExperiments.end()) {
        errors.push_back({"experiment", ex.empty() ? "is required" : "unknown experiment '" + ex + "'"});
        return res;
    }
    if (config.threads < 1) errors.push_back({"threads", "must be >= 1"});
    json system_echo, system_b_echo;
    const bool space_only = ex == "metrics" || ex == "quantize";
    const bool has_system = config.system.is_object() && !config.system.empty();
    if (has_system || !space_only) {
        res.system = read_system(config.system, "system", errors, system_echo);
        if (res.system) res.space = res.system->space();
    }
    if (!config.space.is_null()) {
        if (!space_only) {
            errors.push_back({"space", "only used by metrics and quantize (the system fixes the space)"});
        } else if (has_system) {
            errors.push_back({"space", "give either space or system, not both"});
        } else {
            Reader r(config.space, "space", errors);
            const std::string s = r.choice("name", "circle", kSpaceNames);
            const auto size = r.integer("size", 0, 0, 1 << 20);
            r.finish();
            res.space = space_from_name(s, size);
            if (!res.space) errors.push_back({"space.size", "finite spaces need size >= 1"});
            system_echo = r.out();
        }
    } else if (space_only && !has_system) {
        errors.push_back({"system", "metrics and quantize need a system or a space table"});
    }
    if (ex == "entropy_product") {
        res.system_b = read_system(config.system_b, "system_b", errors, system_b_echo);
    } else if (config.system_b.is_object() && !config.system_b.empty()) {
        errors.push_back({"system_b", "only used by entropy_product"});
    }

    Reader p(config.params, "params", errors);
    const auto& space = res.space;
    auto need_finite = [&] {
        if (res.system && !res.system->space().is_finite()) errors.push_back({"system.name", ex + " needs a finite system"});
    };
    auto need_continuum = [&](const std::optional<SystemMap>& s, const std::string& f) {
        if (s && s->space().is_finite()) errors.push_back({f, ex + " needs a system on a continuum space"});
    };
    auto entropy_lists = [&](std::vector<double> eps, std::vector<std::int64_t> n) {
        p.reals("eps_list", std::move(eps), true);
        auto ns = p.integers("n_range", std::move(n), 1, 64);
        std::set<std::int64_t> distinct(ns.begin(), ns.end());
        if (distinct.size() < 4) p.fail("n_range", "need ≥ 4 points");
    };

    if (ex == "matrix") {
        need_finite();
    } else if (ex == "orbit") {
        read_measure(p, "initial", space, errors, {{"random_atoms", 5}}, true);
        p.integer("n", 10, 0, 1000000);
        p.integer("snapshot_every", 1, 1, 1000000);
    } else if (ex == "metrics") {
        read_measure(p, "mu", space, errors, {{"random_atoms", 5}}, true);
        read_measure(p, "nu", space, errors, {{"random_atoms", 5}}, true);
        p.real("p", 1.0, 1.0, 64.0);
        p.integer("weak_star_terms", 20, 1, 60);
    } else if (ex == "invariant") {
        need_finite();
        p.integer("max_iterations", 100000, 1, 100000000);
        p.real("tolerance", 1e-10, 0.0, 1.0, true);
    } else if (ex == "attractor") {
        if (res.system) {
            const auto k = res.system->kind();
            if (k != MapKind::contraction && k != MapKind::square_attractor && k != MapKind::solenoid) {
                errors.push_back({"system.name", "attractor needs contraction, square_attractor or solenoid"});
            }
        }
        read_measure(p, "initial", space, errors, {{"random_atoms", 50}}, false);
        const auto n = p.integer("n", 1000, 0, 10000000);
        p.integer("snapshot_every", std::max<std::int64_t>(1, n), 1, 10000000);
        p.integer("level", 8, 1, 20);
    } else if (ex == "probe") {
        p.integer("trials", 200, 1, 1000000);
        p.choice("metric", "wasserstein", {"wasserstein", "wasserstein_1", "prokhorov", "weak_star"});
        p.real("p", 1.0, 1.0, 64.0);
        p.integer("steps", 1, 1, 100000);
        p.integer("max_atoms", 20, 1, 1000);
        p.integer("weak_star_terms", 20, 1, 60);
    } else if (ex == "omega") {
        if (!p.has("x")) {
            p.fail("x", "is required");
        } else {
            const json& x = p.raw("x");
            try {
                Point pt = x.is_array() ? Point::from_coords(x.get<std::vector<double>>()) : Point(x.get<double>());
                if (space) space->validate(pt);
            } catch (const std::exception& e) {
                p.fail("x", std::string("invalid point: ") + e.what());
            }
            p.out()["x"] = x;
        }
        p.integer("burn", 100, 0, 100000000);
        p.integer("horizon", 1000, 0, 100000000);
        p.real("eps", 0.05, 0.0, 1e6, true);
        if (p.has("return_eps")) p.real("return_eps", 0.0, 0.0, 1e6, true);
        p.integer("return_horizon", 1000, 1, 100000000);
        p.choice("return_metric", "prokhorov", {"wasserstein", "wasserstein_1", "prokhorov", "weak_star"});
    } else if (ex == "witness") {
        read_measure(p, "mu", space, errors, {{"random_atoms", 3}}, true);
        read_measure(p, "nu", space, errors, {{"random_atoms", 3}}, true);
        p.real("eps", 0.1, 0.0, 1e6, true);
        p.integer("horizon", 20, 1, 1000);
        p.integer("weak_star_terms", 20, 1, 60);
    } else if (ex == "entropy") {
        entropy_lists({1.0 / 64, 1.0 / 32, 1.0 / 16}, default_range(2, 10));
        p.integer("per_axis", 1 << 14, 2, 1 << 20);
    } else if (ex == "entropy_embedded") {
        need_continuum(res.system, "system.name");
        entropy_lists({0.1, 0.125}, default_range(1, 4));
        p.integer("n_embed", 1, 1, 16);
        const auto metric = p.choice("metric", "wasserstein", {"wasserstein", "wasserstein_1", "prokhorov"});
        (void)metric;
        p.integer("sample_per_axis", 0, 0, 1 << 16);
    } else if (ex == "entropy_product") {
        need_continuum(res.system, "system.name");
        need_continuum(res.system_b, "system_b.name");
        entropy_lists({0.125, 0.25}, default_range(1, 6));
        p.integer("per_axis", 256, 2, 4096);
    } else if (ex == "quantize") {
        read_measure(p, "target", space, errors, {{"uniform", true}}, true);
        p.real("delta", 0.25, 0.0, 1e6, true);
        const bool periodic = p.boolean("periodic", false);
        p.integer("weak_star_terms", 20, 1, 60);
        if (periodic && (!res.system || res.system->kind() != MapKind::circle_doubling)) {
            p.fail("periodic", "needs a circle_doubling system");
        }
    }
    p.finish();
    res.params = p.out();
    res.echo = {{"experiment", ex},
                {"name", config.name.empty() ? ex : config.name},
                {"seed", config.seed},
                {"threads", config.threads},
                {"out_dir", config.out_dir.generic_string()},
                {"params", res.params}};
    if (!system_echo.is_null()) res.echo[config.space.is_null() ? "system" : "space"] = system_echo;
    if (!system_b_echo.is_null()) res.echo["system_b"] = system_b_echo;
    return res;
}

// ---------------------------------------------------------------------------
// Output helpers.

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

    template <class... Ts>
    void row(const Ts&... cells) {
        std::vector<std::string> out{cell(cells)...};
        row_strings(out);
    }
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }
    std::string str() const { return text_; }
    std::size_t columns() const { return columns_; }

private:
    static std::string cell(double v) { return format_number(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    std::size_t columns_;
    std::string text_;
};

std::vector<std::string> coord_names(const ModelSpace& space) {
    switch (space.kind()) {
        case SpaceKind::finite: return {"index"};
        case SpaceKind::circle:
        case SpaceKind::interval: return {"x"};
        case SpaceKind::square: return {"x", "y"};
        case SpaceKind::solid_torus: return {"phi", "x", "y"};
    }
    return {};
}

std::vector<std::string> coord_cells(const ModelSpace& space, const Point& p) {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < p.dim(); ++k)
        out.push_back(space.is_finite() ? std::to_string(static_cast<std::size_t>(p[k])) : format_number(p[k]));
    return out;
}

json measure_json(const AtomicMeasure& mu) {
    json atoms = json::array();
    for (const auto& a : mu.atoms()) {
        json pt = json::array();
        for (double c : a.point.coords()) pt.push_back(c);
        atoms.push_back({{"point", pt}, {"weight", a.weight}});
    }
    return atoms;
}

class Warnings {
public:
    void add(const std::string& source, const std::string& message) { by_source_.emplace(source, message); }
    std::vector<std::string> list() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : by_source_) out.push_back(k + ": " + v);
        return out;
    }

private:
    std::map<std::string, std::string> by_source_;
};

std::vector<std::size_t> as_sizes(const json& j) { return j.get<std::vector<std::size_t>>(); }

json estimate_json(const EntropyEstimate& e, Csv& csv, Warnings& warn) {
    bool any_saturated = false;
    for (std::size_t a = 0; a < e.eps_list.size(); ++a) {
        for (std::size_t t = 0; t < e.n_values.size(); ++t) {
            csv.row(e.eps_list[a], e.n_values[t], e.counts[a][t], static_cast<bool>(e.saturated[a][t]));
            any_saturated = any_saturated || e.saturated[a][t];
        }
    }
    if (any_saturated) warn.add("saturation", "some (n, eps) cells reached 0.9 x sample size and were left out of the fits");
    json slopes = json::array(), windows = json::array(), osc = json::array();
    for (std::size_t a = 0; a < e.eps_list.size(); ++a) {
        slopes.push_back(e.slopes[a] ? json(*e.slopes[a]) : json(nullptr));
        windows.push_back(e.windows[a]);
        osc.push_back(e.oscillation[a]);
    }
    return {{"h_estimate", e.h_estimate}, {"h_eps", e.h_eps},       {"eps_list", e.eps_list},
            {"n_values", e.n_values},     {"slopes", slopes},         {"windows", windows},
            {"oscillation", osc},         {"sample", e.sample},       {"sample_size", e.sample_size},
            {"counts_are", "greedy lower bounds for sep(n, eps), envelope over larger eps and smaller n"}};
}

Point point_of(const json& j) {
    return j.is_array() ? Point::from_coords(j.get<std::vector<double>>()) : Point(j.get<double>());
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

ExperimentConfig parse_config(const std::string& toml_text, const std::string& source) {
    toml::table table;
    try {
        table = toml::parse(toml_text, source);
    } catch (const toml::parse_error& e) {
        const auto& b = e.source().begin;
        throw ConfigError(source + ": line " + std::to_string(b.line) + ", column " + std::to_string(b.column) + ": " +
                          std::string(e.description()));
    }
    const json doc = from_toml(table);
    ExperimentConfig c;
    std::vector<FieldError> errors;
    for (const auto& [k, v] : doc.items()) {
        if (k == "experiment") {
            if (v.is_string()) c.experiment = v.get<std::string>();
            else errors.push_back({k, "must be a string"});
        } else if (k == "name") {
            if (v.is_string() && !v.get<std::string>().empty() &&
                v.get<std::string>().find_first_of("/\\") == std::string::npos) {
                c.name = v.get<std::string>();
            } else {
                errors.push_back({k, "must be a nonempty file name"});
            }
        } else if (k == "seed") {
            if (v.is_number_integer() && v.get<std::int64_t>() >= 0) c.seed = v.get<std::uint64_t>();
            else errors.push_back({k, "must be a nonnegative integer"});
        } else if (k == "out_dir") {
            if (v.is_string()) c.out_dir = v.get<std::string>();
            else errors.push_back({k, "must be a string"});
        } else if (k == "threads") {
            if (v.is_number_integer() && v.get<std::int64_t>() >= 1) c.threads = v.get<std::size_t>();
            else errors.push_back({k, "must be an integer >= 1"});
        } else if (k == "system") {
            c.system = v;
        } else if (k == "system_b") {
            c.system_b = v;
        } else if (k == "space") {
            c.space = v.is_string() ? json{{"name", v}} : v;
        } else if (k == "params") {
            c.params = v;
        } else {
            errors.push_back({k, "unknown field"});
        }
    }
    if (!errors.empty()) throw ConfigError(source + ": invalid config", errors);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string());
}

std::vector<FieldError> validate(const ExperimentConfig& config) {
    std::vector<FieldError> errors;
    resolve(config, errors);
    return errors;
}

SystemMap system_from_json(const json& spec) {
    std::vector<FieldError> errors;
    json echo;
    auto system = read_system(spec, "system", errors, echo);
    if (!system) {
        std::string msg = "invalid system";
        for (const auto& e : errors) msg += "; " + e.field + ": " + e.message;
        throw ConfigError(msg, errors);
    }
    return *system;
}

RunSummary run(const ExperimentConfig& config) {
    std::vector<FieldError> errors;
    Resolved res = resolve(config, errors);
    if (!errors.empty()) {
        std::string msg = "invalid config";
        for (const auto& e : errors) msg += "; " + e.field + ": " + e.message;
        throw ConfigError(msg, errors);
    }
    const auto start = std::chrono::steady_clock::now();
    const json& p = res.params;
    const std::string& ex = config.experiment;
    const std::uint64_t seed = config.seed;
    const std::size_t threads = config.threads;
    const ModelSpace& space = *res.space;
    Warnings warn;
    json results;
    std::string csv_text;

    if (ex == "matrix") {
        const auto m = matrix_of(*res.system);
        Csv csv({"row", "col", "t", "phi"});
        for (std::size_t i = 0; i < m.n(); ++i)
            for (std::size_t j = 0; j < m.n(); ++j) csv.row(i, j, m.t(i, j), m.phi(i, j));
        results = {{"n", m.n()}, {"total", m.total()}, {"t_matrix", m.t_rows()}, {"phi_matrix", m.phi_rows()}};
        if (!m.total()) warn.add("partial_map", "some points have no image; their rows of [T] are zero");
        csv_text = csv.str();
    } else if (ex == "orbit") {
        const auto mu0 = build_measure(space, p["initial"], seed, "initial");
        const auto rec = iterate(*res.system, mu0, p["n"].get<std::size_t>(), p["snapshot_every"].get<std::size_t>());
        auto header = std::vector<std::string>{"step", "atom"};
        for (const auto& c : coord_names(space)) header.push_back(c);
        header.insert(header.end(), {"weight", "escaped_mass"});
        Csv csv(header);
        json snaps = json::array();
        for (const auto& s : rec.steps) {
            for (std::size_t a = 0; a < s.measure.size(); ++a) {
                std::vector<std::string> cells{std::to_string(s.n), std::to_string(a)};
                for (auto& c : coord_cells(space, s.measure[a].point)) cells.push_back(c);
                cells.push_back(format_number(s.measure[a].weight));
                cells.push_back(format_number(s.measure.escaped_mass()));
                csv.row_strings(cells);
            }
            snaps.push_back({{"n", s.n}, {"atoms", s.measure.size()}, {"escaped_mass", s.measure.escaped_mass()}});
        }
        if (rec.escaped_mass > 0.0) warn.add("escaped_mass", "mass left the truncation window: " + format_number(rec.escaped_mass));
        results = {{"initial", measure_json(mu0)}, {"snapshots", snaps}, {"escaped_mass", rec.escaped_mass},
                   {"final", measure_json(rec.steps.back().measure)}};
        csv_text = csv.str();
    } else if (ex == "metrics") {
        const auto mu = build_measure(space, p["mu"], seed, "mu");
        const auto nu = build_measure(space, p["nu"], seed, "nu");
        const double order = p["p"].get<double>();
        const auto w = wasserstein(mu, nu, order);
        const double dp = prokhorov(mu, nu);
        const WeakStarBasis basis(space, p["weak_star_terms"].get<std::size_t>());
        const auto ws = weak_star(mu, nu, basis);
        Csv csv({"metric", "value", "tail_bound"});
        csv.row("wasserstein", w.value, 0.0);
        csv.row("prokhorov", dp, 0.0);
        csv.row("weak_star", ws.value, ws.tail_bound);
        results = {{"wasserstein", w.value}, {"wasserstein_p", order}, {"prokhorov", dp},
                   {"weak_star", ws.value},  {"weak_star_tail_bound", ws.tail_bound},
                   {"mu", measure_json(mu)}, {"nu", measure_json(nu)}};
        csv_text = csv.str();
    } else if (ex == "invariant") {
        const auto m = matrix_of(*res.system);
        Csv csv({"index", "weight"});
        try {
            const auto v = invariant_measure_finite(m, p["max_iterations"].get<std::size_t>(), p["tolerance"].get<double>());
            json support = json::array();
            for (std::size_t i = 0; i < v.weights.size(); ++i) {
                csv.row(i, v.weights[i]);
                if (v.weights[i] > 0.0) support.push_back(i);
            }
            results = {{"found", true}, {"weights", v.weights}, {"residual", v.residual},
                       {"iterations", v.iterations}, {"support", support}};
        } catch (const ConvergenceFailure& e) {
            warn.add("no_invariant_vector", e.what());
            results = {{"found", false}, {"reason", e.what()}};
        }
        csv_text = csv.str();
    } else if (ex == "attractor") {
        const SystemMap& t = *res.system;
        const auto attractor = t.kind() == MapKind::contraction
                                   ? AttractorDescriptor::point(space, Point(t.fixed_point()))
                               : t.kind() == MapKind::square_attractor
                                   ? AttractorDescriptor::square_lambda()
                                   : AttractorDescriptor::solenoid_level(t.lambda(), p["level"].get<std::size_t>());
        const auto mu0 = build_measure(space, p["initial"], seed, "initial");
        const auto rec = iterate(t, mu0, p["n"].get<std::size_t>(), p["snapshot_every"].get<std::size_t>());
        Csv csv({"step", "sup_distance", "w1_projected"});
        for (const auto& s : rec.steps) {
            const auto d = attractor_distance(s.measure, attractor);
            csv.row(s.n, d.sup_distance, d.w1_projected);
        }
        const auto last = attractor_distance(rec.steps.back().measure, attractor);
        results = {{"n", rec.steps.back().n}, {"sup_distance", last.sup_distance},
                   {"w1_projected", last.w1_projected}, {"atoms", mu0.size()}};
        csv_text = csv.str();
    } else if (ex == "probe") {
        ProbeOptions opt;
        opt.metric = parse_metric(p["metric"].get<std::string>());
        opt.p = p["p"].get<double>();
        opt.steps = p["steps"].get<std::size_t>();
        opt.max_atoms = p["max_atoms"].get<std::size_t>();
        opt.seed = seed;
        opt.threads = threads;
        opt.weak_star_terms = p["weak_star_terms"].get<std::size_t>();
        const auto r = lipschitz_probe(*res.system, p["trials"].get<std::size_t>(), opt);
        Csv csv({"trial", "max_ratio"});
        for (std::size_t i = 0; i < r.ratios.size(); ++i) csv.row(i, r.ratios[i]);
        if (r.skipped) warn.add("skipped_pairs", std::to_string(r.skipped) + " degenerate pairs (d = 0) skipped");
        results = {{"max_ratio", r.max_ratio},
                   {"declared", r.declared ? json(*r.declared) : json(nullptr)},
                   {"trials", r.trials},
                   {"skipped", r.skipped},
                   {"argmax_step", r.argmax_step},
                   {"argmax_mu", r.argmax_mu ? measure_json(*r.argmax_mu) : json(nullptr)},
                   {"argmax_nu", r.argmax_nu ? measure_json(*r.argmax_nu) : json(nullptr)}};
        if (r.declared && r.max_ratio > *r.declared + 1e-9) {
            warn.add("lipschitz_exceeded", "observed ratio exceeds the declared constant");
        }
        csv_text = csv.str();
    } else if (ex == "omega") {
        const Point x = point_of(p["x"]);
        const auto pts = omega_limit_sample(*res.system, x, p["burn"].get<std::size_t>(), p["horizon"].get<std::size_t>(),
                                            p["eps"].get<double>());
        auto header = std::vector<std::string>{"index"};
        for (const auto& c : coord_names(space)) header.push_back(c);
        Csv csv(header);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            std::vector<std::string> cells{std::to_string(i)};
            for (auto& c : coord_cells(space, pts[i])) cells.push_back(c);
            csv.row_strings(cells);
        }
        results = {{"net_size", pts.size()}};
        if (p.contains("return_eps")) {
            const AtomicMeasure dirac(space, {Atom{x, 1.0}});
            const auto rt = return_time(*res.system, dirac, p["return_eps"].get<double>(),
                                        p["return_horizon"].get<std::size_t>(),
                                        parse_metric(p["return_metric"].get<std::string>()));
            results["return_time"] = rt ? json(*rt) : json(nullptr);
            if (!rt) warn.add("return_miss", "no return within return_horizon (not a proof of non-recurrence)");
        }
        csv_text = csv.str();
    } else if (ex == "witness") {
        const auto mu = build_measure(space, p["mu"], seed, "mu");
        const auto nu = build_measure(space, p["nu"], seed, "nu");
        const auto w = mixing_witness(*res.system, mu, nu, p["eps"].get<double>(), p["horizon"].get<std::size_t>(),
                                      p["weak_star_terms"].get<std::size_t>());
        auto header = std::vector<std::string>{"atom"};
        for (const auto& c : coord_names(space)) header.push_back(c);
        header.push_back("weight");
        Csv csv(header);
        if (w.perturbed) {
            for (std::size_t a = 0; a < w.perturbed->size(); ++a) {
                std::vector<std::string> cells{std::to_string(a)};
                for (auto& c : coord_cells(space, (*w.perturbed)[a].point)) cells.push_back(c);
                cells.push_back(format_number((*w.perturbed)[a].weight));
                csv.row_strings(cells);
            }
        } else {
            warn.add("witness_miss", w.note.empty() ? "no witness within the horizon" : w.note);
        }
        results = {{"n", w.n ? json(*w.n) : json(nullptr)}, {"distance", w.distance}, {"note", w.note},
                   {"mu", measure_json(mu)}, {"nu", measure_json(nu)}};
        csv_text = csv.str();
    } else if (ex == "entropy" || ex == "entropy_embedded" || ex == "entropy_product") {
        const auto eps = p["eps_list"].get<std::vector<double>>();
        const auto ns = as_sizes(p["n_range"]);
        EntropyEstimate e;
        if (ex == "entropy") {
            e = entropy_base(*res.system, eps, ns, p["per_axis"].get<std::size_t>(), threads);
        } else if (ex == "entropy_embedded") {
            e = entropy_embedded_Dn(*res.system, p["n_embed"].get<std::size_t>(),
                                    parse_metric(p["metric"].get<std::string>()), eps, ns,
                                    p["sample_per_axis"].get<std::size_t>(), threads);
        } else {
            e = entropy_product(*res.system, *res.system_b, eps, ns, p["per_axis"].get<std::size_t>(), threads);
        }
        Csv csv({"eps", "n", "count", "saturated"});
        results = estimate_json(e, csv, warn);
        csv_text = csv.str();
    } else if (ex == "quantize") {
        const GridPartition grid(space, p["delta"].get<double>());
        const auto target =
            p["target"].contains("uniform") ? quantize_uniform(grid) : quantize(build_measure(space, p["target"], seed, "target"), grid);
        auto header = std::vector<std::string>{"atom"};
        for (const auto& c : coord_names(space)) header.push_back(c);
        header.push_back("mass");
        Csv csv(header);
        for (std::size_t a = 0; a < target.size(); ++a) {
            std::vector<std::string> cells{std::to_string(a)};
            for (auto& c : coord_cells(space, target[a].point)) cells.push_back(c);
            cells.push_back(format_number(target[a].weight));
            csv.row_strings(cells);
        }
        results = {{"cells", grid.size()}, {"atoms", target.size()}, {"delta", grid.delta()}};
        if (p["periodic"].get<bool>()) {
            const auto approx = dense_periodic_measure(*res.system, target, grid);
            const WeakStarBasis basis(space, p["weak_star_terms"].get<std::size_t>());
            const auto ws = weak_star(approx.measure, target, basis);
            results["periodic"] = {{"period", approx.orbit.size()},
                                   {"weak_star_to_target", ws.value},
                                   {"weak_star_tail_bound", ws.tail_bound},
                                   {"measure", measure_json(approx.measure)}};
        }
        csv_text = csv.str();
    }

    RunSummary out;
    out.csv = std::move(csv_text);
    out.warnings = warn.list();
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.summary = {{"config", res.echo}, {"results", results}, {"warnings", out.warnings},
                   {"wall_seconds", out.wall_seconds}};
    return out;
}

void write_outputs(const ExperimentConfig& config, const RunSummary& summary) {
    const std::string name = config.name.empty() ? config.experiment : config.name;
    std::filesystem::create_directories(config.out_dir);
    auto write = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + path.string());
        f << text;
        if (!f) throw Error("failed writing " + path.string());
    };
    write(config.out_dir / (name + ".csv"), summary.csv);
    write(config.out_dir / (name + ".summary.json"), summary.summary.dump(2) + "\n");
}

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const EstimateInvalid*>(&e)) return 3;
    if (dynamic_cast<const ParameterError*>(&e)) return 2;
    return 1;
}

}  // namespace pushforward
