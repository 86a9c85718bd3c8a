#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "superscar/classical/continuation.hpp"
#include "superscar/pes/masses.hpp"
#include "superscar/pes/surface.hpp"
#include "superscar/pes/surrogates.hpp"
#include "superscar/scar/pipeline.hpp"
#include "superscar/workbench/hash.hpp"

namespace superscar::workbench {

using json = nlohmann::json;

/// An energy in a config: absolute, or a multiple of the bifurcation energy
/// found by the orbit stage.
struct EnergySpec {
    std::optional<double> absolute; // hartree
    double multiple = 1.0;          // of E_bif when `absolute` is empty

    bool relative() const { return !absolute.has_value(); }
};

/// Which periodic orbit a sweep uses at its energy.
enum class Branch { fold, stable, unstable };

inline const char* to_string(Branch b) {
    switch (b) {
    case Branch::fold: return "fold";
    case Branch::stable: return "stable";
    default: return "unstable";
    }
}

struct SweepTarget {
    std::string name;
    EnergySpec energy;
    Branch branch = Branch::unstable;
    int n_lo = 3, n_hi = 20, n_step = 1;

    std::vector<int> rungs() const {
        std::vector<int> out;
        for (int n = n_lo; n <= n_hi; n += n_step) out.push_back(n);
        return out;
    }
};

struct RunConfig {
    // surface
    std::string surrogate;                   // bundled analytic surface, or
    std::string coefficients;                // Legendre coefficient file
    std::map<std::string, double> surface_params;
    std::optional<pes::RadialDomain> domain;
    pes::MassParameters masses = pes::MassParameters::licn();
    std::string energy_unit = "cm-1";        // of every energy in the file

    int path_points = 721;
    classical::SectionOptions section{};

    // sos
    std::vector<EnergySpec> sos_energies;
    int sos_trajectories = 40;
    int sos_crossings = 300;

    // orbits
    double seed_energy = 0.0; // hartree
    classical::SectionPoint guess{};
    classical::EnergyWindow window{};
    classical::ContinuationOptions continuation{};

    std::vector<SweepTarget> targets;
    scar::PipelineOptions quantum{};

    std::string output = "runs";
    std::uint64_t seed = 0;
    int workers = 1;

    double to_hartree(double x) const { return energy_unit == "cm-1" ? units::cm_to_hartree(x) : x; }
    double from_hartree(double x) const { return energy_unit == "cm-1" ? units::hartree_to_cm(x) : x; }
};

namespace detail {

/// Typed access to one JSON object with the dotted path of each field.
/// Keys that are never read are reported as unknown.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        return v.get<double>();
    }
    double positive(const std::string& key, double fallback) {
        const double v = number(key, fallback);
        if (!(v > 0.0)) throw ConfigError(at(key), "must be strictly positive");
        return v;
    }
    long long integer(const std::string& key, long long fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        return v.get<long long>();
    }
    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }
    std::string choice(const std::string& key, const std::string& fallback, std::initializer_list<const char*> allowed) {
        const std::string v = string(key, fallback);
        std::string list;
        for (const char* a : allowed) {
            if (v == a) return v;
            list += std::string(list.empty() ? "" : ", ") + a;
        }
        throw ConfigError(at(key), "'" + v + "' is not one of " + list);
    }
    std::vector<double> numbers(const std::string& key, std::size_t n) {
        const json& v = raw(key);
        if (!v.is_array() || (n && v.size() != n))
            throw ConfigError(at(key), n ? "expected an array of " + std::to_string(n) + " numbers" : "expected an array");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(at(key), "expected numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }
    std::optional<Reader> object(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return Reader(raw(key), at(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline EnergySpec energy_spec(const json& v, const std::string& path, const RunConfig& c) {
    EnergySpec e;
    if (v.is_number()) {
        e.absolute = c.to_hartree(v.get<double>());
        if (!(*e.absolute > 0.0)) throw ConfigError(path, "energy must be positive");
    } else if (v.is_string()) {
        if (v.get<std::string>() != "E_bif") throw ConfigError(path, "expected a number, \"E_bif\" or {\"multiple\": x}");
    } else if (v.is_object()) {
        Reader r(v, path);
        e.multiple = r.positive("multiple", 1.0);
        r.finish();
    } else {
        throw ConfigError(path, "expected a number, \"E_bif\" or {\"multiple\": x}");
    }
    return e;
}

inline json energy_json(const EnergySpec& e) {
    if (e.absolute) return {{"hartree", *e.absolute}};
    return {{"multiple", e.multiple}};
}

} // namespace detail

/// Parse and validate a config. Every error names the offending field.
inline RunConfig parse_config(const json& root) {
    RunConfig c;
    detail::Reader r(root, "");
    c.seed = static_cast<std::uint64_t>(r.integer("seed", 0));
    c.workers = static_cast<int>(r.integer("workers", 1));
    if (c.workers < 1) throw ConfigError("workers", "must be at least 1");
    c.output = r.string("output", c.output);

    if (auto u = r.object("units")) {
        c.energy_unit = u->choice("energy", c.energy_unit, {"cm-1", "hartree"});
        u->finish();
    }

    if (!r.has("surface")) throw ConfigError("surface", "missing");
    {
        auto s = *r.object("surface");
        c.surrogate = s.string("surrogate", "");
        c.coefficients = s.string("coefficients", "");
        if (c.surrogate.empty() == c.coefficients.empty())
            throw ConfigError(s.at("surrogate"), "give exactly one of 'surrogate' and 'coefficients'");
        if (auto p = s.object("params")) {
            for (auto it = s.raw("params").begin(); it != s.raw("params").end(); ++it)
                c.surface_params[it.key()] = p->number(it.key(), 0.0);
            p->finish();
        }
        if (s.has("domain")) {
            const auto d = s.numbers("domain", 2);
            if (!(d[0] > 0.0 && d[1] > d[0])) throw ConfigError(s.at("domain"), "need 0 < lo < hi (bohr)");
            c.domain = pes::RadialDomain{d[0], d[1]};
        }
        s.finish();
        if (!c.surrogate.empty()) // rejects unknown names and parameters now rather than mid-run
            pes::make_surrogate(c.surrogate, c.surface_params, c.domain.value_or(pes::RadialDomain{}));
    }

    if (auto m = r.object("masses")) {
        const auto d = pes::MassParameters::licn();
        c.masses = pes::MassParameters::make(m->number("m_li", d.m_li), m->number("m_c", d.m_c),
                                             m->number("m_n", d.m_n), m->number("r_e", d.r_e));
        m->finish();
    }

    if (auto p = r.object("path")) {
        c.path_points = static_cast<int>(p->integer("points", c.path_points));
        if (c.path_points < 16) throw ConfigError(p->at("points"), "need at least 16 path points");
        p->finish();
    }
    if (auto i = r.object("integrator")) {
        auto& o = c.section.integrator;
        o.abs_tol = i->positive("abs_tol", o.abs_tol);
        o.rel_tol = i->positive("rel_tol", o.rel_tol);
        o.initial_step = i->positive("initial_step", o.initial_step);
        o.max_step = i->positive("max_step", o.max_step);
        i->finish();
    }
    if (auto s = r.object("section")) {
        c.section.direction = static_cast<int>(s->integer("direction", c.section.direction));
        if (c.section.direction != 1 && c.section.direction != -1) throw ConfigError(s->at("direction"), "must be +1 or -1");
        c.section.max_time = s->positive("max_time", c.section.max_time);
        s->finish();
    }

    if (auto s = r.object("sos")) {
        if (s->has("energies")) {
            const json& e = s->raw("energies");
            if (!e.is_array()) throw ConfigError(s->at("energies"), "expected an array");
            for (std::size_t k = 0; k < e.size(); ++k)
                c.sos_energies.push_back(detail::energy_spec(e[k], s->at("energies") + "[" + std::to_string(k) + "]", c));
        }
        c.sos_trajectories = static_cast<int>(s->integer("trajectories", c.sos_trajectories));
        c.sos_crossings = static_cast<int>(s->integer("crossings", c.sos_crossings));
        if (c.sos_trajectories < 1) throw ConfigError(s->at("trajectories"), "must be at least 1");
        if (c.sos_crossings < 1) throw ConfigError(s->at("crossings"), "must be at least 1");
        s->finish();
    }

    if (auto o = r.object("orbits")) {
        if (!o->has("seed_energy")) throw ConfigError(o->at("seed_energy"), "missing");
        c.seed_energy = c.to_hartree(o->positive("seed_energy", 0.0));
        if (!o->has("guess")) throw ConfigError(o->at("guess"), "missing");
        const auto g = o->numbers("guess", 2);
        c.guess = {g[0], g[1], c.section.direction};
        if (!o->has("window")) throw ConfigError(o->at("window"), "missing");
        const auto w = o->numbers("window", 2);
        c.window = {c.to_hartree(w[0]), c.to_hartree(w[1])};
        if (!(w[0] > 0.0 && w[1] > w[0])) throw ConfigError(o->at("window"), "need 0 < lo < hi");
        if (c.seed_energy < c.window.lo || c.seed_energy > c.window.hi)
            throw ConfigError(o->at("seed_energy"), "must lie inside the continuation window");
        c.continuation.step = o->positive("step", c.continuation.step);
        c.continuation.max_step = o->positive("max_step", c.continuation.max_step);
        c.continuation.tolerance = o->positive("tolerance", c.continuation.tolerance);
        c.continuation.max_points = static_cast<int>(o->integer("max_points", c.continuation.max_points));
        o->finish();
    }

    if (r.has("targets")) {
        const json& t = r.raw("targets");
        if (!t.is_array()) throw ConfigError("targets", "expected an array");
        std::set<std::string> names;
        for (std::size_t k = 0; k < t.size(); ++k) {
            const std::string path = "targets[" + std::to_string(k) + "]";
            detail::Reader tr(t[k], path);
            SweepTarget s;
            s.name = tr.string("name", "");
            if (s.name.empty() || s.name.find_first_of("/\\. ") != std::string::npos)
                throw ConfigError(tr.at("name"), "needs a plain non-empty name");
            if (!names.insert(s.name).second) throw ConfigError(tr.at("name"), "duplicate target name");
            if (!tr.has("energy")) throw ConfigError(tr.at("energy"), "missing");
            s.energy = detail::energy_spec(tr.raw("energy"), tr.at("energy"), c);
            const std::string b = tr.choice("branch", "unstable", {"fold", "stable", "unstable"});
            s.branch = b == "fold" ? Branch::fold : b == "stable" ? Branch::stable : Branch::unstable;
            if (s.branch == Branch::fold && !(s.energy.relative() && s.energy.multiple == 1.0))
                throw ConfigError(tr.at("branch"), "the fold orbit exists only at E_bif");
            if (!tr.has("n_range")) throw ConfigError(tr.at("n_range"), "missing");
            const auto n = tr.numbers("n_range", 2);
            s.n_lo = static_cast<int>(n[0]);
            s.n_hi = static_cast<int>(n[1]);
            if (s.n_lo != n[0] || s.n_hi != n[1] || s.n_lo < 0)
                throw ConfigError(tr.at("n_range"), "needs two non-negative integers");
            s.n_step = static_cast<int>(tr.integer("n_step", 1));
            if (s.n_step < 1) throw ConfigError(tr.at("n_step"), "must be at least 1");
            if (s.rungs().size() < 4)
                throw ConfigError(tr.at("n_range"), "a sweep needs at least 4 rungs; this range gives " +
                                                        std::to_string(s.rungs().size()));
            tr.finish();
            c.targets.push_back(s);
        }
    }
    if (!c.targets.empty() && c.seed_energy == 0.0)
        throw ConfigError("orbits", "sweeps need an orbit seed (orbits.seed_energy, orbits.guess, orbits.window)");

    if (auto q = r.object("quantum")) {
        auto& o = c.quantum;
        o.sizing.points_per_wavelength = q->positive("points_per_wavelength", o.sizing.points_per_wavelength);
        o.sizing.allowed_factor = q->positive("allowed_factor", o.sizing.allowed_factor);
        o.sizing.margin = q->number("margin", o.sizing.margin);
        o.cap_factor = q->positive("cap_factor", o.cap_factor);
        if (auto p = q->object("packet")) {
            const std::string kind = p->choice("width", "coherent", {"coherent", "fixed"});
            o.width.kind = kind == "coherent" ? quantum::WidthPolicy::Kind::coherent : quantum::WidthPolicy::Kind::fixed;
            o.width.sigma_R = p->positive("sigma_R", o.width.sigma_R);
            o.width.sigma_theta = p->positive("sigma_theta", o.width.sigma_theta);
            o.width.scale = p->positive("scale", o.width.scale);
            o.launch = p->choice("launch", "outer", {"outer", "inner"}) == "outer" ? quantum::TurningPointChoice::outer
                                                                                     : quantum::TurningPointChoice::inner;
            o.packet_reach = p->positive("reach", o.packet_reach);
            p->finish();
        }
        if (auto e = q->object("ehrenfest")) {
            const std::string kind = e->choice("kind", "ehrenfest", {"ehrenfest", "periods"});
            o.window.kind = kind == "ehrenfest" ? scar::EhrenfestPolicy::Kind::ehrenfest : scar::EhrenfestPolicy::Kind::periods;
            o.window.factor = e->positive("factor", o.window.factor);
            o.window.marginal_periods = e->positive("marginal_periods", o.window.marginal_periods);
            o.window.periods = e->positive("periods", o.window.periods);
            e->finish();
        }
        o.band_periods = q->positive("band_periods", o.band_periods);
        o.span_windows = q->positive("span_windows", o.span_windows);
        o.reach = q->positive("reach", o.reach);
        o.band_tolerance = q->positive("band_tolerance", o.band_tolerance);
        o.half_width = q->positive("half_width", o.half_width);
        if (o.half_width < 3.0) throw ConfigError(q->at("half_width"), "must be at least 3");
        o.propagation.tolerance = q->positive("tolerance", o.propagation.tolerance);
        o.propagation.tail_limit = q->positive("tail_limit", o.propagation.tail_limit);
        o.width_floor = q->positive("width_floor", o.width_floor);
        q->finish();
    }
    if (auto f = r.object("fit")) {
        auto& o = c.quantum.fit;
        o.band = f->positive("band", o.band);
        o.error_multiple = f->positive("error_multiple", o.error_multiple);
        o.min_span = f->positive("min_span", o.min_span);
        f->finish();
    }
    r.finish();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true); // comments allowed
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
    }
    RunConfig c = parse_config(j);
    // coefficient files are found relative to the config that names them
    if (!c.coefficients.empty() && std::filesystem::path(c.coefficients).is_relative())
        c.coefficients = (std::filesystem::path(path).parent_path() / c.coefficients).lexically_normal().string();
    return c;
}

/// Normalised form of everything that affects results: all defaults filled
/// in, energies in hartree. Output location and worker count are left out.
inline json canonical_json(const RunConfig& c) {
    json j;
    j["surface"] = {{"surrogate", c.surrogate}, {"coefficients", c.coefficients}, {"params", c.surface_params}};
    if (!c.coefficients.empty()) j["surface"]["coefficients_sha256"] = sha256_file(c.coefficients);
    if (c.domain) j["surface"]["domain"] = {c.domain->lo, c.domain->hi};
    j["masses"] = {{"m_li", c.masses.m_li}, {"m_c", c.masses.m_c}, {"m_n", c.masses.m_n}, {"r_e", c.masses.r_e}};
    j["path_points"] = c.path_points;
    const auto& I = c.section.integrator;
    j["section"] = {{"direction", c.section.direction},
                    {"max_time", c.section.max_time},
                    {"abs_tol", I.abs_tol},
                    {"rel_tol", I.rel_tol},
                    {"initial_step", I.initial_step},
                    {"max_step", I.max_step}};
    json se = json::array();
    for (const auto& e : c.sos_energies) se.push_back(detail::energy_json(e));
    j["sos"] = {{"energies", se}, {"trajectories", c.sos_trajectories}, {"crossings", c.sos_crossings}};
    j["orbits"] = {{"seed_energy", c.seed_energy},
                   {"guess", {c.guess.psi, c.guess.P_psi}},
                   {"window", {c.window.lo, c.window.hi}},
                   {"step", c.continuation.step},
                   {"max_step", c.continuation.max_step},
                   {"tolerance", c.continuation.tolerance},
                   {"max_points", c.continuation.max_points}};
    json tg = json::array();
    for (const auto& t : c.targets)
        tg.push_back({{"name", t.name},
                      {"energy", detail::energy_json(t.energy)},
                      {"branch", to_string(t.branch)},
                      {"n_range", {t.n_lo, t.n_hi}},
                      {"n_step", t.n_step}});
    j["targets"] = tg;
    const auto& q = c.quantum;
    j["quantum"] = {{"points_per_wavelength", q.sizing.points_per_wavelength},
                    {"allowed_factor", q.sizing.allowed_factor},
                    {"margin", q.sizing.margin},
                    {"cap_factor", q.cap_factor},
                    {"packet",
                     {{"width", quantum::to_string(q.width.kind)},
                      {"sigma_R", q.width.sigma_R},
                      {"sigma_theta", q.width.sigma_theta},
                      {"scale", q.width.scale},
                      {"launch", q.launch == quantum::TurningPointChoice::outer ? "outer" : "inner"},
                      {"reach", q.packet_reach}}},
                    {"ehrenfest",
                     {{"kind", scar::to_string(q.window.kind)},
                      {"factor", q.window.factor},
                      {"marginal_periods", q.window.marginal_periods},
                      {"periods", q.window.periods}}},
                    {"band_periods", q.band_periods},
                    {"span_windows", q.span_windows},
                    {"reach", q.reach},
                    {"band_tolerance", q.band_tolerance},
                    {"half_width", q.half_width},
                    {"tolerance", q.propagation.tolerance},
                    {"tail_limit", q.propagation.tail_limit},
                    {"width_floor", q.width_floor}};
    j["fit"] = {{"band", q.fit.band}, {"error_multiple", q.fit.error_multiple}, {"min_span", q.fit.min_span}};
    j["seed"] = c.seed;
    return j;
}

inline std::string config_hash(const RunConfig& c) { return sha256_hex(canonical_json(c).dump()); }

} // namespace superscar::workbench
