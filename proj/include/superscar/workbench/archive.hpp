#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "superscar/classical/continuation.hpp"
#include "superscar/scar/pipeline.hpp"

namespace superscar::workbench {

using json = nlohmann::json;

// Doubles go through nlohmann's shortest round-trip formatting, so every
// archive loads back bit for bit.

inline json to_json(const classical::PhasePoint& p) { return {p.R, p.theta, p.P_R, p.P_theta, p.t}; }

inline classical::PhasePoint phase_point(const json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>(),
            j.at(4).get<double>()};
}

inline json to_json(const classical::SectionPoint& s) { return {{"psi", s.psi}, {"P_psi", s.P_psi}, {"direction", s.direction}}; }

inline classical::SectionPoint section_point(const json& j) {
    return {j.at("psi").get<double>(), j.at("P_psi").get<double>(), j.at("direction").get<int>()};
}

/// Columns of `path` and `turning_points`: R, theta, P_R, P_theta, t.
inline json to_json(const classical::PeriodicOrbit& po) {
    json path = json::array(), tps = json::array();
    for (const auto& p : po.path) path.push_back(to_json(p));
    for (const auto& p : po.turning_points) tps.push_back(to_json(p));
    const auto& M = po.monodromy;
    return {{"energy_hartree", po.energy},
            {"energy_cm", units::hartree_to_cm(po.energy)},
            {"initial", to_json(po.initial)},
            {"section", to_json(po.section)},
            {"period_au", po.period},
            {"action_au", po.action},
            {"maslov", po.maslov},
            {"monodromy", {{M(0, 0), M(0, 1)}, {M(1, 0), M(1, 1)}}},
            {"trace", po.trace()},
            {"stability", classical::to_string(po.stability)},
            {"closure", po.closure},
            {"turning_points", tps},
            {"path", path}};
}

inline classical::PeriodicOrbit periodic_orbit(const json& j) {
    classical::PeriodicOrbit po;
    po.energy = j.at("energy_hartree").get<double>();
    po.initial = phase_point(j.at("initial"));
    po.section = section_point(j.at("section"));
    po.period = j.at("period_au").get<double>();
    po.action = j.at("action_au").get<double>();
    po.maslov = j.at("maslov").get<int>();
    const auto& M = j.at("monodromy");
    po.monodromy << M.at(0).at(0).get<double>(), M.at(0).at(1).get<double>(), M.at(1).at(0).get<double>(),
        M.at(1).at(1).get<double>();
    const std::string s = j.at("stability").get<std::string>();
    po.stability = s == "stable" ? classical::Stability::stable
                   : s == "unstable" ? classical::Stability::unstable
                                     : classical::Stability::marginal;
    po.closure = j.at("closure").get<double>();
    for (const auto& p : j.at("turning_points")) po.turning_points.push_back(phase_point(p));
    for (const auto& p : j.at("path")) po.path.push_back(phase_point(p));
    return po;
}

inline json to_json(const classical::BranchSample& s) {
    return {{"energy_hartree", s.energy}, {"fixed", to_json(s.fixed)}, {"trace", s.trace},   {"period_au", s.period},
            {"action_au", s.action},      {"maslov", s.maslov},        {"arclength", s.arclength}};
}

inline classical::BranchSample branch_sample(const json& j) {
    classical::BranchSample s;
    s.energy = j.at("energy_hartree").get<double>();
    s.fixed = section_point(j.at("fixed"));
    s.trace = j.at("trace").get<double>();
    s.period = j.at("period_au").get<double>();
    s.action = j.at("action_au").get<double>();
    s.maslov = j.at("maslov").get<int>();
    s.arclength = j.at("arclength").get<double>();
    return s;
}

inline json to_json(const classical::BifurcationScan& scan) {
    auto list = [](const std::vector<classical::BranchSample>& v) {
        json a = json::array();
        for (const auto& s : v) a.push_back(to_json(s));
        return a;
    };
    json j = {{"curve", list(scan.curve)},
              {"stable_branch", list(scan.stable_branch)},
              {"unstable_branch", list(scan.unstable_branch)},
              {"failed", scan.failed},
              {"failure", scan.failure}};
    j["E_bif_hartree"] = scan.E_bif ? json(*scan.E_bif) : json(nullptr);
    j["E_bif_cm"] = scan.E_bif ? json(units::hartree_to_cm(*scan.E_bif)) : json(nullptr);
    j["fold"] = scan.fold ? to_json(*scan.fold) : json(nullptr);
    j["E_loss_hartree"] = scan.E_loss ? json(*scan.E_loss) : json(nullptr);
    j["E_loss_cm"] = scan.E_loss ? json(units::hartree_to_cm(*scan.E_loss)) : json(nullptr);
    return j;
}

inline classical::BifurcationScan bifurcation_scan(const json& j) {
    classical::BifurcationScan s;
    for (const auto& x : j.at("curve")) s.curve.push_back(branch_sample(x));
    for (const auto& x : j.at("stable_branch")) s.stable_branch.push_back(branch_sample(x));
    for (const auto& x : j.at("unstable_branch")) s.unstable_branch.push_back(branch_sample(x));
    s.failed = j.at("failed").get<bool>();
    s.failure = j.at("failure").get<std::string>();
    if (!j.at("E_bif_hartree").is_null()) s.E_bif = j.at("E_bif_hartree").get<double>();
    if (!j.at("fold").is_null()) s.fold = branch_sample(j.at("fold"));
    if (!j.at("E_loss_hartree").is_null()) s.E_loss = j.at("E_loss_hartree").get<double>();
    return s;
}

inline json to_json(const quantum::GridSpec& g) {
    return {{"N_R", g.N_R},
            {"N_theta", g.N_theta},
            {"R_lo", g.R_lo},
            {"R_hi", g.R_hi},
            {"theta_boundary", quantum::to_string(g.theta_boundary)}};
}

inline quantum::GridSpec grid_spec(const json& j) {
    quantum::GridSpec g;
    g.N_R = j.at("N_R").get<int>();
    g.N_theta = j.at("N_theta").get<int>();
    g.R_lo = j.at("R_lo").get<double>();
    g.R_hi = j.at("R_hi").get<double>();
    g.theta_boundary = j.at("theta_boundary").get<std::string>() == "neumann" ? quantum::ThetaBoundary::neumann
                                                                             : quantum::ThetaBoundary::dirichlet;
    return g;
}

inline json to_json(const scar::WidthSample& w) {
    return {{"n", w.n ? json(*w.n) : json(nullptr)},
            {"sigma_rad", w.sigma},
            {"R_bohr", w.R},
            {"variance_rad2", w.variance},
            {"weight", w.weight}};
}

inline scar::WidthSample width_sample(const json& j) {
    scar::WidthSample w;
    if (!j.at("n").is_null()) w.n = j.at("n").get<int>();
    w.sigma = j.at("sigma_rad").get<double>();
    w.R = j.at("R_bohr").get<std::vector<double>>();
    w.variance = j.at("variance_rad2").get<std::vector<double>>();
    w.weight = j.at("weight").get<std::vector<double>>();
    return w;
}

inline scar::JobStatus job_status(const std::string& s) {
    if (s == "ok") return scar::JobStatus::ok;
    if (s == "excluded") return scar::JobStatus::excluded;
    return scar::JobStatus::failed;
}

/// Scalar record of a scar job. Fields and spectra are stored separately and
/// wall-clock time is left out, so reruns give identical records.
inline json to_json(const scar::ScarJob& j) {
    json o = {{"n", j.n},
              {"hbar", j.hbar},
              {"status", scar::to_string(j.status)},
              {"reason", j.reason},
              {"grid", to_json(j.grid)},
              {"T_E_au", j.T_E},
              {"band_window_au", j.band_window},
              {"dt_au", j.dt},
              {"steps", j.steps}};
    o["band"] = j.band ? json{{"center_hartree", j.band->center},
                              {"weight", j.band->weight},
                              {"lo_hartree", j.band->lo},
                              {"hi_hartree", j.band->hi}}
                       : json(nullptr);
    o["width"] = j.width ? to_json(*j.width) : json(nullptr);
    if (j.scar) {
        o["scar"] = {{"energy_hartree", j.scar->energy},
                     {"mean_energy_hartree", j.scar->mean_energy},
                     {"orbit", j.scar->orbit},
                     {"warnings", j.scar->warnings}};
    }
    return o;
}

inline scar::ScarJob scar_job(const json& o) {
    scar::ScarJob j;
    j.n = o.at("n").get<int>();
    j.hbar = o.at("hbar").get<double>();
    j.status = job_status(o.at("status").get<std::string>());
    j.reason = o.at("reason").get<std::string>();
    j.grid = grid_spec(o.at("grid"));
    j.T_E = o.at("T_E_au").get<double>();
    j.band_window = o.at("band_window_au").get<double>();
    j.dt = o.at("dt_au").get<double>();
    j.steps = o.at("steps").get<int>();
    if (!o.at("band").is_null()) {
        const auto& b = o.at("band");
        j.band = quantum::Band{b.at("center_hartree").get<double>(), b.at("weight").get<double>(),
                               b.at("lo_hartree").get<double>(), b.at("hi_hartree").get<double>()};
    }
    if (!o.at("width").is_null()) j.width = width_sample(o.at("width"));
    return j;
}

// Wavefield dump: the line "superscar-wavefield 1", one line of JSON header
// (grid, hbar, masses), then N_R * N_theta pairs of little-endian doubles
// (re, im) in row-major (R, theta) order.

inline void write_wavefield(std::ostream& os, const quantum::WaveField& f) {
    const json h = {{"grid", to_json(f.grid)},
                    {"hbar", f.hbar},
                    {"masses", {{"m_li", f.masses.m_li}, {"m_c", f.masses.m_c}, {"m_n", f.masses.m_n}, {"r_e", f.masses.r_e}}},
                    {"units", "amplitudes per sqrt(bohr rad), flat measure"}};
    os << "superscar-wavefield 1\n" << h.dump() << '\n';
    static_assert(sizeof(quantum::cplx) == 2 * sizeof(double));
    os.write(reinterpret_cast<const char*>(f.a.data()), static_cast<std::streamsize>(f.a.size() * sizeof(quantum::cplx)));
}

inline quantum::WaveField read_wavefield(std::istream& in) {
    std::string magic, header;
    std::getline(in, magic);
    if (magic != "superscar-wavefield 1") throw DataError("not a wavefield dump");
    std::getline(in, header);
    const json h = json::parse(header);
    const auto& m = h.at("masses");
    quantum::WaveField f(grid_spec(h.at("grid")), h.at("hbar").get<double>(),
                         pes::MassParameters::make(m.at("m_li").get<double>(), m.at("m_c").get<double>(),
                                                   m.at("m_n").get<double>(), m.at("r_e").get<double>()));
    in.read(reinterpret_cast<char*>(f.a.data()), static_cast<std::streamsize>(f.a.size() * sizeof(quantum::cplx)));
    if (in.gcount() != static_cast<std::streamsize>(f.a.size() * sizeof(quantum::cplx)))
        throw DataError("wavefield dump is truncated");
    return f;
}

/// Columns: E_cm, E_hartree, density_per_hartree; '#' lines carry the window.
inline void write_spectrum_csv(std::ostream& os, const quantum::Spectrum& sp) {
    os << "# window_au=" << (sp.window ? std::to_string(*sp.window) : std::string("infinite"))
       << " effective_window_au=" << sp.effective_window << " total_weight=" << sp.total_weight() << '\n';
    os << "E_cm,E_hartree,density_per_hartree\n";
    os.precision(17);
    for (std::size_t k = 0; k < sp.energy.size(); ++k)
        os << units::hartree_to_cm(sp.energy[k]) << ',' << sp.energy[k] << ',' << sp.density[k] << '\n';
}

} // namespace superscar::workbench
