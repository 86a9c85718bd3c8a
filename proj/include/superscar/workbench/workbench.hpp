#pragma once

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "superscar/classical/sos.hpp"
#include "superscar/pes/legendre.hpp"
#include "superscar/pes/mep.hpp"
#include "superscar/pes/surrogates.hpp"
#include "superscar/workbench/archive.hpp"
#include "superscar/workbench/config.hpp"
#include "superscar/workbench/manifest.hpp"

namespace superscar::workbench {

struct RunOptions {
    bool resume = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::ostream* log = &std::cerr;
};

/// Result of the orbit stage.
struct OrbitArchive {
    classical::PeriodicOrbit seed;
    classical::BifurcationScan scan;
    std::map<std::string, classical::PeriodicOrbit> targets;
};

struct TargetReport {
    std::string name;
    double energy = 0.0; // hartree
    classical::PeriodicOrbit orbit;
    scar::BSLadder ladder;
    std::vector<scar::ScarJob> jobs;
    std::optional<scar::ScalingFit> fit;
    std::string error; // why there is no fit
};

struct SweepReport {
    std::vector<TargetReport> targets;
    json record;
};

namespace detail {

inline std::string fmt(double x, int prec = 17) {
    std::ostringstream os;
    os << std::setprecision(prec) << x;
    return os.str();
}

inline std::string energy_tag(double E) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << units::hartree_to_cm(E);
    return os.str();
}

} // namespace detail

/// Stage runner over one config. Stages: orbits, sos, scar:<target>,
/// export-plots. Artifacts land in the run directory keyed by the config hash.
class Workbench {
public:
    Workbench(RunConfig cfg, RunOptions opts = {})
        : cfg_(std::move(cfg)), opts_(opts), log_(*opts.log) {
        if (opts_.seed) cfg_.seed = *opts_.seed;
        if (opts_.workers) cfg_.workers = *opts_.workers;
        if (cfg_.workers < 1) throw ConfigError("workers", "must be at least 1");
        hash_ = config_hash(cfg_);
        store_ = std::make_unique<RunStore>(cfg_.output, hash_);
    }

    const RunConfig& config() const { return cfg_; }
    const std::string& hash() const { return hash_; }
    RunStore& store() { return *store_; }
    const RunStore& store() const { return *store_; }

    // ----- system -----------------------------------------------------------------

    const pes::PotentialSurface& surface() {
        if (!surface_) {
            if (!cfg_.coefficients.empty()) {
                surface_ = pes::make_series_surface(pes::load_coefficients(cfg_.coefficients), cfg_.domain);
            } else {
                surface_ = pes::make_surrogate(cfg_.surrogate, cfg_.surface_params, cfg_.domain.value_or(pes::RadialDomain{}));
            }
        }
        return *surface_;
    }

    const classical::PoincareSection& section() {
        if (!section_) {
            auto mep = pes::minimum_energy_path(surface(), pes::uniform_theta_grid(cfg_.path_points));
            section_.emplace(classical::Hamiltonian(surface(), cfg_.masses), std::move(mep), cfg_.section);
        }
        return *section_;
    }

    double resolve(const EnergySpec& e) {
        if (e.absolute) return *e.absolute;
        const auto& scan = orbits().scan;
        if (!scan.E_bif) throw ConvergenceError("no bifurcation found in the continuation window; relative energies are undefined", {});
        return e.multiple * *scan.E_bif;
    }

    // ----- orbits -------------------------------------------------------------------

    const OrbitArchive& orbits() {
        if (orbits_) return *orbits_;
        if (cfg_.seed_energy == 0.0) throw ConfigError("orbits", "no orbit seed in the config");
        if (opts_.resume && store_->stage_done("orbits")) {
            try {
                orbits_ = load_orbits();
                say("orbits: resumed from archive");
                return *orbits_;
            } catch (const DependencyError&) {
                say("orbits: archive incomplete, recomputing");
            }
        }
        const auto t0 = now();
        const auto& sec = section();
        OrbitArchive a;
        a.seed = classical::find_periodic_orbit(cfg_.guess, cfg_.seed_energy, sec);
        a.scan = classical::continue_branch(a.seed, cfg_.window, sec, cfg_.continuation);
        store_->write("orbits/seed_orbit.json", to_json(a.seed).dump(1) + "\n", "orbits");
        store_->write("orbits/scan.json", to_json(a.scan).dump(1) + "\n", "orbits");
        if (a.scan.E_bif) say("orbits: E_bif = " + detail::fmt(units::hartree_to_cm(*a.scan.E_bif), 8) + " cm-1");
        orbits_ = std::move(a);
        for (const auto& t : cfg_.targets) {
            const auto po = target_orbit(t);
            orbits_->targets[t.name] = po;
            store_->write("orbits/target_" + t.name + ".json", to_json(po).dump(1) + "\n", "orbits");
        }
        store_->add_timing("orbits", seconds_since(t0));
        store_->set_stage("orbits", "done", orbits_->scan.failed ? "continuation stopped: " + orbits_->scan.failure : "");
        return *orbits_;
    }

    /// The `orbits` command: archives plus a summary on the log.
    json cmd_orbits() {
        const auto& a = orbits();
        json out = {{"config_hash", hash_}, {"E_bif_cm", a.scan.E_bif ? json(units::hartree_to_cm(*a.scan.E_bif)) : json(nullptr)},
                    {"E_loss_cm", a.scan.E_loss ? json(units::hartree_to_cm(*a.scan.E_loss)) : json(nullptr)}};
        if (a.scan.fold) out["fold_trace"] = a.scan.fold->trace;
        json t = json::object();
        for (const auto& [name, po] : a.targets)
            t[name] = {{"energy_cm", units::hartree_to_cm(po.energy)}, {"trace", po.trace()}, {"period_au", po.period},
                       {"reduced_action_au", po.reduced_action()}, {"maslov", po.maslov},
                       {"stability", classical::to_string(po.stability)}};
        out["targets"] = t;
        store_->write("orbits/report.json", out.dump(2) + "\n", "orbits");
        return out;
    }

    // ----- sos ----------------------------------------------------------------------

    /// Composite sections at every configured energy, with fixed-point markers
    /// for the orbit branches when they reach that energy.
    std::vector<std::string> cmd_sos() {
        if (cfg_.sos_energies.empty()) throw ConfigError("sos.energies", "no energies to section");
        const auto t0 = now();
        std::vector<std::string> files;
        for (std::size_t k = 0; k < cfg_.sos_energies.size(); ++k) {
            const double E = resolve(cfg_.sos_energies[k]);
            const std::string rel = "sos/sos_" + std::to_string(k) + ".csv";
            const std::string mrel = "sos/fixed_points_" + std::to_string(k) + ".csv";
            files.push_back(rel);
            if (opts_.resume && store_->valid(rel) && store_->valid(mrel)) {
                say("sos: " + rel + " is current, skipped");
                continue;
            }
            classical::SosOptions so;
            so.trajectories = cfg_.sos_trajectories;
            so.crossings = cfg_.sos_crossings;
            so.seed = cfg_.seed + k;
            so.workers = cfg_.workers;
            const auto sos = classical::composite_sos(E, section(), so);
            std::ostringstream os;
            os << "# E_cm=" << detail::fmt(units::hartree_to_cm(E)) << " E_hartree=" << detail::fmt(E)
               << " seed=" << so.seed << " psi_rad P_psi_au\n";
            classical::write_sos_csv(os, sos);
            store_->write(rel, os.str(), "sos");
            store_->write(mrel, fixed_point_csv(E), "sos");
            say("sos: " + std::to_string(sos.size()) + " crossings at " + detail::energy_tag(E) + " cm-1");
        }
        store_->add_timing("sos", seconds_since(t0));
        store_->set_stage("sos", "done");
        return files;
    }

    // ----- scar sweeps ----------------------------------------------------------------

    SweepReport cmd_scarsweep() {
        if (cfg_.targets.empty()) throw ConfigError("targets", "no sweep targets");
        SweepReport rep;
        const auto& arch = orbits();
        for (const auto& t : cfg_.targets) rep.targets.push_back(run_target(t, arch.targets.at(t.name)));
        rep.record = sweep_record(rep);
        store_->write("scar/report.json", rep.record.dump(2) + "\n", "scarsweep");
        bool all = true;
        for (const auto& t : rep.targets) all = all && t.fit.has_value();
        store_->set_stage("scarsweep", all ? "done" : "partial");
        return rep;
    }

    // ----- plot export ----------------------------------------------------------------

    /// Plot-ready series from a finished run. Missing inputs raise
    /// DependencyError naming the stage to rerun.
    std::vector<std::string> cmd_export_plots() {
        std::vector<std::string> out;
        const RunManifest m = store_->manifest();
        if (m.artifacts.empty()) throw DependencyError("orbits", "run directory " + store_->dir().string() + " has no artifacts");
        auto emit = [&](const std::string& rel, const std::string& content) {
            store_->write(rel, content, "export-plots");
            out.push_back(rel);
        };

        // Fig. 1 analogue: section scatter and fixed points
        for (std::size_t k = 0; k < cfg_.sos_energies.size(); ++k) {
            const std::string rel = "sos/sos_" + std::to_string(k) + ".csv";
            if (!m.artifacts.count(rel)) continue;
            emit("plots/sos_" + std::to_string(k) + ".csv", store_->read(rel, "sos"));
            const std::string mrel = "sos/fixed_points_" + std::to_string(k) + ".csv";
            if (m.artifacts.count(mrel)) emit("plots/sos_fixed_points_" + std::to_string(k) + ".csv", store_->read(mrel, "sos"));
        }

        if (!m.artifacts.count("scar/report.json")) {
            if (out.empty()) throw DependencyError("scarsweep", "no section or sweep artifacts; run 'sos' or 'scarsweep' first");
            store_->set_stage("export-plots", "done", "sections only");
            return out;
        }
        const json report = json::parse(store_->read("scar/report.json", "scarsweep"));
        for (const auto& t : report.at("targets")) {
            const std::string name = t.at("name").get<std::string>();
            const classical::PeriodicOrbit po =
                periodic_orbit(json::parse(store_->read("orbits/target_" + name + ".json", "orbits")));
            {
                // orbit polyline folded onto [0, pi]
                std::ostringstream os;
                os << "# orbit at E_cm=" << detail::fmt(units::hartree_to_cm(po.energy)) << "\nR_bohr,theta_rad\n";
                os.precision(17);
                for (const auto& p : po.path) os << p.R << ',' << pes::PotentialSurface::fold_angle(p.theta).first << '\n';
                emit("plots/orbit_" + name + ".csv", os.str());
            }
            for (const auto& s : t.at("jobs")) {
                const int n = s.at("n").get<int>();
                const std::string base = job_dir(name, n);
                if (store_->valid(base + "/spectrum.csv"))
                    emit("plots/spectrum_" + name + "_n" + std::to_string(n) + ".csv", store_->read(base + "/spectrum.csv", "scarsweep"));
                if (!store_->valid(base + "/scar.wf")) continue;
                std::istringstream in(store_->read(base + "/scar.wf", "scarsweep"));
                const quantum::WaveField f = read_wavefield(in);
                std::ostringstream os;
                os << "# N_R=" << f.grid.N_R << " N_theta=" << f.grid.N_theta << " hbar=" << detail::fmt(f.hbar)
                   << " density per bohr rad\nR_bohr,theta_rad,density\n";
                os.precision(10);
                for (int i = 0; i < f.grid.N_R; ++i)
                    for (int j = 0; j < f.grid.N_theta; ++j) os << f.grid.R(i) << ',' << f.grid.theta(j) << ',' << std::norm(f(i, j)) << '\n';
                emit("plots/density_" + name + "_n" + std::to_string(n) + ".csv", os.str());
            }
            if (t.contains("fit") && !t.at("fit").is_null()) {
                const auto& fit = t.at("fit");
                const double alpha = fit.at("alpha").get<double>(), c = fit.at("prefactor").get<double>();
                std::ostringstream os;
                os << "# alpha=" << detail::fmt(alpha) << " prefactor=" << detail::fmt(c) << "\nn,log_x,log_sigma,log_fitted\n";
                os.precision(17);
                for (const auto& s : fit.at("samples")) {
                    const double x = s.at("x").get<double>(), sigma = s.at("sigma_rad").get<double>();
                    os << s.at("n").get<int>() << ',' << std::log(x) << ',' << std::log(sigma) << ','
                       << std::log(c * std::pow(x, -alpha)) << '\n';
                }
                emit("plots/fit_" + name + ".csv", os.str());
            }
        }
        store_->set_stage("export-plots", "done");
        return out;
    }

    /// Where the scalar record, field dump and spectrum of job n live.
    static std::string job_dir(const std::string& target, int n) {
        std::ostringstream os;
        os << "scar/" << target << "/n" << std::setw(3) << std::setfill('0') << n;
        return os.str();
    }

private:
    using clock = std::chrono::steady_clock;
    static clock::time_point now() { return clock::now(); }
    static double seconds_since(clock::time_point t0) { return std::chrono::duration<double>(now() - t0).count(); }

    void say(const std::string& s) {
        std::lock_guard lock(log_mu_);
        log_ << s << std::endl;
    }

    OrbitArchive load_orbits() {
        OrbitArchive a;
        a.seed = periodic_orbit(json::parse(store_->read("orbits/seed_orbit.json", "orbits")));
        a.scan = bifurcation_scan(json::parse(store_->read("orbits/scan.json", "orbits")));
        for (const auto& t : cfg_.targets)
            a.targets[t.name] = periodic_orbit(json::parse(store_->read("orbits/target_" + t.name + ".json", "orbits")));
        return a;
    }

    /// Orbit for a sweep target: the fold orbit itself at E_bif (Newton is
    /// singular there), otherwise Newton from the nearest sample of the branch.
    classical::PeriodicOrbit target_orbit(const SweepTarget& t) {
        const auto& scan = orbits_->scan;
        const double E = resolve(t.energy);
        if (t.branch == Branch::fold) {
            if (!scan.fold) throw ConvergenceError("target '" + t.name + "': no fold found in the continuation window", {});
            return classical::characterize_orbit(scan.fold->fixed, *scan.E_bif, section());
        }
        const auto& branch = t.branch == Branch::stable ? scan.stable_branch : scan.unstable_branch;
        if (branch.empty()) throw ConvergenceError("target '" + t.name + "': the " + to_string(t.branch) + " branch is empty", {});
        const classical::BranchSample* best = &branch.front();
        for (const auto& s : branch)
            if (std::abs(s.energy - E) < std::abs(best->energy - E)) best = &s;
        if (E < branch.front().energy - 1e-12 || E > branch.back().energy + 1e-12) {
            std::ostringstream os;
            os << "target '" << t.name << "': " << detail::energy_tag(E) << " cm-1 is outside the traced "
               << to_string(t.branch) << " branch [" << detail::energy_tag(branch.front().energy) << ", "
               << detail::energy_tag(branch.back().energy) << "] cm-1";
            throw ConvergenceError(os.str(), {});
        }
        return classical::find_periodic_orbit(best->fixed, E, section());
    }

    std::string fixed_point_csv(double E) {
        std::ostringstream os;
        os << "# fixed points of the return map at E_cm=" << detail::fmt(units::hartree_to_cm(E)) << "\nbranch,psi_rad,P_psi_au,trace\n";
        os.precision(17);
        if (cfg_.seed_energy == 0.0) return os.str();
        const auto& scan = orbits().scan;
        auto mark = [&](const char* name, const std::vector<classical::BranchSample>& b) {
            if (b.empty() || E < b.front().energy || E > b.back().energy) return;
            const classical::BranchSample* best = &b.front();
            for (const auto& s : b)
                if (std::abs(s.energy - E) < std::abs(best->energy - E)) best = &s;
            try {
                const auto po = classical::find_periodic_orbit(best->fixed, E, section());
                os << name << ',' << po.section.psi << ',' << po.section.P_psi << ',' << po.trace() << '\n';
            } catch (const Error&) {
                // no marker when Newton does not converge (e.g. right at the fold)
            }
        };
        if (scan.fold && std::abs(E - *scan.E_bif) < 1e-9 * *scan.E_bif) {
            os << "fold," << scan.fold->fixed.psi << ',' << scan.fold->fixed.P_psi << ',' << scan.fold->trace << '\n';
        } else {
            mark("stable", scan.stable_branch);
            mark("unstable", scan.unstable_branch);
        }
        return os.str();
    }

    TargetReport run_target(const SweepTarget& t, const classical::PeriodicOrbit& po) {
        TargetReport r;
        r.name = t.name;
        r.energy = po.energy;
        r.orbit = po;
        r.ladder = scar::bs_ladder(po, t.n_lo, t.n_hi);
        const std::vector<int> rungs = t.rungs();
        const auto t0 = now();
        r.jobs = parallel_map(rungs.size(), cfg_.workers, [&](std::size_t k) {
            const int n = rungs[k];
            const std::string dir = job_dir(t.name, n);
            if (opts_.resume && store_->valid(dir + "/job.json")) {
                const auto j = scar_job(json::parse(store_->read(dir + "/job.json", "scarsweep")));
                say("scar " + t.name + " n=" + std::to_string(n) + ": resumed (" + scar::to_string(j.status) + ")");
                return j;
            }
            const double hbar = r.ladder.entries[static_cast<std::size_t>(n - t.n_lo)].hbar;
            scar::ScarJob j = scar::run_scar_job(po, surface(), cfg_.masses, po.energy, n, hbar, cfg_.quantum);
            persist(t.name, j);
            std::ostringstream os;
            os << "scar " << t.name << " n=" << n << ": " << scar::to_string(j.status);
            if (j.width) os << ", sigma=" << detail::fmt(j.width->sigma, 6) << " rad";
            if (!j.reason.empty()) os << " (" << j.reason << ")";
            os << " [" << detail::fmt(j.seconds, 3) << " s]";
            say(os.str());
            return j;
        });
        store_->add_timing("scar:" + t.name, seconds_since(t0));
        try {
            r.fit = scar::fit_jobs(r.jobs, r.ladder, cfg_.quantum.fit);
            say("scar " + t.name + ": alpha = " + detail::fmt(r.fit->alpha, 4) + " +- " + detail::fmt(r.fit->alpha_err, 2) +
                " (" + scar::to_string(r.fit->classification) + ")");
            store_->set_stage("scar:" + t.name, "done");
        } catch (const PipelineError& e) {
            r.error = e.what();
            say("scar " + t.name + ": " + r.error);
            store_->set_stage("scar:" + t.name, "failed", r.error);
        }
        return r;
    }

    void persist(const std::string& target, const scar::ScarJob& j) {
        const std::string dir = job_dir(target, j.n);
        if (j.scar) {
            std::ostringstream os;
            write_wavefield(os, j.scar->field);
            store_->write(dir + "/scar.wf", os.str(), "scarsweep");
        }
        if (j.spectrum) {
            std::ostringstream os;
            write_spectrum_csv(os, *j.spectrum);
            store_->write(dir + "/spectrum.csv", os.str(), "scarsweep");
        }
        store_->add_timing("scar:" + target + ":n" + std::to_string(j.n), j.seconds);
        // written last: its presence marks the job complete
        store_->write(dir + "/job.json", to_json(j).dump(1) + "\n", "scarsweep");
    }

    json sweep_record(const SweepReport& rep) const {
        json targets = json::array();
        for (const auto& t : rep.targets) {
            json jobs = json::array();
            for (const auto& j : t.jobs) {
                json o = {{"n", j.n}, {"hbar", j.hbar}, {"status", scar::to_string(j.status)}, {"reason", j.reason}};
                o["sigma_rad"] = j.width ? json(j.width->sigma) : json(nullptr);
                o["band_offset_cm"] = j.band ? json(units::hartree_to_cm(j.band->center - t.energy)) : json(nullptr);
                jobs.push_back(o);
            }
            json o = {{"name", t.name},
                      {"energy_cm", units::hartree_to_cm(t.energy)},
                      {"energy_hartree", t.energy},
                      {"orbit",
                       {{"trace", t.orbit.trace()},
                        {"stability", classical::to_string(t.orbit.stability)},
                        {"period_au", t.orbit.period},
                        {"reduced_action_au", t.orbit.reduced_action()},
                        {"maslov", t.orbit.maslov},
                        {"stability_exponent_per_au", t.orbit.stability_exponent()}}},
                      {"jobs", jobs}};
            if (t.fit) {
                json samples = json::array();
                for (const auto& s : t.fit->samples) samples.push_back({{"n", s.n}, {"x", s.x}, {"sigma_rad", s.sigma}});
                o["fit"] = {{"alpha", t.fit->alpha},
                            {"alpha_err", t.fit->alpha_err},
                            {"prefactor", t.fit->prefactor},
                            {"classification", scar::to_string(t.fit->classification)},
                            {"samples", samples}};
            } else {
                o["fit"] = nullptr;
                o["error"] = t.error;
            }
            targets.push_back(o);
        }
        return {{"config_hash", hash_}, {"code_version", kCodeVersion}, {"targets", targets}};
    }

    RunConfig cfg_;
    RunOptions opts_;
    std::ostream& log_;
    std::mutex log_mu_;
    std::string hash_;
    std::unique_ptr<RunStore> store_;
    std::optional<pes::PotentialSurface> surface_;
    std::optional<classical::PoincareSection> section_;
    std::optional<OrbitArchive> orbits_;
};

} // namespace superscar::workbench
