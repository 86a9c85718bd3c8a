#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "superscar/workbench/workbench.hpp"

namespace ss = superscar;
namespace wb = superscar::workbench;

namespace {

enum Exit { ok = 0, config_error = 2, numeric_failure = 3, missing_dependency = 4 };

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    bool resume = false;
};

wb::Workbench open(const Flags& f) {
    wb::RunOptions o;
    o.resume = f.resume;
    o.seed = f.seed;
    o.workers = f.workers;
    return wb::Workbench(wb::load_config(f.config), o);
}

int run(const std::string& verb, const Flags& f) {
    if (verb == "validate-config") {
        auto cfg = wb::load_config(f.config);
        if (f.workers && *f.workers < 1) throw ss::ConfigError("workers", "must be at least 1");
        std::cout << "config ok, hash " << wb::config_hash(cfg) << "\n";
        return ok;
    }
    auto w = open(f);
    std::cout << "run directory " << w.store().dir().string() << "\n";
    if (verb == "orbits") {
        std::cout << w.cmd_orbits().dump(2) << "\n";
        return ok;
    }
    if (verb == "sos") {
        for (const auto& p : w.cmd_sos()) std::cout << p << "\n";
        return ok;
    }
    if (verb == "scarsweep") {
        const auto rep = w.cmd_scarsweep();
        int status = ok;
        for (const auto& t : rep.targets) {
            std::cout << t.name << " at " << ss::units::hartree_to_cm(t.energy) << " cm-1: ";
            if (t.fit) {
                std::cout << "alpha = " << t.fit->alpha << " +- " << t.fit->alpha_err << " ("
                          << ss::scar::to_string(t.fit->classification) << ", " << t.fit->samples.size() << " samples)\n";
            } else {
                std::cout << "no fit: " << t.error << "\n";
                status = numeric_failure;
            }
        }
        return status;
    }
    if (verb == "export-plots") {
        for (const auto& p : w.cmd_export_plots()) std::cout << p << "\n";
        return ok;
    }
    throw ss::ConfigError("<command>", "unknown verb " + verb);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"superscar: scar-width scaling studies on a two-mode isomerising molecule"};
    app.require_subcommand(1, 1);
    Flags f;
    std::int64_t seed = 0;
    int workers = 0;
    for (const char* verb : {"sos", "orbits", "scarsweep", "export-plots", "validate-config"}) {
        auto* sub = app.add_subcommand(verb);
        sub->add_option("--config", f.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "RNG seed, overrides the config")->check(CLI::NonNegativeNumber);
        sub->add_option("--workers", workers, "worker threads, overrides the config")->check(CLI::PositiveNumber);
        sub->add_flag("--resume", f.resume, "reuse artifacts whose checksums verify");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }
    auto* sub = app.get_subcommands().front();
    if (sub->count("--seed")) f.seed = static_cast<std::uint64_t>(seed);
    if (sub->count("--workers")) f.workers = workers;

    try {
        return run(sub->get_name(), f);
    } catch (const ss::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const ss::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const ss::DependencyError& e) {
        std::cerr << "missing dependency";
        if (!e.stage().empty()) std::cerr << " (stage '" << e.stage() << "')";
        std::cerr << ": " << e.what() << "\n";
        return missing_dependency;
    } catch (const ss::Error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return numeric_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numeric_failure;
    }
}
