#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "superscar/workbench/workbench.hpp"

using namespace superscar;
using namespace superscar::workbench;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const fs::path kSource = SUPERSCAR_SOURCE_DIR;

json smoke_json() {
    std::ifstream in(kSource / "configs" / "smoke.json");
    return json::parse(in, nullptr, true, true);
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("superscar_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunConfig smoke(const fs::path& out) {
    json j = smoke_json();
    j["output"] = out.string();
    return parse_config(j);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string config_error_path(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<accepted>";
}

struct Csv {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Csv read_csv(const std::string& text) {
    Csv c;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            c.comments.push_back(line);
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (c.header.empty()) {
            c.header = cells;
            continue;
        }
        std::vector<double> row;
        for (const auto& s : cells) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            row.push_back(end != s.c_str() ? v : std::nan("")); // labels read as NaN
        }
        c.rows.push_back(row);
    }
    return c;
}

double comment_value(const Csv& c, const std::string& key) {
    for (const auto& line : c.comments) {
        const auto at = line.find(key + "=");
        if (at != std::string::npos) return std::stod(line.substr(at + key.size() + 1));
    }
    throw std::runtime_error("no " + key + " in header");
}

// One complete smoke run shared by the plumbing tests.
struct SmokeRun {
    fs::path out = scratch("smoke");
    Workbench wb{smoke(out)};
    SweepReport sweep;
    std::vector<std::string> plots;

    SmokeRun() {
        wb.cmd_orbits();
        wb.cmd_sos();
        sweep = wb.cmd_scarsweep();
        plots = wb.cmd_export_plots();
    }

    static SmokeRun& get() {
        static SmokeRun r;
        return r;
    }
};

} // namespace

TEST_CASE("config rejects bad input with field paths", "[workbench][config]") {
    const json base = smoke_json();
    CHECK(config_error_path(base) == "<accepted>");

    json j = base;
    j["masses"] = {{"m_li", -7.0}};
    CHECK(config_error_path(j) == "masses.m_li");

    j = base;
    j["targets"][0]["n_range"] = {3, 5};
    CHECK(config_error_path(j) == "targets[0].n_range");
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        CHECK_THAT(e.what(), ContainsSubstring("at least 4 rungs"));
    }

    j = base;
    j["targets"][0]["n_range"] = {4, 12};
    j["targets"][0]["n_step"] = 3; // 4, 7, 10
    CHECK(config_error_path(j) == "targets[0].n_range");

    j = base;
    j["surface"]["colour"] = "blue";
    CHECK(config_error_path(j) == "surface.colour");

    j = base;
    j["surface"]["params"] = {{"barrier_cm", 3000.0}, {"height", 1.0}};
    CHECK(config_error_path(j) == "surface.params.height");

    j = base;
    j["targets"][0]["energy"] = 9000.0;
    CHECK(config_error_path(j) == "targets[0].branch");

    j = base;
    j["targets"][0]["energy"] = "E_loss";
    CHECK(config_error_path(j) == "targets[0].energy");

    j = base;
    j["orbits"]["window"] = {7000, 16000};
    CHECK(config_error_path(j) == "orbits.seed_energy");

    j = base;
    j["quantum"] = {{"half_width", 2.0}};
    CHECK(config_error_path(j) == "quantum.half_width");

    j = base;
    j["units"]["energy"] = "eV";
    CHECK(config_error_path(j) == "units.energy");

    j = base;
    j["surface"]["coefficients"] = "licn.dat";
    CHECK(config_error_path(j) == "surface.surrogate");

    const fs::path dir = scratch("badjson");
    std::ofstream(dir / "bad.json") << "{\"seed\": 1,";
    CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
}

TEST_CASE("config hash tracks results, not placement", "[workbench][config]") {
    const RunConfig a = parse_config(smoke_json());
    CHECK(config_hash(a) == config_hash(parse_config(smoke_json())));
    CHECK(config_hash(a).size() == 64);

    json j = smoke_json();
    j["output"] = "/elsewhere";
    j["workers"] = 4;
    CHECK(config_hash(parse_config(j)) == config_hash(a));

    j = smoke_json();
    j["seed"] = 8;
    CHECK(config_hash(parse_config(j)) != config_hash(a));

    // same energy in other units is the same run
    j = smoke_json();
    j["units"]["energy"] = "hartree";
    j["orbits"]["seed_energy"] = units::cm_to_hartree(5600.0);
    j["orbits"]["window"] = {units::cm_to_hartree(4000.0), units::cm_to_hartree(16000.0)};
    CHECK(config_hash(parse_config(j)) == config_hash(a));
}

TEST_CASE("sha256 matches known digests", "[workbench][hash]") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(Sha256().update("a").update("bc").hex() == sha256_hex("abc"));
}

TEST_CASE("wavefield dump round trip", "[workbench][archive]") {
    quantum::GridSpec g{12, 9, 2.0, 6.0, quantum::ThetaBoundary::dirichlet};
    quantum::WaveField f(g, 0.37, pes::MassParameters::licn());
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (auto& a : f.a) a = {nd(rng), nd(rng)};
    std::stringstream ss;
    write_wavefield(ss, f);
    const quantum::WaveField h = read_wavefield(ss);
    CHECK(h.grid.N_R == g.N_R);
    CHECK(h.grid.N_theta == g.N_theta);
    CHECK(h.grid.R_lo == g.R_lo);
    CHECK(h.grid.R_hi == g.R_hi);
    CHECK(h.grid.theta_boundary == g.theta_boundary);
    CHECK(h.hbar == f.hbar);
    CHECK(h.masses.mu1 == f.masses.mu1);
    CHECK(h.a == f.a);

    std::string cut = ss.str();
    cut.resize(cut.size() - 8);
    std::istringstream in(cut);
    CHECK_THROWS_AS(read_wavefield(in), DataError);
}

TEST_CASE("manifest bookkeeping", "[workbench][manifest]") {
    const fs::path out = scratch("manifest");
    const std::string hash(64, 'a');
    {
        RunStore s(out, hash);
        s.write("x/one.txt", "one\n", "alpha");
        s.write("two.txt", "two\n", "beta");
        s.write("x/one.txt", "uno\n", "alpha"); // rewrite replaces the entry
        s.set_stage("alpha", "done");
        s.add_timing("alpha", 1.5);
    }
    RunStore s(out, hash);
    const RunManifest m = s.manifest();
    CHECK(m.artifacts.size() == 2);
    CHECK(m.artifacts.at("x/one.txt").sha256 == sha256_hex("uno\n"));
    CHECK(m.artifacts.at("x/one.txt").bytes == 4);
    CHECK(s.stage_done("alpha"));
    CHECK_FALSE(s.stage_done("beta"));
    CHECK(s.verify().empty());
    CHECK(s.read("two.txt", "beta") == "two\n");

    // timings stay out of the manifest file
    CHECK_FALSE(json::parse(slurp(s.dir() / "manifest.json")).contains("timings"));
    CHECK(json::parse(slurp(s.dir() / "timings.json")).at("alpha") == 1.5);

    std::ofstream(s.path("two.txt")) << "tampered\n";
    CHECK(s.verify() == std::vector<std::string>{"two.txt"});
    try {
        s.read("two.txt", "beta");
        FAIL("read of a tampered artifact succeeded");
    } catch (const DependencyError& e) {
        CHECK(e.stage() == "beta");
    }

    // a manifest from another config is not trusted
    fs::create_directories(out / "other");
    RunStore t(out / "other", hash);
    CHECK(t.manifest().artifacts.empty());
}

TEST_CASE("archives round trip", "[workbench][archive][slow]") {
    auto& run = SmokeRun::get();
    const auto& a = run.wb.orbits();
    const classical::PeriodicOrbit& po = a.targets.at("bif");
    const auto back = periodic_orbit(json::parse(to_json(po).dump()));
    CHECK(back.energy == po.energy);
    CHECK(back.period == po.period);
    CHECK(back.action == po.action);
    CHECK(back.maslov == po.maslov);
    CHECK(back.monodromy == po.monodromy);
    CHECK(back.stability == po.stability);
    CHECK(back.closure == po.closure);
    CHECK(back.section.psi == po.section.psi);
    CHECK(back.section.P_psi == po.section.P_psi);
    CHECK(back.initial.P_R == po.initial.P_R);
    REQUIRE(back.path.size() == po.path.size());
    for (std::size_t k = 0; k < po.path.size(); ++k) {
        CHECK(back.path[k].R == po.path[k].R);
        CHECK(back.path[k].theta == po.path[k].theta);
        CHECK(back.path[k].t == po.path[k].t);
    }
    REQUIRE(back.turning_points.size() == po.turning_points.size());

    const auto scan = bifurcation_scan(json::parse(to_json(a.scan).dump()));
    CHECK(scan.E_bif == a.scan.E_bif);
    CHECK(scan.unstable_branch.size() == a.scan.unstable_branch.size());
    CHECK(scan.fold->trace == a.scan.fold->trace);

    for (const auto& j : run.sweep.targets.front().jobs) {
        const auto k = scar_job(json::parse(to_json(j).dump()));
        CHECK(k.n == j.n);
        CHECK(k.hbar == j.hbar);
        CHECK(k.status == j.status);
        CHECK(k.dt == j.dt);
        REQUIRE(k.width.has_value() == j.width.has_value());
        if (j.width) {
            CHECK(k.width->sigma == j.width->sigma);
            CHECK(k.width->weight == j.width->weight);
        }
    }
}

TEST_CASE("orbit stage reports the tangency", "[workbench][orbits][slow]") {
    auto& run = SmokeRun::get();
    const auto& a = run.wb.orbits();
    REQUIRE(a.scan.E_bif.has_value());
    CHECK_THAT(a.targets.at("bif").trace(), WithinAbs(2.0, 1e-3));
    const json rep = json::parse(slurp(run.wb.store().path("orbits/report.json")));
    CHECK(rep.at("E_bif_cm").get<double>() == units::hartree_to_cm(*a.scan.E_bif));
}

TEST_CASE("sections stay on the energy shell", "[workbench][sos][slow]") {
    auto& run = SmokeRun::get();
    const auto& sec = run.wb.section();
    for (int k = 0; k < 2; ++k) {
        const Csv c = read_csv(slurp(run.wb.store().path("sos/sos_" + std::to_string(k) + ".csv")));
        const double E = units::cm_to_hartree(comment_value(c, "# E_cm"));
        REQUIRE(c.rows.size() == 6u * 40u);
        for (const auto& r : c.rows) CHECK(std::abs(r[3]) <= sec.momentum_bound(r[2], E) + 1e-9);
    }
    const Csv fp = read_csv(slurp(run.wb.store().path("sos/fixed_points_1.csv")));
    CHECK(fp.rows.size() == 2); // stable and unstable partners above the fold
}

TEST_CASE("sections are reproducible from the seed", "[workbench][sos][slow]") {
    json j = smoke_json();
    j["sos"]["energies"] = {6000.0};
    j["targets"] = json::array();
    j["output"] = scratch("sos_a").string();
    Workbench a(parse_config(j));
    a.cmd_sos();
    j["output"] = scratch("sos_b").string();
    j["workers"] = 3;
    Workbench b(parse_config(j));
    b.cmd_sos();
    CHECK(slurp(a.store().path("sos/sos_0.csv")) == slurp(b.store().path("sos/sos_0.csv")));

    j["seed"] = 8;
    j["output"] = scratch("sos_c").string();
    Workbench c(parse_config(j));
    c.cmd_sos();
    CHECK(slurp(a.store().path("sos/sos_0.csv")) != slurp(c.store().path("sos/sos_0.csv")));
}

// Island area by point classification: a trajectory counts as regular when
// a 1e-8 displacement of its start stays below 1e-3 over 60 returns.
TEST_CASE("regular islands shrink between E_bif and 3 E_bif", "[workbench][sos][slow]") {
    json j = smoke_json();
    j["sos"] = {{"energies", {"E_bif", {{"multiple", 3.0}}}}, {"trajectories", 24}, {"crossings", 60}};
    j["targets"] = json::array();
    j["output"] = scratch("islands").string();
    Workbench w(parse_config(j));
    w.cmd_sos();
    const auto& sec = w.section();

    std::vector<double> regular_fraction;
    for (int k = 0; k < 2; ++k) {
        const Csv c = read_csv(slurp(w.store().path("sos/sos_" + std::to_string(k) + ".csv")));
        const double E = units::cm_to_hartree(comment_value(c, "# E_cm"));
        std::map<int, std::vector<std::pair<double, double>>> traces;
        for (const auto& r : c.rows) traces[static_cast<int>(r[0])].push_back({r[2], r[3]});
        std::size_t regular = 0, total = 0;
        for (const auto& [id, pts] : traces) {
            classical::SectionPoint p{pts.front().first, pts.front().second, 1};
            classical::SectionPoint q{p.psi + 1e-8, p.P_psi, 1};
            bool ok = sec.allowed(q, E);
            for (int n = 0; ok && n < 60; ++n) {
                try {
                    p = classical::poincare_map(p, E, sec);
                    q = classical::poincare_map(q, E, sec);
                } catch (const Error&) {
                    ok = false;
                    break;
                }
                if (std::hypot(p.psi - q.psi, (p.P_psi - q.P_psi) / 10.0) > 1e-3) ok = false;
            }
            total += pts.size();
            if (ok) regular += pts.size();
        }
        regular_fraction.push_back(static_cast<double>(regular) / static_cast<double>(total));
    }
    INFO("regular fraction at E_bif " << regular_fraction[0] << ", at 3 E_bif " << regular_fraction[1]);
    CHECK(regular_fraction[1] < regular_fraction[0]);
}

TEST_CASE("sweep report schema", "[workbench][scarsweep][slow]") {
    auto& run = SmokeRun::get();
    const json rep = json::parse(slurp(run.wb.store().path("scar/report.json")));
    CHECK(rep.at("config_hash") == run.wb.hash());
    REQUIRE(rep.at("targets").size() == 1);
    const json& t = rep.at("targets")[0];
    CHECK(t.at("name") == "bif");
    CHECK(t.at("jobs").size() == 4);
    REQUIRE_FALSE(t.at("fit").is_null());
    CHECK(t.at("fit").contains("alpha"));
    CHECK(t.at("fit").contains("classification"));
    CHECK(t.at("fit").at("alpha").get<double>() == run.sweep.targets[0].fit->alpha);
}

TEST_CASE("plot export", "[workbench][plots][slow]") {
    auto& run = SmokeRun::get();
    auto& store = run.wb.store();
    const json rep = json::parse(slurp(store.path("scar/report.json")));

    SECTION("heat map grid matches the wavefield grid") {
        for (int n = 4; n <= 7; ++n) {
            std::ifstream in(store.path(Workbench::job_dir("bif", n) + "/scar.wf"), std::ios::binary);
            const quantum::WaveField f = read_wavefield(in);
            const Csv c = read_csv(slurp(store.path("plots/density_bif_n" + std::to_string(n) + ".csv")));
            REQUIRE(c.rows.size() == static_cast<std::size_t>(f.grid.N_R) * f.grid.N_theta);
            CHECK(c.header == std::vector<std::string>{"R_bohr", "theta_rad", "density"});
            CHECK_THAT(c.rows.front()[0], WithinRel(f.grid.R(0), 1e-9));
            CHECK_THAT(c.rows.back()[1], WithinRel(f.grid.theta(f.grid.N_theta - 1), 1e-9));
        }
    }

    SECTION("fit series lies on the reported line") {
        const json& fit = rep.at("targets")[0].at("fit");
        const double alpha = fit.at("alpha").get<double>(), c0 = fit.at("prefactor").get<double>();
        const Csv c = read_csv(slurp(store.path("plots/fit_bif.csv")));
        REQUIRE(c.rows.size() == fit.at("samples").size());
        for (std::size_t k = 0; k < c.rows.size(); ++k) {
            const json& s = fit.at("samples")[k];
            CHECK(c.rows[k][0] == s.at("n").get<int>());
            CHECK_THAT(c.rows[k][1], WithinAbs(std::log(s.at("x").get<double>()), 1e-14));
            CHECK_THAT(c.rows[k][2], WithinAbs(std::log(s.at("sigma_rad").get<double>()), 1e-14));
            CHECK_THAT(c.rows[k][3], WithinAbs(std::log(c0) - alpha * c.rows[k][1], 1e-12));
        }
    }

    SECTION("spectrum series integrates to the stick weight") {
        for (int n = 4; n <= 7; ++n) {
            const Csv c = read_csv(slurp(store.path("plots/spectrum_bif_n" + std::to_string(n) + ".csv")));
            const double total = comment_value(c, "total_weight");
            double integral = 0.0;
            for (std::size_t k = 1; k < c.rows.size(); ++k)
                integral += 0.5 * (c.rows[k][2] + c.rows[k - 1][2]) * (c.rows[k][1] - c.rows[k - 1][1]);
            CHECK_THAT(integral, WithinAbs(total, 1e-3));
        }
    }
}

TEST_CASE("missing artifacts name the stage", "[workbench][plots]") {
    json j = smoke_json();
    j["output"] = scratch("empty").string();
    Workbench w(parse_config(j));
    try {
        w.cmd_export_plots();
        FAIL("export from an empty run succeeded");
    } catch (const DependencyError& e) {
        CHECK_FALSE(e.stage().empty());
    }
}

TEST_CASE("resume reuses verified artifacts", "[workbench][resume][slow]") {
    auto& run = SmokeRun::get();
    const fs::path out = scratch("resume");
    fs::copy(run.out, out, fs::copy_options::recursive);
    const std::string before = slurp(out / run.wb.hash().substr(0, 16) / "manifest.json");

    RunOptions o;
    o.resume = true;
    std::ostringstream log;
    o.log = &log;
    Workbench w(smoke(out), o);
    const auto rep = w.cmd_scarsweep();
    CHECK_THAT(log.str(), ContainsSubstring("orbits: resumed"));
    CHECK_THAT(log.str(), ContainsSubstring("n=7: resumed"));
    CHECK(rep.targets[0].fit->alpha == run.sweep.targets[0].fit->alpha);
    CHECK(slurp(w.store().path("manifest.json")) == before);

    // an altered job record is recomputed, the others are not
    const std::string rec = Workbench::job_dir("bif", 5) + "/job.json";
    std::ofstream(w.store().path(rec), std::ios::app) << " ";
    std::ostringstream log2;
    o.log = &log2;
    Workbench w2(smoke(out), o);
    w2.cmd_scarsweep();
    CHECK_THAT(log2.str(), ContainsSubstring("n=4: resumed"));
    CHECK_THAT(log2.str(), !ContainsSubstring("n=5: resumed"));
    CHECK(w2.store().verify().empty());
    CHECK(slurp(w2.store().path("manifest.json")) == before);
}

TEST_CASE("reruns are checksum identical", "[workbench][determinism][slow]") {
    auto& run = SmokeRun::get();
    json j = smoke_json();
    j["output"] = scratch("rerun").string();
    j["workers"] = 2;
    std::ostringstream log;
    RunOptions o;
    o.log = &log;
    Workbench w(parse_config(j), o);
    CHECK(w.hash() == run.wb.hash());
    w.cmd_orbits();
    w.cmd_sos();
    w.cmd_scarsweep();
    w.cmd_export_plots();
    // the smoke jobs are independent of the pool size
    CHECK(slurp(w.store().path("manifest.json")) == slurp(run.wb.store().path("manifest.json")));
}
