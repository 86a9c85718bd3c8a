#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "superscar/workbench/hash.hpp"

namespace superscar::workbench {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kCodeVersion = "superscar 0.1.0";

/// Inventory of a run directory.
///
/// Paths are relative to the run directory and each appears once. Wall-clock
/// timings live in `timings` and are written to a sidecar file, so that
/// manifest.json itself is identical between reruns of the same config.
struct RunManifest {
    struct Artifact {
        std::string sha256;
        std::string stage;
        std::uintmax_t bytes = 0;
    };
    struct Stage {
        std::string status; // done | failed | partial
        std::string note;
    };

    std::string config_hash;
    std::string code_version = kCodeVersion;
    std::map<std::string, Artifact> artifacts;
    std::map<std::string, Stage> stages;
    std::map<std::string, double> timings; // seconds, by stage or job

    json to_json() const {
        json a = json::object(), s = json::object();
        for (const auto& [p, x] : artifacts) a[p] = {{"sha256", x.sha256}, {"stage", x.stage}, {"bytes", x.bytes}};
        for (const auto& [k, x] : stages) s[k] = {{"status", x.status}, {"note", x.note}};
        return {{"config_hash", config_hash},
                {"code_version", code_version},
                {"artifacts", a},
                {"stages", s},
                {"timings_file", "timings.json"}};
    }

    static RunManifest from_json(const json& j) {
        RunManifest m;
        m.config_hash = j.at("config_hash").get<std::string>();
        m.code_version = j.at("code_version").get<std::string>();
        for (auto it = j.at("artifacts").begin(); it != j.at("artifacts").end(); ++it)
            m.artifacts[it.key()] = {it->at("sha256").get<std::string>(), it->at("stage").get<std::string>(),
                                     it->at("bytes").get<std::uintmax_t>()};
        for (auto it = j.at("stages").begin(); it != j.at("stages").end(); ++it)
            m.stages[it.key()] = {it->at("status").get<std::string>(), it->at("note").get<std::string>()};
        return m;
    }

    /// Digest of the manifest proper (timings excluded).
    std::string digest() const { return sha256_hex(to_json().dump()); }
};

/// Content-addressed run directory `<output>/<first 16 hex of config hash>`
/// with its manifest. Writers are serialised by an internal mutex, so jobs
/// running on a pool can persist their own artifacts.
class RunStore {
public:
    RunStore(const fs::path& output, const std::string& config_hash)
        : dir_(output / config_hash.substr(0, 16)) {
        manifest_.config_hash = config_hash;
        const fs::path mf = dir_ / "manifest.json";
        if (fs::exists(mf)) {
            std::ifstream in(mf);
            json j;
            try {
                j = json::parse(in);
                RunManifest m = RunManifest::from_json(j);
                if (m.config_hash == config_hash) {
                    manifest_ = std::move(m);
                    std::ifstream tin(dir_ / "timings.json");
                    if (tin) manifest_.timings = json::parse(tin).get<std::map<std::string, double>>();
                }
            } catch (const std::exception&) {
                // unreadable manifest: start afresh, nothing is trusted
            }
        }
    }

    const fs::path& dir() const { return dir_; }
    fs::path path(const std::string& rel) const { return dir_ / rel; }

    RunManifest manifest() const {
        std::lock_guard lock(mu_);
        return manifest_;
    }

    /// True if `rel` is in the manifest and its checksum still matches.
    bool valid(const std::string& rel) const {
        std::string expected;
        {
            std::lock_guard lock(mu_);
            const auto it = manifest_.artifacts.find(rel);
            if (it == manifest_.artifacts.end()) return false;
            expected = it->second.sha256;
        }
        const fs::path p = path(rel);
        return fs::exists(p) && sha256_file(p.string()) == expected;
    }

    /// Artifacts whose file is missing or whose checksum differs.
    std::vector<std::string> verify() const {
        std::vector<std::string> bad;
        for (const auto& [rel, a] : manifest().artifacts)
            if (!valid(rel)) bad.push_back(rel);
        return bad;
    }

    bool stage_done(const std::string& stage) const {
        std::lock_guard lock(mu_);
        const auto it = manifest_.stages.find(stage);
        return it != manifest_.stages.end() && it->second.status == "done";
    }

    std::string read(const std::string& rel, const std::string& stage) const {
        if (!valid(rel))
            throw DependencyError(stage, "artifact " + rel + " is missing or altered; rerun the '" + stage + "' stage");
        std::ifstream in(path(rel), std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    }

    void write(const std::string& rel, const std::string& content, const std::string& stage) {
        const fs::path p = path(rel);
        fs::create_directories(p.parent_path());
        const fs::path tmp = p.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw Error("cannot write " + tmp.string());
            out << content;
        }
        fs::rename(tmp, p);
        std::lock_guard lock(mu_);
        manifest_.artifacts[rel] = {sha256_hex(content), stage, content.size()};
        save_locked();
    }

    void set_stage(const std::string& stage, const std::string& status, const std::string& note = "") {
        std::lock_guard lock(mu_);
        manifest_.stages[stage] = {status, note};
        save_locked();
    }

    void add_timing(const std::string& key, double seconds) {
        std::lock_guard lock(mu_);
        manifest_.timings[key] = seconds;
        save_locked();
    }

    void save() {
        std::lock_guard lock(mu_);
        save_locked();
    }

private:
    void save_locked() {
        fs::create_directories(dir_);
        auto put = [&](const fs::path& p, const std::string& s) {
            const fs::path tmp = p.string() + ".tmp";
            {
                std::ofstream out(tmp, std::ios::binary);
                out << s;
            }
            fs::rename(tmp, p);
        };
        put(dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
        put(dir_ / "timings.json", json(manifest_.timings).dump(2) + "\n");
    }

    fs::path dir_;
    mutable std::mutex mu_;
    RunManifest manifest_;
};

} // namespace superscar::workbench
