#pragma once

// Command orchestration shared by the rfmap tool and its tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "rfmap/config.hpp"
#include "rfmap/localize.hpp"
#include "rfmap/radiomap.hpp"
#include "rfmap/render.hpp"
#include "rfmap/tracer.hpp"

namespace rfmap {

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"trace",  "radiomap-active", "radiomap-passive",
                                                "render", "localize",        "ablate-utd"};
    return names;
}

struct RunResult {
    std::vector<std::string> artifacts;  ///< written files, in write order
    std::vector<std::string> warnings;
};

namespace detail {

class Output {
public:
    Output(const std::string& dir, RunResult& r) : dir_(dir), r_(r) { std::filesystem::create_directories(dir_); }

    std::string path(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }

    std::ofstream open(const std::string& name) {
        const std::string p = path(name);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + p + "'");
        r_.artifacts.push_back(p);
        return out;
    }
    void json(const std::string& name, const nlohmann::json& j) { open(name) << j.dump(2) << '\n'; }
    void note(const std::string& p) { r_.artifacts.push_back(p); }

private:
    std::string dir_;
    RunResult& r_;
};

inline Bounds2 render_bounds(const SiteConfig& c) {
    if (c.render.bounds) return *c.render.bounds;
    if (c.radio_map.bounds) return *c.radio_map.bounds;
    throw ConfigError("/render/bounds", "render needs bounds (or radio_map bounds)");
}

inline void warn_skipped(const PassiveRadioMap& m, RunResult& r) {
    for (const auto& e : m.errors) r.warnings.push_back("placement " + std::to_string(e.id) + " skipped: " + e.message);
}

inline void run_trace(const SiteConfig& c, const SceneModel& scene, Output& out) {
    std::vector<Antenna> rx = c.mps;
    if (rx.empty())
        for (const auto& cell : c.radio_map.grid().cells) {
            Antenna a = virtual_receiver(cell.position, 2.4e9);
            a.name = "cell" + std::to_string(cell.id);
            rx.push_back(a);
        }
    if (rx.empty()) throw ConfigError("/mps", "trace needs MPs or radio-map cells as receivers");
    const TraceParams p = c.trace_params();
    std::vector<Vec3> pts;
    for (const auto& a : rx) pts.push_back(a.position);
    nlohmann::json doc{{"utd", p.utd}, {"coherent", p.coherent}, {"aps", nlohmann::json::array()}};
    for (const auto& ap : c.aps) {
        TraceStats st;
        const auto by = records_by_receiver(trace(scene, ap, pts, p, &st), pts.size());
        nlohmann::json receivers = nlohmann::json::array();
        for (std::size_t i = 0; i < rx.size(); ++i) {
            Antenna a = rx[i];
            a.frequency_hz = ap.frequency_hz;
            nlohmann::json paths = nlohmann::json::array();
            for (const auto& rec : by[i]) {
                const double g = a.gain(-rec.arrival);
                paths.push_back({{"path", to_string(rec.sig)},
                                 {"length_m", rec.distance},
                                 {"power_dbm", em::field_to_power(rec.field, g, a.lambda(), -1e300)}});
            }
            receivers.push_back({{"name", a.name},
                                 {"position", detail::vec_json(a.position)},
                                 {"rss_dbm", received_power(by[i], a, p.coherent, p.noise_floor_dbm)},
                                 {"paths", paths}});
        }
        doc["aps"].push_back({{"name", ap.name},
                              {"stats", {{"rays", st.rays}, {"candidates", st.candidates}, {"records", st.records},
                                         {"truncated", st.truncated}}},
                              {"receivers", receivers}});
    }
    out.json("trace.json", doc);
}

inline ActiveRadioMap run_active(const SiteConfig& c, const SceneModel& scene, Output& out) {
    const ActiveRadioMap m = generate_active(scene, c.aps, c.radio_map.grid(), c.radiomap_params());
    auto csv = out.open("active.csv");
    write_active_csv(csv, m);
    out.json("active.json", active_sidecar(m));
    return m;
}

inline PassiveRadioMap passive_map(const SiteConfig& c, const SceneModel& scene, bool utd) {
    if (c.mps.empty()) throw ConfigError("/mps", "passive radio maps need at least one MP");
    RadioMapParams p = c.radiomap_params();
    p.trace.utd = utd;
    return generate_passive(scene, c.aps, c.mps, c.placements(), p);
}

inline void write_passive(const PassiveRadioMap& m, Output& out, const std::string& stem) {
    auto csv = out.open(stem + ".csv");
    write_passive_csv(csv, m);
    out.json(stem + ".json", passive_sidecar(m));
}

inline void run_render(const SiteConfig& c, const SceneModel& scene, Output& out) {
    const Antenna& ap = c.aps[static_cast<std::size_t>(c.render.ap)];
    const FloorSample s = sample_floor(scene, ap, render_bounds(c), c.render.spacing, c.render.height, c.trace_params());
    render_heatmap(s, out.path("heatmap.png"), c.render.options);
    out.note(out.path("heatmap.png"));
    out.note(out.path("heatmap.json"));
}

inline std::vector<Observation> read_observations(const std::string& path, const FingerprintMap& map) {
    const RssTable t = read_rss_csv_file(path, {"cell_id", "x", "y", "z"});
    if (t.streams != map.streams) throw LocalizeError(path + ": stream columns do not match the radio map");
    std::vector<Observation> obs;
    for (std::size_t i = 0; i < t.rss.size(); ++i) {
        Observation o;
        o.rss = t.rss[i];
        const auto& k = t.keys[i];
        if (!k[1].empty() && !k[2].empty() && !k[3].empty()) o.true_location = Vec3{std::stod(k[1]), std::stod(k[2]), std::stod(k[3])};
        if (!k[0].empty()) o.source_id = std::stoi(k[0]);
        obs.push_back(std::move(o));
    }
    return obs;
}

inline void run_localize(const SiteConfig& c, const SceneModel& scene, Output& out) {
    const ActiveRadioMap active = run_active(c, scene, out);
    const FingerprintMap map = fingerprints(active);
    // Self-check: every row must classify to itself.
    std::vector<Observation> self;
    for (const auto& r : map.rows) self.push_back({r.rss, r.position, r.id});
    const EvalReport self_report = evaluate(map, self);
    nlohmann::json doc{{"seed", c.seed}, {"self_check", report_json(self_report)}};
    if (!c.localize.observations.empty()) {
        doc["observations"] = report_json(evaluate(map, read_observations(c.localize.observations, map)));
    } else {
        const auto st = localization_study(map, c.localize.samples_per_location, c.localize.noise_db, c.seed);
        doc["study"] = study_json(st, c.localize.samples_per_location, c.localize.noise_db);
    }
    out.json("localize.json", doc);
}

struct StreamErrors {
    double rmse = 0.0, avg_abs_err = 0.0, stdev = 0.0, max_abs = 0.0;
};

inline StreamErrors stream_errors(const std::vector<double>& a, const std::vector<double>& b) {
    StreamErrors e;
    if (a.empty()) return e;
    double sq = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        sq += d * d;
        ab += d;
        e.max_abs = std::max(e.max_abs, d);
    }
    const double n = static_cast<double>(a.size());
    e.rmse = std::sqrt(sq / n);
    e.avg_abs_err = ab / n;
    e.stdev = std::sqrt(std::max(0.0, sq / n - e.avg_abs_err * e.avg_abs_err));
    return e;
}

inline nlohmann::json errors_json(const StreamErrors& e) {
    return {{"rmse_dbm", e.rmse}, {"avg_abs_err_dbm", e.avg_abs_err}, {"stdev_dbm", e.stdev}, {"max_abs_dbm", e.max_abs}};
}

/// Column `s` of `m` for the placement ids in `ids`.
inline std::vector<double> column(const PassiveRadioMap& m, std::size_t s, const std::vector<int>& ids) {
    std::map<int, std::size_t> row;
    for (std::size_t i = 0; i < m.placements.size(); ++i) row[m.placements[i].id] = i;
    std::vector<double> out;
    for (int id : ids) out.push_back(m.rss[row.at(id)][s]);
    return out;
}

inline void run_ablation(const SiteConfig& c, const SceneModel& scene, Output& out, RunResult& result) {
    const PassiveRadioMap on = passive_map(c, scene, true);
    const PassiveRadioMap off = passive_map(c, scene, false);
    warn_skipped(on, result);
    write_passive(on, out, "passive_utd_on");
    write_passive(off, out, "passive_utd_off");
    std::vector<int> ids;
    for (const auto& p : on.placements) ids.push_back(p.id);

    // Optional measured reference, matched by placement id.
    std::optional<RssTable> ref;
    std::map<int, std::size_t> ref_row;
    if (!c.ablation.reference.empty()) {
        ref = read_rss_csv_file(c.ablation.reference, {"placement_id", "cell_id", "x", "y", "z"});
        if (ref->streams != on.streams) throw RadioMapError(c.ablation.reference + ": stream columns do not match");
        for (std::size_t i = 0; i < ref->keys.size(); ++i) ref_row[std::stoi(ref->keys[i][0])] = i;
        std::vector<int> kept;
        for (int id : ids)
            if (ref_row.count(id)) kept.push_back(id);
        ids = kept;
    }

    nlohmann::json streams = nlohmann::json::array();
    auto csv = out.open("ablation.csv");
    csv << "stream,rmse_dbm,avg_abs_err_dbm,stdev_dbm,max_abs_dbm";
    if (ref) csv << ",ref_avg_abs_err_on_dbm,ref_avg_abs_err_off_dbm,pct_degradation";
    csv << '\n';
    for (std::size_t s = 0; s < on.streams.size(); ++s) {
        const auto a = column(on, s, ids), b = column(off, s, ids);
        const StreamErrors diff = stream_errors(b, a);
        nlohmann::json e{{"stream", on.streams[s]}, {"off_vs_on", errors_json(diff)}};
        csv << on.streams[s] << ',' << fmt2(diff.rmse) << ',' << fmt2(diff.avg_abs_err) << ',' << fmt2(diff.stdev) << ','
            << fmt2(diff.max_abs);
        if (ref) {
            std::vector<double> r;
            for (int id : ids) r.push_back(ref->rss[ref_row[id]][s]);
            const StreamErrors eon = stream_errors(a, r), eoff = stream_errors(b, r);
            const double pct = eon.avg_abs_err > 0.0 ? 100.0 * (eoff.avg_abs_err - eon.avg_abs_err) / eon.avg_abs_err : 0.0;
            e["utd_on_vs_reference"] = errors_json(eon);
            e["utd_off_vs_reference"] = errors_json(eoff);
            e["pct_degradation"] = pct;
            csv << ',' << fmt2(eon.avg_abs_err) << ',' << fmt2(eoff.avg_abs_err) << ',' << fmt2(pct);
        }
        csv << '\n';
        streams.push_back(e);
    }
    out.json("ablation.json", {{"placements", ids.size()},
                               {"reference", ref ? nlohmann::json("measured") : nlohmann::json(nullptr)},
                               {"streams", streams}});
}

}  // namespace detail

/// Run one command and write its artifacts into `out_dir`.
inline RunResult run_command(const std::string& cmd, const SiteConfig& config, const std::string& out_dir) {
    RunResult result;
    if (std::find(command_names().begin(), command_names().end(), cmd) == command_names().end())
        throw std::invalid_argument("unknown command '" + cmd + "'");
    detail::Output out(out_dir, result);
    const SceneModel scene = config.build_scene();
    for (const auto& w : scene.warnings) result.warnings.push_back(w);
    if (cmd == "trace") {
        detail::run_trace(config, scene, out);
    } else if (cmd == "radiomap-active") {
        detail::run_active(config, scene, out);
    } else if (cmd == "radiomap-passive") {
        const PassiveRadioMap m = detail::passive_map(config, scene, config.utd_enabled);
        detail::warn_skipped(m, result);
        detail::write_passive(m, out, "passive");
    } else if (cmd == "render") {
        detail::run_render(config, scene, out);
    } else if (cmd == "localize") {
        detail::run_localize(config, scene, out);
    } else {
        detail::run_ablation(config, scene, out, result);
    }
    return result;
}

}  // namespace rfmap
