#pragma once

// Site configuration: JSON schema, defaults and validation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "rfmap/antenna.hpp"
#include "rfmap/radiomap.hpp"
#include "rfmap/render.hpp"
#include "rfmap/scene.hpp"
#include "rfmap/tracer.hpp"

namespace rfmap {

/// Validation failure located by a JSON pointer into the config document.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string pointer, const std::string& what)
        : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + what), pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

struct GridConfig {
    std::optional<Bounds2> bounds;
    double spacing = 1.0;
    double height = kDefaultCellHeight;
    std::vector<Cell> cells;  ///< explicit cells take precedence over bounds

    CellGrid grid() const {
        if (!cells.empty()) {
            CellGrid g{cells, std::nullopt};
            g.validate();
            return g;
        }
        if (!bounds) throw ConfigError("/radio_map", "needs either cells or bounds");
        return auto_grid(*bounds, spacing, height);
    }
};

struct HumansConfig {
    double height = 2.0;
    bool grid_placements = true;               ///< one person per radio-map cell
    std::vector<HumanPlacement> placements;    ///< used when grid_placements is false
};

struct RenderConfig {
    int ap = 0;
    std::optional<Bounds2> bounds;  ///< defaults to the radio-map bounds
    double spacing = 0.5;
    double height = kDefaultCellHeight;
    RenderOptions options;
};

struct LocalizeConfig {
    int samples_per_location = 15;
    double noise_db = 2.0;
    std::string observations;  ///< optional CSV of measured observations
};

struct AblationConfig {
    std::string reference;  ///< optional measured passive map CSV
};

struct SiteConfig {
    std::string model_path;      ///< empty: free space
    std::string materials_path;  ///< empty: built-in table
    std::vector<Material> material_overrides;
    double edge_low_deg = 10.0, edge_high_deg = 40.0;  ///< hysteresis thresholds
    std::vector<Antenna> aps, mps;
    HumansConfig humans;
    TraceParams tracer;
    GridConfig radio_map;
    RenderConfig render;
    LocalizeConfig localize;
    AblationConfig ablation;
    bool utd_enabled = true;
    bool coherent_sum = true;
    double human_radius = 0.15;
    std::uint64_t seed = 1;

    MaterialTable materials() const {
        MaterialTable t = materials_path.empty() ? default_materials() : load_materials(materials_path);
        for (const auto& m : material_overrides) t.set(m);
        return t;
    }

    SceneModel build_scene() const {
        const MaterialTable mats = materials();
        SceneModel m;
        if (model_path.empty()) {
            m.materials = mats;
            finalize_geometry(m);
        } else {
            m = load_model(model_path, mats);
        }
        m = detect_edges(std::move(m), edge_low_deg * kPi / 180.0, edge_high_deg * kPi / 180.0);
        return build_capsules(std::move(m), tracer.edge_radius);
    }

    TraceParams trace_params() const {
        TraceParams p = tracer;
        p.utd = utd_enabled;
        p.coherent = coherent_sum;
        return p;
    }

    RadioMapParams radiomap_params() const { return {trace_params(), human_radius, humans.height}; }

    std::vector<HumanPlacement> placements() const {
        if (humans.grid_placements) return single_human_placements(radio_map.grid());
        return humans.placements;
    }
};

namespace detail {

using nlohmann::json;

/// Object reader that tracks its JSON pointer and rejects unknown keys.
class Node {
public:
    Node(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
        if (!j_.is_object()) throw ConfigError(ptr_, "expected an object");
    }

    const std::string& ptr() const { return ptr_; }
    std::string at(const std::string& key) const { return ptr_ + "/" + key; }
    bool has(const std::string& key) const {
        seen_.insert(key);
        return j_.contains(key) && !j_[key].is_null();
    }
    const json& raw(const std::string& key) const {
        if (!has(key)) throw ConfigError(at(key), "missing required field");
        return j_[key];
    }

    double number(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        return v.get<double>();
    }
    double number(const std::string& key, double def) const { return has(key) ? number(key) : def; }
    int integer(const std::string& key, int def) const {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        return v.get<int>();
    }
    bool boolean(const std::string& key, bool def) const {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& key, const std::string& def) const {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }
    Vec3 point(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_array() || v.size() != 3) throw ConfigError(at(key), "expected [x, y, z]");
        Vec3 p;
        for (int i = 0; i < 3; ++i) {
            if (!v[static_cast<std::size_t>(i)].is_number()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
            p[i] = v[static_cast<std::size_t>(i)].get<double>();
        }
        return p;
    }
    Node object(const std::string& key) const { return Node(raw(key), at(key)); }
    const json& array(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(at(key), "expected an array");
        return v;
    }

    /// Call after all reads.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
    }

private:
    const json& j_;
    std::string ptr_;
    mutable std::set<std::string> seen_;
};

inline std::string resolve_path(const std::string& base_dir, const std::string& p, const std::string& ptr) {
    namespace fs = std::filesystem;
    fs::path path(p);
    if (path.is_relative()) path = fs::path(base_dir) / path;
    path = path.lexically_normal();
    if (!fs::exists(path)) throw ConfigError(ptr, "file not found: " + path.string());
    return path.string();
}

inline void positive(double v, const std::string& ptr, const char* what) {
    if (!(v > 0.0)) throw ConfigError(ptr, std::string(what) + " must be > 0");
}

inline Antenna read_antenna(const Node& n, bool is_ap, std::size_t index, const std::string& base_dir) {
    Antenna a;
    a.name = n.string("name", std::string(is_ap ? "AP" : "MP") + std::to_string(index + 1));
    a.position = n.point("position");
    a.frequency_hz = is_ap ? n.number("frequency") : n.number("frequency", 2.4e9);
    positive(a.frequency_hz, n.at("frequency"), "frequency");
    a.power_mw = is_ap ? n.number("power_mw") : n.number("power_mw", 1.0);
    positive(a.power_mw, n.at("power_mw"), "power_mw");
    const std::string pattern = n.string("pattern", "isotropic");
    if (pattern == "isotropic") {
        a.kind = Antenna::Kind::Isotropic;
        a.gain_dbi = n.number("gain_dbi", 0.0);
    } else if (pattern == "half_wave_dipole") {
        a.kind = Antenna::Kind::HalfWaveDipole;
        a.gain_dbi = n.number("gain_dbi", kDipoleGainDbi);
    } else if (pattern == "custom") {
        a.kind = Antenna::Kind::Custom;
        if (!n.has("pattern_file")) throw ConfigError(n.at("pattern_file"), "missing required field");
        a.pattern_path = resolve_path(base_dir, n.string("pattern_file", ""), n.at("pattern_file"));
        try {
            a.pattern = load_pattern_csv(a.pattern_path);
        } catch (const AntennaError& e) {
            throw ConfigError(n.at("pattern_file"), e.what());
        }
        a.gain_dbi = n.number("gain_dbi", 0.0);
    } else {
        throw ConfigError(n.at("pattern"), "expected isotropic, half_wave_dipole or custom");
    }
    if (n.has("orientation")) {
        const Vec3 o = n.point("orientation");
        if (!(norm(o) > 0.0)) throw ConfigError(n.at("orientation"), "must be non-zero");
        a.orientation = normalized(o);
    }
    n.finish();
    try {
        a.validate();
    } catch (const AntennaError& e) {
        throw ConfigError(n.ptr(), e.what());
    }
    return a;
}

inline Bounds2 read_bounds(const Node& n) {
    Bounds2 b;
    const json& mn = n.array("min");
    const json& mx = n.array("max");
    if (mn.size() != 2 || mx.size() != 2 || !mn[0].is_number() || !mn[1].is_number() || !mx[0].is_number() ||
        !mx[1].is_number())
        throw ConfigError(n.ptr(), "bounds need min [x, y] and max [x, y]");
    b.x0 = mn[0].get<double>();
    b.y0 = mn[1].get<double>();
    b.x1 = mx[0].get<double>();
    b.y1 = mx[1].get<double>();
    if (b.x1 < b.x0 || b.y1 < b.y0) throw ConfigError(n.ptr(), "max must not be below min");
    n.finish();
    return b;
}

inline TraceParams read_tracer(const Node& n) {
    TraceParams p;
    p.tessellation = n.integer("tessellation", p.tessellation);
    if (p.tessellation < 1) throw ConfigError(n.at("tessellation"), "tessellation must be >= 1");
    p.max_depth = n.integer("max_depth", p.max_depth);
    if (p.max_depth < 0) throw ConfigError(n.at("max_depth"), "max_depth must be >= 0");
    p.min_power_dbm = n.number("min_power_dbm", p.min_power_dbm);
    p.noise_floor_dbm = n.number("noise_floor_dbm", p.noise_floor_dbm);
    p.reception_scale = n.number("reception_scale", p.reception_scale);
    if (!(p.reception_scale >= 1.0)) throw ConfigError(n.at("reception_scale"), "reception_scale must be >= 1");
    p.edge_radius = n.number("edge_radius", p.edge_radius);
    positive(p.edge_radius, n.at("edge_radius"), "edge_radius");
    p.fan_bucket = n.number("fan_bucket", p.fan_bucket);
    positive(p.fan_bucket, n.at("fan_bucket"), "fan_bucket");
    p.human_attenuation_db = n.number("human_attenuation_db", p.human_attenuation_db);
    if (!(p.human_attenuation_db >= 0.0)) throw ConfigError(n.at("human_attenuation_db"), "must be >= 0");
    p.swap_soft_hard = n.boolean("swap_soft_hard", p.swap_soft_hard);
    p.threads = n.integer("threads", p.threads);
    if (p.threads < 0) throw ConfigError(n.at("threads"), "threads must be >= 0");
    const int cap = n.integer("max_rays_per_generation", static_cast<int>(p.max_rays_per_generation));
    if (cap < 1) throw ConfigError(n.at("max_rays_per_generation"), "must be >= 1");
    p.max_rays_per_generation = static_cast<std::size_t>(cap);
    n.finish();
    return p;
}

inline json bounds_json(const Bounds2& b) {
    return {{"min", {b.x0, b.y0}}, {"max", {b.x1, b.y1}}};
}

inline json vec_json(const Vec3& p) { return json::array({p.x, p.y, p.z}); }

}  // namespace detail

/// Parse and validate a config document. Relative paths resolve against
/// `base_dir`.
inline SiteConfig parse_config(const nlohmann::json& doc, const std::string& base_dir) {
    using detail::Node;
    const Node root(doc, "");
    SiteConfig c;
    if (root.has("model")) c.model_path = detail::resolve_path(base_dir, root.string("model", ""), "/model");
    if (root.has("materials")) {
        const auto& mj = root.raw("materials");
        if (mj.is_string()) {
            c.materials_path = detail::resolve_path(base_dir, mj.get<std::string>(), "/materials");
        } else if (mj.is_array()) {
            try {
                const MaterialTable t = materials_from_json({{"materials", mj}});
                c.material_overrides = t.all();
            } catch (const SceneError& e) {
                throw ConfigError("/materials", e.what());
            }
        } else {
            throw ConfigError("/materials", "expected a file path or an array of materials");
        }
    }
    for (const auto& m : c.material_overrides) {
        try {
            m.validate();
        } catch (const SceneError& e) {
            throw ConfigError("/materials", e.what());
        }
    }
    if (root.has("edges")) {
        const Node e = root.object("edges");
        c.edge_low_deg = e.number("t_low_deg", c.edge_low_deg);
        c.edge_high_deg = e.number("t_high_deg", c.edge_high_deg);
        if (!(c.edge_low_deg >= 0.0 && c.edge_low_deg <= c.edge_high_deg && c.edge_high_deg <= 180.0))
            throw ConfigError("/edges", "need 0 <= t_low_deg <= t_high_deg <= 180");
        e.finish();
    }
    const auto& aps = root.array("aps");
    if (aps.empty()) throw ConfigError("/aps", "at least one AP is required");
    for (std::size_t i = 0; i < aps.size(); ++i)
        c.aps.push_back(detail::read_antenna(Node(aps[i], "/aps/" + std::to_string(i)), true, i, base_dir));
    if (root.has("mps")) {
        const auto& mps = root.array("mps");
        for (std::size_t i = 0; i < mps.size(); ++i)
            c.mps.push_back(detail::read_antenna(Node(mps[i], "/mps/" + std::to_string(i)), false, i, base_dir));
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < c.aps.size(); ++i)
        if (!names.insert(c.aps[i].name).second) throw ConfigError("/aps/" + std::to_string(i) + "/name", "duplicate name");
    for (std::size_t i = 0; i < c.mps.size(); ++i)
        if (!names.insert(c.mps[i].name).second) throw ConfigError("/mps/" + std::to_string(i) + "/name", "duplicate name");

    if (root.has("tracer")) c.tracer = detail::read_tracer(root.object("tracer"));
    c.utd_enabled = root.boolean("utd_enabled", c.utd_enabled);
    c.coherent_sum = root.boolean("coherent_sum", c.coherent_sum);
    c.human_radius = root.number("human_radius", c.human_radius);
    detail::positive(c.human_radius, "/human_radius", "human_radius");
    if (root.has("seed")) {
        const auto& s = root.raw("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            throw ConfigError("/seed", "expected a non-negative integer");
        c.seed = s.get<std::uint64_t>();
    }

    if (root.has("radio_map")) {
        const Node g = root.object("radio_map");
        c.radio_map.spacing = g.number("spacing", c.radio_map.spacing);
        detail::positive(c.radio_map.spacing, g.at("spacing"), "spacing");
        c.radio_map.height = g.number("height", c.radio_map.height);
        if (g.has("bounds")) c.radio_map.bounds = detail::read_bounds(g.object("bounds"));
        if (g.has("cells")) {
            const auto& cells = g.array("cells");
            for (std::size_t i = 0; i < cells.size(); ++i) {
                const Node cn(cells[i], g.at("cells") + "/" + std::to_string(i));
                Cell cell;
                cell.id = cn.integer("id", static_cast<int>(i));
                cell.position = cn.point("position");
                cn.finish();
                c.radio_map.cells.push_back(cell);
            }
            try {
                CellGrid{c.radio_map.cells, std::nullopt}.validate();
            } catch (const RadioMapError& e) {
                throw ConfigError(g.at("cells"), e.what());
            }
        }
        if (!c.radio_map.bounds && c.radio_map.cells.empty()) throw ConfigError(g.ptr(), "needs either cells or bounds");
        g.finish();
    }

    if (root.has("humans")) {
        const Node h = root.object("humans");
        c.humans.height = h.number("height", c.humans.height);
        detail::positive(c.humans.height, h.at("height"), "height");
        if (h.has("placements")) {
            const auto& pj = h.raw("placements");
            if (pj.is_string()) {
                if (pj.get<std::string>() != "grid") throw ConfigError(h.at("placements"), "expected \"grid\" or a list");
                c.humans.grid_placements = true;
            } else if (pj.is_array()) {
                c.humans.grid_placements = false;
                c.humans.placements.push_back({0, {}, std::nullopt});
                for (std::size_t i = 0; i < pj.size(); ++i) {
                    const std::string ptr = h.at("placements") + "/" + std::to_string(i);
                    if (!pj[i].is_array() || pj[i].empty()) throw ConfigError(ptr, "expected a non-empty list of [x, y]");
                    HumanPlacement pl{static_cast<int>(i) + 1, {}, std::nullopt};
                    for (std::size_t k = 0; k < pj[i].size(); ++k) {
                        const auto& q = pj[i][k];
                        if (!q.is_array() || q.size() != 2 || !q[0].is_number() || !q[1].is_number())
                            throw ConfigError(ptr + "/" + std::to_string(k), "expected [x, y]");
                        pl.positions.push_back({q[0].get<double>(), q[1].get<double>(), 0.0});
                    }
                    c.humans.placements.push_back(pl);
                }
            } else {
                throw ConfigError(h.at("placements"), "expected \"grid\" or a list");
            }
        }
        h.finish();
    }

    if (root.has("render")) {
        const Node r = root.object("render");
        c.render.ap = r.integer("ap", 0);
        if (c.render.ap < 0 || c.render.ap >= static_cast<int>(c.aps.size()))
            throw ConfigError(r.at("ap"), "AP index out of range");
        if (r.has("bounds")) c.render.bounds = detail::read_bounds(r.object("bounds"));
        c.render.spacing = r.number("spacing", c.render.spacing);
        detail::positive(c.render.spacing, r.at("spacing"), "spacing");
        c.render.height = r.number("height", c.render.height);
        c.render.options.pixels_per_cell = r.integer("pixels_per_cell", c.render.options.pixels_per_cell);
        if (c.render.options.pixels_per_cell < 1) throw ConfigError(r.at("pixels_per_cell"), "must be >= 1");
        const std::string interp = r.string("interpolation", "bicubic");
        if (interp == "bicubic") c.render.options.interpolation = Interpolation::Bicubic;
        else if (interp == "bilinear") c.render.options.interpolation = Interpolation::Bilinear;
        else throw ConfigError(r.at("interpolation"), "expected bicubic or bilinear");
        r.finish();
    }

    if (root.has("localize")) {
        const Node l = root.object("localize");
        c.localize.samples_per_location = l.integer("samples_per_location", c.localize.samples_per_location);
        if (c.localize.samples_per_location < 2) throw ConfigError(l.at("samples_per_location"), "must be >= 2");
        c.localize.noise_db = l.number("noise_db", c.localize.noise_db);
        if (!(c.localize.noise_db >= 0.0)) throw ConfigError(l.at("noise_db"), "must be >= 0");
        if (l.has("observations"))
            c.localize.observations = detail::resolve_path(base_dir, l.string("observations", ""), l.at("observations"));
        l.finish();
    }

    if (root.has("ablation")) {
        const Node a = root.object("ablation");
        if (a.has("reference")) c.ablation.reference = detail::resolve_path(base_dir, a.string("reference", ""), a.at("reference"));
        a.finish();
    }
    root.finish();
    return c;
}

inline SiteConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc, std::filesystem::absolute(path).parent_path().string());
}

/// Full document with every default spelled out; paths are written as
/// resolved at load time.
inline nlohmann::json config_to_json(const SiteConfig& c) {
    using nlohmann::json;
    json j;
    if (!c.model_path.empty()) j["model"] = c.model_path;
    if (!c.materials_path.empty()) j["materials"] = c.materials_path;
    else if (!c.material_overrides.empty()) {
        MaterialTable t;
        for (const auto& m : c.material_overrides) t.add(m);
        j["materials"] = materials_to_json(t)["materials"];
    }
    j["edges"] = {{"t_low_deg", c.edge_low_deg}, {"t_high_deg", c.edge_high_deg}};
    auto antenna = [](const Antenna& a) {
        json e{{"name", a.name},
               {"position", detail::vec_json(a.position)},
               {"frequency", a.frequency_hz},
               {"power_mw", a.power_mw},
               {"pattern", antenna_kind_name(a.kind)},
               {"gain_dbi", a.gain_dbi},
               {"orientation", detail::vec_json(a.orientation)}};
        if (a.kind == Antenna::Kind::Custom) e["pattern_file"] = a.pattern_path;
        return e;
    };
    j["aps"] = json::array();
    for (const auto& a : c.aps) j["aps"].push_back(antenna(a));
    j["mps"] = json::array();
    for (const auto& a : c.mps) j["mps"].push_back(antenna(a));
    const TraceParams& p = c.tracer;
    j["tracer"] = {{"tessellation", p.tessellation},
                   {"max_depth", p.max_depth},
                   {"min_power_dbm", p.min_power_dbm},
                   {"noise_floor_dbm", p.noise_floor_dbm},
                   {"reception_scale", p.reception_scale},
                   {"edge_radius", p.edge_radius},
                   {"fan_bucket", p.fan_bucket},
                   {"human_attenuation_db", p.human_attenuation_db},
                   {"swap_soft_hard", p.swap_soft_hard},
                   {"threads", p.threads},
                   {"max_rays_per_generation", p.max_rays_per_generation}};
    j["utd_enabled"] = c.utd_enabled;
    j["coherent_sum"] = c.coherent_sum;
    j["human_radius"] = c.human_radius;
    j["seed"] = c.seed;
    json g{{"spacing", c.radio_map.spacing}, {"height", c.radio_map.height}};
    if (c.radio_map.bounds) g["bounds"] = detail::bounds_json(*c.radio_map.bounds);
    if (!c.radio_map.cells.empty()) {
        g["cells"] = json::array();
        for (const auto& cell : c.radio_map.cells) g["cells"].push_back({{"id", cell.id}, {"position", detail::vec_json(cell.position)}});
    }
    if (c.radio_map.bounds || !c.radio_map.cells.empty()) j["radio_map"] = g;
    json h{{"height", c.humans.height}};
    if (c.humans.grid_placements) {
        h["placements"] = "grid";
    } else {
        h["placements"] = json::array();
        for (const auto& pl : c.humans.placements) {
            if (pl.id == 0) continue;
            json pos = json::array();
            for (const auto& q : pl.positions) pos.push_back({q.x, q.y});
            h["placements"].push_back(pos);
        }
    }
    j["humans"] = h;
    json r{{"ap", c.render.ap},
           {"spacing", c.render.spacing},
           {"height", c.render.height},
           {"pixels_per_cell", c.render.options.pixels_per_cell},
           {"interpolation", c.render.options.interpolation == Interpolation::Bicubic ? "bicubic" : "bilinear"}};
    if (c.render.bounds) r["bounds"] = detail::bounds_json(*c.render.bounds);
    j["render"] = r;
    json l{{"samples_per_location", c.localize.samples_per_location}, {"noise_db", c.localize.noise_db}};
    if (!c.localize.observations.empty()) l["observations"] = c.localize.observations;
    j["localize"] = l;
    json a = json::object();
    if (!c.ablation.reference.empty()) a["reference"] = c.ablation.reference;
    j["ablation"] = a;
    return j;
}

inline void write_config(const SiteConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("", "cannot write config file '" + path + "'");
    out << config_to_json(c).dump(2) << '\n';
}

}  // namespace rfmap
