#pragma once

// Site model: triangle mesh with materials, coplanar surface groups, detected
// wedge edges, bounding capsules and human cylinders, plus the ray queries the
// tracer and the exact-path solver need.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "rfmap/vec.hpp"

namespace rfmap {

class SceneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Material {
    std::string name;
    double refractive_index = 1.0;
    double attenuation_db = 0.0;  ///< loss per transmission through one face
    bool pec = false;             ///< perfect conductor: reflects fully, never transmits

    void validate() const {
        if (!(refractive_index >= 1.0)) throw SceneError("material '" + name + "': refractive_index must be >= 1");
        if (!(attenuation_db >= 0.0)) throw SceneError("material '" + name + "': attenuation_db must be >= 0");
    }
};

class MaterialTable {
public:
    MaterialTable() = default;
    explicit MaterialTable(std::vector<Material> materials) {
        for (auto& m : materials) add(std::move(m));
    }

    int add(Material m) {
        m.validate();
        if (index_.count(m.name)) throw SceneError("duplicate material '" + m.name + "'");
        index_[m.name] = static_cast<int>(materials_.size());
        materials_.push_back(std::move(m));
        return index_[materials_.back().name];
    }

    /// Replace a material of the same name in place, or append.
    int set(Material m) {
        m.validate();
        if (auto it = index_.find(m.name); it != index_.end()) {
            materials_[static_cast<std::size_t>(it->second)] = std::move(m);
            return it->second;
        }
        return add(std::move(m));
    }

    std::optional<int> find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    const Material& operator[](int id) const { return materials_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return materials_.size(); }
    const std::vector<Material>& all() const { return materials_; }

private:
    std::vector<Material> materials_;
    std::map<std::string, int> index_;
};

/// Uncalibrated placeholder values; real sites need measured ones.
inline MaterialTable default_materials() {
    return MaterialTable({{"brick", 2.0, 6.0, false},
                          {"concrete", 2.3, 10.0, false},
                          {"wood", 1.4, 3.0, false},
                          {"glass", 2.5, 2.0, false},
                          {"drywall", 1.5, 2.0, false},
                          {"pec", 1.0, 0.0, true}});
}

inline MaterialTable materials_from_json(const nlohmann::json& j) {
    if (!j.contains("materials") || !j["materials"].is_array())
        throw SceneError("materials JSON: expected an array at /materials");
    MaterialTable table;
    for (std::size_t i = 0; i < j["materials"].size(); ++i) {
        const auto& m = j["materials"][i];
        const std::string where = "/materials/" + std::to_string(i);
        if (!m.contains("name") || !m["name"].is_string()) throw SceneError("materials JSON: missing " + where + "/name");
        if (!m.contains("refractive_index") || !m["refractive_index"].is_number())
            throw SceneError("materials JSON: missing " + where + "/refractive_index");
        Material mat;
        mat.name = m["name"].get<std::string>();
        mat.refractive_index = m["refractive_index"].get<double>();
        mat.attenuation_db = m.value("attenuation_db", 0.0);
        mat.pec = m.value("pec", false);
        table.add(mat);
    }
    return table;
}

inline nlohmann::json materials_to_json(const MaterialTable& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : t.all()) {
        nlohmann::json e{{"name", m.name}, {"refractive_index", m.refractive_index}, {"attenuation_db", m.attenuation_db}};
        if (m.pec) e["pec"] = true;
        arr.push_back(e);
    }
    return {{"materials", arr}};
}

inline MaterialTable load_materials(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open materials file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SceneError("materials file '" + path + "': " + e.what());
    }
    return materials_from_json(j);
}

struct TriFace {
    std::array<Vec3, 3> v;
    Vec3 normal;
    int material_id = 0;
    int surface_id = -1;
    std::array<int, 3> vi{};  ///< merged vertex indices
};

/// Coplanar, edge-connected faces of one material: one reflecting facet.
struct Surface {
    std::vector<int> faces;
    Vec3 normal;
    Vec3 point;  ///< any point on the plane
    int material_id = 0;
};

struct WedgeEdge {
    Vec3 a, b;
    Vec3 e;             ///< unit direction, t_o x n_o
    Vec3 t_o, n_o;      ///< o-face tangent (away from the edge) and outward normal
    int o_face = -1, n_face = -1;
    double interior_angle = kPi / 2;
    double n = 1.5;     ///< wedge number (2 pi - interior angle) / pi

    double length() const { return distance(a, b); }
};

struct HumanCylinder {
    Vec3 base_center;
    double radius = 0.15;
    double height = 2.0;
    Vec3 axis{0.0, 0.0, 1.0};

    void validate() const {
        if (!(radius > 0.0)) throw SceneError("human cylinder radius must be > 0");
        if (!(height > 0.0)) throw SceneError("human cylinder height must be > 0");
        if (std::abs(axis.z - 1.0) > 1e-12) throw SceneError("human cylinder axis must be vertical");
    }
    Vec3 top() const { return base_center + axis * height; }
};

struct Capsule {
    enum class Kind { Edge, Human };
    Vec3 a, b;
    double radius = 0.01;
    int id = 0;
    Kind kind = Kind::Edge;
    int ref = -1;  ///< edge or human index
};

/// Uniform spatial grid over faces.
struct FaceGrid {
    Vec3 lo, hi;
    std::array<int, 3> dims{0, 0, 0};
    Vec3 cell;
    std::vector<std::vector<int>> cells;

    bool empty() const { return cells.empty(); }
    int index(int x, int y, int z) const { return (z * dims[1] + y) * dims[0] + x; }
};

struct SceneModel {
    std::vector<TriFace> faces;
    std::vector<Surface> surfaces;
    std::vector<WedgeEdge> edges;
    std::vector<Capsule> capsules;
    MaterialTable materials;
    std::vector<HumanCylinder> humans;
    double ambient_index = 1.0;
    std::vector<std::string> warnings;
    FaceGrid grid;

    const Material& material_of_face(int f) const { return materials[faces[static_cast<std::size_t>(f)].material_id]; }
    const Material& material_of_surface(int s) const {
        return materials[surfaces[static_cast<std::size_t>(s)].material_id];
    }
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace detail {

struct VertexMerger {
    double quantum = 1e-7;
    std::map<std::array<std::int64_t, 3>, int> ids;

    int id(const Vec3& p) {
        const std::array<std::int64_t, 3> key{std::llround(p.x / quantum), std::llround(p.y / quantum),
                                              std::llround(p.z / quantum)};
        auto [it, inserted] = ids.emplace(key, static_cast<int>(ids.size()));
        return it->second;
    }
};

inline void build_surfaces(SceneModel& m) {
    const std::size_t nf = m.faces.size();
    std::vector<int> parent(nf);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::map<std::pair<int, int>, std::vector<int>> sides;
    for (std::size_t f = 0; f < nf; ++f) {
        const auto& vi = m.faces[f].vi;
        for (int s = 0; s < 3; ++s) {
            const int a = vi[s], b = vi[(s + 1) % 3];
            sides[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(f));
        }
    }
    for (const auto& [side, fs] : sides) {
        for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
            for (std::size_t j = i + 1; j < fs.size(); ++j) {
                const auto& fa = m.faces[fs[i]];
                const auto& fb = m.faces[fs[j]];
                if (fa.material_id != fb.material_id) continue;
                if (std::abs(dot(fa.normal, fb.normal)) < 1.0 - 1e-9) continue;
                if (std::abs(dot(fb.v[0] - fa.v[0], fa.normal)) > 1e-9) continue;
                parent[find(fs[i])] = find(fs[j]);
            }
        }
    }
    std::map<int, int> root_to_surface;
    m.surfaces.clear();
    for (std::size_t f = 0; f < nf; ++f) {
        const int r = find(static_cast<int>(f));
        auto it = root_to_surface.find(r);
        if (it == root_to_surface.end()) {
            it = root_to_surface.emplace(r, static_cast<int>(m.surfaces.size())).first;
            Surface s;
            s.normal = m.faces[f].normal;
            s.point = m.faces[f].v[0];
            s.material_id = m.faces[f].material_id;
            m.surfaces.push_back(s);
        }
        m.faces[f].surface_id = it->second;
        m.surfaces[static_cast<std::size_t>(it->second)].faces.push_back(static_cast<int>(f));
    }
}

inline void build_grid(SceneModel& m) {
    FaceGrid g;
    if (m.faces.empty()) {
        m.grid = g;
        return;
    }
    const double inf = std::numeric_limits<double>::infinity();
    g.lo = {inf, inf, inf};
    g.hi = {-inf, -inf, -inf};
    for (const auto& f : m.faces) {
        for (const auto& p : f.v) {
            for (int i = 0; i < 3; ++i) {
                g.lo[i] = std::min(g.lo[i], p[i]);
                g.hi[i] = std::max(g.hi[i], p[i]);
            }
        }
    }
    const double pad = 1e-6 + 1e-6 * norm(g.hi - g.lo);
    for (int i = 0; i < 3; ++i) {
        g.lo[i] -= pad;
        g.hi[i] += pad;
    }
    const Vec3 ext = g.hi - g.lo;
    const double volume_side = std::cbrt(std::max(ext.x * ext.y * ext.z, 1e-12));
    const double target = std::cbrt(2.0 * static_cast<double>(m.faces.size()));
    for (int i = 0; i < 3; ++i) {
        g.dims[i] = std::clamp(static_cast<int>(std::ceil(target * ext[i] / volume_side)), 1, 64);
        g.cell[i] = ext[i] / g.dims[i];
    }
    g.cells.assign(static_cast<std::size_t>(g.dims[0] * g.dims[1] * g.dims[2]), {});
    for (std::size_t fi = 0; fi < m.faces.size(); ++fi) {
        const auto& f = m.faces[fi];
        std::array<int, 3> c0{}, c1{};
        for (int i = 0; i < 3; ++i) {
            const double mn = std::min({f.v[0][i], f.v[1][i], f.v[2][i]});
            const double mx = std::max({f.v[0][i], f.v[1][i], f.v[2][i]});
            c0[i] = std::clamp(static_cast<int>(std::floor((mn - g.lo[i]) / g.cell[i] - 1e-9)), 0, g.dims[i] - 1);
            c1[i] = std::clamp(static_cast<int>(std::floor((mx - g.lo[i]) / g.cell[i] + 1e-9)), 0, g.dims[i] - 1);
        }
        for (int z = c0[2]; z <= c1[2]; ++z)
            for (int y = c0[1]; y <= c1[1]; ++y)
                for (int x = c0[0]; x <= c1[0]; ++x) g.cells[static_cast<std::size_t>(g.index(x, y, z))].push_back(static_cast<int>(fi));
    }
    m.grid = std::move(g);
}

}  // namespace detail

/// Recompute surfaces and the spatial index after editing `faces`.
inline void finalize_geometry(SceneModel& m) {
    detail::build_surfaces(m);
    detail::build_grid(m);
}

/// Append a triangle; the normal follows the winding a -> b -> c.
inline void add_face(SceneModel& m, const Vec3& a, const Vec3& b, const Vec3& c, int material_id,
                     detail::VertexMerger* merger = nullptr) {
    const Vec3 n = cross(b - a, c - a);
    if (norm(n) < 1e-12) throw SceneError("degenerate (collinear) triangle");
    TriFace f;
    f.v = {a, b, c};
    f.normal = normalized(n);
    f.material_id = material_id;
    if (merger) {
        f.vi = {merger->id(a), merger->id(b), merger->id(c)};
    }
    m.faces.push_back(f);
}

/// Re-derive merged vertex indices for all faces (used by programmatic builders).
inline void merge_vertices(SceneModel& m) {
    detail::VertexMerger merger;
    for (auto& f : m.faces) f.vi = {merger.id(f.v[0]), merger.id(f.v[1]), merger.id(f.v[2])};
}

/// Parse a triangulated Wavefront OBJ stream.
inline SceneModel parse_obj(std::istream& in, const MaterialTable& materials, const std::string& source = "<stream>") {
    SceneModel m;
    m.materials = materials;
    std::vector<Vec3> verts;
    detail::VertexMerger merger;
    std::optional<int> current;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z)) throw SceneError(source + ": malformed vertex at line " + std::to_string(lineno));
            verts.push_back(p);
        } else if (tag == "usemtl") {
            std::string name;
            ls >> name;
            current = materials.find(name);
            if (!current) throw SceneError(source + ": unknown material '" + name + "' at line " + std::to_string(lineno));
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                const int raw = std::stoi(tok.substr(0, tok.find('/')));
                const int k = raw < 0 ? static_cast<int>(verts.size()) + raw : raw - 1;
                if (k < 0 || k >= static_cast<int>(verts.size()))
                    throw SceneError(source + ": vertex index out of range at line " + std::to_string(lineno));
                idx.push_back(k);
            }
            if (idx.size() != 3) throw SceneError("non-triangular face at line " + std::to_string(lineno));
            if (!current) {
                current = materials.find("default");
                if (!current) throw SceneError(source + ": face without material at line " + std::to_string(lineno));
            }
            try {
                add_face(m, verts[idx[0]], verts[idx[1]], verts[idx[2]], *current, &merger);
            } catch (const SceneError&) {
                throw SceneError(source + ": degenerate face at line " + std::to_string(lineno));
            }
        }
        // o, g, s, vn, vt, mtllib are irrelevant to propagation.
    }
    finalize_geometry(m);
    return m;
}

inline SceneModel load_model(const std::string& path, const MaterialTable& materials = default_materials()) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open model file '" + path + "'");
    return parse_obj(in, materials, path);
}

// ---------------------------------------------------------------------------
// Edge detection
// ---------------------------------------------------------------------------

/// Hysteresis edge detection over shared triangle sides. Collinear kept sides
/// between the same pair of surfaces are merged into one wedge edge.
inline SceneModel detect_edges(SceneModel model, double t_low, double t_high) {
    if (!(0.0 <= t_low && t_low <= t_high && t_high <= kPi)) throw SceneError("detect_edges: need 0 <= t_low <= t_high <= pi");
    struct Side {
        int a, b;
        int f0, f1;
        double weight;
    };
    std::map<std::pair<int, int>, std::vector<int>> side_faces;
    std::map<int, Vec3> vpos;
    for (std::size_t f = 0; f < model.faces.size(); ++f) {
        const auto& face = model.faces[f];
        for (int s = 0; s < 3; ++s) {
            const int a = face.vi[s], b = face.vi[(s + 1) % 3];
            vpos[face.vi[s]] = face.v[s];
            side_faces[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(f));
        }
    }
    std::vector<Side> sides;
    for (const auto& [key, fs] : side_faces) {
        if (fs.size() < 2) continue;
        if (fs.size() > 2) {
            model.warnings.push_back("non-manifold side (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                                     ") shared by " + std::to_string(fs.size()) + " faces skipped");
            continue;
        }
        const double w = angle_between(model.faces[fs[0]].normal, model.faces[fs[1]].normal);
        sides.push_back({key.first, key.second, fs[0], fs[1], w});
    }
    // Classification, then hysteresis through shared vertices.
    std::vector<int> state(sides.size(), 0);  // 0 discard, 1 candidate, 2 kept
    std::multimap<int, int> by_vertex;
    for (std::size_t i = 0; i < sides.size(); ++i) {
        if (sides[i].weight > t_high) state[i] = 2;
        else if (sides[i].weight >= t_low && sides[i].weight > 1e-9) state[i] = 1;
        by_vertex.emplace(sides[i].a, static_cast<int>(i));
        by_vertex.emplace(sides[i].b, static_cast<int>(i));
    }
    std::queue<int> frontier;
    for (std::size_t i = 0; i < sides.size(); ++i)
        if (state[i] == 2) frontier.push(static_cast<int>(i));
    while (!frontier.empty()) {
        const int i = frontier.front();
        frontier.pop();
        for (int v : {sides[i].a, sides[i].b}) {
            auto [lo, hi] = by_vertex.equal_range(v);
            for (auto it = lo; it != hi; ++it) {
                if (state[it->second] == 1) {
                    state[it->second] = 2;
                    frontier.push(it->second);
                }
            }
        }
    }
    // Merge collinear contiguous kept sides with the same surface pair.
    std::map<std::pair<int, int>, std::vector<int>> by_surfaces;
    for (std::size_t i = 0; i < sides.size(); ++i) {
        if (state[i] != 2) continue;
        int s0 = model.faces[sides[i].f0].surface_id, s1 = model.faces[sides[i].f1].surface_id;
        by_surfaces[{std::min(s0, s1), std::max(s0, s1)}].push_back(static_cast<int>(i));
    }
    model.edges.clear();
    for (auto& [pair, members] : by_surfaces) {
        std::vector<bool> used(members.size(), false);
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (used[i]) continue;
            used[i] = true;
            const Side& base = sides[members[i]];
            Vec3 pa = vpos[base.a], pb = vpos[base.b];
            const Vec3 dir = normalized(pb - pa);
            bool grew = true;
            while (grew) {
                grew = false;
                for (std::size_t j = 0; j < members.size(); ++j) {
                    if (used[j]) continue;
                    const Side& s = sides[members[j]];
                    const Vec3 qa = vpos[s.a], qb = vpos[s.b];
                    if (norm(cross(qb - qa, dir)) > 1e-9 * norm(qb - qa)) continue;
                    if (norm(cross(qa - pa, dir)) > 1e-9 * std::max(1.0, norm(qa - pa))) continue;
                    const bool touches = distance(qa, pa) < 1e-9 || distance(qa, pb) < 1e-9 || distance(qb, pa) < 1e-9 ||
                                         distance(qb, pb) < 1e-9;
                    if (!touches) continue;
                    used[j] = true;
                    grew = true;
                    for (const Vec3& q : {qa, qb}) {
                        if (dot(q - pa, dir) < 0.0) pa = q;
                        if (dot(q - pb, dir) > 0.0) pb = q;
                    }
                }
            }
            // o-face: the lower face index on the lower surface.
            const int f_first = std::min(base.f0, base.f1);
            const int f_second = std::max(base.f0, base.f1);
            const TriFace& fo = model.faces[f_first];
            const TriFace& fn = model.faces[f_second];
            WedgeEdge e;
            e.o_face = f_first;
            e.n_face = f_second;
            e.n_o = fo.normal;
            // Tangent of the o-face pointing away from the edge, toward its third vertex.
            Vec3 third_o;
            for (const auto& v : fo.v)
                if (norm(cross(v - pa, dir)) > 1e-9) third_o = v;
            Vec3 t = third_o - pa;
            t = normalized(t - dir * dot(t, dir));
            e.t_o = t;
            e.e = normalized(cross(e.t_o, e.n_o));
            e.a = dot(pb - pa, e.e) >= 0.0 ? pa : pb;
            e.b = dot(pb - pa, e.e) >= 0.0 ? pb : pa;
            Vec3 third_n;
            for (const auto& v : fn.v)
                if (norm(cross(v - pa, dir)) > 1e-9) third_n = v;
            const double theta_n = angle_between(fo.normal, fn.normal);
            const bool convex = dot(third_n - pa, fo.normal) < 0.0;
            e.interior_angle = convex ? kPi - theta_n : kPi + theta_n;
            e.n = (2.0 * kPi - e.interior_angle) / kPi;
            model.edges.push_back(e);
        }
    }
    std::sort(model.edges.begin(), model.edges.end(), [](const WedgeEdge& x, const WedgeEdge& y) {
        if (x.o_face != y.o_face) return x.o_face < y.o_face;
        return x.n_face < y.n_face;
    });
    return model;
}

inline constexpr double kDefaultEdgeRadius = 0.01;

inline SceneModel build_capsules(SceneModel model, double edge_radius = kDefaultEdgeRadius) {
    model.capsules.clear();
    int id = 0;
    for (std::size_t i = 0; i < model.edges.size(); ++i) {
        model.capsules.push_back(
            {model.edges[i].a, model.edges[i].b, edge_radius, id++, Capsule::Kind::Edge, static_cast<int>(i)});
    }
    for (std::size_t i = 0; i < model.humans.size(); ++i) {
        const auto& h = model.humans[i];
        h.validate();
        model.capsules.push_back({h.base_center, h.top(), h.radius, id++, Capsule::Kind::Human, static_cast<int>(i)});
    }
    return model;
}

inline SceneModel with_humans(SceneModel model, std::vector<HumanCylinder> humans, double edge_radius = kDefaultEdgeRadius) {
    model.humans = std::move(humans);
    return build_capsules(std::move(model), edge_radius);
}

inline double distance_to_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    const double u = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return distance(p, a + ab * u);
}

// ---------------------------------------------------------------------------
// Ray queries
// ---------------------------------------------------------------------------

/// Moller-Trumbore; returns the hit distance if it lies in (t_min, t_max).
inline std::optional<double> intersect_triangle(const TriFace& f, const Vec3& o, const Vec3& d, double t_min,
                                                double t_max) {
    constexpr double kBary = 1e-12;
    const Vec3 e1 = f.v[1] - f.v[0];
    const Vec3 e2 = f.v[2] - f.v[0];
    const Vec3 p = cross(d, e2);
    const double det = dot(e1, p);
    if (std::abs(det) < 1e-14) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = o - f.v[0];
    const double u = dot(s, p) * inv;
    if (u < -kBary || u > 1.0 + kBary) return std::nullopt;
    const Vec3 q = cross(s, e1);
    const double v = dot(d, q) * inv;
    if (v < -kBary || u + v > 1.0 + kBary) return std::nullopt;
    const double t = dot(e2, q) * inv;
    if (!(t > t_min && t < t_max)) return std::nullopt;
    return t;
}

struct FaceHitInfo {
    int face = -1;
    double t = std::numeric_limits<double>::infinity();
};

namespace detail {

// Visit grid cells along the ray in order; `visit(cell, t_exit)` returns false to stop.
template <typename Visit>
void walk_grid(const FaceGrid& g, const Vec3& o, const Vec3& d, double t_min, double t_max, Visit&& visit) {
    if (g.empty()) return;
    double t0 = t_min, t1 = t_max;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-300) {
            if (o[i] < g.lo[i] || o[i] > g.hi[i]) return;
            continue;
        }
        double ta = (g.lo[i] - o[i]) / d[i];
        double tb = (g.hi[i] - o[i]) / d[i];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t0 > t1) return;
    const Vec3 p = o + d * t0;
    std::array<int, 3> c{}, step{};
    std::array<double, 3> t_next{}, t_delta{};
    for (int i = 0; i < 3; ++i) {
        c[i] = std::clamp(static_cast<int>(std::floor((p[i] - g.lo[i]) / g.cell[i])), 0, g.dims[i] - 1);
        if (d[i] > 0.0) {
            step[i] = 1;
            t_next[i] = (g.lo[i] + (c[i] + 1) * g.cell[i] - o[i]) / d[i];
            t_delta[i] = g.cell[i] / d[i];
        } else if (d[i] < 0.0) {
            step[i] = -1;
            t_next[i] = (g.lo[i] + c[i] * g.cell[i] - o[i]) / d[i];
            t_delta[i] = -g.cell[i] / d[i];
        } else {
            step[i] = 0;
            t_next[i] = std::numeric_limits<double>::infinity();
            t_delta[i] = std::numeric_limits<double>::infinity();
        }
    }
    while (true) {
        const int axis = (t_next[0] < t_next[1]) ? (t_next[0] < t_next[2] ? 0 : 2) : (t_next[1] < t_next[2] ? 1 : 2);
        const double t_exit = std::min(t_next[axis], t1);
        if (!visit(g.index(c[0], c[1], c[2]), t_exit)) return;
        if (t_next[axis] > t1) return;
        c[axis] += step[axis];
        if (c[axis] < 0 || c[axis] >= g.dims[axis]) return;
        t_next[axis] += t_delta[axis];
    }
}

}  // namespace detail

/// Nearest face in (t_min, t_max); exact ties resolve to the lowest face index.
inline FaceHitInfo nearest_face(const SceneModel& m, const Vec3& o, const Vec3& d, double t_min,
                                double t_max = std::numeric_limits<double>::infinity()) {
    FaceHitInfo best;
    best.t = t_max;
    detail::walk_grid(m.grid, o, d, t_min, t_max, [&](int cell, double t_exit) {
        for (int f : m.grid.cells[static_cast<std::size_t>(cell)]) {
            const auto t = intersect_triangle(m.faces[static_cast<std::size_t>(f)], o, d, t_min, t_max);
            if (!t) continue;
            if (*t < best.t || (*t == best.t && (best.face < 0 || f < best.face))) {
                best.t = *t;
                best.face = f;
            }
        }
        return !(best.face >= 0 && best.t < t_exit);
    });
    if (best.face < 0) best.t = std::numeric_limits<double>::infinity();
    return best;
}

/// Exhaustive scan over every face; the oracle for `nearest_face`.
inline FaceHitInfo nearest_face_bruteforce(const SceneModel& m, const Vec3& o, const Vec3& d, double t_min,
                                           double t_max = std::numeric_limits<double>::infinity()) {
    FaceHitInfo best;
    best.t = t_max;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const auto t = intersect_triangle(m.faces[f], o, d, t_min, t_max);
        if (t && *t < best.t) {
            best.t = *t;
            best.face = static_cast<int>(f);
        }
    }
    if (best.face < 0) best.t = std::numeric_limits<double>::infinity();
    return best;
}

/// Every face crossing in (t_min, t_max), sorted by distance then face index.
inline std::vector<FaceHitInfo> faces_crossed(const SceneModel& m, const Vec3& o, const Vec3& d, double t_min,
                                              double t_max) {
    std::vector<FaceHitInfo> hits;
    std::vector<int> seen;
    detail::walk_grid(m.grid, o, d, t_min, t_max, [&](int cell, double) {
        for (int f : m.grid.cells[static_cast<std::size_t>(cell)]) {
            if (std::find(seen.begin(), seen.end(), f) != seen.end()) continue;
            seen.push_back(f);
            if (const auto t = intersect_triangle(m.faces[static_cast<std::size_t>(f)], o, d, t_min, t_max))
                hits.push_back({f, *t});
        }
        return true;
    });
    std::sort(hits.begin(), hits.end(), [](const FaceHitInfo& a, const FaceHitInfo& b) {
        return a.t != b.t ? a.t < b.t : a.face < b.face;
    });
    return hits;
}

/// Whether `p` lies on surface `s` (inside one of its triangles, with tolerance).
inline bool point_on_surface(const SceneModel& m, int s, const Vec3& p, double tol = 1e-9) {
    const Surface& surf = m.surfaces[static_cast<std::size_t>(s)];
    if (std::abs(dot(p - surf.point, surf.normal)) > 1e-6) return false;
    for (int fi : surf.faces) {
        const TriFace& f = m.faces[static_cast<std::size_t>(fi)];
        const Vec3 e0 = f.v[1] - f.v[0], e1 = f.v[2] - f.v[0], w = p - f.v[0];
        const double d00 = dot(e0, e0), d01 = dot(e0, e1), d11 = dot(e1, e1);
        const double d20 = dot(w, e0), d21 = dot(w, e1);
        const double den = d00 * d11 - d01 * d01;
        const double v = (d11 * d20 - d01 * d21) / den;
        const double u = (d00 * d21 - d01 * d20) / den;
        const double scale = std::sqrt(std::max(d00, d11));
        const double tb = tol / scale;
        if (v >= -tb && u >= -tb && u + v <= 1.0 + tb) return true;
    }
    return false;
}

/// Closest point on a triangle to `p`.
inline Vec3 closest_point_on_triangle(const TriFace& f, const Vec3& p) {
    const Vec3 &a = f.v[0], &b = f.v[1], &c = f.v[2];
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

/// Distance from `p` to the nearest face of surface `s`.
inline double distance_to_surface(const SceneModel& m, int s, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (int fi : m.surfaces[static_cast<std::size_t>(s)].faces)
        best = std::min(best, distance(p, closest_point_on_triangle(m.faces[static_cast<std::size_t>(fi)], p)));
    return best;
}

/// Closest approach between a ray and a segment.
struct SegmentApproach {
    double t_ray = 0.0;   ///< distance along the ray
    double u_seg = 0.0;   ///< distance along the segment from `a`
    double distance = 0.0;
    Vec3 point_on_segment;
};

inline SegmentApproach closest_approach(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b) {
    const Vec3 e = b - a;
    const double len = norm(e);
    const Vec3 eu = len > 0.0 ? e / len : Vec3{1, 0, 0};
    const Vec3 w = o - a;
    const double bb = dot(d, eu);
    const double denom = 1.0 - bb * bb;
    double t, u;
    if (denom < 1e-14) {
        t = 0.0;
        u = dot(w, eu);
    } else {
        t = (bb * dot(w, eu) - dot(w, d)) / denom;
        u = dot(w, eu) + t * bb;
    }
    u = std::clamp(u, 0.0, len);
    const Vec3 q = a + eu * u;
    t = std::max(dot(q - o, d), 0.0);
    const Vec3 p = o + d * t;
    return {t, u, distance(p, q), q};
}

/// Range of ray parameters inside a finite vertical cylinder, if any, within [t_lo, t_hi].
inline std::optional<std::pair<double, double>> cylinder_interval(const HumanCylinder& h, const Vec3& o, const Vec3& d,
                                                                  double t_lo, double t_hi, double radius) {
    const double dx = d.x, dy = d.y;
    const double ox = o.x - h.base_center.x, oy = o.y - h.base_center.y;
    const double A = dx * dx + dy * dy;
    double t0, t1;
    if (A < 1e-18) {
        if (ox * ox + oy * oy >= radius * radius) return std::nullopt;
        t0 = -std::numeric_limits<double>::infinity();
        t1 = std::numeric_limits<double>::infinity();
    } else {
        const double B = 2.0 * (ox * dx + oy * dy);
        const double C = ox * ox + oy * oy - radius * radius;
        const double disc = B * B - 4.0 * A * C;
        if (disc <= 0.0) return std::nullopt;
        const double sq = std::sqrt(disc);
        t0 = (-B - sq) / (2.0 * A);
        t1 = (-B + sq) / (2.0 * A);
    }
    const double z0 = h.base_center.z, z1 = h.base_center.z + h.height;
    if (std::abs(d.z) < 1e-18) {
        if (o.z < z0 || o.z > z1) return std::nullopt;
    } else {
        double za = (z0 - o.z) / d.z, zb = (z1 - o.z) / d.z;
        if (za > zb) std::swap(za, zb);
        t0 = std::max(t0, za);
        t1 = std::min(t1, zb);
    }
    t0 = std::max(t0, t_lo);
    t1 = std::min(t1, t_hi);
    if (!(t0 < t1)) return std::nullopt;
    return std::pair{t0, t1};
}

/// Horizontal closest approach of a ray to a cylinder axis.
struct AxisApproach {
    double t = 0.0;
    double distance = 0.0;
};

inline AxisApproach axis_approach(const HumanCylinder& h, const Vec3& o, const Vec3& d) {
    const double dx = d.x, dy = d.y;
    const double ox = o.x - h.base_center.x, oy = o.y - h.base_center.y;
    const double A = dx * dx + dy * dy;
    const double t = A > 1e-18 ? -(ox * dx + oy * dy) / A : 0.0;
    const double px = ox + t * dx, py = oy + t * dy;
    return {t, std::sqrt(px * px + py * py)};
}

struct InteractionEvent {
    enum class Kind { Escape, Face, Edge, Cylinder };
    Kind kind = Kind::Escape;
    int index = -1;  ///< face, edge or human index
    Vec3 point;
    double distance = std::numeric_limits<double>::infinity();
    bool tangential = false;  ///< cylinder: grazing rather than surface impact
};

struct IntersectOptions {
    double edge_radius = kDefaultEdgeRadius;
    double graze_tolerance = kDefaultEdgeRadius;
    bool edges = true;
    bool humans = true;
};

/// Nearest interaction along a ray beyond `t_min`.
inline InteractionEvent intersect(const SceneModel& m, const Vec3& origin, const Vec3& dir, double t_min,
                                  const IntersectOptions& opt = {}) {
    InteractionEvent ev;
    const FaceHitInfo fh = nearest_face(m, origin, dir, t_min);
    if (fh.face >= 0) {
        ev.kind = InteractionEvent::Kind::Face;
        ev.index = fh.face;
        ev.distance = fh.t;
        ev.point = origin + dir * fh.t;
    }
    if (opt.edges) {
        for (std::size_t i = 0; i < m.edges.size(); ++i) {
            const auto ca = closest_approach(origin, dir, m.edges[i].a, m.edges[i].b);
            if (ca.distance <= opt.edge_radius && ca.t_ray > t_min && ca.t_ray < ev.distance) {
                ev = {InteractionEvent::Kind::Edge, static_cast<int>(i), ca.point_on_segment, ca.t_ray, false};
            }
        }
    }
    if (opt.humans) {
        for (std::size_t i = 0; i < m.humans.size(); ++i) {
            const auto& h = m.humans[i];
            if (auto in = cylinder_interval(h, origin, dir, t_min, ev.distance, h.radius)) {
                const auto ax = axis_approach(h, origin, dir);
                const bool graze = h.radius - ax.distance <= opt.graze_tolerance;
                ev = {InteractionEvent::Kind::Cylinder, static_cast<int>(i), origin + dir * in->first, in->first, graze};
            } else if (auto near = cylinder_interval(h, origin, dir, t_min, ev.distance, h.radius + opt.graze_tolerance)) {
                const auto ax = axis_approach(h, origin, dir);
                const double t = std::clamp(ax.t, near->first, near->second);
                if (t < ev.distance)
                    ev = {InteractionEvent::Kind::Cylinder, static_cast<int>(i), origin + dir * t, t, true};
            }
        }
    }
    return ev;
}

}  // namespace rfmap
