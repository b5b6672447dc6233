#pragma once

// Active (device-based) and passive (device-free) radio maps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "rfmap/antenna.hpp"
#include "rfmap/scene.hpp"
#include "rfmap/tracer.hpp"
#include "rfmap/vec.hpp"

namespace rfmap {

class RadioMapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Cell {
    int id = 0;
    Vec3 position;
};

struct CellGrid {
    std::vector<Cell> cells;
    std::optional<double> spacing;

    void validate() const {
        std::vector<int> ids;
        for (const auto& c : cells) {
            if (!std::isfinite(c.position.x) || !std::isfinite(c.position.y) || !std::isfinite(c.position.z))
                throw RadioMapError("cell " + std::to_string(c.id) + " has a non-finite position");
            ids.push_back(c.id);
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw RadioMapError("cell ids must be unique");
    }
    std::vector<Vec3> positions() const {
        std::vector<Vec3> out;
        for (const auto& c : cells) out.push_back(c.position);
        return out;
    }
};

/// Axis-aligned floor region; only x and y are used.
struct Bounds2 {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

inline constexpr double kDefaultCellHeight = 1.0;

/// Number of lattice points covering [a, b] at `spacing`, endpoints
/// included, at least one.
inline int lattice_count(double a, double b, double spacing) {
    const double span = std::max(0.0, b - a);
    return std::max(1, static_cast<int>(std::floor(span / spacing + 1e-9)) + 1);
}

/// Uniform lattice over `b` at height `height`; ids are row-major with x
/// varying fastest.
inline CellGrid auto_grid(const Bounds2& b, double spacing, double height = kDefaultCellHeight) {
    if (!(spacing > 0.0)) throw RadioMapError("grid spacing must be > 0");
    const int nx = lattice_count(b.x0, b.x1, spacing);
    const int ny = lattice_count(b.y0, b.y1, spacing);
    CellGrid g;
    g.spacing = spacing;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            g.cells.push_back({iy * nx + ix, {b.x0 + ix * spacing, b.y0 + iy * spacing, height}});
    return g;
}

struct ActiveRadioMap {
    std::vector<std::string> streams;  ///< one per AP
    std::vector<Cell> cells;
    std::vector<std::vector<double>> rss;  ///< [cell][ap], dBm
};

struct HumanPlacement {
    int id = 0;
    std::vector<Vec3> positions;  ///< base centres on the floor
    std::optional<int> cell_id;   ///< set when enumerated from a grid

    void validate() const {
        if ((id == 0) != positions.empty())
            throw RadioMapError("placement " + std::to_string(id) + ": id 0 must be exactly the empty placement");
    }
};

struct PlacementError {
    int id = 0;
    std::string message;
};

struct PassiveRadioMap {
    std::vector<std::string> streams;  ///< "ap:mp", AP-major
    std::vector<HumanPlacement> placements;
    std::vector<std::vector<double>> rss;  ///< [placement][stream], dBm
    std::vector<PlacementError> errors;    ///< skipped placements
    double human_radius = 0.15;
    double human_height = 2.0;
};

struct RadioMapParams {
    TraceParams trace;
    double human_radius = 0.15;
    double human_height = 2.0;
};

/// Empty placement followed by one single-human placement per cell.
inline std::vector<HumanPlacement> single_human_placements(const CellGrid& grid) {
    std::vector<HumanPlacement> out{{0, {}, std::nullopt}};
    int id = 1;
    for (const auto& c : grid.cells) out.push_back({id++, {{c.position.x, c.position.y, 0.0}}, c.id});
    return out;
}

namespace detail {

inline double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
    const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
    const double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
    double s = 0.0, t = 0.0;
    if (a < 1e-300 && e < 1e-300) return norm(r);
    if (a < 1e-300) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = dot(d1, r);
        if (e < 1e-300) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = dot(d1, d2), den = a * e - b * b;
            s = den > 1e-300 ? std::clamp((b * f - c * e) / den, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return distance(p1 + d1 * s, p2 + d2 * t);
}

inline double segment_triangle_distance(const TriFace& f, const Vec3& a, const Vec3& b) {
    const Vec3 d = b - a;
    const double len = norm(d);
    if (len > 0.0) {
        if (intersect_triangle(f, a, d / len, 0.0, len)) return 0.0;
    }
    double best = std::min(distance(a, closest_point_on_triangle(f, a)), distance(b, closest_point_on_triangle(f, b)));
    for (int i = 0; i < 3; ++i) best = std::min(best, segment_segment_distance(a, b, f.v[i], f.v[(i + 1) % 3]));
    return best;
}

}  // namespace detail

/// Reason the human `h` would overlap scene geometry, if any. The floor
/// the cylinder stands on and the plane its top touches do not count.
inline std::optional<std::string> human_overlap(const SceneModel& m, const HumanCylinder& h) {
    constexpr double kClear = 1e-3;
    const Vec3 a = h.base_center + h.axis * kClear;
    const Vec3 b = h.top() - h.axis * kClear;
    for (std::size_t i = 0; i < m.faces.size(); ++i) {
        const TriFace& f = m.faces[i];
        double d;
        if (std::abs(f.normal.z) > 0.99) {
            // Horizontal face: overlaps only if it cuts the cylinder between its end caps.
            const double z = f.v[0].z;
            if (z < a.z || z > b.z) continue;
            d = distance(closest_point_on_triangle(f, {h.base_center.x, h.base_center.y, z}),
                         Vec3{h.base_center.x, h.base_center.y, z});
        } else {
            d = detail::segment_triangle_distance(f, a, b);
        }
        if (d < h.radius) {
            std::ostringstream os;
            os << "human at (" << h.base_center.x << ", " << h.base_center.y << ") overlaps face " << i << " ("
               << m.materials[f.material_id].name << ")";
            return os.str();
        }
    }
    return std::nullopt;
}

/// Virtual receiver used for radio-map cells.
inline Antenna virtual_receiver(const Vec3& p, double frequency_hz) {
    Antenna a = isotropic_antenna(p, 1.0, 0.0, frequency_hz);
    a.name = "cell";
    return a;
}

/// RSS at each receiver for one AP. The receiving antennas take the AP's
/// frequency so that the effective aperture matches the carrier.
inline std::vector<double> rss_at(const SceneModel& scene, const Antenna& ap, const std::vector<Antenna>& receivers,
                                  const TraceParams& p) {
    std::vector<Vec3> pts;
    for (const auto& r : receivers) pts.push_back(r.position);
    const auto by = records_by_receiver(trace(scene, ap, pts, p), pts.size());
    std::vector<double> out;
    for (std::size_t i = 0; i < receivers.size(); ++i) {
        Antenna rx = receivers[i];
        rx.frequency_hz = ap.frequency_hz;
        out.push_back(received_power(by[i], rx, p.coherent, p.noise_floor_dbm));
    }
    return out;
}

inline ActiveRadioMap generate_active(const SceneModel& scene, const std::vector<Antenna>& aps, const CellGrid& grid,
                                      const RadioMapParams& params) {
    if (grid.cells.empty()) throw RadioMapError("radio-map grid is empty");
    grid.validate();
    ActiveRadioMap map;
    map.cells = grid.cells;
    map.rss.assign(grid.cells.size(), std::vector<double>(aps.size(), params.trace.noise_floor_dbm));
    for (std::size_t a = 0; a < aps.size(); ++a) {
        map.streams.push_back(aps[a].name);
        std::vector<Antenna> rx;
        for (const auto& c : grid.cells) rx.push_back(virtual_receiver(c.position, aps[a].frequency_hz));
        const auto col = rss_at(scene, aps[a], rx, params.trace);
        for (std::size_t c = 0; c < col.size(); ++c) map.rss[c][a] = col[c];
    }
    return map;
}

inline std::string stream_name(const Antenna& ap, const Antenna& mp) { return ap.name + ":" + mp.name; }

inline PassiveRadioMap generate_passive(const SceneModel& scene, const std::vector<Antenna>& aps,
                                        const std::vector<Antenna>& mps, const std::vector<HumanPlacement>& placements,
                                        const RadioMapParams& params) {
    const bool has_empty = std::any_of(placements.begin(), placements.end(), [](const auto& p) { return p.id == 0; });
    if (!has_empty) throw RadioMapError("passive placements must include placement 0 (no human)");
    PassiveRadioMap map;
    map.human_radius = params.human_radius;
    map.human_height = params.human_height;
    for (const auto& ap : aps)
        for (const auto& mp : mps) map.streams.push_back(stream_name(ap, mp));
    std::vector<HumanPlacement> order = placements;
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (order[i].id == order[i - 1].id) throw RadioMapError("duplicate placement id " + std::to_string(order[i].id));
    for (const auto& pl : order) {
        pl.validate();
        std::vector<HumanCylinder> humans;
        std::optional<std::string> bad;
        for (const auto& pos : pl.positions) {
            HumanCylinder h{{pos.x, pos.y, pos.z}, params.human_radius, params.human_height};
            h.validate();
            if (!bad) bad = human_overlap(scene, h);
            humans.push_back(h);
        }
        if (bad) {
            map.errors.push_back({pl.id, *bad});
            continue;
        }
        const SceneModel s = humans.empty() ? scene : with_humans(scene, humans, params.trace.edge_radius);
        std::vector<double> row;
        for (const auto& ap : aps) {
            const auto col = rss_at(s, ap, mps, params.trace);
            row.insert(row.end(), col.begin(), col.end());
        }
        map.placements.push_back(pl);
        map.rss.push_back(std::move(row));
    }
    return map;
}

// ---------------------------------------------------------------------------
// CSV and sidecar output
// ---------------------------------------------------------------------------

/// Fixed two-decimal formatting; negative zero prints as 0.00.
inline std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

inline void write_active_csv(std::ostream& os, const ActiveRadioMap& map) {
    os << "cell_id,x,y,z";
    for (const auto& s : map.streams) os << ',' << s;
    os << '\n';
    for (std::size_t i = 0; i < map.cells.size(); ++i) {
        const auto& c = map.cells[i];
        os << c.id << ',' << fmt2(c.position.x) << ',' << fmt2(c.position.y) << ',' << fmt2(c.position.z);
        for (double v : map.rss[i]) os << ',' << fmt2(v);
        os << '\n';
    }
}

/// Representative point of a placement: the mean of its human positions.
inline std::optional<Vec3> placement_point(const HumanPlacement& p) {
    if (p.positions.empty()) return std::nullopt;
    Vec3 c;
    for (const auto& q : p.positions) c += q;
    return c / static_cast<double>(p.positions.size());
}

/// Placement 0 and multi-human placements leave the cell columns empty
/// where they have no cell or point.
inline void write_passive_csv(std::ostream& os, const PassiveRadioMap& map) {
    os << "placement_id,cell_id,x,y,z";
    for (const auto& s : map.streams) os << ',' << s;
    os << '\n';
    for (std::size_t i = 0; i < map.placements.size(); ++i) {
        const auto& p = map.placements[i];
        os << p.id << ',';
        if (p.cell_id) os << *p.cell_id;
        if (auto c = placement_point(p)) os << ',' << fmt2(c->x) << ',' << fmt2(c->y) << ',' << fmt2(c->z);
        else os << ",,,";
        for (double v : map.rss[i]) os << ',' << fmt2(v);
        os << '\n';
    }
}

inline nlohmann::json point_json(const Vec3& p) { return nlohmann::json::array({p.x, p.y, p.z}); }

inline nlohmann::json active_sidecar(const ActiveRadioMap& map) {
    return {{"kind", "active"}, {"streams", map.streams}, {"cells", map.cells.size()}, {"rss", "mean_dbm"},
            {"histogram", nullptr}};
}

inline nlohmann::json passive_sidecar(const PassiveRadioMap& map) {
    nlohmann::json pls = nlohmann::json::array();
    for (const auto& p : map.placements) {
        nlohmann::json pos = nlohmann::json::array();
        for (const auto& q : p.positions) pos.push_back(point_json(q));
        pls.push_back({{"id", p.id}, {"cell_id", p.cell_id ? nlohmann::json(*p.cell_id) : nlohmann::json(nullptr)},
                       {"positions", pos}});
    }
    nlohmann::json errs = nlohmann::json::array();
    for (const auto& e : map.errors) errs.push_back({{"id", e.id}, {"message", e.message}});
    return {{"kind", "passive"},        {"streams", map.streams},
            {"human_radius", map.human_radius}, {"human_height", map.human_height},
            {"placements", pls},        {"skipped", errs},
            {"rss", "mean_dbm"},        {"histogram", nullptr}};
}

// ---------------------------------------------------------------------------
// CSV input
// ---------------------------------------------------------------------------

/// A radio-map-shaped table read back from CSV: leading key columns, then
/// one RSS column per stream.
struct RssTable {
    std::vector<std::string> key_columns;
    std::vector<std::string> streams;
    std::vector<std::vector<std::string>> keys;
    std::vector<std::vector<double>> rss;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

/// Columns named in `key_names` (which must lead the header) are kept as
/// text; all later columns are RSS values.
inline RssTable read_rss_csv(std::istream& in, const std::vector<std::string>& key_names, const std::string& source) {
    RssTable t;
    std::string line;
    if (!std::getline(in, line)) throw RadioMapError(source + ": empty CSV");
    const auto header = split_csv_line(line);
    if (header.size() < key_names.size()) throw RadioMapError(source + ": header is missing key columns");
    for (std::size_t i = 0; i < key_names.size(); ++i)
        if (header[i] != key_names[i])
            throw RadioMapError(source + ": expected column '" + key_names[i] + "' at position " + std::to_string(i));
    t.key_columns = key_names;
    t.streams.assign(header.begin() + static_cast<std::ptrdiff_t>(key_names.size()), header.end());
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) throw RadioMapError(source + ": wrong field count at line " + std::to_string(lineno));
        t.keys.emplace_back(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(key_names.size()));
        std::vector<double> row;
        for (std::size_t i = key_names.size(); i < f.size(); ++i) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(f[i], &used));
                if (used != f[i].size()) throw std::invalid_argument(f[i]);
            } catch (const std::exception&) {
                throw RadioMapError(source + ": bad RSS value '" + f[i] + "' at line " + std::to_string(lineno));
            }
        }
        t.rss.push_back(std::move(row));
    }
    return t;
}

inline RssTable read_rss_csv_file(const std::string& path, const std::vector<std::string>& key_names) {
    std::ifstream in(path);
    if (!in) throw RadioMapError("cannot open '" + path + "'");
    return read_rss_csv(in, key_names, path);
}

}  // namespace rfmap
