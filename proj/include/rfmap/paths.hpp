#pragma once

// Path signatures and exact-path reconstruction. A signature names the ordered
// interactions of a wavefront; the solver rebuilds the geometrical path through
// them by the image method, solves the single UTD point if present, checks
// visibility, and evaluates the field at the receiver.

#include <algorithm>
#include <cmath>
#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "rfmap/antenna.hpp"
#include "rfmap/em.hpp"
#include "rfmap/scene.hpp"

namespace rfmap {

enum class EventKind : std::uint8_t { Reflect, Transmit, Edge, CylReflect, CylDiffract };

struct PathEvent {
    EventKind kind = EventKind::Reflect;
    int id = 0;    ///< surface, edge or human index
    int side = 0;  ///< creeping direction (+1 counter-clockwise seen from above, -1 clockwise)

    auto operator<=>(const PathEvent&) const = default;
    bool special() const { return kind == EventKind::Edge || kind == EventKind::CylReflect || kind == EventKind::CylDiffract; }
};

using PathSig = std::vector<PathEvent>;

inline std::string to_string(const PathSig& sig) {
    if (sig.empty()) return "LOS";
    std::string out;
    for (const auto& e : sig) {
        if (!out.empty()) out += ' ';
        switch (e.kind) {
            case EventKind::Reflect: out += "R" + std::to_string(e.id); break;
            case EventKind::Transmit: out += "T" + std::to_string(e.id); break;
            case EventKind::Edge: out += "D" + std::to_string(e.id); break;
            case EventKind::CylReflect: out += "CR" + std::to_string(e.id); break;
            case EventKind::CylDiffract: out += std::string("CD") + std::to_string(e.id) + (e.side > 0 ? "+" : "-"); break;
        }
    }
    return out;
}

struct PathOptions {
    bool utd = true;
    double human_attenuation_db = 3.0;  ///< per crossing when UTD is off
    bool swap_soft_hard = false;
};

struct ExactPath {
    PathSig sig;
    std::vector<Vec3> points;  ///< tx, interaction points, rx
    double length = 0.0;       ///< unfolded length including creeping arcs
    CVec3 E;                   ///< field at the receiver, before receive-gain weighting
    Vec3 arrival;              ///< propagation direction at the receiver
};

namespace detail {

inline double leg_eps(double len) { return 1e-9 + 1e-9 * len; }

// Reflection points from `src` through `planes` (in order) to `target`.
inline std::optional<std::vector<Vec3>> backtrack(const SceneModel& m, const Vec3& src, const std::vector<int>& surfaces,
                                                  const Vec3& target) {
    const std::size_t n = surfaces.size();
    std::vector<Vec3> images(n + 1);
    images[0] = src;
    for (std::size_t j = 0; j < n; ++j) {
        const Surface& s = m.surfaces[static_cast<std::size_t>(surfaces[j])];
        images[j + 1] = mirror_point(images[j], s.point, s.normal);
    }
    std::vector<Vec3> pts(n);
    Vec3 t = target;
    for (std::size_t jj = n; jj-- > 0;) {
        const Surface& s = m.surfaces[static_cast<std::size_t>(surfaces[jj])];
        const Vec3 img = images[jj + 1];
        const Vec3 d = t - img;
        const double den = dot(d, s.normal);
        if (std::abs(den) < 1e-14) return std::nullopt;
        const double u = dot(s.point - img, s.normal) / den;
        if (!(u > 1e-9 && u < 1.0 - 1e-9)) return std::nullopt;
        const Vec3 p = img + d * u;
        if (!point_on_surface(m, surfaces[jj], p)) return std::nullopt;
        pts[jj] = p;
        t = p;
    }
    return pts;
}

// Surfaces crossed by the open segment a -> b, consecutive duplicates merged.
inline std::vector<std::pair<int, Vec3>> crossings(const SceneModel& m, const Vec3& a, const Vec3& b) {
    const double len = distance(a, b);
    std::vector<std::pair<int, Vec3>> out;
    if (len <= 0.0) return out;
    const Vec3 d = (b - a) / len;
    const double eps = leg_eps(len);
    for (const auto& h : faces_crossed(m, a, d, eps, len - eps)) {
        const int s = m.faces[static_cast<std::size_t>(h.face)].surface_id;
        if (!out.empty() && out.back().first == s) continue;
        out.push_back({s, a + d * h.t});
    }
    return out;
}

// Number of human cylinders the open segment passes through.
inline int cylinder_crossings(const SceneModel& m, const Vec3& a, const Vec3& b) {
    const double len = distance(a, b);
    if (len <= 0.0) return 0;
    const Vec3 d = (b - a) / len;
    const double eps = leg_eps(len);
    int count = 0;
    for (const auto& h : m.humans) {
        if (auto in = cylinder_interval(h, a, d, eps, len - eps, h.radius * (1.0 - 1e-9)))
            if (in->second - in->first > 1e-9) ++count;
    }
    return count;
}

inline double incidence_angle(const Vec3& d_in, const Vec3& normal) {
    return std::acos(std::clamp(std::abs(dot(d_in, normal)), 0.0, 1.0));
}

inline em::FresnelSet surface_reflection(const SceneModel& m, const Material& mat, double theta) {
    if (mat.pec) return em::pec_fresnel();
    return em::fresnel(theta, m.ambient_index, mat.refractive_index);
}

// Wedge face reflection for an azimuth angle measured from that face.
inline em::FresnelSet wedge_face_fresnel(const SceneModel& m, const Material& mat, double phi_from_face) {
    if (mat.pec) return em::pec_fresnel();
    const double theta = std::clamp(kPi / 2.0 - phi_from_face, 0.0, kPi / 2.0 - 1e-12);
    return em::fresnel(theta, m.ambient_index, mat.refractive_index);
}

inline em::WedgeFrame frame_of(const WedgeEdge& w) { return {w.e, w.t_o, w.n_o, w.n}; }

// Point Q on edge `w` where a path image_src -> Q -> image_dst satisfies the
// Keller cone law, if it lies strictly inside the segment.
inline std::optional<Vec3> solve_edge_point(const WedgeEdge& w, const Vec3& src, const Vec3& dst) {
    const Vec3 e = normalized(w.b - w.a);
    const double len = w.length();
    auto f = [&](double u) {
        const Vec3 q = w.a + e * u;
        return dot(normalized(q - src), e) - dot(normalized(dst - q), e);
    };
    double lo = 0.0, hi = len;
    double flo = f(lo), fhi = f(hi);
    if (!(flo < 0.0 && fhi > 0.0)) return std::nullopt;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, len); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm < 0.0) lo = mid;
        else hi = mid;
    }
    const double u = 0.5 * (lo + hi);
    if (!(u > 1e-9 * len && u < len * (1.0 - 1e-9))) return std::nullopt;
    return w.a + e * u;
}

inline double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

inline double wrap_pi(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}

// Specular point on a vertical cylinder for the path src -> Q -> dst.
inline std::optional<Vec3> solve_cylinder_reflection(const HumanCylinder& h, const Vec3& src, const Vec3& dst) {
    const double a = h.radius;
    const double sx = src.x - h.base_center.x, sy = src.y - h.base_center.y;
    const double rx = dst.x - h.base_center.x, ry = dst.y - h.base_center.y;
    const double ds = std::hypot(sx, sy), dr = std::hypot(rx, ry);
    if (!(ds > a && dr > a)) return std::nullopt;
    const double th_s = std::atan2(sy, sx);
    const double th_r = th_s + wrap_pi(std::atan2(ry, rx) - th_s);
    const double bs = std::acos(a / ds), br = std::acos(a / dr);
    double lo = std::max({std::min(th_s, th_r), th_s - bs, th_r - br});
    double hi = std::min({std::max(th_s, th_r), th_s + bs, th_r + br});
    if (lo > hi) return std::nullopt;
    auto f = [&](double th) {
        const double nx = std::cos(th), ny = std::sin(th);
        const double qx = a * nx, qy = a * ny;
        const double us = std::hypot(sx - qx, sy - qy), ur = std::hypot(rx - qx, ry - qy);
        return cross2(nx, ny, (sx - qx) / us, (sy - qy) / us) + cross2(nx, ny, (rx - qx) / ur, (ry - qy) / ur);
    };
    double flo = f(lo), fhi = f(hi);
    double th;
    if (flo == 0.0) th = lo;
    else if (fhi == 0.0) th = hi;
    else {
        if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = f(mid);
            if ((fm > 0.0) == (flo > 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        th = 0.5 * (lo + hi);
    }
    const double nx = std::cos(th), ny = std::sin(th);
    const double qx = a * nx, qy = a * ny;
    // Both endpoints strictly on the lit side.
    if (!((sx - qx) * nx + (sy - qy) * ny > 0.0 && (rx - qx) * nx + (ry - qy) * ny > 0.0)) return std::nullopt;
    const double d1 = std::hypot(sx - qx, sy - qy), d2 = std::hypot(rx - qx, ry - qy);
    const double z = src.z + (dst.z - src.z) * d1 / (d1 + d2);
    if (!(z > h.base_center.z && z < h.base_center.z + h.height)) return std::nullopt;
    return Vec3{h.base_center.x + qx, h.base_center.y + qy, z};
}

struct CreepGeometry {
    Vec3 q1, q2;
    double t = 0.0;           ///< creeping length
    double cos2_gamma = 1.0;  ///< helix angle of the geodesic
};

// Geodesic creeping path src -> Q1 ~> Q2 -> dst around side `sigma`.
inline std::optional<CreepGeometry> solve_creeping(const HumanCylinder& h, int sigma, const Vec3& src, const Vec3& dst) {
    const double a = h.radius;
    const double sx = src.x - h.base_center.x, sy = src.y - h.base_center.y;
    const double rx = dst.x - h.base_center.x, ry = dst.y - h.base_center.y;
    const double ds = std::hypot(sx, sy), dr = std::hypot(rx, ry);
    if (!(ds > a && dr > a)) return std::nullopt;
    const double th1 = std::atan2(sy, sx) + sigma * std::acos(a / ds);
    const double th2 = std::atan2(ry, rx) - sigma * std::acos(a / dr);
    const double delta = wrap_pi(sigma * (th2 - th1));
    if (delta < 0.0) return std::nullopt;
    const double d1 = std::sqrt(ds * ds - a * a), d2 = std::sqrt(dr * dr - a * a);
    const double arc = a * delta;
    const double horiz = d1 + arc + d2;
    const double slope = (dst.z - src.z) / horiz;
    const double z1 = src.z + slope * d1;
    const double z2 = z1 + slope * arc;
    const double z0 = h.base_center.z, ztop = h.base_center.z + h.height;
    if (!(z1 > z0 && z1 < ztop && z2 > z0 && z2 < ztop)) return std::nullopt;
    CreepGeometry g;
    g.q1 = {h.base_center.x + a * std::cos(th1), h.base_center.y + a * std::sin(th1), z1};
    g.q2 = {h.base_center.x + a * std::cos(th2), h.base_center.y + a * std::sin(th2), z2};
    g.t = arc * std::sqrt(1.0 + slope * slope);
    g.cos2_gamma = 1.0 / (1.0 + slope * slope);
    return g;
}

inline Vec3 radial_normal(const HumanCylinder& h, const Vec3& p) {
    return normalized(Vec3{p.x - h.base_center.x, p.y - h.base_center.y, 0.0});
}

}  // namespace detail

/// Rebuild and evaluate the path of signature `sig` from `tx` to `rx`.
/// Returns nothing when the path does not exist or is blocked.
inline std::optional<ExactPath> solve_path(const SceneModel& m, const Antenna& tx, const PathSig& sig, const Vec3& rx,
                                           const PathOptions& opt = {}) {
    using namespace detail;
    const double k = tx.k();
    // Split around the single UTD event.
    int special = -1;
    for (std::size_t i = 0; i < sig.size(); ++i) {
        const auto& e = sig[i];
        if (e.special()) {
            if (special >= 0) return std::nullopt;
            special = static_cast<int>(i);
        }
        switch (e.kind) {
            case EventKind::Reflect:
            case EventKind::Transmit:
                if (e.id < 0 || e.id >= static_cast<int>(m.surfaces.size())) return std::nullopt;
                break;
            case EventKind::Edge:
                if (!opt.utd || e.id < 0 || e.id >= static_cast<int>(m.edges.size())) return std::nullopt;
                if (m.edges[static_cast<std::size_t>(e.id)].n < 1.0) return std::nullopt;
                break;
            case EventKind::CylReflect:
            case EventKind::CylDiffract:
                if (!opt.utd || e.id < 0 || e.id >= static_cast<int>(m.humans.size())) return std::nullopt;
                if (e.kind == EventKind::CylDiffract && e.side != 1 && e.side != -1) return std::nullopt;
                break;
        }
    }
    const std::size_t split = special >= 0 ? static_cast<std::size_t>(special) : sig.size();
    // Geometric vertices are reflections and the special event; transmissions
    // are found on the legs between them.
    struct Segment {
        std::vector<int> reflections;                // surfaces, in order
        std::vector<std::vector<int>> transmits;     // per leg (reflections.size() + 1 legs)
    };
    auto make_segment = [&](std::size_t from, std::size_t to) {
        Segment s;
        s.transmits.emplace_back();
        for (std::size_t i = from; i < to; ++i) {
            if (sig[i].kind == EventKind::Reflect) {
                s.reflections.push_back(sig[i].id);
                s.transmits.emplace_back();
            } else {
                s.transmits.back().push_back(sig[i].id);
            }
        }
        return s;
    };
    const Segment pre = make_segment(0, split);
    const Segment post = special >= 0 ? make_segment(split + 1, sig.size()) : Segment{};

    auto image_of = [&](Vec3 p, const std::vector<int>& surfaces, bool reverse) {
        if (reverse) {
            for (auto it = surfaces.rbegin(); it != surfaces.rend(); ++it) {
                const Surface& s = m.surfaces[static_cast<std::size_t>(*it)];
                p = mirror_point(p, s.point, s.normal);
            }
        } else {
            for (int id : surfaces) {
                const Surface& s = m.surfaces[static_cast<std::size_t>(id)];
                p = mirror_point(p, s.point, s.normal);
            }
        }
        return p;
    };

    const Vec3 src = tx.position;
    // Special points.
    Vec3 q1, q2;
    CreepGeometry creep;
    if (special >= 0) {
        const PathEvent& ev = sig[static_cast<std::size_t>(special)];
        const Vec3 i_s = image_of(src, pre.reflections, false);
        const Vec3 j_r = image_of(rx, post.reflections, true);
        if (ev.kind == EventKind::Edge) {
            auto q = solve_edge_point(m.edges[static_cast<std::size_t>(ev.id)], i_s, j_r);
            if (!q) return std::nullopt;
            q1 = q2 = *q;
        } else if (ev.kind == EventKind::CylReflect) {
            auto q = solve_cylinder_reflection(m.humans[static_cast<std::size_t>(ev.id)], i_s, j_r);
            if (!q) return std::nullopt;
            q1 = q2 = *q;
        } else {
            auto g = solve_creeping(m.humans[static_cast<std::size_t>(ev.id)], ev.side, i_s, j_r);
            if (!g) return std::nullopt;
            creep = *g;
            q1 = g->q1;
            q2 = g->q2;
        }
    }

    // Vertex list with the event carried at each vertex.
    struct Vertex {
        Vec3 p;
        int event = -1;  // index into sig, -1 for tx/rx
    };
    std::vector<Vertex> verts;
    verts.push_back({src, -1});
    auto add_segment = [&](const Segment& seg, const Vec3& from, const Vec3& to, std::size_t sig_from) -> bool {
        auto pts = backtrack(m, from, seg.reflections, to);
        if (!pts) return false;
        std::vector<Vec3> chain;
        chain.push_back(from);
        for (const auto& p : *pts) chain.push_back(p);
        chain.push_back(to);
        // Map reflections and transmissions back to signature indices.
        std::size_t si = sig_from;
        for (std::size_t leg = 0; leg + 1 < chain.size(); ++leg) {
            const auto cr = crossings(m, chain[leg], chain[leg + 1]);
            const auto& expect = seg.transmits[leg];
            if (cr.size() != expect.size()) return false;
            for (std::size_t c = 0; c < cr.size(); ++c) {
                if (cr[c].first != expect[c]) return false;
                if (m.material_of_surface(expect[c]).pec) return false;
                while (sig[si].kind != EventKind::Transmit) ++si;
                verts.push_back({cr[c].second, static_cast<int>(si++)});
            }
            if (leg + 1 < chain.size() - 1) {
                while (sig[si].kind != EventKind::Reflect) ++si;
                verts.push_back({chain[leg + 1], static_cast<int>(si++)});
            }
        }
        return true;
    };
    if (special < 0) {
        if (!add_segment(pre, src, rx, 0)) return std::nullopt;
    } else {
        if (!add_segment(pre, src, q1, 0)) return std::nullopt;
        verts.push_back({q1, special});
        if (!add_segment(post, q2, rx, split + 1)) return std::nullopt;
    }
    verts.push_back({rx, -1});

    // Visibility against the human cylinders.
    int human_hits = 0;
    for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
        const Vec3 a = (verts[i].event == special && special >= 0) ? q2 : verts[i].p;
        const int c = cylinder_crossings(m, a, verts[i + 1].p);
        if (c > 0 && opt.utd) return std::nullopt;
        human_hits += c;
    }

    // Field evaluation along the path.
    auto leg_start = [&](std::size_t i) { return (special >= 0 && verts[i].event == special) ? q2 : verts[i].p; };
    ExactPath out;
    out.sig = sig;
    for (const auto& v : verts) {
        out.points.push_back(v.p);
        if (special >= 0 && v.event == special && sig[static_cast<std::size_t>(special)].kind == EventKind::CylDiffract)
            out.points.push_back(q2);
    }
    const Vec3 d0 = normalized(verts[1].p - src);
    const double l0 = distance(src, verts[1].p);
    if (!(l0 > 0.0)) return std::nullopt;
    em::FieldPhasor f = em::FieldPhasor::spherical(tx.field_at_1m(d0) * (em::expj(-k * l0) / l0), l0, k);
    double total = l0;
    auto rest_length = [&](std::size_t from) {
        double s = 0.0;
        for (std::size_t j = from; j + 1 < verts.size(); ++j) s += distance(leg_start(j), verts[j + 1].p);
        return s;
    };
    for (std::size_t i = 1; i + 1 < verts.size(); ++i) {
        const PathEvent& ev = sig[static_cast<std::size_t>(verts[i].event)];
        const Vec3 prev = leg_start(i - 1);
        const Vec3 d_in = normalized(verts[i].p - prev);
        const Vec3 start = leg_start(i);
        const Vec3 next = verts[i + 1].p;
        const double s_out = distance(start, next);
        if (!(s_out > 0.0)) return std::nullopt;
        const Vec3 d_out = (next - start) / s_out;
        switch (ev.kind) {
            case EventKind::Reflect: {
                const Surface& s = m.surfaces[static_cast<std::size_t>(ev.id)];
                const auto fres = surface_reflection(m, m.materials[s.material_id], incidence_angle(d_in, s.normal));
                const auto b = em::interface_basis(d_in, s.normal, d_out);
                f = em::reflect_field(f, fres, b.e_par_i, b.e_perp, b.e_par_o, b.e_perp);
                f = em::propagate(f, s_out);
                break;
            }
            case EventKind::Transmit: {
                const Surface& s = m.surfaces[static_cast<std::size_t>(ev.id)];
                const Material& mat = m.materials[s.material_id];
                const auto fres = em::thin_slab(incidence_angle(d_in, s.normal), m.ambient_index, mat.refractive_index);
                const auto b = em::interface_basis(d_in, s.normal, d_out);
                f = em::transmit_field(f, fres, b.e_par_i, b.e_perp, b.e_par_o, b.e_perp, mat.attenuation_db);
                f = em::propagate(f, s_out);
                break;
            }
            case EventKind::Edge: {
                const WedgeEdge& w = m.edges[static_cast<std::size_t>(ev.id)];
                const auto fr = frame_of(w);
                em::WedgeKernelParams p;
                p.phi_prime = em::wedge_azimuth(fr, -d_in);
                p.phi = em::wedge_azimuth(fr, d_out);
                if (!(p.phi_prime > 0.0 && p.phi_prime < w.n * kPi && p.phi > 0.0 && p.phi < w.n * kPi)) return std::nullopt;
                p.beta0 = angle_between(d_in, w.e);
                p.n = w.n;
                p.k = k;
                const double L = em::wedge_distance_parameter(f.rho, rest_length(i), p.beta0);
                p.L_i = p.L_ro = p.L_rn = L;
                const auto fres_o = wedge_face_fresnel(m, m.material_of_face(w.o_face), p.phi_prime);
                const auto fres_n = wedge_face_fresnel(m, m.material_of_face(w.n_face), w.n * kPi - p.phi);
                const bool pec = m.material_of_face(w.o_face).pec && m.material_of_face(w.n_face).pec;
                const auto d = em::wedge_diffraction_coeffs(p, pec, fres_o, fres_n);
                f = em::wedge_diffract_field(f, d, w.e, d_in, d_out, s_out);
                break;
            }
            case EventKind::CylReflect: {
                const HumanCylinder& h = m.humans[static_cast<std::size_t>(ev.id)];
                const Vec3 n = radial_normal(h, verts[i].p);
                const Vec3 u1 = cross(h.axis, n);
                const double alpha_p = em::cylinder_alpha_p(d_in, u1, h.axis);
                const auto p = em::cylinder_reflection_params(k, h.radius, incidence_angle(d_in, n), alpha_p, f.rho,
                                                              rest_length(i));
                f = em::cylinder_reflect(f, p, s_out, em::interface_basis(d_in, n, d_out), opt.swap_soft_hard);
                break;
            }
            case EventKind::CylDiffract: {
                const HumanCylinder& h = m.humans[static_cast<std::size_t>(ev.id)];
                const Vec3 n1 = radial_normal(h, q1), n2 = radial_normal(h, q2);
                const Vec3 b1 = normalized(cross(d_in, n1)), b2 = normalized(cross(d_out, n2));
                const auto p = em::cylinder_diffraction_params(k, h.radius, creep.t, creep.cos2_gamma, f.rho, rest_length(i));
                f = em::cylinder_diffract(f, p, s_out, b1, n1, b2, n2, opt.swap_soft_hard);
                total += creep.t;
                break;
            }
        }
        total += s_out;
    }
    out.E = f.E;
    if (human_hits > 0) out.E *= std::pow(10.0, -opt.human_attenuation_db * human_hits / 20.0);
    out.length = total;
    out.arrival = normalized(rx - leg_start(verts.size() - 2));
    if (!std::isfinite(norm(out.E))) return std::nullopt;
    return out;
}

}  // namespace rfmap
