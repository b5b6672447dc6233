#pragma once

// Shooting-and-bouncing ray tracer. Rays are launched from a tessellated
// icosahedron, processed breadth-first by depth, and tested against every
// receiver along each flight. A reception names a wavefront by its path
// signature; the reported field is that of the exact path for the signature.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "rfmap/antenna.hpp"
#include "rfmap/em.hpp"
#include "rfmap/paths.hpp"
#include "rfmap/scene.hpp"

namespace rfmap {

struct TraceParams {
    int tessellation = 6;
    int max_depth = 4;
    double min_power_dbm = -110.0;
    bool utd = true;
    bool coherent = true;
    double edge_radius = kDefaultEdgeRadius;
    double fan_bucket = 0.25;             ///< metres along an edge sharing one diffraction fan
    double reception_scale = 1.5;         ///< discovery radius over the nominal reception radius
    double human_attenuation_db = 3.0;    ///< per LOS crossing when UTD is off
    bool swap_soft_hard = false;
    double noise_floor_dbm = em::kDefaultNoiseFloorDbm;
    int threads = 0;                      ///< 0: hardware concurrency
    std::size_t max_rays_per_generation = 4'000'000;

    void validate() const {
        if (tessellation < 1) throw std::invalid_argument("tessellation must be >= 1");
        if (max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
        if (!(edge_radius > 0.0)) throw std::invalid_argument("edge_radius must be > 0");
        if (!(fan_bucket > 0.0)) throw std::invalid_argument("fan_bucket must be > 0");
        if (!(reception_scale >= 1.0)) throw std::invalid_argument("reception_scale must be >= 1");
    }
    PathOptions path_options() const { return {utd, human_attenuation_db, swap_soft_hard}; }
};

struct RayState {
    Vec3 origin;
    Vec3 dir;
    int depth = 0;
    double l = 0.0;      ///< unfolded length from the source to `origin`
    double alpha = 0.0;  ///< tube angular separation (rad)
    em::FieldPhasor field;
    double field_at = 0.0;  ///< distance past `origin` where `field` is given
    PathSig sig;
    bool special_used = false;
};

/// Unit directions through the vertices of an icosahedron whose faces are
/// subdivided with frequency `n`: 10 n^2 + 2 directions. Face points use
/// sine-weighted spherical barycentrics, which keep neighbour spacing within
/// a few percent of the icosahedral value.
inline std::vector<Vec3> icosphere_directions(int n) {
    if (n < 1) throw std::invalid_argument("tessellation must be >= 1");
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> ico;
    for (double s1 : {-1.0, 1.0})
        for (double s2 : {-1.0, 1.0}) {
            ico.push_back(normalized(Vec3{0.0, s1, s2 * phi}));
            ico.push_back(normalized(Vec3{s1, s2 * phi, 0.0}));
            ico.push_back(normalized(Vec3{s2 * phi, 0.0, s1}));
        }
    const double edge_angle = std::acos(1.0 / std::sqrt(5.0));
    std::vector<std::array<int, 3>> faces;
    for (int a = 0; a < 12; ++a)
        for (int b = a + 1; b < 12; ++b)
            for (int c = b + 1; c < 12; ++c) {
                auto edge = [&](int i, int j) { return std::abs(angle_between(ico[i], ico[j]) - edge_angle) < 1e-9; };
                if (edge(a, b) && edge(b, c) && edge(a, c)) faces.push_back({a, b, c});
            }
    std::vector<Vec3> out;
    std::map<std::array<std::int64_t, 3>, int> seen;
    for (const auto& f : faces) {
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n - i; ++j) {
                const int k = n - i - j;
                const Vec3 p = normalized(ico[f[0]] * std::sin(edge_angle * i / n) +
                                          ico[f[1]] * std::sin(edge_angle * j / n) +
                                          ico[f[2]] * std::sin(edge_angle * k / n));
                const std::array<std::int64_t, 3> key{std::llround(p.x * 1e9), std::llround(p.y * 1e9),
                                                      std::llround(p.z * 1e9)};
                if (seen.emplace(key, static_cast<int>(out.size())).second) out.push_back(p);
            }
    }
    return out;
}

/// Tube angular separation for tessellation frequency `n` (69 degrees / n).
inline double launch_alpha(int n) { return 69.0 / n * kPi / 180.0; }

inline std::vector<RayState> launch(const Antenna& tx, const TraceParams& params) {
    const double k = tx.k();
    const double alpha = launch_alpha(params.tessellation);
    std::vector<RayState> rays;
    for (const Vec3& d : icosphere_directions(params.tessellation)) {
        RayState r;
        r.origin = tx.position;
        r.dir = d;
        r.alpha = alpha;
        r.field = em::FieldPhasor::spherical(tx.field_at_1m(d) * em::expj(-k), 1.0, k);
        r.field_at = 1.0;
        rays.push_back(std::move(r));
    }
    return rays;
}

/// Reception sphere radius for a tube of separation `alpha` at unfolded length `l`.
inline double reception_radius(double alpha, double l) { return alpha * l / std::sqrt(3.0); }

struct Reception {
    double perp = 0.0;        ///< distance from the receiver to the ray line
    double projection = 0.0;  ///< distance along the ray to the foot of the perpendicular
};

inline std::optional<Reception> receive_test(const RayState& ray, const Vec3& rx,
                                             double t_max = std::numeric_limits<double>::infinity(),
                                             double scale = 1.0) {
    const Vec3 w = rx - ray.origin;
    const double t = dot(w, ray.dir);
    if (!(t > 0.0) || t > t_max) return std::nullopt;
    const double perp = norm(w - ray.dir * t);
    if (perp > scale * reception_radius(ray.alpha, ray.l + t)) return std::nullopt;
    return Reception{perp, t};
}

struct ReceptionRecord {
    int receiver_id = 0;
    PathSig sig;
    CVec3 field;          ///< at the receiver, before receive-gain weighting
    double distance = 0;  ///< unfolded path length
    Vec3 arrival;         ///< propagation direction at the receiver
    double perp = 0.0;    ///< perpendicular distance of the accepted ray
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    unsigned hw = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
    hw = static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(n / 16, 1)));
    if (hw <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < hw; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Field a (possibly negative) distance along the tube; valid while both radii stay positive.
inline em::FieldPhasor advance(const em::FieldPhasor& f, double s) {
    const double r1 = f.rho + s, r2 = f.rho2 + s;
    if (!(r1 > 0.0 && r2 > 0.0)) throw std::domain_error("advance: past the caustic");
    em::FieldPhasor out = f;
    const double spread = f.is_spherical() ? f.rho / r1 : std::sqrt(f.rho * f.rho2 / (r1 * r2));
    out.E = f.E * (spread * em::expj(-f.k * s));
    out.rho = r1;
    out.rho2 = r2;
    return out;
}

// Isotropic received power 1 m past the point where the ray field is given.
inline double power_ahead(const RayState& r, double lambda) {
    const em::FieldPhasor f = advance(r.field, std::max(0.0, 1.0 - r.field_at));
    return em::field_to_power(f.E, 1.0, lambda, -400.0);
}

struct Candidate {
    int rx = 0;
    PathSig sig;
    double perp = 0.0;
};

struct FanRequest {
    PathSig sig;  // parent signature
    int edge = 0;
    std::int64_t bucket = 0;
    double distance = 0.0;
    RayState parent;
    double t = 0.0;  // along the parent ray
    Vec3 q;
};

struct RayOutput {
    std::vector<RayState> children;
    std::vector<Candidate> candidates;
    std::vector<FanRequest> fans;
    std::vector<std::pair<PathSig, int>> near_humans;  // receiver-driven cylinder candidates
};

inline void process_ray(const SceneModel& m, const std::vector<Vec3>& receivers, const TraceParams& p, double lambda,
                        const RayState& r, RayOutput& out) {
    constexpr double kEps = 1e-7;
    const FaceHitInfo hit = nearest_face(m, r.origin, r.dir, kEps);
    double t_end = hit.t;
    int blocker = -1;
    if (p.utd) {
        for (std::size_t i = 0; i < m.humans.size(); ++i) {
            const auto& h = m.humans[i];
            if (auto in = cylinder_interval(h, r.origin, r.dir, kEps, t_end, h.radius)) {
                if (in->first < t_end) {
                    t_end = in->first;
                    blocker = static_cast<int>(i);
                }
            }
        }
    }
    for (std::size_t i = 0; i < receivers.size(); ++i) {
        if (auto rec = receive_test(r, receivers[i], t_end, p.reception_scale))
            out.candidates.push_back({static_cast<int>(i), r.sig, rec->perp});
    }
    if (r.depth >= p.max_depth) return;
    const bool may_diffract = p.utd && !r.special_used;
    const double t_far = std::isfinite(t_end) ? t_end : 1e4;

    if (may_diffract) {
        for (std::size_t i = 0; i < m.edges.size(); ++i) {
            const WedgeEdge& w = m.edges[i];
            if (w.n < 1.0) continue;  // concave corner, no wedge diffraction
            const auto ca = closest_approach(r.origin, r.dir, w.a, w.b);
            if (!(ca.t_ray > kEps && ca.t_ray < t_far)) continue;
            const double radius = std::max(p.edge_radius, p.reception_scale * reception_radius(r.alpha, r.l + ca.t_ray));
            if (ca.distance > radius) continue;
            FanRequest fr;
            fr.sig = r.sig;
            fr.edge = static_cast<int>(i);
            fr.bucket = static_cast<std::int64_t>(std::floor(ca.u_seg / p.fan_bucket));
            fr.distance = ca.distance;
            fr.parent = r;
            fr.t = ca.t_ray;
            fr.q = ca.point_on_segment;
            out.fans.push_back(std::move(fr));
        }
        for (std::size_t i = 0; i < m.humans.size(); ++i) {
            const auto& h = m.humans[i];
            const auto ax = axis_approach(h, r.origin, r.dir);
            const double t = std::clamp(ax.t, 0.0, t_far);
            const Vec3 pt = r.origin + r.dir * t;
            const double tube = p.reception_scale * reception_radius(r.alpha, r.l + t);
            const double dxy = std::hypot(pt.x - h.base_center.x, pt.y - h.base_center.y);
            const bool near = static_cast<int>(i) == blocker ||
                              (dxy <= h.radius + tube && pt.z >= h.base_center.z - tube &&
                               pt.z <= h.base_center.z + h.height + tube);
            if (!near) continue;
            out.near_humans.push_back({r.sig, static_cast<int>(i)});
        }
    }

    auto spawn = [&](RayState child) {
        if (power_ahead(child, lambda) < p.min_power_dbm) return;
        out.children.push_back(std::move(child));
    };

    if (blocker >= 0) {
        // Specular reflection off the human surface; the ray stops there.
        const auto& h = m.humans[static_cast<std::size_t>(blocker)];
        const Vec3 q = r.origin + r.dir * t_end;
        const double z_rel = q.z - h.base_center.z;
        if (!(z_rel > 1e-9 && z_rel < h.height - 1e-9)) return;  // cap
        const Vec3 n = normalized(Vec3{q.x - h.base_center.x, q.y - h.base_center.y, 0.0});
        const double s_hit = t_end - r.field_at;
        const em::FieldPhasor fi = advance(r.field, s_hit);
        const Vec3 d_out = reflect_dir(r.dir, n);
        const double theta = std::acos(std::clamp(-dot(r.dir, n), 0.0, 1.0));
        const Vec3 u1 = cross(h.axis, n);
        const auto kp = em::cylinder_reflection_params(fi.k, h.radius, theta, em::cylinder_alpha_p(r.dir, u1, h.axis),
                                                       fi.rho, 1.0);
        RayState c;
        c.origin = q;
        c.dir = d_out;
        c.depth = r.depth + 1;
        c.l = r.l + t_end;
        c.alpha = r.alpha;
        c.field = em::cylinder_reflect(fi, kp, 1.0, em::interface_basis(r.dir, n, d_out), p.swap_soft_hard);
        c.field_at = 1.0;
        c.sig = r.sig;
        c.sig.push_back({EventKind::CylReflect, blocker, 0});
        c.special_used = true;
        spawn(std::move(c));
        return;
    }
    if (hit.face < 0) return;
    const TriFace& face = m.faces[static_cast<std::size_t>(hit.face)];
    const Material& mat = m.materials[face.material_id];
    const Vec3 q = r.origin + r.dir * hit.t;
    const em::FieldPhasor fi = advance(r.field, hit.t - r.field_at);
    const double theta = std::acos(std::clamp(std::abs(dot(r.dir, face.normal)), 0.0, 1.0));
    {
        const Vec3 d_out = reflect_dir(r.dir, face.normal);
        const auto fres = mat.pec ? em::pec_fresnel() : em::fresnel(theta, m.ambient_index, mat.refractive_index);
        const auto b = em::interface_basis(r.dir, face.normal, d_out);
        RayState c;
        c.origin = q;
        c.dir = d_out;
        c.depth = r.depth + 1;
        c.l = r.l + hit.t;
        c.alpha = r.alpha;
        c.field = em::reflect_field(fi, fres, b.e_par_i, b.e_perp, b.e_par_o, b.e_perp);
        c.field_at = 0.0;
        c.sig = r.sig;
        c.sig.push_back({EventKind::Reflect, face.surface_id, 0});
        c.special_used = r.special_used;
        spawn(std::move(c));
    }
    // Tube splitting: a tube straddling a surface boundary also reflects off
    // the neighbouring surfaces it overlaps.
    const double tube = p.reception_scale * reception_radius(r.alpha, r.l + hit.t);
    for (std::size_t si = 0; si < m.surfaces.size(); ++si) {
        if (static_cast<int>(si) == face.surface_id) continue;
        const Surface& s = m.surfaces[si];
        const double den = dot(r.dir, s.normal);
        if (std::abs(den) < 1e-9) continue;
        const double t2 = dot(s.point - r.origin, s.normal) / den;
        if (!(t2 > kEps) || t2 < r.field_at || std::abs(t2 - hit.t) > 4.0 * tube) continue;
        const Vec3 q2 = r.origin + r.dir * t2;
        // Nearest point of the neighbour to where the ray meets its plane, and
        // its distance from the ray axis.
        Vec3 near_pt = q2;
        double best = std::numeric_limits<double>::infinity();
        for (int fi : s.faces) {
            const Vec3 cp = closest_point_on_triangle(m.faces[static_cast<std::size_t>(fi)], q2);
            const double dd = distance(cp, q2);
            if (dd < best) {
                best = dd;
                near_pt = cp;
            }
        }
        if (norm(cross(near_pt - r.origin, r.dir)) > p.reception_scale * reception_radius(r.alpha, r.l + t2)) continue;
        const Material& m2 = m.materials[s.material_id];
        const Vec3 d_out = reflect_dir(r.dir, s.normal);
        const double th2 = std::acos(std::clamp(std::abs(den), 0.0, 1.0));
        const auto fres = m2.pec ? em::pec_fresnel() : em::fresnel(th2, m.ambient_index, m2.refractive_index);
        const auto b = em::interface_basis(r.dir, s.normal, d_out);
        RayState c;
        c.origin = q2;
        c.dir = d_out;
        c.depth = r.depth + 1;
        c.l = r.l + t2;
        c.alpha = r.alpha;
        c.field = em::reflect_field(advance(r.field, t2 - r.field_at), fres, b.e_par_i, b.e_perp, b.e_par_o, b.e_perp);
        c.field_at = 0.0;
        c.sig = r.sig;
        c.sig.push_back({EventKind::Reflect, static_cast<int>(si), 0});
        c.special_used = r.special_used;
        // The part of the tube meeting the neighbour first may then reach this
        // surface: the corner's double reflection, launched from the hit point.
        if (r.depth + 2 <= p.max_depth) {
            const Vec3 d2 = reflect_dir(d_out, face.normal);
            const auto fres2 = mat.pec ? em::pec_fresnel() : em::fresnel(theta, m.ambient_index, mat.refractive_index);
            const auto b2 = em::interface_basis(d_out, face.normal, d2);
            RayState c2 = c;
            c2.origin = q;
            c2.dir = d2;
            c2.depth = r.depth + 2;
            c2.l = r.l + hit.t;
            c2.field = em::reflect_field(c.field, fres2, b2.e_par_i, b2.e_perp, b2.e_par_o, b2.e_perp);
            c2.sig.push_back({EventKind::Reflect, face.surface_id, 0});
            spawn(std::move(c2));
        }
        spawn(std::move(c));
    }
    if (!mat.pec) {
        const auto fres = em::thin_slab(theta, m.ambient_index, mat.refractive_index);
        const auto b = em::interface_basis(r.dir, face.normal, r.dir);
        RayState c;
        c.origin = q;
        c.dir = r.dir;
        c.depth = r.depth + 1;
        c.l = r.l + hit.t;
        c.alpha = r.alpha;
        c.field = em::transmit_field(fi, fres, b.e_par_i, b.e_perp, b.e_par_o, b.e_perp, mat.attenuation_db);
        c.field_at = 0.0;
        c.sig = r.sig;
        c.sig.push_back({EventKind::Transmit, face.surface_id, 0});
        c.special_used = r.special_used;
        spawn(std::move(c));
    }
}

// Keller-cone fan of diffracted rays for one winning request.
inline void spawn_fan(const SceneModel& m, const TraceParams& p, double lambda, const FanRequest& fr,
                      std::vector<RayState>& out) {
    const WedgeEdge& w = m.edges[static_cast<std::size_t>(fr.edge)];
    const RayState& r = fr.parent;
    const em::WedgeFrame frame{w.e, w.t_o, w.n_o, w.n};
    const double beta0 = angle_between(r.dir, w.e);
    const double sb = std::sin(beta0);
    if (sb < 1e-6) return;
    const double phi_p = em::wedge_azimuth(frame, -r.dir);
    if (!(phi_p > 0.0 && phi_p < w.n * kPi)) return;
    const em::FieldPhasor fi = advance(r.field, fr.t - r.field_at);
    const int count = std::max(1, static_cast<int>(std::ceil(w.n * kPi * sb / r.alpha)));
    const auto& mo = m.material_of_face(w.o_face);
    const auto& mn = m.material_of_face(w.n_face);
    const bool pec = mo.pec && mn.pec;
    for (int j = 0; j < count; ++j) {
        const double phi = (j + 0.5) * w.n * kPi / count;
        const Vec3 d = normalized(w.e * std::cos(beta0) + (w.t_o * std::cos(phi) + w.n_o * std::sin(phi)) * sb);
        em::WedgeKernelParams kp;
        kp.phi = phi;
        kp.phi_prime = phi_p;
        kp.beta0 = beta0;
        kp.n = w.n;
        kp.k = fi.k;
        kp.L_i = kp.L_ro = kp.L_rn = em::wedge_distance_parameter(fi.rho, 1.0, beta0);
        auto face_fres = [&](const Material& mat, double phi_from_face) {
            if (mat.pec) return em::pec_fresnel();
            const double th = std::clamp(kPi / 2.0 - phi_from_face, 0.0, kPi / 2.0 - 1e-12);
            return em::fresnel(th, m.ambient_index, mat.refractive_index);
        };
        const auto coeffs = em::wedge_diffraction_coeffs(kp, pec, face_fres(mo, phi_p), face_fres(mn, w.n * kPi - phi));
        RayState c;
        c.origin = fr.q;
        c.dir = d;
        c.depth = r.depth + 1;
        c.l = r.l + fr.t;
        c.alpha = r.alpha;
        c.field = em::wedge_diffract_field(fi, coeffs, w.e, r.dir, d, 1.0);
        c.field_at = 1.0;
        c.sig = fr.sig;
        c.sig.push_back({EventKind::Edge, fr.edge, 0});
        c.special_used = true;
        if (power_ahead(c, lambda) < p.min_power_dbm) continue;
        out.push_back(std::move(c));
    }
}

}  // namespace detail

struct TraceStats {
    std::size_t rays = 0;
    std::size_t candidates = 0;
    std::size_t records = 0;
    bool truncated = false;
};

/// Trace one transmitter against `receivers`. Records are ordered by
/// (receiver index, path signature) with at most one per pair.
inline std::vector<ReceptionRecord> trace(const SceneModel& m, const Antenna& tx, const std::vector<Vec3>& receivers,
                                          const TraceParams& p, TraceStats* stats = nullptr) {
    p.validate();
    const double lambda = tx.lambda();
    std::map<std::pair<int, PathSig>, double> best;
    std::vector<RayState> gen = launch(tx, p);
    TraceStats st;
    while (!gen.empty()) {
        st.rays += gen.size();
        std::vector<detail::RayOutput> outs(gen.size());
        detail::parallel_for(gen.size(), p.threads,
                             [&](std::size_t i) { detail::process_ray(m, receivers, p, lambda, gen[i], outs[i]); });
        std::vector<RayState> next;
        std::map<std::tuple<PathSig, int, std::int64_t>, const detail::FanRequest*> fans;
        std::set<std::pair<PathSig, int>> near;
        for (auto& o : outs) {
            for (auto& c : o.candidates) {
                auto key = std::pair{c.rx, std::move(c.sig)};
                auto it = best.find(key);
                if (it == best.end()) best.emplace(std::move(key), c.perp);
                else if (c.perp < it->second) it->second = c.perp;
            }
            for (auto& ch : o.children) next.push_back(std::move(ch));
            for (auto& nh : o.near_humans) near.insert(std::move(nh));
            for (const auto& f : o.fans) {
                auto key = std::tuple{f.sig, f.edge, f.bucket};
                auto it = fans.find(key);
                if (it == fans.end() || f.distance < it->second->distance) fans[key] = &f;
            }
        }
        for (const auto& [key, f] : fans) detail::spawn_fan(m, p, lambda, *f, next);
        for (const auto& [sig, h] : near) {
            for (const PathEvent ev : {PathEvent{EventKind::CylReflect, h, 0}, PathEvent{EventKind::CylDiffract, h, 1},
                                       PathEvent{EventKind::CylDiffract, h, -1}}) {
                PathSig s = sig;
                s.push_back(ev);
                for (std::size_t rx = 0; rx < receivers.size(); ++rx)
                    best.emplace(std::pair{static_cast<int>(rx), s}, std::numeric_limits<double>::infinity());
            }
        }
        if (next.size() > p.max_rays_per_generation) {
            next.resize(p.max_rays_per_generation);
            st.truncated = true;
        }
        gen = std::move(next);
    }
    // Exact field per distinct (receiver, signature).
    std::vector<std::pair<const std::pair<int, PathSig>*, double>> keys;
    keys.reserve(best.size());
    for (const auto& [key, perp] : best) keys.push_back({&key, perp});
    std::vector<std::optional<ReceptionRecord>> solved(keys.size());
    const PathOptions opt = p.path_options();
    detail::parallel_for(keys.size(), p.threads, [&](std::size_t i) {
        const auto& [rx, sig] = *keys[i].first;
        if (static_cast<int>(sig.size()) > p.max_depth) return;
        if (auto path = solve_path(m, tx, sig, receivers[static_cast<std::size_t>(rx)], opt)) {
            ReceptionRecord rec;
            rec.receiver_id = rx;
            rec.sig = sig;
            rec.field = path->E;
            rec.distance = path->length;
            rec.arrival = path->arrival;
            rec.perp = keys[i].second;
            solved[i] = std::move(rec);
        }
    });
    std::vector<ReceptionRecord> records;
    for (auto& r : solved)
        if (r) records.push_back(std::move(*r));
    st.candidates = keys.size();
    st.records = records.size();
    if (stats) *stats = st;
    return records;
}

/// Combined received power (dBm) of the records of one receiver.
inline double received_power(const std::vector<ReceptionRecord>& records, const Antenna& rx, bool coherent = true,
                             double noise_floor_dbm = em::kDefaultNoiseFloorDbm) {
    if (records.empty()) return noise_floor_dbm;
    CVec3 sum;
    double power = 0.0;
    for (const auto& r : records) {
        const CVec3 e = r.field * std::sqrt(rx.gain(-r.arrival));
        sum += e;
        power += norm_sq(e);
    }
    if (coherent) return em::field_to_power(sum, 1.0, rx.lambda(), noise_floor_dbm);
    return em::field_to_power(CVec3{std::sqrt(power), 0.0, 0.0}, 1.0, rx.lambda(), noise_floor_dbm);
}

/// Split records by receiver index (records must come from one trace).
inline std::vector<std::vector<ReceptionRecord>> records_by_receiver(const std::vector<ReceptionRecord>& records,
                                                                     std::size_t n_receivers) {
    std::vector<std::vector<ReceptionRecord>> out(n_receivers);
    for (const auto& r : records) out[static_cast<std::size_t>(r.receiver_id)].push_back(r);
    return out;
}

}  // namespace rfmap
