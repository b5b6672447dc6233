#pragma once

// Field kernels: GO propagation, Fresnel reflection and transmission, UTD wedge
// diffraction, UTD reflection and creeping-wave diffraction on a circular
// cylinder, and the field-to-power conversion at a receiver.

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <utility>

#include "rfmap/special.hpp"
#include "rfmap/vec.hpp"

namespace rfmap::em {

using special::expj;
using special::kJ;

inline constexpr double kSpeedOfLight = 2.99792458e8;
inline constexpr double kEta0 = 376.730313668;
inline constexpr double kDefaultNoiseFloorDbm = -100.0;

inline double wavelength(double frequency_hz) { return kSpeedOfLight / frequency_hz; }
inline double wavenumber(double frequency_hz) { return 2.0 * kPi / wavelength(frequency_hz); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Free-space |E| (V/m) at 1 m from a source radiating `power_mw` with linear gain `gain`.
inline double launch_amplitude(double power_mw, double gain) {
    return std::sqrt(kEta0 * power_mw * 1e-3 * gain / (2.0 * kPi));
}

/// Field on a ray tube at a reference point. `rho` and `rho2` are the principal
/// radii of curvature there; they are equal for a spherical wavefront.
struct FieldPhasor {
    CVec3 E;
    double rho = 0.0;
    double rho2 = 0.0;
    double k = 0.0;

    static FieldPhasor spherical(const CVec3& e, double rho, double k) { return {e, rho, rho, k}; }
    bool is_spherical() const { return rho == rho2; }
};

/// Carry the field a distance `s` along the ray.
inline FieldPhasor propagate(const FieldPhasor& f, double s) {
    if (s < 0.0) throw std::domain_error("propagate: s must be >= 0");
    if (f.rho + s <= 0.0 || f.rho2 + s <= 0.0) throw std::domain_error("propagate: degenerate source (rho = s = 0)");
    double spread;
    if (f.is_spherical()) {
        spread = f.rho / (f.rho + s);
    } else {
        spread = std::sqrt(f.rho * f.rho2 / ((f.rho + s) * (f.rho2 + s)));
    }
    FieldPhasor out = f;
    out.E = f.E * (spread * expj(-f.k * s));
    out.rho = f.rho + s;
    out.rho2 = f.rho2 + s;
    return out;
}

// ---------------------------------------------------------------------------
// Planar interfaces
// ---------------------------------------------------------------------------

/// Refraction angle, or nullopt on total internal reflection.
inline std::optional<double> snell(double theta_i, double n1, double n2) {
    const double st = n1 * std::sin(theta_i) / n2;
    if (st > 1.0) return std::nullopt;
    return std::asin(st);
}

struct FresnelSet {
    cdouble gamma_perp, gamma_par;
    cdouble t_perp, t_par;
    std::optional<double> theta_t;  ///< empty on total internal reflection

    bool total_internal() const { return !theta_t.has_value(); }
};

/// Lossless dielectric interface, field convention e_perp = s x n, e_par = e_perp x s.
inline FresnelSet fresnel(double theta_i, double n1, double n2) {
    const double ci = std::cos(theta_i);
    const auto tt = snell(theta_i, n1, n2);
    FresnelSet out;
    out.theta_t = tt;
    if (!tt) {
        const double st = n1 * std::sin(theta_i) / n2;
        const cdouble ct(0.0, -std::sqrt(st * st - 1.0));
        out.gamma_perp = (n1 * ci - n2 * ct) / (n1 * ci + n2 * ct);
        out.gamma_par = (n2 * ci - n1 * ct) / (n2 * ci + n1 * ct);
        out.t_perp = out.t_par = 0.0;
        return out;
    }
    const double ct = std::cos(*tt);
    out.gamma_perp = (n1 * ci - n2 * ct) / (n1 * ci + n2 * ct);
    out.t_perp = 2.0 * n1 * ci / (n1 * ci + n2 * ct);
    out.gamma_par = (n2 * ci - n1 * ct) / (n2 * ci + n1 * ct);
    out.t_par = 2.0 * n1 * ci / (n2 * ci + n1 * ct);
    return out;
}

/// Perfect conductor: tangential E cancels on the surface.
inline FresnelSet pec_fresnel() { return {-1.0, 1.0, 0.0, 0.0, std::nullopt}; }

/// A wall as a thin slab: reflection off the front interface, transmission
/// through both interfaces with no lateral offset.
inline FresnelSet thin_slab(double theta_i, double n_out, double n_in) {
    FresnelSet front = fresnel(theta_i, n_out, n_in);
    if (front.total_internal()) return front;
    const FresnelSet back = fresnel(*front.theta_t, n_in, n_out);
    front.t_perp *= back.t_perp;
    front.t_par *= back.t_par;
    return front;
}

/// Polarization basis at a planar interaction.
struct InterfaceBasis {
    Vec3 e_perp;   ///< normal to the plane of incidence, shared by both rays
    Vec3 e_par_i;  ///< in the plane of incidence, transverse to the incident ray
    Vec3 e_par_o;  ///< in the plane of incidence, transverse to the outgoing ray
};

inline InterfaceBasis interface_basis(const Vec3& s_in, const Vec3& normal, const Vec3& s_out) {
    Vec3 perp = cross(s_in, normal);
    if (norm(perp) < 1e-12) perp = any_orthogonal(s_in);  // normal incidence
    perp = normalized(perp);
    return {perp, cross(perp, s_in), cross(perp, s_out)};
}

inline FieldPhasor reflect_field(const FieldPhasor& f, const FresnelSet& fres, const Vec3& e_par_i,
                                 const Vec3& e_perp_i, const Vec3& e_par_r, const Vec3& e_perp_r) {
    FieldPhasor out = f;
    out.E = e_par_r * (dot(f.E, e_par_i) * fres.gamma_par) + e_perp_r * (dot(f.E, e_perp_i) * fres.gamma_perp);
    return out;
}

inline FieldPhasor transmit_field(const FieldPhasor& f, const FresnelSet& fres, const Vec3& e_par_i,
                                  const Vec3& e_perp_i, const Vec3& e_par_t, const Vec3& e_perp_t,
                                  double attenuation_db = 0.0) {
    FieldPhasor out = f;
    const double loss = std::pow(10.0, -attenuation_db / 20.0);
    out.E = (e_par_t * (dot(f.E, e_par_i) * fres.t_par) + e_perp_t * (dot(f.E, e_perp_i) * fres.t_perp)) * loss;
    return out;
}

// ---------------------------------------------------------------------------
// Wedge diffraction
// ---------------------------------------------------------------------------

struct WedgeKernelParams {
    double phi = 0.0;        ///< observation azimuth from the o-face
    double phi_prime = 0.0;  ///< source azimuth from the o-face
    double beta0 = kPi / 2;  ///< angle between incident ray and edge
    double n = 2.0;          ///< wedge number
    double L_i = 1.0, L_ro = 1.0, L_rn = 1.0;
    double k = 1.0;
};

struct WedgeCoeffs {
    cdouble D_s, D_h;
};

/// Local edge frame: e = t_o x n_o, azimuth measured from the o-face tangent.
struct WedgeFrame {
    Vec3 e, t_o, n_o;
    double n = 2.0;
};

/// Azimuth of direction `v` about the edge, in [0, 2 pi).
inline double wedge_azimuth(const WedgeFrame& w, const Vec3& v) {
    double phi = std::atan2(dot(v, w.n_o), dot(v, w.t_o));
    if (phi < 0.0) phi += 2.0 * kPi;
    return phi;
}

/// Distance parameter for spherical incidence on a straight edge.
inline double wedge_distance_parameter(double s_i, double s, double beta0) {
    const double sb = std::sin(beta0);
    return s * s_i * sb * sb / (s + s_i);
}

namespace detail {

// Integer N minimizing |2 pi n N - (beta + sign pi)|, ties toward the smaller one.
inline int wedge_n_index(double beta, double n, int sign) {
    const double x = (beta + sign * kPi) / (2.0 * kPi * n);
    return static_cast<int>(std::ceil(x - 0.5));
}

// cot((pi + sign beta)/(2n)) F(k L a^sign(beta)), with the finite limit on the boundary.
inline cdouble wedge_term(int sign, double beta, double n, double kL) {
    const int N = wedge_n_index(beta, n, sign);
    const double eps = kPi + sign * beta - sign * 2.0 * kPi * n * N;
    if (std::abs(eps) < 1e-9) {
        const double sgn = eps >= 0.0 ? 1.0 : -1.0;
        return n * (std::sqrt(2.0 * kPi * kL) * sgn - 2.0 * kL * eps * expj(kPi / 4.0)) * expj(kPi / 4.0);
    }
    const double c = std::cos((2.0 * n * kPi * N - beta) / 2.0);
    const double a = 2.0 * c * c;
    return (1.0 / std::tan((kPi + sign * beta) / (2.0 * n))) * special::transition_function(kL * a);
}

}  // namespace detail

inline WedgeCoeffs wedge_diffraction_coeffs(const WedgeKernelParams& p, bool pec, const FresnelSet& fres_o,
                                            const FresnelSet& fres_n) {
    const double sb = std::sin(p.beta0);
    if (!(p.beta0 > 0.0 && p.beta0 < kPi) || std::abs(sb) < 1e-12)
        throw std::domain_error("wedge_diffraction_coeffs: ray parallel to edge");
    const cdouble pref = -expj(-kPi / 4.0) / (2.0 * p.n * std::sqrt(2.0 * kPi * p.k) * sb);
    const double bm = p.phi - p.phi_prime;
    const double bp = p.phi + p.phi_prime;
    const cdouble d1 = pref * detail::wedge_term(+1, bm, p.n, p.k * p.L_i);
    const cdouble d2 = pref * detail::wedge_term(-1, bm, p.n, p.k * p.L_i);
    const cdouble d3 = pref * detail::wedge_term(+1, bp, p.n, p.k * p.L_rn);
    const cdouble d4 = pref * detail::wedge_term(-1, bp, p.n, p.k * p.L_ro);
    if (pec) return {d1 + d2 - (d3 + d4), d1 + d2 + (d3 + d4)};
    // Soft pairs with the perpendicular coefficients, hard with the parallel ones,
    // so a conducting face reproduces R_s = -1, R_h = +1.
    return {d1 + d2 + fres_n.gamma_perp * d3 + fres_o.gamma_perp * d4,
            d1 + d2 + fres_n.gamma_par * d3 + fres_o.gamma_par * d4};
}

/// Diffracted field at distance `s` from the edge. `f` is the incident field at the
/// diffraction point, `s_in` the incident and `s_out` the diffracted direction.
inline FieldPhasor wedge_diffract_field(const FieldPhasor& f, const WedgeCoeffs& d, const Vec3& edge_dir,
                                        const Vec3& s_in, const Vec3& s_out, double s) {
    const Vec3 phi_i = normalized(cross(edge_dir, s_in)) * -1.0;
    const Vec3 beta_i = cross(s_in, phi_i);
    const Vec3 phi_d = normalized(cross(edge_dir, s_out));
    const Vec3 beta_d = cross(s_out, phi_d);
    const double rho = f.rho;
    const double spread = std::sqrt(rho / (s * (rho + s)));
    FieldPhasor out;
    out.k = f.k;
    out.E = (beta_d * (-d.D_s * dot(f.E, beta_i)) + phi_d * (-d.D_h * dot(f.E, phi_i))) * (spread * expj(-f.k * s));
    out.rho = rho + s;
    out.rho2 = s;  // caustic on the edge
    return out;
}

// ---------------------------------------------------------------------------
// Circular cylinder (human body model)
// ---------------------------------------------------------------------------

struct CylinderKernelParams {
    double theta_i = 0.0;  ///< incidence angle from the surface normal (reflection)
    double xi = 0.0;       ///< Fock parameter
    double X = 0.0;        ///< transition-function argument
    double m_Q = 1.0;      ///< curvature parameter
    double L = 0.0;        ///< distance parameter
    double t_creep = 0.0;  ///< creeping distance (diffraction)
    double alpha_p = 0.0;  ///< angle between principal plane and plane of incidence
    double k = 1.0;
    double radius = 0.15;
    double rho1_r = 0.0, rho2_r = 0.0;  ///< outgoing wavefront radii at the surface point
};

struct CylinderCoeffs {
    cdouble soft, hard;
};

/// Angle between the principal plane and the plane of incidence, from the incident
/// direction and the principal directions (u1 circumferential, u2 along the axis).
inline double cylinder_alpha_p(const Vec3& s_in, const Vec3& u1, const Vec3& u2) {
    const double t1 = -dot(s_in, u1);
    const double t2 = -dot(s_in, u2);
    if (std::abs(t2) < 1e-15) return kPi / 2.0;
    return std::abs(std::atan(t1 / t2));
}

inline double curvature_parameter(double k, double a_t) { return std::cbrt(k * a_t / 2.0); }

/// Reflection parameters for spherical incidence (rho_i = s_i) at angle theta_i.
inline CylinderKernelParams cylinder_reflection_params(double k, double radius, double theta_i, double alpha_p,
                                                       double s_i, double s_r) {
    CylinderKernelParams p;
    p.k = k;
    p.radius = radius;
    p.alpha_p = alpha_p;
    const double ci = std::max(std::cos(theta_i), 1e-12);
    p.theta_i = theta_i;
    const double sa = std::sin(alpha_p), ca = std::cos(alpha_p);
    const double sin2_t2 = sa * sa + ca * ca * ci * ci;
    // Surface curvature in the plane of incidence.
    const double a_t = radius / std::max(sa * sa, 1e-12);
    p.m_Q = curvature_parameter(k, a_t);
    p.xi = -2.0 * p.m_Q * ci;
    // Focal lengths of a cylinder (a2 -> infinity): one finite, one infinite.
    p.rho1_r = 1.0 / (1.0 / s_i + 2.0 * sin2_t2 / (radius * ci));
    p.rho2_r = s_i;
    const double rho_i = s_i;
    p.L = rho_i * rho_i / ((rho_i + s_r) * (rho_i + s_r)) * s_r * (p.rho2_r + s_r) / p.rho2_r;
    p.X = 2.0 * k * p.L * ci * ci;
    return p;
}

/// Creeping-wave parameters. `cos2_gamma` is cos^2 of the helix angle of the
/// geodesic (1 for a path in the cross-section plane).
inline CylinderKernelParams cylinder_diffraction_params(double k, double radius, double t_creep, double cos2_gamma,
                                                        double s_i, double s_r) {
    CylinderKernelParams p;
    p.k = k;
    p.radius = radius;
    p.t_creep = t_creep;
    const double a_t = radius / std::max(cos2_gamma, 1e-12);
    p.m_Q = curvature_parameter(k, a_t);
    p.xi = p.m_Q * t_creep / a_t;
    p.L = s_r * s_i / (s_r + s_i);
    p.X = k * p.L * p.xi * p.xi / (2.0 * p.m_Q * p.m_Q);
    p.rho1_r = s_i + t_creep;
    p.rho2_r = 0.0;
    return p;
}

namespace detail {

// Bracket -F(X)/(2 xi sqrt(pi)) + Fock, with the xi -> 0 limit of the first term.
inline cdouble cylinder_bracket(double xi, double X, cdouble fock, double sqrt_x_over_xi) {
    const double sqrt_pi = std::sqrt(kPi);
    if (std::abs(xi) < 1e-12) return -sqrt_x_over_xi * expj(kPi / 4.0) / 2.0 + fock;
    return -special::transition_function(X) / (2.0 * xi * sqrt_pi) + fock;
}

}  // namespace detail

inline CylinderCoeffs cylinder_reflection_coeffs(const CylinderKernelParams& p) {
    const double xi = std::min(p.xi, -1e-12);
    const auto fock = special::fock_functions(xi);
    const cdouble pref = -std::sqrt(-4.0 / xi) * expj(-kPi / 4.0) * expj(-xi * xi * xi / 12.0);
    const double lim = std::sqrt(2.0 * p.k * p.L) / (-2.0 * p.m_Q);
    return {pref * detail::cylinder_bracket(xi, p.X, fock.p_star, lim),
            pref * detail::cylinder_bracket(xi, p.X, fock.q_star, lim)};
}

inline CylinderCoeffs cylinder_diffraction_coeffs(const CylinderKernelParams& p) {
    const auto fock = special::fock_functions(p.xi);
    const cdouble pref = -p.m_Q * std::sqrt(2.0 / p.k) * expj(-kPi / 4.0) * expj(-p.k * p.t_creep);
    const double lim = std::sqrt(p.k * p.L / 2.0) / p.m_Q;
    return {pref * detail::cylinder_bracket(p.xi, p.X, fock.p_star, lim),
            pref * detail::cylinder_bracket(p.xi, p.X, fock.q_star, lim)};
}

/// Reflected field at distance `s_r` from the reflection point. `f` is the incident
/// field there; the basis is the planar one at the tangent plane. Soft acts on the
/// component normal to the plane of incidence unless `swap_soft_hard`.
inline FieldPhasor cylinder_reflect(const FieldPhasor& f, const CylinderKernelParams& p, double s_r,
                                    const InterfaceBasis& basis, bool swap_soft_hard = false) {
    const CylinderCoeffs r = cylinder_reflection_coeffs(p);
    const cdouble r_perp = swap_soft_hard ? r.hard : r.soft;
    const cdouble r_par = swap_soft_hard ? r.soft : r.hard;
    const double spread = std::sqrt(p.rho1_r * p.rho2_r / ((p.rho1_r + s_r) * (p.rho2_r + s_r)));
    FieldPhasor out;
    out.k = f.k;
    out.E = (basis.e_par_o * (dot(f.E, basis.e_par_i) * r_par) + basis.e_perp * (dot(f.E, basis.e_perp) * r_perp)) *
            (spread * expj(-f.k * s_r));
    if (!std::isfinite(norm(out.E))) throw std::runtime_error("cylinder_reflect: non-finite field");
    out.rho = p.rho1_r + s_r;
    out.rho2 = p.rho2_r + s_r;
    return out;
}

/// Creeping-wave field at distance `s_r` past the detachment point. `f` is the
/// incident field at attachment; (b1, n1) and (b2, n2) are the binormal and
/// outward normal at attachment and detachment.
inline FieldPhasor cylinder_diffract(const FieldPhasor& f, const CylinderKernelParams& p, double s_r,
                                     const Vec3& b1, const Vec3& n1, const Vec3& b2, const Vec3& n2,
                                     bool swap_soft_hard = false) {
    if (s_r <= 0.0) throw std::domain_error("cylinder_diffract: observation point on or inside the cylinder");
    const CylinderCoeffs t = cylinder_diffraction_coeffs(p);
    const cdouble t_b = swap_soft_hard ? t.hard : t.soft;
    const cdouble t_n = swap_soft_hard ? t.soft : t.hard;
    const double rho_i = f.rho;
    const double ec = std::sqrt(rho_i / (rho_i + p.t_creep));
    const double rho_d = rho_i + p.t_creep;
    const double spread = std::sqrt(rho_d / (s_r * (rho_d + s_r)));
    FieldPhasor out;
    out.k = f.k;
    out.E = (b2 * (dot(f.E, b1) * t_b) + n2 * (dot(f.E, n1) * t_n)) * (ec * spread * expj(-f.k * s_r));
    if (!std::isfinite(norm(out.E))) throw std::runtime_error("cylinder_diffract: non-finite field");
    out.rho = rho_d + s_r;
    out.rho2 = s_r;
    return out;
}

// ---------------------------------------------------------------------------
// Receiver
// ---------------------------------------------------------------------------

/// Received power (dBm) of a summed field through an antenna of linear gain `gain_rx`.
/// Values below the noise floor are reported as the floor.
inline double field_to_power(const CVec3& e_sum, double gain_rx, double lambda,
                             double noise_floor_dbm = kDefaultNoiseFloorDbm) {
    if (!(lambda > 0.0) || !(gain_rx > 0.0)) throw std::domain_error("field_to_power: lambda and gain must be > 0");
    const double e2 = norm_sq(e_sum);
    if (e2 == 0.0) return noise_floor_dbm;
    const double p_w = e2 / (2.0 * kEta0) * (lambda * lambda * gain_rx / (4.0 * kPi));
    const double dbm = 10.0 * std::log10(p_w / 1e-3);
    return std::max(dbm, noise_floor_dbm);
}

/// Log-distance path loss.
inline double baseline_loss(double p_d0_dbm, double d, double d0, double n_exp) {
    if (!(d > 0.0) || !(d0 > 0.0)) throw std::domain_error("baseline_loss: distances must be > 0");
    return p_d0_dbm - 10.0 * n_exp * std::log10(d / d0);
}

/// Friis free-space received power (dBm).
inline double friis_dbm(double pt_mw, double gt, double gr, double lambda, double d) {
    const double pr = pt_mw * gt * gr * std::pow(lambda / (4.0 * kPi * d), 2.0);
    return 10.0 * std::log10(pr);
}

}  // namespace rfmap::em
