#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include <boost/math/special_functions/airy.hpp>

#include "fixtures.hpp"
#include "rfmap/em.hpp"

using namespace rfmap;
using namespace rfmap::em;

namespace {

constexpr double kDeg = kPi / 180.0;

FieldPhasor spherical_field(const CVec3& E, double rho, double k) {
    FieldPhasor f;
    f.E = E;
    f.rho = f.rho2 = rho;
    f.k = k;
    return f;
}

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    return normalized(Vec3{g(rng), g(rng), g(rng)});
}

// PEC mirror by image theory: tangential components flip, normal component kept.
CVec3 pec_image(const CVec3& E, const Vec3& n) {
    const cdouble en = dot(E, n);
    return n * (2.0 * en) - E;
}

double cdist(const CVec3& a, const CVec3& b) { return norm(a - b); }

}  // namespace

TEST(Propagate, SphericalSpreadAndPhase) {
    const FieldPhasor f = spherical_field(CVec3(Vec3{0, 0, 1}), 1.0, kPi);
    const FieldPhasor g = propagate(f, 1.0);
    EXPECT_NEAR(std::abs(g.E.z), 0.5, 1e-15);
    // Phase -k s = -pi.
    EXPECT_LT(std::abs(g.E.z - cdouble(-0.5, 0.0)), 1e-15);
    EXPECT_NEAR(g.rho, 2.0, 0.0);
}

TEST(Propagate, Composable) {
    const FieldPhasor f = spherical_field(CVec3(Vec3{1, 0, 0}) * cdouble(0.3, -0.2), 0.7, 50.0);
    for (double s1 : {0.1, 1.3, 4.0})
        for (double s2 : {0.2, 2.5}) {
            const CVec3 a = propagate(propagate(f, s1), s2).E;
            const CVec3 b = propagate(f, s1 + s2).E;
            EXPECT_LT(cdist(a, b) / norm(b), 1e-10);
        }
}

TEST(Propagate, AstigmaticAndCaustic) {
    FieldPhasor f = spherical_field(CVec3(Vec3{0, 1, 0}), 2.0, 1.0);
    f.rho2 = 0.5;
    const double s = 1.5;
    EXPECT_NEAR(std::abs(propagate(f, s).E.y), std::sqrt(2.0 * 0.5 / (3.5 * 2.0)), 1e-14);
    EXPECT_THROW(propagate(f, -1.0), std::domain_error);
}

TEST(Snell, RefractionAndTotalInternal) {
    const auto t = snell(30.0 * kDeg, 1.0, 1.5);
    ASSERT_TRUE(t);
    EXPECT_NEAR(*t / kDeg, 19.4712, 1e-4);
    EXPECT_FALSE(snell(60.0 * kDeg, 1.5, 1.0));
    EXPECT_TRUE(fresnel(60.0 * kDeg, 1.5, 1.0).total_internal());
}

TEST(Fresnel, NormalIncidence) {
    const FresnelSet f = fresnel(0.0, 1.0, 2.0);
    EXPECT_NEAR(f.gamma_perp.real(), -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(f.t_perp.real(), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(std::abs(f.gamma_par), 1.0 / 3.0, 1e-15);
}

TEST(Fresnel, GrazingIsTotal) {
    const FresnelSet f = fresnel(89.999 * kDeg, 1.0, 2.5);
    EXPECT_GT(std::abs(f.gamma_perp), 0.999);
    EXPECT_GT(std::abs(f.gamma_par), 0.999);
}

TEST(Fresnel, ContinuityProperty) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(0.0, 89.0 * kDeg), idx(1.0, 4.0);
    for (int i = 0; i < 500; ++i) {
        const double n1 = idx(rng), n2 = idx(rng), th = ang(rng);
        const FresnelSet f = fresnel(th, n1, n2);
        if (f.total_internal()) continue;
        EXPECT_LT(std::abs(1.0 + f.gamma_perp - f.t_perp), 1e-12);
        // Parallel: n2 T_par = n1 (1 + Gamma_par) for this sign convention.
        EXPECT_LT(std::abs(n1 * (1.0 + f.gamma_par) - n2 * f.t_par), 1e-12);
    }
}

TEST(Fresnel, ThinSlabNormalIncidence) {
    const FresnelSet f = thin_slab(0.0, 1.0, 2.0);
    EXPECT_NEAR(f.t_perp.real(), 8.0 / 9.0, 1e-15);
    EXPECT_NEAR(f.gamma_perp.real(), -1.0 / 3.0, 1e-15);
}

TEST(Reflection, PecMatchesImageTheoryOverThreeBounces) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Vec3 s = random_unit(rng);
        CVec3 E = CVec3(normalized(cross(s, random_unit(rng)))) * cdouble(0.8, 0.3) +
                  CVec3(normalized(cross(s, cross(s, random_unit(rng))))) * cdouble(-0.1, 0.5);
        // Strip any longitudinal residue so the field is transverse.
        E = E - CVec3(s) * dot(E, s);
        FieldPhasor f = spherical_field(E, 1.0, 10.0);
        CVec3 oracle = E;
        for (int b = 0; b < 3; ++b) {
            Vec3 n = random_unit(rng);
            if (dot(n, s) > 0.0) n = -n;
            const Vec3 r = reflect_dir(s, n);
            const InterfaceBasis ib = interface_basis(s, n, r);
            f = reflect_field(f, pec_fresnel(), ib.e_par_i, ib.e_perp, ib.e_par_o, ib.e_perp);
            oracle = pec_image(oracle, n);
            s = r;
        }
        EXPECT_LT(cdist(f.E, oracle), 1e-12 * norm(E));
        EXPECT_NEAR(norm(f.E), norm(E), 1e-12);
        EXPECT_LT(std::abs(dot(f.E, s)), 1e-9 * norm(f.E));
    }
}

TEST(Transmission, AttenuationScalesField) {
    const Vec3 s{1, 0, 0}, n{-1, 0, 0};
    const InterfaceBasis ib = interface_basis(s, n, s);
    const FieldPhasor f = spherical_field(CVec3(Vec3{0, 0, 1}), 1.0, 1.0);
    const FresnelSet unity{0.0, 0.0, 1.0, 1.0, 0.0};
    const FieldPhasor a = transmit_field(f, unity, ib.e_par_i, ib.e_perp, ib.e_par_o, ib.e_perp, 0.0);
    const FieldPhasor b = transmit_field(f, unity, ib.e_par_i, ib.e_perp, ib.e_par_o, ib.e_perp, 6.0);
    EXPECT_NEAR(norm(b.E) / norm(a.E), std::pow(10.0, -6.0 / 20.0), 1e-15);
    EXPECT_NEAR(norm(b.E) / norm(a.E), 0.5, 2e-3);
}

TEST(Wedge, HalfPlaneMatchesFrozenScriptValues) {
    // Independent evaluation with scipy.special.fresnel at n=2, phi'=60 deg, phi=200 deg, kL=100.
    WedgeKernelParams p;
    p.n = 2.0;
    p.phi_prime = 60.0 * kDeg;
    p.phi = 200.0 * kDeg;
    p.k = 50.0;
    p.L_i = p.L_ro = p.L_rn = 2.0;
    const auto d = wedge_diffraction_coeffs(p, true, pec_fresnel(), pec_fresnel());
    EXPECT_LT(std::abs(d.D_s - cdouble(-0.0906973435440844, 0.08784578956671156)), 1e-8);
    EXPECT_LT(std::abs(d.D_h - cdouble(-0.028264423626510455, 0.026163523234820168)), 1e-8);
}

TEST(Wedge, HalfPlaneConvergesToKeller) {
    WedgeKernelParams p;
    p.n = 2.0;
    p.phi_prime = 60.0 * kDeg;
    p.phi = 200.0 * kDeg;
    p.L_i = p.L_ro = p.L_rn = 2.0;
    // At kL=100 the point is 40 deg from the incident shadow boundary and F(23.4)
    // still differs from 1 by about 2%; the deviation falls as 1/kL.
    double prev = 1.0;
    for (double kL : {100.0, 1000.0, 10000.0}) {
        p.k = kL / p.L_i;
        const auto d = wedge_diffraction_coeffs(p, true, pec_fresnel(), pec_fresnel());
        const cdouble pref = -expj(-kPi / 4.0) / (2.0 * std::sqrt(2.0 * kPi * p.k));
        const double sm = 1.0 / std::cos((p.phi - p.phi_prime) / 2.0);
        const double sp = 1.0 / std::cos((p.phi + p.phi_prime) / 2.0);
        const double err = std::abs(d.D_s - pref * (sm - sp)) / std::abs(pref * (sm - sp));
        EXPECT_LT(err, 0.02);
        if (kL > 100.0) {
            EXPECT_NEAR(prev / err, 10.0, 0.1);
        }
        if (kL >= 1000.0) {
            EXPECT_LT(err, 0.01);
        }
        prev = err;
    }
}

TEST(Wedge, PecSoftVanishesOnBothFaces) {
    for (double n : {1.5, 2.0, 1.75})
        for (double phip : {20.0, 45.0, 70.0}) {
            WedgeKernelParams p;
            p.n = n;
            p.phi_prime = phip * kDeg;
            p.k = 50.0;
            p.L_i = p.L_ro = p.L_rn = 1.3;
            for (double phi : {0.0, n * kPi}) {
                p.phi = phi;
                const auto d = wedge_diffraction_coeffs(p, true, pec_fresnel(), pec_fresnel());
                EXPECT_LT(std::abs(d.D_s), 1e-12 * std::abs(d.D_h)) << "n=" << n << " phi'=" << phip;
            }
        }
}

TEST(Wedge, ReciprocalUnderSourceObserverSwap) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    for (int i = 0; i < 200; ++i) {
        WedgeKernelParams p;
        p.n = 1.0 + u(rng);
        p.phi = u(rng) * p.n * kPi;
        p.phi_prime = u(rng) * p.n * kPi;
        p.beta0 = (0.2 + 0.6 * u(rng)) * kPi;
        p.k = 50.0;
        p.L_i = p.L_ro = p.L_rn = 0.5 + u(rng);
        auto q = p;
        std::swap(q.phi, q.phi_prime);
        const FresnelSet fo = fresnel(0.7, 1.0, 2.0), fn = fresnel(0.3, 1.0, 2.0);
        const auto a = wedge_diffraction_coeffs(p, false, fo, fn);
        const auto b = wedge_diffraction_coeffs(q, false, fo, fn);
        EXPECT_NEAR(std::abs(a.D_s), std::abs(b.D_s), 1e-12 * std::abs(a.D_s) + 1e-15);
        EXPECT_NEAR(std::abs(a.D_h), std::abs(b.D_h), 1e-12 * std::abs(a.D_h) + 1e-15);
    }
}

TEST(Wedge, NIndexTieBreaksLow) {
    // (beta + sign pi) / (2 pi n) = 0.5 and 1.5 are ties.
    EXPECT_EQ(em::detail::wedge_n_index(0.0, 1.0, +1), 0);
    EXPECT_EQ(em::detail::wedge_n_index(2.0 * kPi, 1.0, +1), 1);
    EXPECT_EQ(em::detail::wedge_n_index(3.0 * kPi, 1.0, +1), 2);
    EXPECT_EQ(em::detail::wedge_n_index(-3.0 * kPi, 1.0, -1), -2);
}

TEST(Wedge, RejectsRayAlongEdge) {
    WedgeKernelParams p;
    p.beta0 = 0.0;
    EXPECT_THROW(wedge_diffraction_coeffs(p, true, pec_fresnel(), pec_fresnel()), std::domain_error);
}

TEST(Wedge, DistanceParameter) {
    EXPECT_NEAR(wedge_distance_parameter(2.0, 2.0, kPi / 2.0), 1.0, 1e-15);
    EXPECT_NEAR(wedge_distance_parameter(2.0, 2.0, kPi / 6.0), 0.25, 1e-15);
}

TEST(Cylinder, AlphaP) {
    const Vec3 u1{0, 1, 0}, u2{0, 0, 1};
    // Incidence in the cross-section plane lies in the circumferential principal plane.
    EXPECT_NEAR(cylinder_alpha_p(normalized(Vec3{-1, -0.3, 0}), u1, u2), kPi / 2.0, 1e-12);
    EXPECT_NEAR(cylinder_alpha_p(normalized(Vec3{-1, -1, -1}), u1, u2), kPi / 4.0, 1e-12);
}

TEST(Cylinder, DeepLitLimitIsGeometricOptics) {
    const double k = 50.0, a = 0.5;  // ka = 25
    const double s_i = 3.0, s_r = 2.0;
    const auto p = cylinder_reflection_params(k, a, 0.0, kPi / 2.0, s_i, s_r);
    const auto r = cylinder_reflection_coeffs(p);
    EXPECT_LT(std::abs(r.soft + 1.0), 0.05);
    EXPECT_LT(std::abs(r.hard - 1.0), 0.05);

    // GO oracle for a convex cylinder at normal incidence.
    const double rho1 = 1.0 / (1.0 / s_i + 2.0 / a), rho2 = s_i;
    const double go = std::sqrt(rho1 * rho2 / ((rho1 + s_r) * (rho2 + s_r)));
    const Vec3 s_in{-1, 0, 0}, n{1, 0, 0};
    const InterfaceBasis ib = interface_basis(s_in, n, reflect_dir(s_in, n));
    for (const Vec3& pol : {Vec3{0, 0, 1}, Vec3{0, 1, 0}}) {
        const FieldPhasor f = spherical_field(CVec3(pol), s_i, k);
        const FieldPhasor out = cylinder_reflect(f, p, s_r, ib);
        EXPECT_NEAR(norm(out.E) / go, 1.0, 0.05);
    }
}

TEST(Cylinder, SpreadReducesForEqualRadii) {
    CylinderKernelParams p = cylinder_reflection_params(50.0, 0.5, 0.0, kPi / 2.0, 3.0, 2.0);
    p.rho1_r = p.rho2_r = 1.7;
    const Vec3 s_in{-1, 0, 0}, n{1, 0, 0};
    const InterfaceBasis ib = interface_basis(s_in, n, reflect_dir(s_in, n));
    const FieldPhasor f = spherical_field(CVec3(Vec3{0, 0, 1}), 3.0, 50.0);
    const double r = std::abs(cylinder_reflection_coeffs(p).soft);
    EXPECT_NEAR(norm(cylinder_reflect(f, p, 2.0, ib).E), r * 1.7 / 3.7, 1e-12);
}

TEST(Cylinder, GrazingReflectionIsFinite) {
    const auto p = cylinder_reflection_params(50.0, 0.15, 89.99 * kDeg, kPi / 2.0, 2.0, 2.0);
    const auto r = cylinder_reflection_coeffs(p);
    EXPECT_TRUE(std::isfinite(std::abs(r.soft)));
    EXPECT_TRUE(std::isfinite(std::abs(r.hard)));
}

TEST(Cylinder, CreepingWaveDecaysDeepInShadow) {
    const double k = 50.0, a = 0.15;
    double prev = 1e300;
    for (double t = 0.05; t <= 1.0; t += 0.05) {
        const auto p = cylinder_diffraction_params(k, a, t, 1.0, 2.0, 2.0);
        const double m = std::abs(cylinder_diffraction_coeffs(p).soft);
        EXPECT_LT(m, prev) << "t=" << t;
        prev = m;
    }
    // The Fock part decays at the first Airy-zero rate a_1 sin(pi/3) per unit xi.
    const double rate = -boost::math::airy_ai_zero<double>(1) * std::sqrt(3.0) / 2.0;
    const double sing = 1.0 / (2.0 * std::sqrt(kPi));
    auto fock_log = [&](double xi) { return std::log(std::abs(special::fock_functions(xi).p_star - sing / xi)); };
    for (double xi = 4.0; xi <= 9.0; xi += 1.0) EXPECT_NEAR(fock_log(xi) - fock_log(xi + 1.0), rate, 2e-3) << xi;
}

TEST(Cylinder, DiffractRejectsObserverOnSurface) {
    const auto p = cylinder_diffraction_params(50.0, 0.15, 0.1, 1.0, 2.0, 2.0);
    const FieldPhasor f = spherical_field(CVec3(Vec3{0, 0, 1}), 2.0, 50.0);
    EXPECT_THROW(cylinder_diffract(f, p, 0.0, {0, 0, 1}, {1, 0, 0}, {0, 0, 1}, {0, 1, 0}), std::domain_error);
}

TEST(Cylinder, VerticalPolarizationUsesSoftCoefficient) {
    const auto p = cylinder_diffraction_params(50.0, 0.15, 0.1, 1.0, 2.0, 2.0);
    const auto t = cylinder_diffraction_coeffs(p);
    const FieldPhasor f = spherical_field(CVec3(Vec3{0, 0, 1}), 2.0, 50.0);
    const Vec3 b{0, 0, 1};
    const FieldPhasor out = cylinder_diffract(f, p, 1.0, b, {1, 0, 0}, b, {0, 1, 0});
    const double spread = std::sqrt(2.0 / 2.1) * std::sqrt(2.1 / (1.0 * 3.1));
    EXPECT_NEAR(std::abs(out.E.z), std::abs(t.soft) * spread, 1e-12);
    EXPECT_NEAR(std::abs(out.E.x) + std::abs(out.E.y), 0.0, 1e-15);
}

TEST(Receiver, QuadraticPowerLaw) {
    const double lambda = wavelength(2.4e9);
    const CVec3 e(Vec3{0, 0, 0.01});
    EXPECT_NEAR(field_to_power(e * 2.0, 1.0, lambda) - field_to_power(e, 1.0, lambda), 6.0206, 1e-4);
    EXPECT_EQ(field_to_power(CVec3{}, 1.0, lambda), -100.0);
    EXPECT_THROW(field_to_power(e, 1.0, 0.0), std::domain_error);
    EXPECT_THROW(field_to_power(e, 0.0, lambda), std::domain_error);
}

TEST(Receiver, RecoversFriis) {
    const double f = 2.4e9, lambda = wavelength(f);
    for (double pt : {1.0, 2.0, 100.0})
        for (double g_dbi : {0.0, 3.0})
            for (double d : {1.0, 3.7, 25.0}) {
                const double g = db_to_linear(g_dbi);
                const CVec3 e(Vec3{0, 0, launch_amplitude(pt, g) / d});
                EXPECT_NEAR(field_to_power(e, 1.0, lambda, -1e9), friis_dbm(pt, g, 1.0, lambda, d), 1e-9);
            }
}

TEST(Baseline, LogDistance) {
    EXPECT_DOUBLE_EQ(baseline_loss(-40.0, 1.0, 1.0, 2.6), -40.0);
    EXPECT_NEAR(baseline_loss(-40.0, 10.0, 1.0, 2.6), -66.0, 1e-12);
    const double lambda = wavelength(2.4e9);
    const double slope = friis_dbm(1, 1, 1, lambda, 10.0) - friis_dbm(1, 1, 1, lambda, 1.0);
    EXPECT_NEAR(baseline_loss(0.0, 10.0, 1.0, 2.0), slope, 1e-12);
}

TEST(Kernels, BitIdenticalReplays) {
    WedgeKernelParams p;
    p.phi = 1.1;
    p.phi_prime = 0.4;
    p.k = 50.0;
    const auto a = wedge_diffraction_coeffs(p, false, fresnel(0.4, 1, 2), fresnel(0.5, 1, 2));
    const auto b = wedge_diffraction_coeffs(p, false, fresnel(0.4, 1, 2), fresnel(0.5, 1, 2));
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}
