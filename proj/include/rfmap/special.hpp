#pragma once

// Special functions needed by the UTD kernels: the Kouyoumjian-Pathak
// transition function, complex Airy functions and the Fock scattering
// functions p*(xi), q*(xi).

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "rfmap/vec.hpp"

namespace rfmap::special {

inline constexpr cdouble kJ{0.0, 1.0};

inline cdouble expj(double phase) { return {std::cos(phase), std::sin(phase)}; }

// ---------------------------------------------------------------------------
// Transition function
// ---------------------------------------------------------------------------

/// Tail of the complex Fresnel integral: \f$\int_u^\infty e^{-j\tau^2} d\tau\f$, u >= 0.
inline cdouble fresnel_tail(double u) {
    if (u < 0.0) throw std::domain_error("fresnel_tail: u must be >= 0");
    const double sqrt_pi = std::sqrt(kPi);
    if (u < 2.0) {
        // Whole-line value minus the power series of the head.
        cdouble head{0.0, 0.0};
        cdouble mj_pow{1.0, 0.0};  // (-j)^n
        double u_pow = u;          // u^(2n+1)
        double fact = 1.0;         // n!
        for (int n = 0; n < 80; ++n) {
            const cdouble term = mj_pow * (u_pow / (fact * (2.0 * n + 1.0)));
            head += term;
            if (std::abs(term) < 1e-18) break;
            mj_pow *= -kJ;
            u_pow *= u * u;
            fact *= (n + 1.0);
        }
        return 0.5 * sqrt_pi * expj(-kPi / 4.0) - head;
    }
    // erfc continued fraction on the 45-degree ray, modified Lentz.
    const cdouble z = u * expj(kPi / 4.0);
    constexpr double tiny = 1e-300;
    cdouble f = z;
    cdouble c = f;
    cdouble d = 0.0;
    for (int k = 1; k < 20000; ++k) {
        const double a = 0.5 * k;
        d = z + a * d;
        if (std::abs(d) < tiny) d = tiny;
        c = z + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const cdouble delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    const cdouble cf = 1.0 / f;
    return 0.5 * expj(-kPi / 4.0) * expj(-u * u) * cf;
}

/// UTD transition function \f$F(X) = 2j\sqrt{X} e^{jX}\int_{\sqrt X}^\infty e^{-j\tau^2}d\tau\f$.
inline cdouble transition_function(double X) {
    if (!(X >= 0.0)) throw std::domain_error("transition_function: X must be >= 0");
    if (X == 0.0) return {0.0, 0.0};
    const double u = std::sqrt(X);
    if (u >= 2.0) {
        // Same continued fraction, with the e^{jX} factor cancelled analytically.
        const cdouble z = u * expj(kPi / 4.0);
        constexpr double tiny = 1e-300;
        cdouble f = z, c = z, d = 0.0;
        for (int k = 1; k < 20000; ++k) {
            const double a = 0.5 * k;
            d = z + a * d;
            if (std::abs(d) < tiny) d = tiny;
            c = z + a / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const cdouble delta = c * d;
            f *= delta;
            if (std::abs(delta - 1.0) < 1e-16) break;
        }
        return kJ * u * expj(-kPi / 4.0) / f;
    }
    return 2.0 * kJ * u * expj(X) * fresnel_tail(u);
}

// ---------------------------------------------------------------------------
// Complex Airy functions
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kAi0 = 0.355028053887817239260;
inline constexpr double kAip0 = -0.258819403792806798405;

inline void airy_series(cdouble z, cdouble& ai, cdouble& aip) {
    const cdouble z3 = z * z * z;
    cdouble f = 1.0, g = z, fp = 0.0, gp = 1.0;
    cdouble tf = 1.0, tg = z, tfp = z * z / 2.0, tgp = 1.0;
    fp = tfp;
    for (int k = 1; k < 200; ++k) {
        tf *= z3 / ((3.0 * k - 1.0) * (3.0 * k));
        tg *= z3 / ((3.0 * k) * (3.0 * k + 1.0));
        tgp *= z3 / ((3.0 * k) * (3.0 * k - 2.0));
        f += tf;
        g += tg;
        gp += tgp;
        if (k >= 2) {
            tfp *= z3 / ((3.0 * k - 1.0) * (3.0 * (k - 1.0)));
            fp += tfp;
        }
        const double scale = std::abs(f) + std::abs(g) + std::abs(fp) + std::abs(gp);
        if (std::abs(tf) + std::abs(tg) + std::abs(tfp) + std::abs(tgp) < 1e-17 * scale && k > 3) break;
    }
    ai = kAi0 * f + kAip0 * g;
    aip = kAi0 * fp + kAip0 * gp;
}

// Principal-sector asymptotic expansion, valid for |arg z| <= 2pi/3, |z| large.
inline void airy_asymptotic(cdouble z, cdouble& ai, cdouble& aip) {
    const cdouble zeta = (2.0 / 3.0) * std::pow(z, 1.5);
    const cdouble z14 = std::pow(z, 0.25);
    const cdouble ez = std::exp(-zeta);
    cdouble su = 1.0, sv = 1.0;
    double uk = 1.0;
    cdouble zpow = 1.0;
    double last = 1e300;
    for (int k = 1; k < 60; ++k) {
        uk *= (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k);
        const double vk = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * uk;
        zpow *= -1.0 / zeta;
        const cdouble tu = uk * zpow;
        const double mag = std::abs(tu);
        if (mag > last) break;  // asymptotic series started diverging
        su += tu;
        sv += vk * zpow;
        last = mag;
        if (mag < 1e-17) break;
    }
    const double two_sqrt_pi = 2.0 * std::sqrt(kPi);
    ai = ez / (two_sqrt_pi * z14) * su;
    aip = -z14 * ez / two_sqrt_pi * sv;
}

}  // namespace detail

/// Ai(z) and Ai'(z) for complex z.
inline void airy(cdouble z, cdouble& ai, cdouble& aip) {
    const double r = std::abs(z);
    if (r <= 6.0) {
        detail::airy_series(z, ai, aip);
        return;
    }
    const double a = std::arg(z);
    if (std::abs(a) <= 2.0 * kPi / 3.0) {
        detail::airy_asymptotic(z, ai, aip);
        return;
    }
    // Connection formula: Ai(z) = -w Ai(wz) - w^2 Ai(w^2 z), w = e^{2 pi j / 3}.
    const cdouble w = expj(2.0 * kPi / 3.0);
    const cdouble w2 = w * w;
    cdouble a1, ap1, a2, ap2;
    detail::airy_asymptotic(w * z, a1, ap1);
    detail::airy_asymptotic(w2 * z, a2, ap2);
    ai = -w * a1 - w2 * a2;
    aip = -w2 * ap1 - w * ap2;
}

inline cdouble airy_ai(cdouble z) {
    cdouble ai, aip;
    airy(z, ai, aip);
    return ai;
}

inline cdouble airy_aip(cdouble z) {
    cdouble ai, aip;
    airy(z, ai, aip);
    return aip;
}

/// Positive zeros a_n with Ai(-a_n) = 0 (first `count`).
inline std::vector<double> airy_ai_zeros(int count) {
    std::vector<double> zeros;
    zeros.reserve(count);
    for (int n = 1; n <= count; ++n) {
        const double t = 3.0 * kPi * (4.0 * n - 1.0) / 8.0;
        double x = std::pow(t, 2.0 / 3.0) * (1.0 + 5.0 / (48.0 * t * t) - 5.0 / (36.0 * t * t * t * t));
        for (int it = 0; it < 50; ++it) {
            cdouble ai, aip;
            airy(cdouble(-x, 0.0), ai, aip);
            const double step = ai.real() / (-aip.real());
            x -= step;
            if (std::abs(step) < 1e-15 * x) break;
        }
        zeros.push_back(x);
    }
    return zeros;
}

/// Positive zeros a'_n with Ai'(-a'_n) = 0 (first `count`).
inline std::vector<double> airy_aip_zeros(int count) {
    std::vector<double> zeros;
    zeros.reserve(count);
    for (int n = 1; n <= count; ++n) {
        double x;
        if (n == 1) {
            x = 1.0188;
        } else {
            const double t = 3.0 * kPi * (4.0 * n - 3.0) / 8.0;
            x = std::pow(t, 2.0 / 3.0) * (1.0 - 7.0 / (48.0 * t * t) + 35.0 / (288.0 * t * t * t * t));
        }
        for (int it = 0; it < 50; ++it) {
            cdouble ai, aip;
            airy(cdouble(-x, 0.0), ai, aip);
            // d/dx Ai'(-x) = -Ai''(-x) = x Ai(-x)
            const double step = aip.real() / (x * ai.real());
            x -= step;
            if (std::abs(step) < 1e-15 * x) break;
        }
        zeros.push_back(x);
    }
    return zeros;
}

// ---------------------------------------------------------------------------
// Fock scattering functions
// ---------------------------------------------------------------------------

struct FockValues {
    cdouble p_star;  ///< soft
    cdouble q_star;  ///< hard
};

/// Branch switch between the contour-integral evaluation and the residue series.
inline constexpr double kFockSwitch = 0.6;
/// Below this the lit-region asymptotic form is used.
inline constexpr double kFockLitLimit = -6.0;
inline constexpr int kFockResidueTerms = 80;

namespace detail {

struct AiryResidueTable {
    std::vector<double> a, ap;        // zeros of Ai, Ai'
    std::vector<double> ai_p_at_a;    // Ai'(-a_n)
    std::vector<double> ai_at_ap;     // Ai(-a'_n)
};

inline const AiryResidueTable& residue_table() {
    static const AiryResidueTable table = [] {
        AiryResidueTable t;
        t.a = airy_ai_zeros(kFockResidueTerms);
        t.ap = airy_aip_zeros(kFockResidueTerms);
        for (double x : t.a) t.ai_p_at_a.push_back(airy_aip(cdouble(-x, 0.0)).real());
        for (double x : t.ap) t.ai_at_ap.push_back(airy_ai(cdouble(-x, 0.0)).real());
        return t;
    }();
    return table;
}

// Gauss-Legendre nodes on [-1, 1], 16 points.
inline constexpr std::array<double, 8> kGLx = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                               0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                               0.9445750230732326, 0.9894009349916499};
inline constexpr std::array<double, 8> kGLw = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                               0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                               0.0622535239386479, 0.0271524594117541};

}  // namespace detail

/// Residue-series evaluation (convergent for xi > 0).
inline FockValues fock_residue_series(double xi) {
    if (!(xi > 0.0)) throw std::domain_error("fock_residue_series: xi must be > 0");
    const auto& t = detail::residue_table();
    const cdouble rot = expj(-kPi / 3.0);
    cdouble sp = 0.0, sq = 0.0;
    for (int n = 0; n < kFockResidueTerms; ++n) {
        sp += std::exp(-kJ * xi * t.a[n] * rot) / (t.ai_p_at_a[n] * t.ai_p_at_a[n]);
        sq += std::exp(-kJ * xi * t.ap[n] * rot) / (t.ap[n] * t.ai_at_ap[n] * t.ai_at_ap[n]);
    }
    const double sqrt_pi = std::sqrt(kPi);
    const cdouble pref = -expj(kPi / 6.0) / (2.0 * sqrt_pi);
    const cdouble sing = 1.0 / (2.0 * sqrt_pi * xi);
    return {pref * sp + sing, pref * sq + sing};
}

namespace detail {

// Quadrature nodes of the two contour legs with the xi-independent Airy ratios
// precomputed; every evaluation is then a weighted sum of exponentials.
struct FockContourTable {
    struct Node {
        double t, w;
        cdouble soft, hard;
    };
    std::vector<Node> right, left;
};

inline const FockContourTable& contour_table() {
    static const FockContourTable table = [] {
        FockContourTable t;
        const cdouble rot_m = expj(-2.0 * kPi / 3.0);
        const cdouble rot_p = expj(2.0 * kPi / 3.0);
        // The left leg integrand grows like e^{0.866 |xi| r}; size the leg for the
        // most negative xi this branch serves.
        const double xi_min = kFockLitLimit - 0.5;
        double r_max = 8.0;
        while ((4.0 / 3.0) * std::pow(r_max, 1.5) + 0.8660254037844386 * xi_min * r_max < 40.0) r_max += 1.0;
        auto add = [](std::vector<FockContourTable::Node>& out, double lo, double hi, int panels, auto&& ratio) {
            const double h = (hi - lo) / panels;
            for (int p = 0; p < panels; ++p) {
                const double mid = lo + (p + 0.5) * h;
                const double half = 0.5 * h;
                for (std::size_t i = 0; i < kGLx.size(); ++i) {
                    for (double x : {mid - half * kGLx[i], mid + half * kGLx[i]}) {
                        auto [soft, hard] = ratio(x);
                        out.push_back({x, kGLw[i] * half, soft, hard});
                    }
                }
            }
        };
        add(t.right, 0.0, 8.0, 32, [&](double tau) {
            cdouble ai, aip, bi, bip;
            airy(cdouble(tau, 0.0), ai, aip);
            airy(tau * rot_m, bi, bip);
            return std::pair{ai * expj(kPi / 6.0) / (2.0 * bi), aip * expj(5.0 * kPi / 6.0) / (2.0 * bip)};
        });
        add(t.left, 0.0, r_max, static_cast<int>(std::ceil(r_max * 4.0)), [&](double r) {
            cdouble ai, aip, bi, bip;
            airy(cdouble(r, 0.0), ai, aip);
            airy(r * rot_p, bi, bip);
            return std::pair{expj(kPi / 3.0) * ai / (2.0 * kJ * bi), expj(5.0 * kPi / 3.0) * aip / (2.0 * kJ * bip)};
        });
        return t;
    }();
    return table;
}

}  // namespace detail

/// Contour-integral evaluation (accurate for xi >= kFockLitLimit - 0.5).
inline FockValues fock_contour_integral(double xi) {
    const auto& table = detail::contour_table();
    const cdouble ray = expj(4.0 * kPi / 3.0);
    cdouble rs = 0.0, rh = 0.0, ls = 0.0, lh = 0.0;
    for (const auto& n : table.right) {
        const cdouble e = n.w * expj(-xi * n.t);
        rs += n.soft * e;
        rh += n.hard * e;
    }
    for (const auto& n : table.left) {
        const cdouble e = n.w * std::exp(-kJ * xi * n.t * ray);
        ls += n.soft * e;
        lh += n.hard * e;
    }
    const double sqrt_pi = std::sqrt(kPi);
    return {(rs - ray * ls) / sqrt_pi, (rh - ray * lh) / sqrt_pi};
}

/// Lit-region asymptotic forms (xi -> -inf): specular stationary point plus the
/// non-oscillating 1/(2 sqrt(pi) xi) offset carried by the starred functions.
inline FockValues fock_lit_asymptotic(double xi) {
    const cdouble lead = expj(kPi / 4.0) * (std::sqrt(-xi) / 2.0) * expj(xi * xi * xi / 12.0);
    const double xi3 = xi * xi * xi;
    const double offset = 1.0 / (2.0 * std::sqrt(kPi) * xi);
    return {lead * (1.0 + 2.0 * kJ / xi3) + offset, -lead * (1.0 - 2.0 * kJ / xi3) + offset};
}

/// Soft and hard Fock scattering functions p*(xi), q*(xi).
inline FockValues fock_functions(double xi) {
    if (!std::isfinite(xi)) throw std::domain_error("fock_functions: xi must be finite");
    if (xi > kFockSwitch) return fock_residue_series(xi);
    if (xi < kFockLitLimit) return fock_lit_asymptotic(xi);
    return fock_contour_integral(xi);
}

}  // namespace rfmap::special
