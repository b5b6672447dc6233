#pragma once

// Scene builders and independent oracles shared by the unit tests and the
// acceptance binary.

#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rfmap/antenna.hpp"
#include "rfmap/scene.hpp"

#ifndef RFMAP_DATA_DIR
#define RFMAP_DATA_DIR "data"
#endif

namespace fixtures {

using rfmap::cdouble;
using rfmap::kPi;
using rfmap::Vec3;

inline std::string data_path(const std::string& rel) { return std::string(RFMAP_DATA_DIR) + "/" + rel; }

/// Axis-aligned box. `inward` orients the normals into the box (a room);
/// otherwise they face out (a solid).
inline rfmap::SceneModel box_scene(const Vec3& lo, const Vec3& hi, const std::string& material, bool inward) {
    rfmap::SceneModel m;
    m.materials = rfmap::default_materials();
    const int mat = *m.materials.find(material);
    std::array<Vec3, 8> c;
    for (int i = 0; i < 8; ++i) c[i] = {(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z};
    // Quads wound with outward normals.
    const int q[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& f : q) {
        if (inward) {
            rfmap::add_face(m, c[f[0]], c[f[2]], c[f[1]], mat);
            rfmap::add_face(m, c[f[0]], c[f[3]], c[f[2]], mat);
        } else {
            rfmap::add_face(m, c[f[0]], c[f[1]], c[f[2]], mat);
            rfmap::add_face(m, c[f[0]], c[f[2]], c[f[3]], mat);
        }
    }
    rfmap::merge_vertices(m);
    rfmap::finalize_geometry(m);
    return m;
}

inline rfmap::SceneModel free_space() {
    rfmap::SceneModel m;
    m.materials = rfmap::default_materials();
    rfmap::finalize_geometry(m);
    return m;
}

/// One image-method path in a perfectly conducting rectangular box.
struct ImagePath {
    double length = 0.0;
    rfmap::CVec3 E;
    int reflections = 0;
};

/// Brute-force image enumeration for a PEC box [0,L]: along each axis the
/// images of coordinate s are 2aL + s (|2a| reflections) and 2aL - s
/// (|2a - 1| reflections). Every image with at most `max_reflections`
/// bounces is a valid path because the box is convex. Each PEC bounce flips
/// the two tangential field components; the operators are diagonal, so their
/// order does not matter.
inline std::vector<ImagePath> pec_box_images(const Vec3& size, const rfmap::Antenna& tx, const Vec3& rx,
                                             int max_reflections) {
    struct AxisImage {
        double coord;
        int bounces;
    };
    std::array<std::vector<AxisImage>, 3> axis;
    for (int k = 0; k < 3; ++k) {
        const double L = size[k], s = tx.position[k];
        for (int a = -max_reflections; a <= max_reflections; ++a) {
            if (std::abs(2 * a) <= max_reflections) axis[k].push_back({2.0 * a * L + s, std::abs(2 * a)});
            if (std::abs(2 * a - 1) <= max_reflections) axis[k].push_back({2.0 * a * L - s, std::abs(2 * a - 1)});
        }
    }
    const double k0 = tx.k();
    const double amp = rfmap::em::launch_amplitude(tx.power_mw, rfmap::em::db_to_linear(tx.gain_dbi));
    std::vector<ImagePath> out;
    for (const auto& ix : axis[0])
        for (const auto& iy : axis[1])
            for (const auto& iz : axis[2]) {
                const int n = ix.bounces + iy.bounces + iz.bounces;
                if (n > max_reflections) continue;
                const Vec3 img{ix.coord, iy.coord, iz.coord};
                const double len = rfmap::distance(img, rx);
                const Vec3 du = (rx - img) / len;
                // The launch direction undoes the mirror on each axis with an odd bounce count.
                const std::array<int, 3> odd{ix.bounces % 2, iy.bounces % 2, iz.bounces % 2};
                Vec3 d0 = du;
                for (int k = 0; k < 3; ++k)
                    if (odd[k]) d0[k] = -d0[k];
                Vec3 pol = tx.orientation - d0 * rfmap::dot(tx.orientation, d0);
                pol = rfmap::normalized(pol);
                // Axis k flips once per bounce off the four walls normal to the other axes.
                const std::array<int, 3> counts{ix.bounces, iy.bounces, iz.bounces};
                Vec3 e = pol;
                for (int k = 0; k < 3; ++k) {
                    const int tangential_bounces = n - counts[k];
                    if (tangential_bounces % 2) e[k] = -e[k];
                }
                out.push_back({len, rfmap::CVec3(e) * (amp / len * std::exp(cdouble(0.0, -k0 * len))), n});
            }
    return out;
}

/// F(X) by Gauss-Kronrod quadrature after rotating the Fresnel contour by
/// -pi/4: int_u^inf e^{-j t^2} dt = e^{-j pi/4} e^{-j u^2} int_0^inf e^{-s^2 - sqrt2 u s (1 + j)} ds.
inline cdouble transition_oracle(double X) {
    using boost::math::quadrature::gauss_kronrod;
    const double u = std::sqrt(X);
    const double c = std::sqrt(2.0) * u;
    auto re = [&](double s) { return std::exp(-s * s - c * s) * std::cos(c * s); };
    auto im = [&](double s) { return -std::exp(-s * s - c * s) * std::sin(c * s); };
    const double inf = std::numeric_limits<double>::infinity();
    const double ir = gauss_kronrod<double, 61>::integrate(re, 0.0, inf, 15, 1e-15);
    const double ii = gauss_kronrod<double, 61>::integrate(im, 0.0, inf, 15, 1e-15);
    return cdouble(0.0, 2.0) * u * std::exp(cdouble(0.0, -kPi / 4.0)) * cdouble(ir, ii);
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
