#pragma once

// Antenna patterns and placement.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfmap/em.hpp"
#include "rfmap/vec.hpp"

namespace rfmap {

class AntennaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gain table on a regular (theta, phi) grid in degrees, theta from the
/// antenna axis. Bilinear interpolation; phi wraps at 360.
struct GainPattern {
    std::vector<double> theta_deg;  ///< ascending, first 0, last 180
    std::vector<double> phi_deg;    ///< ascending, within [0, 360)
    std::vector<double> gain_dbi;   ///< row-major [theta][phi]

    double at(std::size_t it, std::size_t ip) const { return gain_dbi[it * phi_deg.size() + ip]; }

    void validate() const {
        if (theta_deg.size() < 2 || phi_deg.empty()) throw AntennaError("pattern grid needs >= 2 theta and >= 1 phi samples");
        if (gain_dbi.size() != theta_deg.size() * phi_deg.size()) throw AntennaError("pattern grid is incomplete");
        if (std::abs(theta_deg.front()) > 1e-9 || std::abs(theta_deg.back() - 180.0) > 1e-9)
            throw AntennaError("pattern theta must span 0..180 degrees");
        if (phi_deg.front() < 0.0 || phi_deg.back() >= 360.0) throw AntennaError("pattern phi must lie in [0, 360)");
        if (!std::is_sorted(theta_deg.begin(), theta_deg.end()) || !std::is_sorted(phi_deg.begin(), phi_deg.end()))
            throw AntennaError("pattern axes must be ascending");
    }

    double gain_dbi_at(double theta, double phi) const {
        const double th = std::clamp(theta * 180.0 / kPi, 0.0, 180.0);
        double ph = std::fmod(phi * 180.0 / kPi, 360.0);
        if (ph < 0.0) ph += 360.0;
        auto it = std::upper_bound(theta_deg.begin(), theta_deg.end(), th);
        std::size_t i1 = std::min<std::size_t>(static_cast<std::size_t>(it - theta_deg.begin()), theta_deg.size() - 1);
        std::size_t i0 = i1 == 0 ? 0 : i1 - 1;
        if (i0 == i1) i1 = std::min(i0 + 1, theta_deg.size() - 1);
        const double wt = theta_deg[i1] > theta_deg[i0] ? (th - theta_deg[i0]) / (theta_deg[i1] - theta_deg[i0]) : 0.0;
        // Phi neighbours with wrap-around.
        const std::size_t np = phi_deg.size();
        std::size_t j1 = static_cast<std::size_t>(std::upper_bound(phi_deg.begin(), phi_deg.end(), ph) - phi_deg.begin());
        double p0, p1;
        std::size_t j0;
        if (j1 == 0) {
            j0 = np - 1;
            j1 = 0;
            p0 = phi_deg[j0] - 360.0;
            p1 = phi_deg[0];
        } else if (j1 == np) {
            j0 = np - 1;
            j1 = 0;
            p0 = phi_deg[j0];
            p1 = phi_deg[0] + 360.0;
        } else {
            j0 = j1 - 1;
            p0 = phi_deg[j0];
            p1 = phi_deg[j1];
        }
        const double wp = p1 > p0 ? (ph - p0) / (p1 - p0) : 0.0;
        const double g0 = at(i0, j0) * (1 - wp) + at(i0, j1) * wp;
        const double g1 = at(i1, j0) * (1 - wp) + at(i1, j1) * wp;
        return g0 * (1 - wt) + g1 * wt;
    }
};

/// CSV with a header line and rows `theta_deg,phi_deg,gain_dbi` on a full grid.
inline GainPattern load_pattern_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AntennaError("cannot open pattern file '" + path + "'");
    std::map<std::pair<double, double>, double> samples;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double t, p, g;
        if (!(ls >> t >> p >> g)) {
            if (lineno == 1) continue;  // header
            throw AntennaError(path + ": malformed row at line " + std::to_string(lineno));
        }
        samples[{t, p}] = g;
    }
    GainPattern pat;
    for (const auto& [key, g] : samples) {
        if (std::find(pat.theta_deg.begin(), pat.theta_deg.end(), key.first) == pat.theta_deg.end())
            pat.theta_deg.push_back(key.first);
        if (std::find(pat.phi_deg.begin(), pat.phi_deg.end(), key.second) == pat.phi_deg.end())
            pat.phi_deg.push_back(key.second);
    }
    std::sort(pat.theta_deg.begin(), pat.theta_deg.end());
    std::sort(pat.phi_deg.begin(), pat.phi_deg.end());
    for (double t : pat.theta_deg) {
        for (double p : pat.phi_deg) {
            auto it = samples.find({t, p});
            if (it == samples.end()) throw AntennaError(path + ": pattern grid is missing samples");
            pat.gain_dbi.push_back(it->second);
        }
    }
    pat.validate();
    return pat;
}

struct Antenna {
    enum class Kind { Isotropic, HalfWaveDipole, Custom };

    std::string name;
    Kind kind = Kind::Isotropic;
    Vec3 position;
    double power_mw = 1.0;
    double gain_dbi = 0.0;  ///< peak gain; ignored for custom patterns
    double frequency_hz = 2.4e9;
    Vec3 orientation{0.0, 0.0, 1.0};
    GainPattern pattern;
    std::string pattern_path;  ///< where a custom pattern was loaded from

    void validate() const {
        if (!(power_mw > 0.0)) throw AntennaError("antenna '" + name + "': power must be > 0");
        if (!(frequency_hz > 0.0)) throw AntennaError("antenna '" + name + "': frequency must be > 0");
        if (std::abs(norm(orientation) - 1.0) > 1e-9) throw AntennaError("antenna '" + name + "': orientation must be unit");
        if (kind == Kind::Custom) pattern.validate();
    }

    double lambda() const { return em::wavelength(frequency_hz); }
    double k() const { return em::wavenumber(frequency_hz); }

    /// Linear gain toward unit direction `dir`.
    double gain(const Vec3& dir) const {
        switch (kind) {
            case Kind::Isotropic:
                return em::db_to_linear(gain_dbi);
            case Kind::HalfWaveDipole: {
                const double c = std::clamp(dot(dir, orientation), -1.0, 1.0);
                const double s2 = 1.0 - c * c;
                if (s2 < 1e-24) return 0.0;
                const double f = std::cos(kPi / 2.0 * c);
                return em::db_to_linear(gain_dbi) * f * f / s2;
            }
            case Kind::Custom: {
                const Vec3 x = any_orthogonal(orientation);
                const Vec3 y = cross(orientation, x);
                const double theta = std::acos(std::clamp(dot(dir, orientation), -1.0, 1.0));
                const double phi = std::atan2(dot(dir, y), dot(dir, x));
                return em::db_to_linear(pattern.gain_dbi_at(theta, phi));
            }
        }
        return 1.0;
    }

    /// Unit polarization of the radiated field toward `dir`: the antenna axis
    /// projected transverse to the ray.
    Vec3 polarization(const Vec3& dir) const {
        const Vec3 p = orientation - dir * dot(orientation, dir);
        if (norm(p) < 1e-12) return any_orthogonal(dir);
        return normalized(p);
    }

    /// Radiated field 1 m away along `dir`.
    CVec3 field_at_1m(const Vec3& dir) const {
        return CVec3(polarization(dir)) * em::launch_amplitude(power_mw, gain(dir));
    }
};

inline Antenna isotropic_antenna(const Vec3& position, double power_mw, double gain_dbi, double frequency_hz) {
    Antenna a;
    a.position = position;
    a.power_mw = power_mw;
    a.gain_dbi = gain_dbi;
    a.frequency_hz = frequency_hz;
    return a;
}

/// Default peak gain of a half-wave dipole.
inline constexpr double kDipoleGainDbi = 2.15;

inline const char* antenna_kind_name(Antenna::Kind k) {
    switch (k) {
        case Antenna::Kind::Isotropic: return "isotropic";
        case Antenna::Kind::HalfWaveDipole: return "half_wave_dipole";
        case Antenna::Kind::Custom: return "custom";
    }
    return "isotropic";
}

}  // namespace rfmap
