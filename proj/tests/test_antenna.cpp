#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "rfmap/antenna.hpp"

using namespace rfmap;

namespace {

double dipole_dbi(double theta) {
    const double f = std::cos(kPi / 2.0 * std::cos(theta)) / std::sin(theta);
    return kDipoleGainDbi + 20.0 * std::log10(f);
}

std::string write_temp(const std::string& name, const std::string& text) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p.string();
}

Antenna dipole() {
    Antenna a;
    a.kind = Antenna::Kind::HalfWaveDipole;
    a.gain_dbi = kDipoleGainDbi;
    return a;
}

}  // namespace

TEST(Antenna, IsotropicIsUniform) {
    const Antenna a = isotropic_antenna({0, 0, 0}, 2.0, 3.0, 2.4e9);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    const double ref = norm(a.field_at_1m({1, 0, 0}));
    for (int i = 0; i < 100; ++i) {
        const Vec3 d = normalized(Vec3{g(rng), g(rng), g(rng)});
        EXPECT_DOUBLE_EQ(norm(a.field_at_1m(d)), ref);
        EXPECT_LT(std::abs(dot(CVec3(a.polarization(d)), d)), 1e-12);
    }
}

TEST(Antenna, FieldAtOneMetre) {
    // |E| = sqrt(eta0 P G / 2 pi), about sqrt(60 P G).
    const Antenna a = isotropic_antenna({0, 0, 0}, 2.0, 3.0, 2.4e9);
    const double g = em::db_to_linear(3.0);
    EXPECT_NEAR(norm(a.field_at_1m({1, 0, 0})), std::sqrt(60.0 * 2e-3 * g), 1e-3 * std::sqrt(60.0 * 2e-3 * g));
}

TEST(Antenna, DipolePatternAndNormalisation) {
    const Antenna a = dipole();
    EXPECT_NEAR(10.0 * std::log10(a.gain({1, 0, 0})), kDipoleGainDbi, 1e-12);
    EXPECT_EQ(a.gain({0, 0, 1}), 0.0);
    // Average over the sphere is unity (the 2.15 dBi peak is a rounded 1.6409).
    double sum = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const double th = (i + 0.5) * kPi / n;
        sum += a.gain({std::sin(th), 0, std::cos(th)}) * std::sin(th) * (kPi / n);
    }
    EXPECT_NEAR(sum / 2.0, 1.0, 1e-3);
}

TEST(Antenna, CustomPatternMatchesDipole) {
    Antenna c;
    c.kind = Antenna::Kind::Custom;
    c.pattern = load_pattern_csv(fixtures::data_path("patterns/dipole_5deg.csv"));
    c.validate();
    for (double deg = 10.0; deg <= 170.0; deg += 5.0) {
        const double th = deg * kPi / 180.0;
        // The file was tabulated with a 1.64 (2.1484 dBi) peak.
        EXPECT_NEAR(c.pattern.gain_dbi_at(th, 0.3), dipole_dbi(th), 2e-3) << deg;
    }
    // Off-grid: bilinear stays between the neighbouring knots.
    const double mid = c.pattern.gain_dbi_at(47.5 * kPi / 180.0, 1.0);
    EXPECT_GT(mid, std::min(dipole_dbi(45.0 * kPi / 180), dipole_dbi(50.0 * kPi / 180)));
    EXPECT_LT(mid, std::max(dipole_dbi(45.0 * kPi / 180), dipole_dbi(50.0 * kPi / 180)));
}

TEST(Antenna, PhiWrapsAround) {
    GainPattern p;
    p.theta_deg = {0, 180};
    p.phi_deg = {0, 90, 180, 270};
    p.gain_dbi = {0, 4, 8, 4, 0, 4, 8, 4};
    p.validate();
    EXPECT_NEAR(p.gain_dbi_at(kPi / 2, 315.0 * kPi / 180.0), 2.0, 1e-12);
    EXPECT_NEAR(p.gain_dbi_at(kPi / 2, -45.0 * kPi / 180.0), 2.0, 1e-12);
    EXPECT_NEAR(p.gain_dbi_at(kPi / 2, 135.0 * kPi / 180.0), 6.0, 1e-12);
}

TEST(Antenna, PatternErrors) {
    EXPECT_THROW(load_pattern_csv("/nonexistent/pattern.csv"), AntennaError);
    const auto gap = write_temp("rfmap_gap.csv", "theta_deg,phi_deg,gain_dbi\n0,0,1\n180,0,1\n0,90,1\n");
    EXPECT_THROW(load_pattern_csv(gap), AntennaError);
    const auto span = write_temp("rfmap_span.csv", "theta_deg,phi_deg,gain_dbi\n0,0,1\n90,0,1\n");
    EXPECT_THROW(load_pattern_csv(span), AntennaError);
    const auto bad = write_temp("rfmap_bad.csv", "theta_deg,phi_deg,gain_dbi\n0,0,1\nx,y\n");
    EXPECT_THROW(load_pattern_csv(bad), AntennaError);
}

TEST(Antenna, Validation) {
    Antenna a = isotropic_antenna({0, 0, 0}, 0.0, 0.0, 2.4e9);
    EXPECT_THROW(a.validate(), AntennaError);
    a.power_mw = 1.0;
    a.frequency_hz = 0.0;
    EXPECT_THROW(a.validate(), AntennaError);
    a.frequency_hz = 2.4e9;
    a.orientation = {0, 0, 2};
    EXPECT_THROW(a.validate(), AntennaError);
    EXPECT_STREQ(antenna_kind_name(Antenna::Kind::HalfWaveDipole), "half_wave_dipole");
    EXPECT_NEAR(a.lambda(), 0.12491352416666667, 1e-15);
}
