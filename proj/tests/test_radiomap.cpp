#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "rfmap/radiomap.hpp"

using namespace rfmap;

namespace {

Antenna ap(const std::string& name, const Vec3& p) {
    Antenna a = isotropic_antenna(p, 2.0, 3.0, 2.4e9);
    a.name = name;
    return a;
}

Antenna mp(const std::string& name, const Vec3& p) {
    Antenna a = isotropic_antenna(p, 1.0, 0.0, 2.4e9);
    a.name = name;
    return a;
}

SceneModel corridor() {
    return detect_edges(load_model(fixtures::data_path("models/corridor.obj"),
                                   load_materials(fixtures::data_path("materials.json"))),
                        20.0 * kPi / 180, 45.0 * kPi / 180);
}

RadioMapParams quick(int depth = 1) {
    RadioMapParams p;
    p.trace.max_depth = depth;
    p.trace.tessellation = 6;
    return p;
}

}  // namespace

TEST(Grid, LatticeCountsAndOrder) {
    const CellGrid g = auto_grid({0, 0, 4, 2}, 1.0);
    ASSERT_EQ(g.cells.size(), 15u);
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
        EXPECT_EQ(g.cells[i].id, static_cast<int>(i));
        EXPECT_EQ(g.cells[i].position.z, kDefaultCellHeight);
    }
    // Row-major, x fastest.
    EXPECT_EQ(g.cells[1].position.x, 1.0);
    EXPECT_EQ(g.cells[5].position.y, 1.0);
    EXPECT_EQ(g.cells[5].position.x, 0.0);
    EXPECT_EQ(auto_grid({0, 0, 0.5, 0.5}, 2.0).cells.size(), 1u);
    EXPECT_EQ(auto_grid({0, 0, 0.3, 0.3}, 0.1, 1.5).cells.size(), 16u);
    EXPECT_THROW(auto_grid({0, 0, 1, 1}, 0.0), RadioMapError);
    EXPECT_THROW(auto_grid({0, 0, 1, 1}, -1.0), RadioMapError);
}

TEST(Grid, ValidateRejectsDuplicatesAndNonFinite) {
    CellGrid g = auto_grid({0, 0, 1, 0}, 1.0);
    g.cells[1].id = 0;
    EXPECT_THROW(g.validate(), RadioMapError);
    g.cells[1].id = 1;
    g.cells[1].position.x = std::nan("");
    EXPECT_THROW(g.validate(), RadioMapError);
}

TEST(Active, FreeSpaceCellIsFriis) {
    const Antenna a = ap("AP1", {0, 0, 1});
    CellGrid g;
    g.cells = {{0, {1, 0, 1}}};
    const auto map = generate_active(fixtures::free_space(), {a}, g, RadioMapParams{});
    ASSERT_EQ(map.rss.size(), 1u);
    EXPECT_NEAR(map.rss[0][0], em::friis_dbm(2.0, em::db_to_linear(3.0), 1.0, a.lambda(), 1.0), 1e-9);
    EXPECT_EQ(map.streams, std::vector<std::string>{"AP1"});
}

TEST(Active, UnreachableCellReportsFloor) {
    // A cell sealed inside a conducting box.
    const SceneModel m = fixtures::box_scene({4, -1, 0}, {6, 1, 2}, "pec", false);
    CellGrid g;
    g.cells = {{0, {5, 0, 1}}, {1, {2, 0, 1}}};
    const auto map = generate_active(m, {ap("AP1", {0, 0, 1})}, g, quick(2));
    EXPECT_EQ(map.rss[0][0], em::kDefaultNoiseFloorDbm);
    EXPECT_GT(map.rss[1][0], -60.0);
}

TEST(Active, TableShapeAndEmptyGrid) {
    const SceneModel m = corridor();
    const CellGrid g = auto_grid({1, 1, 11, 1}, 1.0, 1.2);
    ASSERT_EQ(g.cells.size(), 11u);
    const auto map = generate_active(m, {ap("A", {2, 2, 1.2}), ap("B", {10, 3, 2})}, g, quick());
    ASSERT_EQ(map.rss.size(), 11u);
    for (const auto& row : map.rss) {
        ASSERT_EQ(row.size(), 2u);
        for (double v : row) EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_THROW(generate_active(m, {ap("A", {2, 2, 1.2})}, CellGrid{}, quick()), RadioMapError);
}

TEST(Passive, EmptyPlacementMatchesActiveAtMonitorPoints) {
    const SceneModel m = corridor();
    const std::vector<Antenna> aps{ap("AP1", {2, 2, 1.2}), ap("AP2", {11, 3, 1.5})};
    const std::vector<Antenna> mps{mp("MP1", {10, 2, 1.2}), mp("MP2", {4, 1.4, 1.2})};
    const auto pas = generate_passive(m, aps, mps, {{0, {}, std::nullopt}}, quick(2));
    CellGrid g;
    g.cells = {{0, mps[0].position}, {1, mps[1].position}};
    const auto act = generate_active(m, aps, g, quick(2));
    ASSERT_EQ(pas.rss.size(), 1u);
    EXPECT_EQ(pas.streams, (std::vector<std::string>{"AP1:MP1", "AP1:MP2", "AP2:MP1", "AP2:MP2"}));
    for (std::size_t a = 0; a < aps.size(); ++a)
        for (std::size_t k = 0; k < mps.size(); ++k) EXPECT_EQ(pas.rss[0][a * mps.size() + k], act.rss[k][a]);
}

TEST(Passive, PlacementValidation) {
    const SceneModel m = corridor();
    const std::vector<Antenna> aps{ap("AP1", {2, 2, 1.2})};
    const std::vector<Antenna> mps{mp("MP1", {10, 2, 1.2})};
    EXPECT_THROW(generate_passive(m, aps, mps, {{1, {{5, 2, 0}}, std::nullopt}}, quick()), RadioMapError);
    const std::vector<HumanPlacement> dup{{0, {}, std::nullopt}, {1, {{5, 2, 0}}, std::nullopt}, {1, {{6, 2, 0}}, std::nullopt}};
    EXPECT_THROW(generate_passive(m, aps, mps, dup, quick()), RadioMapError);
    EXPECT_THROW(generate_passive(m, aps, mps, {{0, {{5, 2, 0}}, std::nullopt}}, quick()), RadioMapError);
}

TEST(Passive, HumanInsideWallIsSkipped) {
    const SceneModel m = corridor();
    const auto map = generate_passive(m, {ap("AP1", {2, 2, 1.2})}, {mp("MP1", {10, 2, 1.2})},
                                      {{0, {}, std::nullopt}, {1, {{6, 0.05, 0}}, std::nullopt}, {2, {{6, 3, 0}}, std::nullopt}},
                                      quick());
    ASSERT_EQ(map.errors.size(), 1u);
    EXPECT_EQ(map.errors[0].id, 1);
    EXPECT_NE(map.errors[0].message.find("human at (6, 0.05) overlaps face"), std::string::npos) << map.errors[0].message;
    EXPECT_NE(map.errors[0].message.find("drywall"), std::string::npos);
    ASSERT_EQ(map.placements.size(), 2u);
    EXPECT_EQ(map.placements[1].id, 2);
    // Standing on the floor does not count as an overlap.
    EXPECT_FALSE(human_overlap(m, HumanCylinder{{6, 2, 0}}));
}

TEST(Passive, HumanOnLineOfSightChangesStreamMost) {
    const SceneModel m = corridor();
    auto pls = single_human_placements(auto_grid({3, 1, 9, 3}, 1.0));
    ASSERT_EQ(pls.size(), 22u);
    ASSERT_EQ(pls[0].id, 0);
    const auto map = generate_passive(m, {ap("AP1", {2, 2, 1.2})}, {mp("MP1", {10, 2, 1.2})}, pls, quick(2));
    ASSERT_TRUE(map.errors.empty());
    ASSERT_EQ(map.rss.size(), pls.size());
    std::size_t worst = 0;
    double worst_delta = 0.0;
    for (std::size_t i = 1; i < map.rss.size(); ++i) {
        const double d = std::abs(map.rss[i][0] - map.rss[0][0]);
        if (d > worst_delta) worst_delta = d, worst = i;
    }
    EXPECT_NEAR(map.placements[worst].positions[0].y, 2.0, 1e-12);
    EXPECT_GT(worst_delta, 3.0);
}

TEST(Passive, DiffractionOffUnderstatesShadow) {
    const SceneModel m = corridor();
    const std::vector<HumanPlacement> pls{{0, {}, std::nullopt}, {1, {{6, 2, 0}}, std::nullopt}};
    RadioMapParams on = quick(2);
    RadioMapParams off = on;
    off.trace.utd = false;
    const std::vector<Antenna> aps{ap("AP1", {2, 2, 1.2})};
    const std::vector<Antenna> mps{mp("MP1", {10, 2, 1.2})};
    const auto a = generate_passive(m, aps, mps, pls, on);
    const auto b = generate_passive(m, aps, mps, pls, off);
    // Only the LOS attenuation survives without diffraction, so the human
    // barely registers.
    EXPECT_GT(std::abs(a.rss[1][0] - a.rss[0][0]), std::abs(b.rss[1][0] - b.rss[0][0]));
}

TEST(Output, TwoDecimalFormatting) {
    EXPECT_EQ(fmt2(-0.001), "0.00");
    EXPECT_EQ(fmt2(-0.0), "0.00");
    EXPECT_EQ(fmt2(-52.375), "-52.38");
    EXPECT_EQ(fmt2(3.0), "3.00");
}

TEST(Output, ActiveCsvRoundTrip) {
    ActiveRadioMap map;
    map.streams = {"AP1", "AP2"};
    map.cells = {{0, {0, 0, 1}}, {1, {1, 0, 1}}};
    map.rss = {{-40.123, -55.5}, {-100, -0.001}};
    std::stringstream ss;
    write_active_csv(ss, map);
    EXPECT_EQ(ss.str(), "cell_id,x,y,z,AP1,AP2\n0,0.00,0.00,1.00,-40.12,-55.50\n1,1.00,0.00,1.00,-100.00,0.00\n");
    const RssTable t = read_rss_csv(ss, {"cell_id", "x", "y", "z"}, "mem");
    EXPECT_EQ(t.streams, map.streams);
    ASSERT_EQ(t.rss.size(), 2u);
    EXPECT_EQ(t.keys[1][0], "1");
    EXPECT_DOUBLE_EQ(t.rss[0][0], -40.12);
    const auto j = active_sidecar(map);
    EXPECT_EQ(j["kind"], "active");
    EXPECT_TRUE(j["histogram"].is_null());
}

TEST(Output, PassiveCsvLeavesEmptyPlacementBlank) {
    PassiveRadioMap map;
    map.streams = {"AP1:MP1"};
    map.placements = {{0, {}, std::nullopt}, {1, {{2, 3, 0}}, 7}, {2, {{1, 1, 0}, {3, 1, 0}}, std::nullopt}};
    map.rss = {{-50}, {-60}, {-70}};
    map.errors = {{3, "human at (0, 0) overlaps face 2 (brick)"}};
    std::stringstream ss;
    write_passive_csv(ss, map);
    EXPECT_EQ(ss.str(),
              "placement_id,cell_id,x,y,z,AP1:MP1\n0,,,,,-50.00\n1,7,2.00,3.00,0.00,-60.00\n2,,2.00,1.00,0.00,-70.00\n");
    const auto t = read_rss_csv(ss, {"placement_id", "cell_id", "x", "y", "z"}, "mem");
    EXPECT_EQ(t.rss.size(), 3u);
    const auto j = passive_sidecar(map);
    EXPECT_EQ(j["placements"].size(), 3u);
    EXPECT_EQ(j["placements"][2]["positions"].size(), 2u);
    EXPECT_TRUE(j["placements"][0]["cell_id"].is_null());
    EXPECT_EQ(j["skipped"][0]["id"], 3);
}

TEST(Output, CsvReadErrors) {
    std::stringstream empty;
    EXPECT_THROW(read_rss_csv(empty, {"cell_id"}, "e"), RadioMapError);
    std::stringstream wrong("id,x\n0,1\n");
    EXPECT_THROW(read_rss_csv(wrong, {"cell_id"}, "w"), RadioMapError);
    std::stringstream count("cell_id,A\n0,1,2\n");
    EXPECT_THROW(read_rss_csv(count, {"cell_id"}, "c"), RadioMapError);
    std::stringstream bad("cell_id,A\n0,-4x\n");
    try {
        read_rss_csv(bad, {"cell_id"}, "b");
        FAIL();
    } catch (const RadioMapError& e) {
        EXPECT_STREQ(e.what(), "b: bad RSS value '-4x' at line 2");
    }
}
