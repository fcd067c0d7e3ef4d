#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "flam/errors.hpp"
#include "flam/io.hpp"
#include "flam/pipeline.hpp"
#include "flam/scenario.hpp"

namespace flam {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("flam_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

TEST(PresetTest, CaseOne) {
    const Scenario s = preset("case1");
    EXPECT_EQ(s.flow.variant, FlowVariant::single_gyre);
    EXPECT_EQ(s.flow.domain.max, Vec2(10.0, 10.0));
    EXPECT_EQ(s.grid.nx, 5);
    EXPECT_EQ(s.grid.ny, 5);
    EXPECT_EQ(s.trajectory.start, Vec2(2.0, 8.0));
    EXPECT_NEAR(s.trajectory.heading, -std::numbers::pi / 2, 1e-15);
    EXPECT_DOUBLE_EQ(s.trajectory.duration, 300.0);
    EXPECT_DOUBLE_EQ(s.noise.ins.rate_hz, 10.0);
    EXPECT_DOUBLE_EQ(s.noise.adcp.rate_hz, 1.0);
    EXPECT_FALSE(s.flow.ks.has_value());
    EXPECT_NO_THROW(s.validate());
}

TEST(PresetTest, CaseTwo) {
    const Scenario s = preset("case2");
    EXPECT_EQ(s.flow.variant, FlowVariant::turbulent_double_gyre);
    EXPECT_EQ(s.flow.domain.max, Vec2(20.0, 10.0));
    EXPECT_EQ(s.grid.nx, 9);
    EXPECT_EQ(s.grid.ny, 5);
    EXPECT_EQ(s.trajectory.start, Vec2(3.0, 8.0));
    ASSERT_TRUE(s.flow.ks.has_value());
    EXPECT_DOUBLE_EQ(s.flow.ks->integral_scale, 1.0);
    EXPECT_DOUBLE_EQ(s.flow.ks->kolmogorov_scale, 1e-3);
    EXPECT_THROW((void)preset("case3"), ConfigError);
}

TEST(ScenarioTest, SeedDrivesTurbulenceUnlessPinned) {
    const Scenario a = preset("case2").with_seed(3);
    const Scenario b = preset("case2").with_seed(4);
    EXPECT_NE(a.flow.ks->rng_seed, b.flow.ks->rng_seed);
    Scenario pinned = a;
    pinned.ks_seed_pinned = true;
    EXPECT_EQ(pinned.with_seed(99).flow.ks->rng_seed, a.flow.ks->rng_seed);
}

TEST(ScenarioJsonTest, RoundTrip) {
    for (const char* name : {"case1", "case2"}) {
        const Scenario s = preset(name).with_seed(17);
        const std::string text = scenario_to_json(s);
        const Scenario back = scenario_from_json(text);
        EXPECT_EQ(scenario_to_json(back), text) << name;
        EXPECT_EQ(back.seed, 17U);
    }
}

TEST(ScenarioJsonTest, PartialConfigKeepsDefaults) {
    const Scenario s = scenario_from_json(
        R"({"seed": 9, "trajectory": {"duration": 60}, "solver": {"line_search": false}})");
    EXPECT_EQ(s.seed, 9U);
    EXPECT_DOUBLE_EQ(s.trajectory.duration, 60.0);
    EXPECT_FALSE(s.solver.line_search);
    EXPECT_EQ(s.grid, preset("case1").grid);
}

TEST(ScenarioJsonTest, RejectsBadInput) {
    EXPECT_THROW((void)scenario_from_json("{"), ConfigError);
    EXPECT_THROW((void)scenario_from_json(R"({"sede": 1})"), ConfigError);
    EXPECT_THROW((void)scenario_from_json(R"({"solver": {"dampng": 1}})"), ConfigError);
    EXPECT_THROW((void)scenario_from_json(R"({"grid": {"dims": [1, 5]}})"), ConfigError);
    EXPECT_THROW((void)scenario_from_json(R"({"flow": {"variant": "vortex"}})"), ConfigError);
    EXPECT_THROW((void)scenario_from_json(R"({"factors": {"sigma_map": -1}})"), ConfigError);
    EXPECT_THROW(
        (void)scenario_from_json(R"({"solver": {"cg": {"preconditioner": "ilu"}}})"),
        ConfigError);
    // start outside the domain
    EXPECT_THROW((void)scenario_from_json(R"({"trajectory": {"start": [12, 5]}})"), ConfigError);
}

TEST(CsvTest, SensorLogRoundTripIsExact) {
    Scenario s = preset("case1").with_seed(2);
    s.trajectory.duration = 20.0;
    const SensorLog log = simulate(s);
    const fs::path dir = temp_dir("log_rt");
    write_sensor_log(dir, log);
    const SensorLog back = read_sensor_log(dir, s.noise);
    ASSERT_EQ(back.ins.size(), log.ins.size());
    ASSERT_EQ(back.adcp.size(), log.adcp.size());
    for (std::size_t i = 0; i < log.ins.size(); ++i) {
        EXPECT_EQ(back.ins[i].accel, log.ins[i].accel);
        EXPECT_EQ(back.ins[i].yaw_rate, log.ins[i].yaw_rate);
    }
    for (std::size_t i = 0; i < log.adcp.size(); ++i) {
        EXPECT_EQ(back.adcp[i].rel_flow, log.adcp[i].rel_flow);
        EXPECT_EQ(back.adcp[i].step, log.adcp[i].step);
    }
    EXPECT_EQ(back.truth.back().state.position, log.truth.back().state.position);
}

TEST(CsvTest, MapRoundTripAndGridCheck) {
    const Scenario s = preset("case1");
    const FlowMap m = truth_map(s);
    const fs::path dir = temp_dir("map_rt");
    write_map_csv(dir / "m.csv", m);
    const FlowMap back = read_map_csv(dir / "m.csv", s.grid);
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_EQ(back[i], m[i]);
    }
    GridSpec other = s.grid;
    other.dx = 2.0;
    EXPECT_THROW((void)read_map_csv(dir / "m.csv", other), ParseError);
}

TEST(CsvTest, CorruptRowNamesLine) {
    const fs::path dir = temp_dir("corrupt");
    {
        std::ofstream os(dir / "ins.csv");
        os << "t,ax,ay,r\n0.1,0,0,0\n0.2,0,zz,0\n";
    }
    try {
        (void)read_ins_csv(dir / "ins.csv");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("ins.csv:3"), std::string::npos) << e.what();
    }
    {
        std::ofstream os(dir / "ins.csv");
        os << "t,ax,ay\n";
    }
    EXPECT_THROW((void)read_ins_csv(dir / "ins.csv"), ParseError);
    {
        std::ofstream os(dir / "ins.csv");
        os << "t,ax,ay,r\n0.1,0,0\n";
    }
    EXPECT_THROW((void)read_ins_csv(dir / "ins.csv"), ParseError);
}

TEST(CsvTest, FullPrecision) {
    EXPECT_EQ(fmt_double(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(fmt_double(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace flam
