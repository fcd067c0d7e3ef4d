#include "flam/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flam/errors.hpp"

namespace flam {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    return os;
}

// Reads a CSV with a fixed header into rows of doubles.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path,
                                                  const std::string& expected_header) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path.string());
    }
    const std::string name = path.filename().string();
    std::string line;
    if (!std::getline(is, line)) {
        throw ParseError(name, 1, "missing header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != expected_header) {
        throw ParseError(name, 1, "expected header '" + expected_header + "', got '" + line + "'");
    }
    const auto columns = static_cast<std::size_t>(
        std::count(expected_header.begin(), expected_header.end(), ',') + 1);

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        row.reserve(columns);
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (true) {
            const char* comma = std::find(p, end, ',');
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(p, comma, v);
            if (ec != std::errc() || ptr != comma || !std::isfinite(v)) {
                throw ParseError(name, line_no,
                                 "bad number '" + std::string(p, comma) + "' in column " +
                                     std::to_string(row.size() + 1));
            }
            row.push_back(v);
            if (comma == end) {
                break;
            }
            p = comma + 1;
        }
        if (row.size() != columns) {
            throw ParseError(name, line_no,
                             "expected " + std::to_string(columns) + " columns, got " +
                                 std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string fmt_double(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return {buf, static_cast<std::size_t>(n)};
}

std::string read_text_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    auto os = open_out(path);
    os << text;
}

void write_ins_csv(const fs::path& path, std::span<const InsSample> ins) {
    auto os = open_out(path);
    os << "t,ax,ay,r\n";
    for (const auto& u : ins) {
        os << fmt_double(u.t) << ',' << fmt_double(u.accel.x()) << ',' << fmt_double(u.accel.y())
           << ',' << fmt_double(u.yaw_rate) << '\n';
    }
}

std::vector<InsSample> read_ins_csv(const fs::path& path) {
    std::vector<InsSample> out;
    for (const auto& r : read_numeric_csv(path, "t,ax,ay,r")) {
        out.push_back({r[0], Vec2(r[1], r[2]), r[3]});
    }
    return out;
}

void write_adcp_csv(const fs::path& path, std::span<const AdcpSample> adcp) {
    auto os = open_out(path);
    os << "t,zx,zy\n";
    for (const auto& z : adcp) {
        os << fmt_double(z.t) << ',' << fmt_double(z.rel_flow.x()) << ','
           << fmt_double(z.rel_flow.y()) << '\n';
    }
}

std::vector<AdcpSample> read_adcp_csv(const fs::path& path) {
    std::vector<AdcpSample> out;
    for (const auto& r : read_numeric_csv(path, "t,zx,zy")) {
        out.push_back({r[0], Vec2(r[1], r[2]), 0});
    }
    return out;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory) {
    auto os = open_out(path);
    os << "t,x,y,vx,vy,psi\n";
    for (const auto& s : trajectory) {
        os << fmt_double(s.t) << ',' << fmt_double(s.state.position.x()) << ','
           << fmt_double(s.state.position.y()) << ',' << fmt_double(s.state.velocity.x()) << ','
           << fmt_double(s.state.velocity.y()) << ',' << fmt_double(s.state.heading) << '\n';
    }
}

Trajectory read_trajectory_csv(const fs::path& path) {
    Trajectory out;
    for (const auto& r : read_numeric_csv(path, "t,x,y,vx,vy,psi")) {
        out.push_back({r[0], RobotState{Vec2(r[1], r[2]), Vec2(r[3], r[4]), r[5]}});
    }
    return out;
}

void write_map_csv(const fs::path& path, const FlowMap& map) {
    auto os = open_out(path);
    write_map_csv(os, map);
}

FlowMap read_map_csv(const fs::path& path, const GridSpec& grid) {
    const auto rows = read_numeric_csv(path, "node_id,x,y,vx,vy");
    const std::string name = path.filename().string();
    if (rows.size() != grid.node_count()) {
        throw ParseError(name, rows.size() + 1,
                         "expected " + std::to_string(grid.node_count()) + " nodes");
    }
    std::vector<Vec2> v(grid.node_count());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const Vec2 expected = grid.node_position(static_cast<int>(i));
        if (r[0] != static_cast<double>(i) || (Vec2(r[1], r[2]) - expected).norm() > 1e-9) {
            throw ParseError(name, i + 2, "node does not match the grid");
        }
        v[i] = Vec2(r[3], r[4]);
    }
    return FlowMap(grid, std::move(v));
}

void write_sensor_log(const fs::path& dir, const SensorLog& log) {
    fs::create_directories(dir);
    write_ins_csv(dir / "ins.csv", log.ins);
    write_adcp_csv(dir / "adcp.csv", log.adcp);
    write_trajectory_csv(dir / "truth.csv", log.truth);
}

SensorLog read_sensor_log(const fs::path& dir, const NoiseConfig& noise) {
    SensorLog log;
    log.noise = noise;
    log.ins = read_ins_csv(dir / "ins.csv");
    log.adcp = read_adcp_csv(dir / "adcp.csv");
    log.truth = read_trajectory_csv(dir / "truth.csv");
    if (log.truth.empty()) {
        throw ParseError("truth.csv", 2, "no samples");
    }
    const double t0 = log.truth.front().t;
    const double dt = log.dt();
    for (std::size_t i = 0; i < log.adcp.size(); ++i) {
        auto& z = log.adcp[i];
        const long long k = std::llround((z.t - t0) / dt);
        if (k <= 0 || static_cast<std::size_t>(k) >= log.truth.size() ||
            std::abs(log.truth[static_cast<std::size_t>(k)].t - z.t) > 1e-9) {
            throw ParseError("adcp.csv", i + 2, "timestamp does not match an INS step");
        }
        z.step = static_cast<std::size_t>(k);
    }
    for (std::size_t i = 0; i < log.ins.size(); ++i) {
        if (i + 1 >= log.truth.size() || std::abs(log.truth[i + 1].t - log.ins[i].t) > 1e-9) {
            throw ParseError("ins.csv", i + 2, "timestamp does not match truth.csv");
        }
    }
    log.validate();
    return log;
}

void write_errors_csv(const fs::path& path, const RunReport& report) {
    const auto& dr = report.dr;
    const auto& fl = report.flam;
    if (dr.t.size() != fl.t.size()) {
        throw ConfigError("DR and FLAM error series differ in length");
    }
    auto os = open_out(path);
    os << "t,dr_pos_err,flam_pos_err,dr_vel_err,flam_vel_err\n";
    for (std::size_t k = 0; k < fl.t.size(); ++k) {
        os << fmt_double(fl.t[k]) << ',' << fmt_double(dr.position[k]) << ','
           << fmt_double(fl.position[k]) << ',' << fmt_double(dr.velocity[k]) << ','
           << fmt_double(fl.velocity[k]) << '\n';
    }
}

void write_map_errors_csv(const fs::path& path, const GridSpec& grid, const RunReport& report) {
    const auto n = grid.node_count();
    if (report.lsf_map.node.size() != n || report.flam_map.node.size() != n) {
        throw ConfigError("map error series do not match the grid");
    }
    auto os = open_out(path);
    os << "node_id,x,y,boundary,lsf_err,flam_err\n";
    for (std::size_t i = 0; i < n; ++i) {
        const int id = static_cast<int>(i);
        const Vec2 p = grid.node_position(id);
        os << i << ',' << fmt_double(p.x()) << ',' << fmt_double(p.y()) << ','
           << (grid.is_boundary(id) ? 1 : 0) << ',' << fmt_double(report.lsf_map.node[i]) << ','
           << fmt_double(report.flam_map.node[i]) << '\n';
    }
}

void write_spectrum_csv(const fs::path& path, const EnergySpectrum& spectrum) {
    auto os = open_out(path);
    os << "k,energy,count\n";
    for (std::size_t i = 0; i < spectrum.wavenumber.size(); ++i) {
        os << fmt_double(spectrum.wavenumber[i]) << ',' << fmt_double(spectrum.energy[i]) << ','
           << spectrum.count[i] << '\n';
    }
}

}  // namespace flam
