// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//
//   flam_acceptance [--only A2,A4] [--allow-fail A3]
//
// Exit status is nonzero when a criterion fails that was not listed in
// --allow-fail. Allowed failures still print FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "commands.hpp"
#include "flam/factors.hpp"
#include "flam/flow_map.hpp"
#include "flam/flow_models.hpp"
#include "flam/io.hpp"
#include "flam/metrics.hpp"
#include "flam/pipeline.hpp"
#include "flam/scenario.hpp"
#include "flam/solver.hpp"
#include "support.hpp"

namespace {

using namespace flam;
namespace fs = std::filesystem;

// --- pinned tolerances -------------------------------------------------------

constexpr int kInstances = 100;
constexpr double kJacobianRelTol = 1e-5;
constexpr double kJacobianFdStep = 1e-6;
constexpr double kA1Seconds = 5.0;

constexpr int kSeeds = 10;
constexpr int kA2MinWins = 9;
constexpr double kA2RmseRatio = 0.5;
constexpr double kA2Seconds = 120.0;

constexpr std::size_t kA3MaxIterations = 10;
constexpr double kA3CostSlack = 1e-12;  // relative, for round-off in the cost sum

constexpr double kA5RelTol = 1e-6;
constexpr int kA5Iterations = 5;
constexpr double kA5Seconds = 1.0;

constexpr double kA6StepTol = 1e-6;
constexpr double kA6CostTol = 1e-16;
constexpr double kA6Duration = 300.0;

constexpr double kA7Target = -5.0 / 3.0;
constexpr double kA7Band = 0.3;
constexpr double kA7Seconds = 30.0;

constexpr int kA8MinWins = 8;
constexpr double kA8SignFraction = 0.8;
constexpr double kA8SpeedFloor = 0.1;  // fraction of the peak gyre speed A pi
constexpr double kA8Seconds = 300.0;

constexpr int kA9Points = 100000;
constexpr double kA9Tol = 1e-12;
constexpr double kA9EdgeGap = 1e-9;
constexpr double kA9EdgeTol = 1e-8;
constexpr double kA9Seconds = 5.0;

// --- harness -----------------------------------------------------------------

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Clock {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::set<std::string> split_list(const std::string& s) {
    std::set<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.insert(item);
        }
    }
    return out;
}

// --- shared Monte Carlo runs -------------------------------------------------

struct SeedRun {
    RunReport report;
    SolveOutput solved;
    FlowMap map_truth;
};

const std::vector<SeedRun>& runs(const std::string& name) {
    static std::map<std::string, std::vector<SeedRun>> cache;
    auto [it, fresh] = cache.try_emplace(name);
    if (fresh) {
        for (int seed = 1; seed <= kSeeds; ++seed) {
            const Scenario s = preset(name).with_seed(static_cast<std::uint64_t>(seed));
            const SensorLog log = simulate(s);
            SeedRun r;
            r.map_truth = truth_map(s);
            r.solved = solve(s, log);
            r.report = make_report(s, log.truth, r.map_truth, r.solved);
            it->second.push_back(std::move(r));
        }
    }
    return it->second;
}

// --- A1 ----------------------------------------------------------------------

template <int R, int C, typename F>
Eigen::Matrix<double, R, C> central_difference(const Eigen::Matrix<double, C, 1>& x0, F&& f) {
    Eigen::Matrix<double, R, C> J;
    for (int j = 0; j < C; ++j) {
        Eigen::Matrix<double, C, 1> xp = x0;
        Eigen::Matrix<double, C, 1> xm = x0;
        xp(j) += kJacobianFdStep;
        xm(j) -= kJacobianFdStep;
        J.col(j) = (f(xp) - f(xm)) / (2 * kJacobianFdStep);
    }
    return J;
}

RobotState unpack(const Eigen::Matrix<double, 5, 1>& v) {
    return {Vec2(v(0), v(1)), Vec2(v(2), v(3)), v(4)};
}

Eigen::Matrix<double, 5, 1> pack(const RobotState& s) {
    Eigen::Matrix<double, 5, 1> v;
    v << s.position, s.velocity, s.heading;
    return v;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-12);
}

Outcome a1() {
    const Clock clock;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.2, 9.8);
    const GridSpec grid{Vec2::Zero(), 2.5, 2.5, 5, 5};
    const double dt = 0.1;
    auto state = [&] {
        return RobotState{Vec2(pos(rng), pos(rng)), Vec2(u(rng), u(rng)), std::numbers::pi * u(rng)};
    };

    double worst_motion = 0.0;
    double worst_obs = 0.0;
    for (int n = 0; n < kInstances; ++n) {
        const RobotState prev = state();
        const RobotState curr = state();
        InsSample ins;
        ins.t = dt;
        ins.accel = Vec2(u(rng), u(rng));
        ins.yaw_rate = u(rng);
        Eigen::Matrix<double, 10, 1> x;
        x << pack(prev), pack(curr);
        const auto motion_fd = central_difference<5, 10>(x, [&](const Eigen::Matrix<double, 10, 1>& v) {
            return motion_residual(unpack(v.head<5>()), unpack(v.tail<5>()), ins, dt);
        });
        worst_motion = std::max(worst_motion, rel_err(motion_jacobian(prev, curr, ins, dt), motion_fd));

        std::vector<Vec2> nodes;
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            nodes.emplace_back(0.3 * u(rng), 0.3 * u(rng));
        }
        const FlowMap map(grid, nodes);
        AdcpSample z;
        z.rel_flow = Vec2(u(rng), u(rng));
        const CellIndex cell = find_cell(grid, curr.position).value();
        const ObservationLinearization lin = linearize_observation(curr, map, cell, z);
        Eigen::Matrix<double, 13, 1> y;
        y.head<5>() = pack(curr);
        for (int j = 0; j < 4; ++j) {
            y.segment<2>(5 + 2 * j) = map[static_cast<std::size_t>(lin.nodes[static_cast<std::size_t>(j)])];
        }
        const auto obs_fd = central_difference<2, 13>(y, [&](const Eigen::Matrix<double, 13, 1>& v) {
            FlowMap m = map;
            for (int j = 0; j < 4; ++j) {
                m[static_cast<std::size_t>(lin.nodes[static_cast<std::size_t>(j)])] = v.segment<2>(5 + 2 * j);
            }
            return observation_residual(unpack(v.head<5>()), m, cell, z);
        });
        worst_obs = std::max(worst_obs, rel_err(lin.jacobian, obs_fd));
    }
    const double t = clock.seconds();
    return {std::max(worst_motion, worst_obs) <= kJacobianRelTol && t < kA1Seconds,
            fmt("max rel err motion %.2e, observation %.2e (tol %.0e); %.2f s", worst_motion,
                worst_obs, kJacobianRelTol, t)};
}

// --- A2 ----------------------------------------------------------------------

Outcome a2() {
    const Clock clock;
    const auto& rs = runs("case1");
    int wins = 0;
    double flam_rmse = 0.0;
    double dr_rmse = 0.0;
    for (const auto& r : rs) {
        wins += r.report.flam.terminal_position() < r.report.dr.terminal_position() ? 1 : 0;
        flam_rmse += r.report.flam.position_rmse / kSeeds;
        dr_rmse += r.report.dr.position_rmse / kSeeds;
    }
    const double t = clock.seconds();
    return {wins >= kA2MinWins && flam_rmse <= kA2RmseRatio * dr_rmse && t < kA2Seconds,
            fmt("terminal wins %d/%d; mean pos RMSE FLAM %.3f m vs DR %.3f m (ratio %.3f); %.1f s",
                wins, kSeeds, flam_rmse, dr_rmse, flam_rmse / dr_rmse, t)};
}

// --- A3 ----------------------------------------------------------------------

Outcome a3() {
    const auto& r = runs("case1").front().solved;
    bool monotone = true;
    double prev = r.initial_cost;
    for (const auto& it : r.iterations) {
        monotone = monotone && it.cost <= prev * (1 + kA3CostSlack);
        prev = it.cost;
    }
    const std::size_t n = r.iterations.size();
    return {r.converged && n <= kA3MaxIterations && monotone,
            fmt("seed 1: %s after %zu iterations (limit %zu), cost %s", r.converged ? "converged" : "not converged",
                n, kA3MaxIterations, monotone ? "nonincreasing" : "increased")};
}

// --- A4 ----------------------------------------------------------------------

Outcome a4() {
    const auto& rs = runs("case1");
    int better = 0;
    double interior = 0.0;
    double boundary = 0.0;
    double worst_margin = 1e300;
    for (const auto& r : rs) {
        const double f = r.report.flam_map.rmse;
        const double l = r.report.lsf_map.rmse;
        better += f < l ? 1 : 0;
        worst_margin = std::min(worst_margin, l - f);
        interior += r.report.flam_map.interior_rmse / kSeeds;
        boundary += r.report.flam_map.boundary_rmse / kSeeds;
    }
    return {better == kSeeds && interior <= boundary,
            fmt("FLAM map < LSF on %d/%d seeds (smallest margin %.3f m/s); mean interior %.3f <= "
                "boundary %.3f m/s",
                better, kSeeds, worst_margin, interior, boundary)};
}

// --- A5 ----------------------------------------------------------------------

Outcome a5() {
    const Clock clock;
    const auto t = test::tiny_problem();
    const FlamProblem p(t.log, t.grid, t.weights);
    SolverConfig cfg;
    cfg.line_search = false;
    cfg.step_tolerance = 1e-300;
    cfg.cg.relative_tolerance = 1e-12;
    cfg.anchor_weight = 1e8;

    FullState dense = t.start;
    double worst = 0.0;
    for (int i = 1; i <= kA5Iterations; ++i) {
        dense.apply_increment(test::dense_gn_step(p, dense, cfg.damping, cfg.anchor_weight));
        cfg.max_iterations = static_cast<std::size_t>(i);
        const OptimizeResult r = optimize(p, t.start, cfg);
        worst = std::max(worst, rel_err(r.estimate.to_vector(), dense.to_vector()));
    }
    const double s = clock.seconds();
    return {worst <= kA5RelTol && s < kA5Seconds,
            fmt("max rel diff sparse vs dense over %d iterations %.2e (tol %.0e); %.3f s",
                kA5Iterations, worst, kA5RelTol, s)};
}

// --- A6 ----------------------------------------------------------------------

Outcome a6() {
    // ADCP sees the bilinear interpolant, so the true map is exactly representable
    const FlowMap map = test::wavy_map();
    const SensorLog log = test::bilinear_flow_log(map, kA6Duration, NoiseConfig::noiseless(), 1);
    const FlamProblem p(log, map.grid(), FactorWeights::from_noise(log.noise));
    const FullState truth = test::truth_state(log, map);
    const double cost = p.cost(truth);
    const OptimizeResult r = optimize(p, truth, SolverConfig{});
    const double step = r.iterations.empty() ? 1e300 : r.iterations.front().step_norm;
    return {step <= kA6StepTol && cost <= kA6CostTol,
            fmt("cost at truth %.2e (tol %.0e); first step %.2e (tol %.0e)", cost, kA6CostTol, step,
                kA6StepTol)};
}

// --- A7 ----------------------------------------------------------------------

Outcome a7() {
    const Clock clock;
    const Scenario s = preset("case2");
    const KinematicTurbulence field(*s.flow.ks);
    const EnergySpectrum e = sample_spectrum(field);
    const double t = clock.seconds();
    return {!e.empty && std::abs(e.slope - kA7Target) <= kA7Band && t < kA7Seconds,
            fmt("slope %.3f over k in [%.1f, %.1f] rad/m (Re %.0f; target %.3f +/- %.1f); %.1f s",
                e.slope, e.fit_kmin, e.fit_kmax, s.flow.ks->reynolds_number(), kA7Target, kA7Band, t)};
}

// --- A8 ----------------------------------------------------------------------

Outcome a8() {
    const Clock clock;
    const auto& c2 = runs("case2");
    const auto& c1 = runs("case1");
    const Scenario s = preset("case2");
    const double floor = kA8SpeedFloor * s.flow.gyre.amplitude * std::numbers::pi;

    int wins = 0;
    int matched = 0;
    int counted = 0;
    double worst_fraction = 1.0;
    double pos2 = 0.0;
    double vel2 = 0.0;
    double pos1 = 0.0;
    double vel1 = 0.0;
    for (std::size_t i = 0; i < c2.size(); ++i) {
        const auto& r = c2[i];
        wins += r.report.flam.position_rmse < r.report.dr.position_rmse ? 1 : 0;
        const GridSpec& g = r.map_truth.grid();
        int m = 0;
        int n = 0;
        for (int id = 0; id < static_cast<int>(g.node_count()); ++id) {
            const double v_true = r.map_truth[static_cast<std::size_t>(id)].y();
            if (g.is_boundary(id) || std::abs(v_true) < floor) {
                continue;
            }
            ++n;
            m += (r.solved.flam_map[static_cast<std::size_t>(id)].y() > 0) == (v_true > 0) ? 1 : 0;
        }
        matched += m;
        counted += n;
        worst_fraction = std::min(worst_fraction, n > 0 ? static_cast<double>(m) / n : 0.0);
        pos2 += r.report.flam.position_rmse / kSeeds;
        vel2 += r.report.flam.velocity_rmse / kSeeds;
        pos1 += c1[i].report.flam.position_rmse / kSeeds;
        vel1 += c1[i].report.flam.velocity_rmse / kSeeds;
    }
    const double t = clock.seconds();
    const bool ok = wins >= kA8MinWins && worst_fraction >= kA8SignFraction && pos2 > pos1 &&
                    vel2 > vel1 && t < kA8Seconds;
    return {ok, fmt("RMSE wins %d/%d; v-sign match %d/%d (worst seed %.0f%%); case2 vs case1 mean "
                    "FLAM pos %.3f > %.3f m, vel %.4f > %.4f m/s; %.1f s",
                    wins, kSeeds, matched, counted, 100 * worst_fraction, pos2, pos1, vel2, vel1, t)};
}

// --- A9 ----------------------------------------------------------------------

Outcome a9() {
    const Clock clock;
    const GridSpec g{Vec2(-1.0, 2.0), 2.5, 1.5, 7, 5};
    const Rect hull = g.hull();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ux(hull.min.x(), hull.max.x());
    std::uniform_real_distribution<double> uy(hull.min.y(), hull.max.y());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 0.3);

    std::vector<Vec2> rnd(g.node_count());
    for (auto& v : rnd) {
        v = Vec2(n(rng), n(rng));
    }
    const FlowMap random_map(g, rnd);
    Eigen::Matrix2d B;
    B << 0.3, -0.2, 0.1, 0.05;
    const Vec2 a(0.4, -0.7);
    std::vector<Vec2> aff;
    for (int id = 0; id < static_cast<int>(g.node_count()); ++id) {
        aff.push_back(a + B * g.node_position(id));
    }
    const FlowMap affine_map(g, aff);

    double unity = 0.0;
    double negative = 0.0;
    double affine = 0.0;
    double edge = 0.0;
    for (int i = 0; i < kA9Points; ++i) {
        const Vec2 p(ux(rng), uy(rng));
        const CellWeights w = locate_cell(g, p);
        double sum = 0.0;
        for (double wi : w.weights) {
            sum += wi;
            negative = std::min(negative, wi);
        }
        unity = std::max(unity, std::abs(sum - 1.0));
        affine = std::max(affine, (interpolate(affine_map, p) - (a + B * p)).norm());

        // alternate vertical and horizontal interior edges
        if (i % 2 == 0) {
            const int c = 1 + static_cast<int>(u(rng) * (g.nx - 2));
            const double xe = g.origin.x() + c * g.dx;
            const double y = uy(rng);
            edge = std::max(edge, (interpolate(random_map, Vec2(xe - kA9EdgeGap, y)) -
                                   interpolate(random_map, Vec2(xe + kA9EdgeGap, y)))
                                      .norm());
        } else {
            const int r = 1 + static_cast<int>(u(rng) * (g.ny - 2));
            const double ye = g.origin.y() + r * g.dy;
            const double x = ux(rng);
            edge = std::max(edge, (interpolate(random_map, Vec2(x, ye - kA9EdgeGap)) -
                                   interpolate(random_map, Vec2(x, ye + kA9EdgeGap)))
                                      .norm());
        }
    }
    double nodes = 0.0;
    for (int id = 0; id < static_cast<int>(g.node_count()); ++id) {
        nodes = std::max(nodes, (interpolate(random_map, g.node_position(id)) -
                                 random_map[static_cast<std::size_t>(id)])
                                    .norm());
    }
    const double t = clock.seconds();
    const bool ok = unity <= kA9Tol && negative >= -kA9Tol && nodes <= kA9Tol && affine <= kA9Tol &&
                    edge <= kA9EdgeTol && t < kA9Seconds;
    return {ok, fmt("%d points: unity %.1e, min weight %.1e, nodes %.1e, affine %.1e, edge jump %.1e; "
                    "%.2f s",
                    kA9Points, unity, negative, nodes, affine, edge, t)};
}

// --- A10 ---------------------------------------------------------------------

Outcome a10() {
    const fs::path root = fs::temp_directory_path() / "flam_acceptance_a10";
    fs::remove_all(root);
    std::vector<std::string> reports;
    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        std::ostringstream out;
        std::ostringstream err;
        for (const auto& args : std::vector<std::vector<std::string>>{
                 {"simulate", "--preset", "case1", "--seed", "3", "--out", dir.string()},
                 {"solve", "--in", dir.string()},
                 {"eval", "--in", dir.string()}}) {
            if (cli::run(args, out, err) != 0) {
                return {false, "CLI run failed: " + err.str()};
            }
        }
        reports.push_back(read_text_file(dir / "report.json"));
    }
    fs::remove_all(root);
    const bool same = reports[0] == reports[1] && !reports[0].empty();
    return {same, fmt("two seeded simulate/solve/eval runs: report.json %s (%zu bytes)",
                      same ? "byte-identical" : "differs", reports[0].size())};
}

struct Criterion {
    const char* id;
    const char* title;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> only;
    std::set<std::string> allowed;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if ((a == "--only" || a == "--allow-fail") && i + 1 < argc) {
            (a == "--only" ? only : allowed).merge(split_list(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: %s [--only A1,A2] [--allow-fail A3]\n", argv[0]);
            return 2;
        }
    }

    const std::vector<Criterion> criteria = {
        {"A1", "Jacobians vs central differences", a1},
        {"A2", "case1 FLAM beats dead reckoning", a2},
        {"A3", "case1 converges within 10 iterations", a3},
        {"A4", "case1 map recovery", a4},
        {"A5", "sparse solver matches dense Gauss-Newton", a5},
        {"A6", "noiseless truth is a fixed point", a6},
        {"A7", "turbulence spectrum slope", a7},
        {"A8", "case2 behaviour", a8},
        {"A9", "bilinear interpolation properties", a9},
        {"A10", "seeded runs are byte-identical", a10},
    };

    int hard_failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.contains(c.id)) {
            continue;
        }
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool excused = !o.pass && allowed.contains(c.id);
        std::printf("%-4s %-42s %s  %s%s\n", c.id, c.title, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                    excused ? "  [allowed]" : "");
        std::fflush(stdout);
        hard_failures += o.pass || excused ? 0 : 1;
    }
    return hard_failures == 0 ? 0 : 1;
}
