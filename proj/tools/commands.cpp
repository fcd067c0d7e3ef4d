#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include "flam/errors.hpp"
#include "flam/io.hpp"
#include "flam/pipeline.hpp"
#include "flam/scenario.hpp"

namespace flam::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kMeta = "meta.json";
constexpr const char* kSolveMeta = "solve.json";

struct ScenarioArgs {
    std::string config;
    std::string preset_name;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App& cmd) {
        auto* c = cmd.add_option("--config", config, "scenario JSON file");
        auto* p = cmd.add_option("--preset", preset_name, "built-in scenario")
                      ->check(CLI::IsMember({"case1", "case2"}));
        c->excludes(p);
        cmd.add_option("--seed", seed, "overrides the scenario seed");
    }

    // Falls back to case1 when neither --config nor --preset is given.
    [[nodiscard]] Scenario load() const {
        Scenario s = !config.empty() ? scenario_from_json(read_text_file(config))
                                     : preset(preset_name.empty() ? "case1" : preset_name);
        if (seed) {
            s = s.with_seed(*seed);
        }
        s.validate();
        return s;
    }
};

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

Scenario read_meta(const fs::path& dir) {
    const fs::path p = dir / kMeta;
    if (!fs::exists(p)) {
        throw ConfigError("missing " + p.string() + " (run `flam simulate` first)");
    }
    return scenario_from_json(read_text_file(p));
}

void require_files(const fs::path& dir, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        if (!fs::exists(dir / n)) {
            throw ConfigError("missing " + (dir / n).string());
        }
    }
}

// ---- simulate ----------------------------------------------------------

int cmd_simulate(const ScenarioArgs& sa, const fs::path& out_dir, std::ostream& out) {
    const Scenario s = sa.load();
    const SensorLog log = simulate(s);
    write_sensor_log(out_dir, log);
    write_text_file(out_dir / kMeta, scenario_to_json(s));
    out << "simulated " << s.name << " seed " << s.seed << ": " << log.ins.size() << " INS, "
        << log.adcp.size() << " ADCP samples -> " << out_dir.string() << "\n";
    return 0;
}

// ---- solve -------------------------------------------------------------

int cmd_solve(const fs::path& in_dir, fs::path out_dir, std::ostream& out) {
    if (out_dir.empty()) {
        out_dir = in_dir;
    }
    require_files(in_dir, {"ins.csv", "adcp.csv", "truth.csv"});
    const Scenario s = read_meta(in_dir);
    const SensorLog log = read_sensor_log(in_dir, s.noise);

    fs::create_directories(out_dir);
    std::ofstream jsonl(out_dir / "iterations.jsonl", std::ios::binary);
    if (!jsonl) {
        throw std::runtime_error("cannot write " + (out_dir / "iterations.jsonl").string());
    }
    const SolveOutput r = solve(s, log, [&](const IterationRecord& rec) {
        jsonl << iteration_to_json(rec) << '\n';
    });
    jsonl.close();

    write_trajectory_csv(out_dir / "dr_trajectory.csv", r.dr);
    write_trajectory_csv(out_dir / "flam_trajectory.csv", r.flam);
    write_map_csv(out_dir / "lsf_map.csv", r.lsf_map);
    write_map_csv(out_dir / "flam_map.csv", r.flam_map);

    json meta;
    meta["log_dir"] = fs::absolute(in_dir).lexically_normal().string();
    meta["converged"] = r.converged;
    meta["diverged"] = r.diverged;
    meta["stalled"] = r.stalled;
    meta["iterations"] = r.iterations.size();
    meta["initial_cost"] = r.initial_cost;
    meta["final_cost"] = r.final_cost;
    meta["residual_count"] = r.residual_count;
    meta["dropped_observations"] = r.dropped_observations;
    write_text_file(out_dir / kSolveMeta, meta.dump(2) + "\n");
    if (fs::absolute(out_dir) != fs::absolute(in_dir)) {
        write_text_file(out_dir / kMeta, scenario_to_json(s));
    }

    out << "solved " << s.name << " seed " << s.seed << ": " << r.iterations.size()
        << " iterations, cost " << r.initial_cost << " -> " << r.final_cost
        << (r.converged ? " (converged)" : r.diverged ? " (diverged)" : r.stalled ? " (stalled)"
                                                                        : " (iteration cap)")
        << "\n";
    return r.diverged ? 3 : 0;
}

// ---- eval --------------------------------------------------------------

std::vector<IterationRecord> read_iterations(const fs::path& path) {
    std::vector<IterationRecord> out;
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = json::parse(line);
            IterationRecord r;
            r.iteration = j.at("iteration").get<std::size_t>();
            r.cost = j.at("cost").get<double>();
            r.step_norm = j.at("step_norm").get<double>();
            r.step_scale = j.value("step_scale", 1.0);
            r.cg_iterations = j.at("cg_iters").get<std::size_t>();
            r.cg_converged = j.value("cg_converged", true);
            r.accepted = j.value("accepted", true);
            out.push_back(r);
        } catch (const json::exception& e) {
            throw ParseError(path.filename().string(), n, e.what());
        }
    }
    return out;
}

void print_summary(const RunReport& rep, std::ostream& out) {
    out << "                 DR          FLAM\n";
    out << "pos RMSE [m]     " << fixed(rep.dr.position_rmse) << "      "
        << fixed(rep.flam.position_rmse) << "\n";
    out << "vel RMSE [m/s]   " << fixed(rep.dr.velocity_rmse) << "      "
        << fixed(rep.flam.velocity_rmse) << "\n";
    out << "terminal [m]     " << fixed(rep.dr.terminal_position()) << "      "
        << fixed(rep.flam.terminal_position()) << "\n";
    out << "                 LSF         FLAM\n";
    out << "map RMSE [m/s]   " << fixed(rep.lsf_map.rmse) << "      " << fixed(rep.flam_map.rmse)
        << "\n";
    out << "  interior       " << fixed(rep.lsf_map.interior_rmse) << "      "
        << fixed(rep.flam_map.interior_rmse) << "\n";
    out << "  boundary       " << fixed(rep.lsf_map.boundary_rmse) << "      "
        << fixed(rep.flam_map.boundary_rmse) << "\n";
    out << "iterations " << rep.iterations.size() << (rep.converged ? " (converged)" : "")
        << ", normalized residual " << rep.normalized_residual << "\n";
}

int cmd_eval_dir(const fs::path& dir, std::ostream& out) {
    require_files(dir, {kSolveMeta, "flam_trajectory.csv", "dr_trajectory.csv", "flam_map.csv",
                        "lsf_map.csv", "iterations.jsonl"});
    const Scenario s = read_meta(dir);
    json meta;
    try {
        meta = json::parse(read_text_file(dir / kSolveMeta));
    } catch (const json::exception& e) {
        throw ParseError(kSolveMeta, 1, e.what());
    }
    const fs::path log_dir = meta.at("log_dir").get<std::string>();
    const Trajectory truth = read_trajectory_csv(log_dir / "truth.csv");

    SolveOutput solved;
    solved.dr = read_trajectory_csv(dir / "dr_trajectory.csv");
    solved.flam = read_trajectory_csv(dir / "flam_trajectory.csv");
    solved.lsf_map = read_map_csv(dir / "lsf_map.csv", s.grid);
    solved.flam_map = read_map_csv(dir / "flam_map.csv", s.grid);
    solved.iterations = read_iterations(dir / "iterations.jsonl");
    solved.final_cost = meta.at("final_cost").get<double>();
    solved.residual_count = meta.at("residual_count").get<std::size_t>();
    solved.dropped_observations = meta.at("dropped_observations").get<std::size_t>();
    solved.converged = meta.at("converged").get<bool>();

    const RunReport rep = make_report(s, truth, truth_map(s), solved);
    write_text_file(dir / "report.json", report_to_json(rep));
    write_errors_csv(dir / "errors.csv", rep);
    write_map_errors_csv(dir / "map_err.csv", s.grid, rep);
    out << s.name << " seed " << s.seed << "\n";
    print_summary(rep, out);
    return 0;
}

// Independent seeds seed, seed+1, ... in parallel; output order is by seed.
int cmd_eval_runs(const ScenarioArgs& sa, std::size_t runs, std::size_t jobs,
                  const fs::path& out_dir, std::ostream& out) {
    const Scenario base = sa.load();
    std::vector<RunReport> reports(runs);
    std::vector<std::exception_ptr> failures(runs);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < runs; i = next++) {
            try {
                reports[i] = run_scenario(base.with_seed(base.seed + i));
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    if (jobs == 0) {
        jobs = std::max(1u, std::thread::hardware_concurrency());
    }
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(jobs, runs); ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();
    for (const auto& f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }

    std::string csv =
        "seed,iterations,converged,dr_pos_rmse,flam_pos_rmse,dr_terminal,flam_terminal,"
        "lsf_map_rmse,flam_map_rmse,flam_map_interior,flam_map_boundary,normalized_residual\n";
    out << "seed  iters  DR pos   FLAM pos  LSF map  FLAM map  interior  boundary\n";
    double dr_sum = 0.0;
    double fl_sum = 0.0;
    for (const auto& r : reports) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-5llu %5zu  %7.4f  %8.4f  %7.4f  %8.4f  %8.4f  %8.4f\n",
                      static_cast<unsigned long long>(r.seed), r.iterations.size(),
                      r.dr.position_rmse, r.flam.position_rmse, r.lsf_map.rmse, r.flam_map.rmse,
                      r.flam_map.interior_rmse, r.flam_map.boundary_rmse);
        out << line;
        dr_sum += r.dr.position_rmse;
        fl_sum += r.flam.position_rmse;
        csv += std::to_string(r.seed) + ',' + std::to_string(r.iterations.size()) + ',' +
               (r.converged ? "1" : "0") + ',' + fmt_double(r.dr.position_rmse) + ',' +
               fmt_double(r.flam.position_rmse) + ',' + fmt_double(r.dr.terminal_position()) +
               ',' + fmt_double(r.flam.terminal_position()) + ',' + fmt_double(r.lsf_map.rmse) +
               ',' + fmt_double(r.flam_map.rmse) + ',' + fmt_double(r.flam_map.interior_rmse) +
               ',' + fmt_double(r.flam_map.boundary_rmse) + ',' +
               fmt_double(r.normalized_residual) + '\n';
    }
    const auto n = static_cast<double>(runs);
    out << "mean position RMSE: DR " << fixed(dr_sum / n) << " m, FLAM " << fixed(fl_sum / n)
        << " m\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text_file(out_dir / "runs.csv", csv);
    }
    return 0;
}

// ---- spectrum ----------------------------------------------------------

int cmd_spectrum(const ScenarioArgs& sa, const SpectrumOptions& opts, const fs::path& out_path,
                 std::ostream& out) {
    const Scenario s = sa.load();
    if (!s.flow.ks) {
        throw ConfigError("scenario '" + s.name + "' has no turbulence (flow.ks)");
    }
    const KinematicTurbulence field(*s.flow.ks);
    const EnergySpectrum spec = sample_spectrum(field, opts);

    fs::path target = out_path.empty() ? fs::path("spectrum.csv") : out_path;
    if (fs::is_directory(target)) {
        target /= "spectrum.csv";
    }
    write_spectrum_csv(target, spec);
    if (spec.empty) {
        out << "empty spectrum (field carries no energy) -> " << target.string() << "\n";
        return 0;
    }
    out << "inertial-range slope " << fixed(spec.slope, 3) << " over k in ["
        << fixed(spec.fit_kmin, 1) << ", " << fixed(spec.fit_kmax, 1) << "] rad/m, total energy "
        << spec.total_energy << " -> " << target.string() << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Flow-aided navigation and mapping: simulate, solve, evaluate"};
    app.name("flam");
    app.require_subcommand(1);

    ScenarioArgs sim_args;
    std::string sim_out;
    auto* sim = app.add_subcommand("simulate", "write a synthetic sensor log");
    sim_args.attach(*sim);
    sim->add_option("--out", sim_out, "output directory")->required();

    std::string solve_in;
    std::string solve_out;
    auto* slv = app.add_subcommand("solve", "dead reckoning, LSF map and the FLAM estimate");
    slv->add_option("--in", solve_in, "directory written by simulate")->required();
    slv->add_option("--out", solve_out, "output directory (default: --in)");

    ScenarioArgs eval_args;
    std::string eval_in;
    std::string eval_out;
    std::size_t runs = 0;
    std::size_t jobs = 0;
    auto* ev = app.add_subcommand("eval", "error report for a solved run, or a Monte Carlo batch");
    auto* ev_in = ev->add_option("--in", eval_in, "directory written by solve");
    eval_args.attach(*ev);
    auto* ev_runs = ev->add_option("--runs", runs, "run N seeds in memory (seed, seed+1, ...)")
                        ->check(CLI::PositiveNumber);
    ev->add_option("--jobs", jobs, "worker threads for --runs (default: all cores)");
    ev->add_option("--out", eval_out, "directory for runs.csv (with --runs)");
    ev_in->excludes(ev_runs);

    ScenarioArgs spec_args;
    std::string spec_out;
    SpectrumOptions spec_opts;
    auto* sp = app.add_subcommand("spectrum", "energy spectrum of the scenario's turbulence");
    spec_args.attach(*sp);
    sp->add_option("--out", spec_out, "CSV file or directory (default: ./spectrum.csv)");
    sp->add_option("--samples", spec_opts.samples, "grid points per side")
        ->check(CLI::Range(16, 4096));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (sim->parsed()) {
            return cmd_simulate(sim_args, sim_out, out);
        }
        if (slv->parsed()) {
            return cmd_solve(solve_in, solve_out, out);
        }
        if (ev->parsed()) {
            if (!eval_in.empty()) {
                return cmd_eval_dir(eval_in, out);
            }
            if (runs == 0) {
                err << "eval: give --in DIR or --runs N\n";
                return 2;
            }
            return cmd_eval_runs(eval_args, runs, jobs, eval_out, out);
        }
        return cmd_spectrum(spec_args, spec_opts, spec_out, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace flam::cli
