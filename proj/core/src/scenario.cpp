#include "flam/scenario.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "flam/errors.hpp"
#include "flam/rng.hpp"

namespace flam {

using json = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, const char* where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) {
        throw ConfigError(std::string(where) + " must be an object");
    }
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& item : j.items()) {
        if (!allowed.contains(item.key())) {
            throw ConfigError(std::string("unknown key '") + item.key() + "' in " + where);
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

void read_vec(const json& j, const char* key, Vec2& out) {
    if (j.contains(key)) {
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
            throw ConfigError(std::string("'") + key + "' must be a two-number array");
        }
        out = Vec2(a[0].get<double>(), a[1].get<double>());
    }
}

json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }

void read_channel(const json& j, const char* where, NoiseChannel& c) {
    reject_unknown(j, where, {"white_density", "bias_sigma", "bias_tau"});
    read(j, "white_density", c.white_density);
    read(j, "bias_sigma", c.bias_sigma);
    read(j, "bias_tau", c.bias_tau);
}

json channel(const NoiseChannel& c) {
    return {{"white_density", c.white_density},
            {"bias_sigma", c.bias_sigma},
            {"bias_tau", c.bias_tau}};
}

Preconditioner preconditioner_from_string(const std::string& s) {
    if (s == "none") {
        return Preconditioner::none;
    }
    if (s == "block_jacobi") {
        return Preconditioner::block_jacobi;
    }
    if (s == "trajectory_map") {
        return Preconditioner::trajectory_map;
    }
    throw ConfigError("unknown preconditioner '" + s + "'");
}

bool sigma_ok(double v) { return v >= 0.0 && std::isfinite(v); }

}  // namespace

std::string_view to_string(Preconditioner p) {
    switch (p) {
    case Preconditioner::none:
        return "none";
    case Preconditioner::block_jacobi:
        return "block_jacobi";
    case Preconditioner::trajectory_map:
        return "trajectory_map";
    }
    return "unknown";
}

void Scenario::validate() const {
    flow.validate();
    grid.validate();
    noise.validate();
    solver.validate();
    if (!(sigma_v > 0.0)) {
        throw ConfigError("factors.sigma_v must be positive");
    }
    if (!(sigma_ok(sigma_map))) {
        throw ConfigError("factors.sigma_map must be finite and nonnegative");
    }
    const Rect hull = grid.hull();
    if (!flow.domain.contains(hull.min, 1e-9) || !flow.domain.contains(hull.max, 1e-9)) {
        throw ConfigError("grid extends outside the flow domain");
    }
    trajectory_params().validate();
}

TrajectoryParams Scenario::trajectory_params() const {
    TrajectoryParams p = trajectory;
    p.domain = flow.domain;
    p.dt = 1.0 / noise.ins.rate_hz;
    return p;
}

Scenario Scenario::with_seed(std::uint64_t new_seed) const {
    Scenario s = *this;
    s.seed = new_seed;
    if (s.flow.ks && !s.ks_seed_pinned) {
        s.flow.ks->rng_seed = stream_seed(new_seed, RngStream::turbulence);
    }
    return s;
}

Scenario preset(std::string_view name) {
    Scenario s;
    s.name = std::string(name);
    s.noise = NoiseConfig::consumer_grade(10.0);
    if (name == "case1") {
        s.flow.variant = FlowVariant::single_gyre;
        s.flow.domain = Rect{Vec2::Zero(), Vec2(10.0, 10.0)};
        s.grid = GridSpec{Vec2::Zero(), 2.5, 2.5, 5, 5};
        s.trajectory.start = Vec2(2.0, 8.0);
    } else if (name == "case2") {
        s.flow.variant = FlowVariant::turbulent_double_gyre;
        s.flow.domain = Rect{Vec2::Zero(), Vec2(20.0, 10.0)};
        s.flow.ks = KsParams{};
        s.grid = GridSpec{Vec2::Zero(), 2.5, 2.5, 9, 5};
        s.trajectory.start = Vec2(3.0, 8.0);
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected case1 or case2)");
    }
    s.trajectory.heading = -std::numbers::pi / 2.0;
    return s.with_seed(s.seed);
}

Scenario scenario_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, "config",
                   {"name", "seed", "flow", "grid", "trajectory", "noise", "factors", "solver"});

    Scenario s = preset("case1");
    read(j, "name", s.name);
    read(j, "seed", s.seed);

    if (j.contains("flow")) {
        const auto& f = j.at("flow");
        reject_unknown(f, "flow", {"variant", "domain", "gyre", "ks"});
        if (f.contains("variant")) {
            s.flow.variant = flow_variant_from_string(f.at("variant").get<std::string>());
        }
        if (f.contains("domain")) {
            const auto& d = f.at("domain");
            reject_unknown(d, "flow.domain", {"min", "max"});
            read_vec(d, "min", s.flow.domain.min);
            read_vec(d, "max", s.flow.domain.max);
        }
        if (f.contains("gyre")) {
            const auto& g = f.at("gyre");
            reject_unknown(g, "flow.gyre", {"amplitude", "epsilon", "omega", "length_scale"});
            read(g, "amplitude", s.flow.gyre.amplitude);
            read(g, "epsilon", s.flow.gyre.epsilon);
            read(g, "omega", s.flow.gyre.omega);
            read(g, "length_scale", s.flow.gyre.length_scale);
        }
        if (f.contains("ks") && !f.at("ks").is_null()) {
            const auto& k = f.at("ks");
            reject_unknown(k, "flow.ks",
                           {"integral_scale", "kolmogorov_scale", "n_modes", "intensity",
                            "unsteadiness", "rng_seed"});
            KsParams ks = s.flow.ks.value_or(KsParams{});
            read(k, "integral_scale", ks.integral_scale);
            read(k, "kolmogorov_scale", ks.kolmogorov_scale);
            read(k, "n_modes", ks.n_modes);
            read(k, "intensity", ks.intensity);
            read(k, "unsteadiness", ks.unsteadiness);
            if (k.contains("rng_seed")) {
                read(k, "rng_seed", ks.rng_seed);
                s.ks_seed_pinned = true;
            }
            s.flow.ks = ks;
        }
        if (s.flow.variant == FlowVariant::turbulent_double_gyre && !s.flow.ks) {
            s.flow.ks = KsParams{};
        }
        if (s.flow.variant != FlowVariant::turbulent_double_gyre) {
            s.flow.ks.reset();
        }
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        reject_unknown(g, "grid", {"origin", "spacing", "dims"});
        read_vec(g, "origin", s.grid.origin);
        if (g.contains("spacing")) {
            Vec2 sp(s.grid.dx, s.grid.dy);
            read_vec(g, "spacing", sp);
            s.grid.dx = sp.x();
            s.grid.dy = sp.y();
        }
        if (g.contains("dims")) {
            const auto& d = g.at("dims");
            if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() ||
                !d[1].is_number_integer()) {
                throw ConfigError("'dims' must be two integers [nx, ny]");
            }
            s.grid.nx = d[0].get<int>();
            s.grid.ny = d[1].get<int>();
        }
    }
    if (j.contains("trajectory")) {
        const auto& t = j.at("trajectory");
        reject_unknown(t, "trajectory",
                       {"start", "heading", "v_max", "speed", "duration", "lane_spacing"});
        read_vec(t, "start", s.trajectory.start);
        read(t, "heading", s.trajectory.heading);
        read(t, "v_max", s.trajectory.v_max);
        read(t, "speed", s.trajectory.speed);
        read(t, "duration", s.trajectory.duration);
        read(t, "lane_spacing", s.trajectory.lane_spacing);
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        reject_unknown(n, "noise", {"ins", "adcp"});
        if (n.contains("ins")) {
            const auto& i = n.at("ins");
            reject_unknown(i, "noise.ins", {"rate_hz", "accel", "gyro"});
            read(i, "rate_hz", s.noise.ins.rate_hz);
            if (i.contains("accel")) {
                read_channel(i.at("accel"), "noise.ins.accel", s.noise.ins.accel);
            }
            if (i.contains("gyro")) {
                read_channel(i.at("gyro"), "noise.ins.gyro", s.noise.ins.gyro);
            }
        }
        if (n.contains("adcp")) {
            const auto& a = n.at("adcp");
            reject_unknown(a, "noise.adcp", {"rate_hz", "flow"});
            read(a, "rate_hz", s.noise.adcp.rate_hz);
            if (a.contains("flow")) {
                read_channel(a.at("flow"), "noise.adcp.flow", s.noise.adcp.flow);
            }
        }
    }
    if (j.contains("factors")) {
        const auto& f = j.at("factors");
        reject_unknown(f, "factors", {"sigma_v", "sigma_map"});
        read(f, "sigma_v", s.sigma_v);
        read(f, "sigma_map", s.sigma_map);
    }
    if (j.contains("solver")) {
        const auto& v = j.at("solver");
        reject_unknown(v, "solver",
                       {"damping", "line_search", "max_step_halvings", "anchor_weight",
                        "max_iterations", "step_tolerance", "lsf_ridge", "cg"});
        read(v, "damping", s.solver.damping);
        read(v, "line_search", s.solver.line_search);
        read(v, "max_step_halvings", s.solver.max_step_halvings);
        read(v, "anchor_weight", s.solver.anchor_weight);
        read(v, "max_iterations", s.solver.max_iterations);
        read(v, "step_tolerance", s.solver.step_tolerance);
        read(v, "lsf_ridge", s.solver.lsf_ridge);
        if (v.contains("cg")) {
            const auto& c = v.at("cg");
            reject_unknown(c, "solver.cg", {"relative_tolerance", "max_iterations", "preconditioner"});
            read(c, "relative_tolerance", s.solver.cg.relative_tolerance);
            read(c, "max_iterations", s.solver.cg.max_iterations);
            if (c.contains("preconditioner")) {
                s.solver.cg.preconditioner =
                    preconditioner_from_string(c.at("preconditioner").get<std::string>());
            }
        }
    }

    s = s.with_seed(s.seed);
    s.validate();
    return s;
}

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["seed"] = s.seed;

    json flow;
    flow["variant"] = std::string(to_string(s.flow.variant));
    flow["domain"] = {{"min", vec(s.flow.domain.min)}, {"max", vec(s.flow.domain.max)}};
    flow["gyre"] = {{"amplitude", s.flow.gyre.amplitude},
                    {"epsilon", s.flow.gyre.epsilon},
                    {"omega", s.flow.gyre.omega},
                    {"length_scale", s.flow.gyre.length_scale}};
    if (s.flow.ks) {
        const auto& k = *s.flow.ks;
        flow["ks"] = {{"integral_scale", k.integral_scale},
                      {"kolmogorov_scale", k.kolmogorov_scale},
                      {"n_modes", k.n_modes},
                      {"intensity", k.intensity},
                      {"unsteadiness", k.unsteadiness},
                      {"rng_seed", k.rng_seed}};
    }
    j["flow"] = flow;
    j["grid"] = {{"origin", vec(s.grid.origin)},
                 {"spacing", json::array({s.grid.dx, s.grid.dy})},
                 {"dims", json::array({s.grid.nx, s.grid.ny})}};
    j["trajectory"] = {{"start", vec(s.trajectory.start)},
                       {"heading", s.trajectory.heading},
                       {"v_max", s.trajectory.v_max},
                       {"speed", s.trajectory.speed},
                       {"duration", s.trajectory.duration},
                       {"lane_spacing", s.trajectory.lane_spacing}};
    j["noise"] = {{"ins",
                   {{"rate_hz", s.noise.ins.rate_hz},
                    {"accel", channel(s.noise.ins.accel)},
                    {"gyro", channel(s.noise.ins.gyro)}}},
                  {"adcp", {{"rate_hz", s.noise.adcp.rate_hz}, {"flow", channel(s.noise.adcp.flow)}}}};
    j["factors"] = {{"sigma_v", s.sigma_v}, {"sigma_map", s.sigma_map}};
    j["solver"] = {{"damping", s.solver.damping},
                   {"line_search", s.solver.line_search},
                   {"max_step_halvings", s.solver.max_step_halvings},
                   {"anchor_weight", s.solver.anchor_weight},
                   {"max_iterations", s.solver.max_iterations},
                   {"step_tolerance", s.solver.step_tolerance},
                   {"lsf_ridge", s.solver.lsf_ridge},
                   {"cg",
                    {{"relative_tolerance", s.solver.cg.relative_tolerance},
                     {"max_iterations", s.solver.cg.max_iterations},
                     {"preconditioner", std::string(to_string(s.solver.cg.preconditioner))}}}};
    return j.dump(2) + "\n";
}

}  // namespace flam
