#include "chimera/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>

#ifndef CHIMERA_DEFAULT_DATA_DIR
#define CHIMERA_DEFAULT_DATA_DIR "data"
#endif

namespace chimera {

namespace {

using nlohmann::json;

json params_json(const RunConfig& cfg) {
    const ScenarioParams& p = cfg.params;
    return json{{"scenario", p.tag},       {"re", p.re},         {"re_study", p.re_study}, {"t_f", p.t_f},
                {"tableau", p.tableau},    {"cfl", p.cfl},       {"dt_max", p.dt_max},     {"dt_fixed", p.dt_fixed},
                {"layers", p.layers},      {"resolution", p.resolution}, {"levels", p.levels},
                {"motion", p.motion},      {"foreground", p.foreground}, {"wake_perturbation", p.wake_perturbation}, {"pressure_damping", p.pressure_damping}, {"seed", p.seed},     {"rtol", p.rtol},         {"max_iter", p.max_iter},
                {"precond", p.precond},    {"output_every", cfg.output_every}};
}

json error_json(const ErrorRow& r) {
    json j{{"mesh_h", r.mesh_h}, {"err_u", r.err_u}, {"err_v", r.err_v}, {"err_p", r.err_p}};
    j["order_u"] = r.order_u ? json(*r.order_u) : json(nullptr);
    j["order_p"] = r.order_p ? json(*r.order_p) : json(nullptr);
    return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto os = open_output(path);
    os << text;
    if (!os) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

double max_speed(const Simulation& s) {
    const auto& q = s.field();
    const auto& st = s.frame().st;
    double m = 0.0;
    for (int c = 0; c < s.grid().ncells(); ++c)
        if (st.active(c)) m = std::max(m, std::hypot(q.u[c], q.v[c]));
    return m;
}

} // namespace

std::filesystem::path data_dir() {
    if (const char* v = std::getenv("CHIMERA_DATA_DIR"); v != nullptr && *v != '\0') return v;
    return CHIMERA_DEFAULT_DATA_DIR;
}

json execute_run(const RunConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    const std::filesystem::path out = cfg.output_dir;
    ensure_directory(out);
    write_text(out / "config.cfg", echo_config(cfg));
    auto run_log = open_output(out / "run.log");

    std::vector<ManifestEntry> manifest;
    double speed = 0.0;
    int last_snapshot = -1;
    RunResult r = run_scenario(cfg.params, [&](const Simulation& s, const StepReport& rep) {
        speed = std::max(speed, max_speed(s));
        if (rep.step > 0) {
            const std::string line = rep.line();
            run_log << line << '\n';
            log << line << '\n';
        }
        if (rep.step == 0 || (cfg.output_every > 0 && rep.step % cfg.output_every == 0)) {
            auto e = write_snapshot(out, s.frame(), s.field(), rep.step);
            manifest.insert(manifest.end(), e.begin(), e.end());
            last_snapshot = rep.step;
        }
    });
    const Simulation& sim = *r.sim;
    if (last_snapshot != sim.steps()) {
        auto e = write_snapshot(out, sim.frame(), sim.field(), sim.steps());
        manifest.insert(manifest.end(), e.begin(), e.end());
    }
    write_manifest(out / "manifest.csv", manifest);
    {
        auto os = open_output(out / "steps.csv");
        write_step_csv(os, r.steps);
    }

    json sum;
    sum["command"] = "run";
    sum["config"] = params_json(cfg);
    sum["steps"] = sim.steps();
    sum["t_final"] = sim.time();
    double div = 0.0, div_raw = 0.0;
    for (const auto& s : r.steps) {
        div = std::max(div, s.div_max);
        div_raw = std::max(div_raw, s.div_raw);
    }
    sum["max_divergence"] = div;
    sum["max_divergence_central"] = div_raw;
    sum["max_speed"] = speed;

    if (r.scenario.exact) {
        std::vector<ErrorRow> rows{measure_errors(r)};
        auto os = open_output(out / "errors.csv");
        write_error_csv(os, rows);
        sum["errors"] = error_json(rows[0]);
        const auto& ex = r.scenario.exact;
        const double t = sim.time();
        sum["errors"]["linf_u"] = max_error(sim.frame(), sim.field().u, [&](Vec2 x) { return ex(x, t)[0]; });
        sum["errors"]["linf_v"] = max_error(sim.frame(), sim.field().v, [&](Vec2 x) { return ex(x, t)[1]; });
        sum["errors"]["linf_p"] = max_error(sim.frame(), sim.field().p, [&](Vec2 x) { return ex(x, t)[2]; });
    }
    if (!r.forces.empty()) {
        auto os = open_output(out / "forces.csv");
        write_force_csv(os, r.forces);
        sum["mean_cd"] = mean_drag(r.forces);
        try {
            sum["strouhal"] = strouhal(r.forces, r.scenario.diameter, r.scenario.u_ref);
        } catch (const Error&) {
            sum["strouhal"] = nullptr;
        }
    }
    if (cfg.params.tag == "lid_cavity" && cfg.params.re == 100.0) {
        std::ifstream ref(data_dir() / "ghia_re100.csv");
        if (ref) {
            const auto dev = cavity_centerline_deviation(sim.frame(), sim.field(), read_profile_csv(ref));
            sum["centerline"] = {{"max_dev_u", dev.max_dev_u},
                                 {"max_dev_v", dev.max_dev_v},
                                 {"points_u", dev.points_u},
                                 {"points_v", dev.points_v}};
        } else {
            sum["centerline"] = nullptr;
            log << "warning: reference profile " << (data_dir() / "ghia_re100.csv").string() << " not found\n";
        }
    }
    write_json(out / "summary.json", sum);
    return sum;
}

json execute_convergence(const RunConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    if (cfg.params.levels.size() < 2) throw Error(ErrorKind::Usage, "a convergence study needs at least two levels");
    const std::filesystem::path out = cfg.output_dir;
    ensure_directory(out);
    write_text(out / "config.cfg", echo_config(cfg));

    std::vector<double> res = cfg.params.re_study;
    if (res.empty()) res.push_back(cfg.params.re);
    json sum;
    sum["command"] = "convergence";
    sum["config"] = params_json(cfg);
    sum["studies"] = json::array();
    double div = 0.0;
    for (double re : res) {
        std::vector<ErrorRow> rows;
        for (int level : cfg.params.levels) {
            ScenarioParams p = cfg.params;
            p.re = re;
            p.resolution = level;
            const RunResult r = run_scenario(p);
            rows.push_back(measure_errors(r));
            for (const auto& s : r.steps) div = std::max(div, s.div_max);
            const std::string tag = "re" + format_double(re) + "_n" + std::to_string(level);
            auto os = open_output(out / ("steps_" + tag + ".csv"));
            write_step_csv(os, r.steps);
            log << "re=" << format_double(re) << " level=" << level << " h=" << rows.back().mesh_h
                << " err_u=" << rows.back().err_u << " err_p=" << rows.back().err_p << " steps=" << r.steps.size()
                << '\n';
        }
        fill_orders(rows);
        const std::string name = "errors_re" + format_double(re) + ".csv";
        auto os = open_output(out / name);
        write_error_csv(os, rows);
        json study{{"re", re}, {"file", name}, {"rows", json::array()}};
        for (const auto& row : rows) study["rows"].push_back(error_json(row));
        sum["studies"].push_back(study);
    }
    sum["max_divergence"] = div;
    write_json(out / "summary.json", sum);
    return sum;
}

} // namespace chimera
