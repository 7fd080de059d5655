#include "chimera/acceptance.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using namespace chimera;

namespace {

/// Resolved config: file, then CHIMERA_OUTPUT_DIR, then command-line flags.
RunConfig resolve(const std::string& path, const std::map<std::string, std::string>& flags) {
    RunConfig cfg = load_config(path);
    if (auto env = output_dir_from_env()) cfg.output_dir = *env;
    for (const auto& key : config_keys()) {
        auto it = flags.find(key);
        if (it != flags.end() && !it->second.empty()) apply_config_value(cfg, key, it->second);
    }
    validate_config(cfg);
    return cfg;
}

void add_config_flags(CLI::App* cmd, std::map<std::string, std::string>& flags) {
    for (const auto& key : config_keys()) {
        if (key == "scenario") continue;
        cmd->add_option("--" + key, flags[key], "override config key '" + key + "'");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Overset-grid incompressible flow solver"};
    app.require_subcommand(1);

    std::string run_cfg, conv_cfg;
    std::map<std::string, std::string> run_flags, conv_flags;
    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("config", run_cfg, "config file")->required();
    add_config_flags(run, run_flags);

    auto* conv = app.add_subcommand("convergence", "mesh-refinement study");
    conv->add_option("config", conv_cfg, "config file")->required();
    add_config_flags(conv, conv_flags);

    SuiteOptions suite;
    std::string validate_out = "validate_output";
    auto* val = app.add_subcommand("validate", "fast property and acceptance checks");
    val->add_option("--output_dir", validate_out, "work directory for step logs and summary");
    val->add_option("--seed", suite.seed, "seed of the generated operator meshes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) {
            const RunConfig cfg = resolve(run_cfg, run_flags);
            execute_run(cfg, std::cout);
            std::cout << "summary: " << (std::filesystem::path(cfg.output_dir) / "summary.json").string() << '\n';
            return 0;
        }
        if (conv->parsed()) {
            const RunConfig cfg = resolve(conv_cfg, conv_flags);
            execute_convergence(cfg, std::cout);
            std::cout << "summary: " << (std::filesystem::path(cfg.output_dir) / "summary.json").string() << '\n';
            return 0;
        }
        if (val->parsed()) {
            if (auto env = output_dir_from_env()) validate_out = *env;
            suite.work = validate_out;
            suite.fast_only = true;
            const auto res = run_acceptance(suite, std::cout);
            nlohmann::json sum;
            sum["command"] = "validate";
            sum["seed"] = suite.seed;
            sum["criteria"] = nlohmann::json::array();
            bool ok = true;
            for (const auto& r : res) {
                const char* v = r.verdict == Verdict::Pass ? "pass" : r.verdict == Verdict::Fail ? "fail" : "skip";
                sum["criteria"].push_back({{"name", r.name}, {"verdict", v}, {"detail", r.detail}});
                ok = ok && r.verdict != Verdict::Fail;
            }
            auto os = open_output(std::filesystem::path(validate_out) / "summary.json");
            os << sum.dump(2) << '\n';
            return ok ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return e.kind() == ErrorKind::Usage ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error (internal): " << e.what() << '\n';
        return 1;
    }
    return 2;
}
