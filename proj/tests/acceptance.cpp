#include "chimera/acceptance.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace chimera;

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria, one PASS/FAIL line each"};
    SuiteOptions opt;
    std::string work = "acceptance_work";
    app.add_option("--work", work, "directory for step logs");
    app.add_option("--seed", opt.seed, "seed of the generated operator meshes");
    bool skip_slow = false;
    app.add_flag("--skip-slow", skip_slow, "leave out the lid-driven cavity run");
    app.add_flag("--cylinder", opt.cylinder, "include the long steady-cylinder run");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    opt.work = work;
    opt.slow = !skip_slow;
    const auto res = run_acceptance(opt, std::cout);
    int failed = 0;
    for (const auto& r : res)
        if (r.verdict == Verdict::Fail) ++failed;
    std::cout << failed << " of " << res.size() << " criteria failed\n";
    return failed == 0 ? 0 : 1;
}
