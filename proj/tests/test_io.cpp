#include "chimera/driver.hpp"
#include "gen.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

using namespace chimera;
namespace fs = std::filesystem;

#ifndef CHIMERA_CLI_PATH
#define CHIMERA_CLI_PATH "chimera"
#endif

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("chimera_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig parse(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Internal;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + CHIMERA_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("config sections, comments and precedence") {
    const RunConfig c = parse("# header\nscenario = taylor_green\nre = 50\n\n[taylor_green]\nre = 10 # inline\n"
                              "levels = 4, 8\n[lid_cavity]\nre = 3\n");
    CHECK(c.params.tag == "taylor_green");
    CHECK(c.params.re == 10.0);
    CHECK(c.params.levels == std::vector<int>{4, 8});
    CHECK(c.params.t_f == scenario_defaults("taylor_green").t_f);

    const RunConfig single = parse("[lid_cavity]\nresolution = 16\n");
    CHECK(single.params.tag == "lid_cavity");
    CHECK(single.params.resolution == 16);
    CHECK(single.params.tableau == "euler");
}

TEST_CASE("config errors are usage errors") {
    for (const char* bad : {"scenario = taylor_green\nbogus = 1\n", "scenario = taylor_green\nre = fast\n",
                            "scenario = taylor_green\ntableau = rk4\n", "scenario = taylor_green\nprecond = amg\n",
                            "[nowhere]\n", "[taylor_green]\n[lid_cavity]\n", "scenario = taylor_green\nre\n",
                            "[taylor_green\n", "[taylor_green]\nscenario = lid_cavity\n"})
        CHECK(kind_of([&] { parse(bad); }) == ErrorKind::Usage);
    RunConfig c = parse("scenario = taylor_green\ncfl = 1.5\n");
    CHECK(kind_of([&] { validate_config(c); }) == ErrorKind::Usage);
    c = parse("scenario = taylor_green\nlayers = 0\n");
    CHECK(kind_of([&] { validate_config(c); }) == ErrorKind::Usage);
    c = parse("scenario = taylor_green\npressure_damping = -1\n");
    CHECK(kind_of([&] { validate_config(c); }) == ErrorKind::Usage);
    CHECK(kind_of([] { load_config("/nonexistent/file.cfg"); }) == ErrorKind::Usage);
}

TEST_CASE("echoed config reads back to the same config") {
    RunConfig c = parse("scenario = free_stream\nre = 550\nt_f = 3.5\ncfl = 0.45\noutput_every = 7\n"
                        "foreground = -1 1 -1 1 10 10 rotate=0.2 motion=rotation:0:0:-0.5 # spins\n");
    c.output_dir = "some/dir";
    const std::string text = echo_config(c);
    const RunConfig back = parse(text);
    CHECK(echo_config(back) == text);
    CHECK(back.params.re == 550.0);
    CHECK(back.output_every == 7);
    CHECK(back.output_dir == "some/dir");
    CHECK(back.params.foreground == "-1 1 -1 1 10 10 rotate=0.2 motion=rotation:0:0:-0.5");
    CHECK(kind_of([] { parse("scenario = free_stream\nforeground = 0 1 0 1 4\n"); }) == ErrorKind::Usage);
}

TEST_CASE("every shipped config parses and validates") {
    int n = 0;
    for (const auto& e : fs::directory_iterator(fs::path(CHIMERA_SOURCE_DIR) / "configs")) {
        if (e.path().extension() != ".cfg") continue;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(validate_config(load_config(e.path())));
        ++n;
    }
    CHECK(n > 0);
}

TEST_CASE("output directory from the environment") {
    ::setenv("CHIMERA_OUTPUT_DIR", "env_out", 1);
    CHECK(output_dir_from_env() == std::optional<std::string>("env_out"));
    ::setenv("CHIMERA_OUTPUT_DIR", "", 1);
    CHECK_FALSE(output_dir_from_env().has_value());
    ::unsetenv("CHIMERA_OUTPUT_DIR");
    CHECK_FALSE(output_dir_from_env().has_value());
}

TEST_CASE("snapshot layout and round trip") {
    auto grid = std::make_shared<const Grid>(std::vector<Block>{testgen::periodic_box(2, 2)});
    const auto f = make_frame(*grid, grid->initial_vertices(), 0.1, 1);
    FlowField q{{0.1, 1.0 / 3.0, -2e-17, 5.0}, {1, 2, 3, 4}, {std::nextafter(1.0, 2.0), 0, 0, 0}};
    std::ostringstream os;
    write_block_snapshot(os, *f, q, 0);
    std::istringstream in(os.str());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3 + 4);
    std::istringstream is(os.str());
    const SnapshotBlock s = read_block_snapshot(is);
    CHECK(s.ni == 2);
    CHECK(s.nj == 2);
    CHECK(s.t == 0.1);
    REQUIRE(s.rows.size() == 4);
    for (int c = 0; c < 4; ++c) {
        CHECK(s.rows[c].u == q.u[c]);
        CHECK(s.rows[c].p == q.p[c]);
        CHECK(s.rows[c].x == f->geo.xc[c].x);
        CHECK(s.rows[c].cls == CellClass::Field);
    }
    CHECK(s.rows[1].i == 1);
    CHECK(s.rows[2].j == 1);
}

TEST_CASE("holes are written as NA") {
    Block bg = testgen::walled_box(24, 24);
    Block fg = make_cartesian_block(0.25, 0.75, 0.25, 0.75, 12, 12);
    fg.background = false;
    auto grid = std::make_shared<const Grid>(std::vector<Block>{bg, fg});
    const auto f = make_frame(*grid, grid->initial_vertices(), 0.0, 2);
    const int n = grid->ncells();
    FlowField q{std::vector<double>(n, 1.0), std::vector<double>(n, 2.0), std::vector<double>(n, 3.0)};
    std::ostringstream os;
    write_block_snapshot(os, *f, q, 0);
    CHECK(os.str().find(" NA NA NA H\n") != std::string::npos);
    CHECK(os.str().find(" R\n") != std::string::npos);
    std::istringstream is(os.str());
    const SnapshotBlock s = read_block_snapshot(is);
    int holes = 0;
    for (const auto& r : s.rows)
        if (r.cls == CellClass::Hole) {
            ++holes;
            CHECK(std::isnan(r.u));
        }
    CHECK(holes == f->st.count(CellClass::Hole));
    for (CellClass c : {CellClass::Field, CellClass::Fringe, CellClass::Hole}) CHECK(class_from_token(class_token(c)) == c);
}

TEST_CASE("shortest round-trip number format (property)") {
    testgen::Rng r(71);
    for (int k = 0; k < 2000; ++k) {
        double x;
        const std::uint64_t b = r.bits();
        std::memcpy(&x, &b, sizeof x);
        if (!std::isfinite(x)) continue;
        CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("table round trips") {
    const std::vector<ForceRecord> forces{{0.0, 1.0, 0.0}, {0.1, 1.3456789012345678, -1e-300}};
    std::stringstream fs_;
    write_force_csv(fs_, forces);
    CHECK(fs_.str().rfind("t,CD,CL\n", 0) == 0);
    const auto fback = read_force_csv(fs_);
    REQUIRE(fback.size() == 2);
    CHECK(fback[1].cd == forces[1].cd);
    CHECK(fback[1].cl == forces[1].cl);

    std::vector<ErrorRow> errs{{0.5, 1e-2, 2e-2, 3e-2, {}, {}}, {0.25, 2.5e-3, 5e-3, 7e-3, 2.0, 2.1}};
    std::stringstream es;
    write_error_csv(es, errs);
    CHECK(es.str().rfind("mesh_h,err_u,err_v,err_p,order_u,order_p\n", 0) == 0);
    const auto eback = read_error_csv(es);
    REQUIRE(eback.size() == 2);
    CHECK_FALSE(eback[0].order_u.has_value());
    CHECK(*eback[1].order_p == 2.1);
    CHECK(eback[1].err_v == 5e-3);

    const fs::path dir = scratch("manifest");
    const std::vector<ManifestEntry> man{{0, 0.0, 0, "snap_000000_b0.txt"}, {10, 0.125, 1, "snap_000010_b1.txt"}};
    write_manifest(dir / "manifest.csv", man);
    CHECK(slurp(dir / "manifest.csv").rfind("step,time,block,file\n", 0) == 0);
    const auto mback = read_manifest(dir / "manifest.csv");
    REQUIRE(mback.size() == 2);
    CHECK(mback[1].step == 10);
    CHECK(mback[1].t == 0.125);
    CHECK(mback[1].file == "snap_000010_b1.txt");
}

TEST_CASE("runs are deterministic and complete") {
    RunConfig c = parse("scenario = taylor_green\nresolution = 6\nt_f = 0.05\noutput_every = 2\n");
    std::string first;
    for (const char* name : {"det_a", "det_b"}) {
        c.output_dir = scratch(name).string();
        std::ostringstream log;
        const auto sum = execute_run(c, log);
        CHECK(sum["steps"].get<int>() > 0);
        CHECK(sum["t_final"].get<double>() == 0.05);
        const auto man = read_manifest(fs::path(c.output_dir) / "manifest.csv");
        REQUIRE(!man.empty());
        CHECK(man.front().step == 0);
        CHECK(man.back().step == sum["steps"].get<int>());
        for (const auto& m : man) CHECK(fs::exists(fs::path(c.output_dir) / m.file));
        std::ifstream es(fs::path(c.output_dir) / "errors.csv");
        CHECK(read_error_csv(es).size() == 1);
        std::string all;
        for (const char* f : {"steps.csv", "errors.csv", "manifest.csv", "summary.json", "run.log"})
            all += slurp(fs::path(c.output_dir) / f);
        for (const auto& m : man) all += slurp(fs::path(c.output_dir) / m.file);
        if (first.empty()) first = all;
        else CHECK(all == first);
    }
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("cli");
    {
        std::ofstream bad(dir / "bad.cfg");
        bad << "scenario = taylor_green\nnot_a_key = 1\n";
        std::ofstream ok(dir / "ok.cfg");
        ok << "scenario = taylor_green\nresolution = 6\nt_f = 0.02\n";
    }
    CHECK(run_cli("run " + (dir / "bad.cfg").string()) == 2);
    CHECK(run_cli("run " + (dir / "missing.cfg").string()) == 2);
    CHECK(run_cli("run " + (dir / "ok.cfg").string() + " --cfl 3") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("run " + (dir / "ok.cfg").string() + " --output_dir " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "summary.json"));
    ::setenv("CHIMERA_OUTPUT_DIR", (dir / "env").string().c_str(), 1);
    CHECK(run_cli("run " + (dir / "ok.cfg").string()) == 0);
    ::unsetenv("CHIMERA_OUTPUT_DIR");
    CHECK(fs::exists(dir / "env" / "summary.json"));
}
