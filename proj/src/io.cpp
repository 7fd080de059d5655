#include "chimera/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <type_traits>

namespace chimera {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
    throw Error(ErrorKind::Usage, "config key '" + key + "': cannot read '" + value + "' as " + want);
}

double parse_double(const std::string& key, const std::string& value) {
    double x = 0.0;
    const char* b = value.data();
    const char* e = b + value.size();
    const auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(x)) bad_value(key, value, "a number");
    return x;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long x = 0;
    const char* b = value.data();
    const char* e = b + value.size();
    const auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e) bad_value(key, value, "an integer");
    return x;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(value);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (size_t k = 0; k < v.size(); ++k) {
        if (k) s += ", ";
        if constexpr (std::is_floating_point_v<T>) s += format_double(v[k]);
        else s += std::to_string(v[k]);
    }
    return s;
}

std::string num17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(line);
    while (std::getline(is, item, ',')) out.push_back(trim(item));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double csv_double(const std::string& s, const char* what) {
    try {
        return parse_double(what, s);
    } catch (const Error&) {
        throw Error(ErrorKind::Io, std::string("malformed ") + what + " value '" + s + "'");
    }
}

void expect_header(std::istream& is, const std::string& header, const char* what) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != header)
        throw Error(ErrorKind::Io, std::string(what) + ": expected header '" + header + "'");
}

} // namespace

// ============================================================================
// Configuration
// ============================================================================

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "scenario", "re",     "re_study", "t_f",  "tableau",    "cfl",        "dt_max",      "dt_fixed", "layers",
        "resolution", "levels", "motion", "foreground", "wake_perturbation", "pressure_damping", "seed", "rtol", "max_iter",    "precond",
        "output_dir", "output_every"};
    return keys;
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    ScenarioParams& p = cfg.params;
    if (key == "scenario") {
        // Re-seed the defaults of the named scenario.
        p = scenario_defaults(value);
    } else if (key == "re") {
        p.re = parse_double(key, value);
    } else if (key == "re_study") {
        p.re_study.clear();
        for (const auto& s : split_list(value)) p.re_study.push_back(parse_double(key, s));
    } else if (key == "t_f") {
        p.t_f = parse_double(key, value);
    } else if (key == "tableau") {
        if (value != "euler" && value != "ars222") bad_value(key, value, "euler or ars222");
        p.tableau = value;
    } else if (key == "cfl") {
        p.cfl = parse_double(key, value);
    } else if (key == "dt_max") {
        p.dt_max = parse_double(key, value);
    } else if (key == "foreground") {
        if (!value.empty()) parse_block_description(value);
        p.foreground = value;
    } else if (key == "wake_perturbation") {
        p.wake_perturbation = parse_double(key, value);
    } else if (key == "pressure_damping") {
        p.pressure_damping = parse_double(key, value);
    } else if (key == "dt_fixed") {
        p.dt_fixed = parse_double(key, value);
    } else if (key == "layers") {
        p.layers = static_cast<int>(parse_int(key, value));
    } else if (key == "resolution") {
        p.resolution = static_cast<int>(parse_int(key, value));
    } else if (key == "levels") {
        p.levels.clear();
        for (const auto& s : split_list(value)) p.levels.push_back(static_cast<int>(parse_int(key, s)));
    } else if (key == "motion") {
        p.motion = value;
    } else if (key == "seed") {
        const long long s = parse_int(key, value);
        if (s < 0) bad_value(key, value, "a non-negative integer");
        p.seed = static_cast<std::uint64_t>(s);
    } else if (key == "rtol") {
        p.rtol = parse_double(key, value);
    } else if (key == "max_iter") {
        p.max_iter = static_cast<int>(parse_int(key, value));
    } else if (key == "precond") {
        if (value != "jacobi" && value != "ilu0") bad_value(key, value, "jacobi or ilu0");
        p.precond = value;
    } else if (key == "output_dir") {
        cfg.output_dir = value;
    } else if (key == "output_every") {
        cfg.output_every = static_cast<int>(parse_int(key, value));
    } else {
        throw Error(ErrorKind::Usage, "unknown config key '" + key + "'");
    }
}

RunConfig parse_config(std::istream& in, const std::string& origin) {
    using Assignments = std::vector<std::pair<std::string, std::string>>;
    Assignments top;
    std::map<std::string, Assignments> sections;
    std::vector<std::string> order;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorKind::Usage, where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw Error(ErrorKind::Usage, where + ": empty section name");
            scenario_defaults(section);
            if (!sections.count(section)) order.push_back(section);
            sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Usage, where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
            throw Error(ErrorKind::Usage, where + ": unknown config key '" + key + "'");
        if (key == "scenario" && !section.empty())
            throw Error(ErrorKind::Usage, where + ": 'scenario' belongs at top level");
        (section.empty() ? top : sections[section]).emplace_back(key, value);
    }

    std::string tag;
    for (const auto& [k, v] : top)
        if (k == "scenario") tag = v;
    if (tag.empty()) {
        if (order.size() != 1)
            throw Error(ErrorKind::Usage, origin + ": set 'scenario' or provide exactly one scenario section");
        tag = order.front();
    }

    RunConfig cfg;
    cfg.params = scenario_defaults(tag);
    for (const auto& [k, v] : top)
        if (k != "scenario") apply_config_value(cfg, k, v);
    if (auto it = sections.find(tag); it != sections.end())
        for (const auto& [k, v] : it->second) apply_config_value(cfg, k, v);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Usage, "cannot open config '" + path.string() + "'");
    return parse_config(in, path.string());
}

void validate_config(const RunConfig& cfg) {
    const ScenarioParams& p = cfg.params;
    auto fail = [](const std::string& m) { throw Error(ErrorKind::Usage, m); };
    if (!(p.cfl > 0.0 && p.cfl <= 1.0)) fail("cfl must lie in (0, 1]");
    if (p.layers < 1) fail("layers must be at least 1");
    if (p.resolution < 1) fail("resolution must be positive");
    for (int l : p.levels)
        if (l < 1) fail("levels must be positive");
    for (double r : p.re_study)
        if (!(r > 0.0)) fail("re_study entries must be positive");
    if (!(p.re > 0.0)) fail("re must be positive");
    if (!(p.t_f >= 0.0)) fail("t_f must be non-negative");
    if (!(p.dt_max > 0.0)) fail("dt_max must be positive");
    if (!(p.dt_fixed >= 0.0)) fail("dt_fixed must be non-negative");
    if (!(p.wake_perturbation >= 0.0)) fail("wake_perturbation must be non-negative");
    if (!(p.pressure_damping >= 0.0)) fail("pressure_damping must be non-negative");
    if (!(p.rtol > 0.0)) fail("rtol must be positive");
    if (p.max_iter < 1) fail("max_iter must be positive");
    if (cfg.output_every < 0) fail("output_every must be non-negative");
    if (cfg.output_dir.empty()) fail("output_dir must not be empty");
}

std::string echo_config(const RunConfig& cfg) {
    const ScenarioParams& p = cfg.params;
    std::ostringstream os;
    os << "scenario = " << p.tag << '\n';
    os << "re = " << format_double(p.re) << '\n';
    os << "re_study = " << join(p.re_study) << '\n';
    os << "t_f = " << format_double(p.t_f) << '\n';
    os << "tableau = " << p.tableau << '\n';
    os << "cfl = " << format_double(p.cfl) << '\n';
    os << "dt_max = " << format_double(p.dt_max) << '\n';
    os << "dt_fixed = " << format_double(p.dt_fixed) << '\n';
    os << "layers = " << p.layers << '\n';
    os << "resolution = " << p.resolution << '\n';
    os << "levels = " << join(p.levels) << '\n';
    os << "motion = " << p.motion << '\n';
    os << "foreground = " << p.foreground << '\n';
    os << "wake_perturbation = " << format_double(p.wake_perturbation) << '\n';
    os << "pressure_damping = " << format_double(p.pressure_damping) << '\n';
    os << "seed = " << p.seed << '\n';
    os << "rtol = " << format_double(p.rtol) << '\n';
    os << "max_iter = " << p.max_iter << '\n';
    os << "precond = " << p.precond << '\n';
    os << "output_dir = " << cfg.output_dir << '\n';
    os << "output_every = " << cfg.output_every << '\n';
    return os.str();
}

std::optional<std::string> output_dir_from_env() {
    const char* v = std::getenv("CHIMERA_OUTPUT_DIR");
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

// ============================================================================
// Snapshots
// ============================================================================

char class_token(CellClass c) {
    switch (c) {
    case CellClass::Field: return 'F';
    case CellClass::Fringe: return 'R';
    case CellClass::Hole: return 'H';
    }
    return '?';
}

CellClass class_from_token(char t) {
    switch (t) {
    case 'F': return CellClass::Field;
    case 'R': return CellClass::Fringe;
    case 'H': return CellClass::Hole;
    default: throw Error(ErrorKind::Io, std::string("unknown cell class token '") + t + "'");
    }
}

void write_block_snapshot(std::ostream& os, const Frame& f, const FlowField& q, int block) {
    const Grid& g = *f.grid;
    const Block& b = g.block(block);
    os << "block " << block << ' ' << (b.name.empty() ? "unnamed" : b.name) << '\n';
    os << "dims " << b.ni << ' ' << b.nj << '\n';
    os << "time " << num17(f.t) << '\n';
    for (int j = 0; j < b.nj; ++j) {
        for (int i = 0; i < b.ni; ++i) {
            const int c = g.cell_id(block, i, j);
            const CellClass cls = f.st.cls[c];
            const Vec2 x = f.geo.xc[c];
            os << i << ' ' << j << ' ' << num17(x.x) << ' ' << num17(x.y) << ' ';
            if (cls == CellClass::Hole) os << "NA NA NA";
            else os << num17(q.u[c]) << ' ' << num17(q.v[c]) << ' ' << num17(q.p[c]);
            os << ' ' << class_token(cls) << '\n';
        }
    }
}

SnapshotBlock read_block_snapshot(std::istream& is) {
    SnapshotBlock s;
    std::string word, line;
    auto need = [&](const char* w) {
        if (!(is >> word) || word != w) throw Error(ErrorKind::Io, std::string("snapshot: expected '") + w + "'");
    };
    need("block");
    if (!(is >> s.block >> s.name)) throw Error(ErrorKind::Io, "snapshot: malformed block line");
    need("dims");
    if (!(is >> s.ni >> s.nj) || s.ni < 0 || s.nj < 0) throw Error(ErrorKind::Io, "snapshot: malformed dims");
    need("time");
    if (!(is >> word)) throw Error(ErrorKind::Io, "snapshot: missing time");
    s.t = csv_double(word, "time");
    std::getline(is, line);
    const auto value = [](const std::string& w) {
        return w == "NA" ? std::numeric_limits<double>::quiet_NaN() : csv_double(w, "snapshot");
    };
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        std::string f[8];
        for (auto& w : f)
            if (!(ls >> w)) throw Error(ErrorKind::Io, "snapshot: short data line '" + line + "'");
        if (ls >> word) throw Error(ErrorKind::Io, "snapshot: trailing tokens in '" + line + "'");
        SnapshotBlock::Row r;
        r.i = static_cast<int>(csv_double(f[0], "index"));
        r.j = static_cast<int>(csv_double(f[1], "index"));
        r.x = csv_double(f[2], "coordinate");
        r.y = csv_double(f[3], "coordinate");
        r.u = value(f[4]);
        r.v = value(f[5]);
        r.p = value(f[6]);
        if (f[7].size() != 1) throw Error(ErrorKind::Io, "snapshot: bad class token '" + f[7] + "'");
        r.cls = class_from_token(f[7][0]);
        s.rows.push_back(r);
    }
    if (s.rows.size() != static_cast<size_t>(s.ni) * static_cast<size_t>(s.nj))
        throw Error(ErrorKind::Io, "snapshot: row count does not match dims");
    return s;
}

std::vector<ManifestEntry> write_snapshot(const std::filesystem::path& dir, const Frame& f, const FlowField& q,
                                          int step) {
    ensure_directory(dir);
    std::vector<ManifestEntry> out;
    for (int b = 0; b < f.grid->nblocks(); ++b) {
        char name[64];
        std::snprintf(name, sizeof name, "snap_%06d_b%d.txt", step, b);
        auto os = open_output(dir / name);
        write_block_snapshot(os, f, q, b);
        if (!os) throw Error(ErrorKind::Io, "write failed: " + (dir / name).string());
        out.push_back({step, f.t, b, name});
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    auto os = open_output(path);
    os << "step,time,block,file\n";
    for (const auto& e : entries) os << e.step << ',' << num17(e.t) << ',' << e.block << ',' << e.file << '\n';
    if (!os) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open manifest '" + path.string() + "'");
    expect_header(is, "step,time,block,file", "manifest");
    std::vector<ManifestEntry> out;
    std::string line;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw Error(ErrorKind::Io, "manifest: malformed line '" + line + "'");
        out.push_back({static_cast<int>(csv_double(f[0], "step")), csv_double(f[1], "time"),
                       static_cast<int>(csv_double(f[2], "block")), f[3]});
    }
    return out;
}

// ============================================================================
// Tables
// ============================================================================

std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

void write_force_csv(std::ostream& os, const std::vector<ForceRecord>& rows) {
    os << "t,CD,CL\n";
    for (const auto& r : rows) os << format_double(r.t) << ',' << format_double(r.cd) << ',' << format_double(r.cl) << '\n';
}

void write_error_csv(std::ostream& os, const std::vector<ErrorRow>& rows) {
    os << "mesh_h,err_u,err_v,err_p,order_u,order_p\n";
    for (const auto& r : rows) {
        os << format_double(r.mesh_h) << ',' << format_double(r.err_u) << ',' << format_double(r.err_v) << ','
           << format_double(r.err_p) << ',';
        if (r.order_u) os << format_double(*r.order_u);
        os << ',';
        if (r.order_p) os << format_double(*r.order_p);
        os << '\n';
    }
}

void write_step_csv(std::ostream& os, const std::vector<StepReport>& rows) {
    os << "step,t,dt,iter_u,iter_v,iter_p,div,div_raw,active,born,dead\n";
    for (const auto& r : rows)
        os << r.step << ',' << format_double(r.t) << ',' << format_double(r.dt) << ',' << r.iter_u << ',' << r.iter_v
           << ',' << r.iter_p << ',' << format_double(r.div_max) << ',' << format_double(r.div_raw) << ',' << r.active
           << ',' << r.born << ',' << r.dead << '\n';
}

std::vector<ForceRecord> read_force_csv(std::istream& is) {
    expect_header(is, "t,CD,CL", "force CSV");
    std::vector<ForceRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 3) throw Error(ErrorKind::Io, "force CSV: malformed line '" + line + "'");
        out.push_back({csv_double(f[0], "t"), csv_double(f[1], "CD"), csv_double(f[2], "CL")});
    }
    return out;
}

std::vector<ErrorRow> read_error_csv(std::istream& is) {
    expect_header(is, "mesh_h,err_u,err_v,err_p,order_u,order_p", "error CSV");
    std::vector<ErrorRow> out;
    std::string line;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw Error(ErrorKind::Io, "error CSV: malformed line '" + line + "'");
        ErrorRow r;
        r.mesh_h = csv_double(f[0], "mesh_h");
        r.err_u = csv_double(f[1], "err_u");
        r.err_v = csv_double(f[2], "err_v");
        r.err_p = csv_double(f[3], "err_p");
        if (!f[4].empty()) r.order_u = csv_double(f[4], "order_u");
        if (!f[5].empty()) r.order_p = csv_double(f[5], "order_p");
        out.push_back(r);
    }
    return out;
}

std::vector<StepLogRow> read_step_csv(std::istream& is) {
    expect_header(is, "step,t,dt,iter_u,iter_v,iter_p,div,div_raw,active,born,dead", "step log");
    std::vector<StepLogRow> out;
    std::string line;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 11) throw Error(ErrorKind::Io, "step log: malformed line '" + line + "'");
        out.push_back({static_cast<int>(csv_double(f[0], "step")), csv_double(f[1], "t"), csv_double(f[2], "dt"),
                       csv_double(f[6], "div")});
    }
    return out;
}

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw Error(ErrorKind::Io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    return os;
}

} // namespace chimera
