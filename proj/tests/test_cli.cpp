#include "doctest.h"

#include "spikectl/cli.hpp"
#include "spikectl/config.hpp"
#include "spikectl/io.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

using namespace spikectl;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = SPIKECTL_CONFIG_DIR;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::initializer_list<std::string> args) {
    std::vector<std::string> owned{"spikectl"};
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : owned) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("spikectl_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

std::string with_line(const fs::path& base, const std::string& key, const std::string& line) {
    std::istringstream in(slurp(base));
    std::string out, l;
    bool replaced = false;
    while (std::getline(in, l)) {
        if (l.rfind(key + " ", 0) == 0) {
            out += line + "\n";
            replaced = true;
        } else {
            out += l + "\n";
        }
    }
    if (!replaced) out += line + "\n";
    return out;
}

std::vector<std::string> csv_header(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    return cols;
}

}  // namespace

TEST_CASE("argument and config errors exit with 1") {
    CHECK(cli({}).code == kExitValidation);
    CHECK(cli({"solve"}).code == kExitValidation);
    CHECK(cli({"solve", "--config", "/nonexistent/x.cfg"}).code == kExitValidation);

    const fs::path dir = scratch("errors");
    const fs::path bad_nz = write_file(dir / "nz.cfg", with_line(kConfigs / "dirac.cfg", "nz", "nz = 1"));
    const Run r = cli({"solve", "--config", bad_nz.string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("nz") != std::string::npos);

    const fs::path unknown = write_file(dir / "unknown.cfg", with_line(kConfigs / "dirac.cfg", "colour", "colour = 3"));
    CHECK(cli({"solve", "--config", unknown.string()}).code == kExitValidation);

    const fs::path two_priors =
        write_file(dir / "two.cfg", with_line(kConfigs / "dirac.cfg", "density", "density = \"uniform\""));
    CHECK(cli({"solve", "--config", two_priors.string()}).code == kExitValidation);

    CHECK(cli({"simulate", "--config", (kConfigs / "dirac.cfg").string(), "--policy", "greedy"}).code ==
          kExitValidation);
}

TEST_CASE("CFL violation exits with 2") {
    const fs::path dir = scratch("cfl");
    const fs::path cfg = write_file(dir / "cfl.cfg", with_line(kConfigs / "dirac.cfg", "nt", "nt = 5"));
    const Run r = cli({"solve", "--config", cfg.string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitNumerical);
    CHECK(r.err.find("CFL") != std::string::npos);
}

TEST_CASE("known-intensity workflow") {
    const fs::path dir = scratch("dirac");
    const std::string cfg = (kConfigs / "dirac.cfg").string();
    const Run solved = cli({"solve", "--config", cfg, "--out", dir.string()});
    REQUIRE(solved.code == kExitOk);
    CHECK(solved.out.find("v(0, 0, 0, 0) = 0\n") != std::string::npos);
    CHECK(fs::exists(dir / "value_grid.csv"));
    CHECK(fs::exists(dir / "metadata.cfg"));

    const Run eval = cli({"evaluate", "--config", cfg, "--out", dir.string()});
    CHECK(eval.code == kExitOk);
    CHECK(slurp(dir / "evaluation.txt").find("all_pass = true") != std::string::npos);

    CHECK(cli({"evaluate", "--config", cfg, "--out", dir.string(), "--paths", "1"}).code == kExitValidation);

    const Run exported = cli({"export-policy", "--config", cfg, "--out", dir.string(), "--time", "0.5"});
    CHECK(exported.code == kExitOk);
    CHECK(csv_header(dir / "policy.csv") == std::vector<std::string>{"t", "y", "z", "n", "v", "gamma"});
}

TEST_CASE("simulate needs a solved grid unless the policy is zero") {
    const fs::path dir = scratch("sim");
    const std::string cfg = (kConfigs / "dirac.cfg").string();
    const Run missing = cli({"simulate", "--config", cfg, "--out", dir.string()});
    CHECK(missing.code == kExitValidation);
    CHECK(missing.err.find("missing value grid") != std::string::npos);

    const Run flat = cli({"simulate", "--config", cfg, "--out", dir.string(), "--policy", "zero",
                          "--lambda-true", "0", "--paths", "2"});
    REQUIRE(flat.code == kExitOk);
    std::ifstream in(dir / "trajectory_0.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::vector<std::string> cells;
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        REQUIRE(cells.size() == 7);
        CHECK(cells[3] == "0");
        ++rows;
    }
    CHECK(rows > 10);
    CHECK(slurp(dir / "jumps_1.csv") == "tau\n");
}

TEST_CASE("outputs are deterministic and metadata reloads") {
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    const std::string cfg = (kConfigs / "sigmoid_uniform.cfg").string();
    for (const fs::path& dir : {a, b}) {
        REQUIRE(cli({"solve", "--config", cfg, "--out", dir.string()}).code == kExitOk);
        REQUIRE(cli({"simulate", "--config", cfg, "--out", dir.string(), "--paths", "2", "--seed", "9"}).code ==
                kExitOk);
    }
    CHECK(slurp(a / "value_grid.csv") == slurp(b / "value_grid.csv"));
    CHECK(slurp(a / "trajectory_1.csv") == slurp(b / "trajectory_1.csv"));
    CHECK(slurp(a / "jumps_0.csv") == slurp(b / "jumps_0.csv"));
    CHECK(csv_header(a / "trajectory_0.csv") ==
          std::vector<std::string>{"t", "y", "gamma", "n", "z", "post_mean", "post_var"});

    // the metadata is itself a config that reproduces the run
    const RunConfig meta = load_config(a / "metadata.cfg");
    const RunConfig orig = load_config(cfg);
    CHECK(meta.model == orig.model);
    CHECK(meta.grid.ny == orig.grid.ny);
    CHECK(meta.grid.kappa == orig.grid.kappa);
    CHECK(meta.out == a.string());
    const fs::path c = scratch("det_c");
    REQUIRE(cli({"solve", "--config", (a / "metadata.cfg").string(), "--out", c.string()}).code == kExitOk);
    CHECK(slurp(c / "value_grid.csv") == slurp(a / "value_grid.csv"));
    CHECK(slurp(c / "value_grid.bin") == slurp(a / "value_grid.bin"));
}

TEST_CASE("exp five-atom config solves and simulates") {
    const fs::path dir = scratch("exp_five_atom");
    const std::string cfg = (kConfigs / "exp_five_atom.cfg").string();
    const Run solved = cli({"solve", "--config", cfg, "--out", dir.string()});
    REQUIRE(solved.code == kExitOk);
    CHECK(solved.out.find("terminal slice max |v - kappa*Psi| = 0\n") != std::string::npos);
    const Run sim = cli({"simulate", "--config", cfg, "--out", dir.string(), "--paths", "1", "--lambda-true", "1"});
    REQUIRE(sim.code == kExitOk);
    CHECK(csv_header(dir / "trajectory_0.csv") ==
          std::vector<std::string>{"t", "y", "gamma", "n", "z", "post_mean", "post_var"});
    CHECK(!fs::exists(dir / "trajectory_1.csv"));
}

TEST_CASE("two-point desk config passes evaluation; a coarse grid does not") {
    const fs::path dir = scratch("two_point");
    const fs::path base = kConfigs / "two_point.cfg";
    REQUIRE(cli({"solve", "--config", base.string(), "--out", dir.string()}).code == kExitOk);
    const Run eval = cli({"evaluate", "--config", base.string(), "--out", dir.string(), "--paths", "4000"});
    CHECK(eval.code == kExitOk);
    CHECK(csv_header(dir / "evaluation.csv").size() == 14);

    // A stale grid from another config is refused.
    const fs::path other = write_file(dir / "other.cfg", with_line(base, "kappa", "kappa = 2"));
    CHECK(cli({"evaluate", "--config", other.string(), "--out", dir.string()}).code == kExitValidation);

    const fs::path coarse_dir = scratch("coarse");
    std::string text = with_line(base, "ny", "ny = 5");
    const fs::path coarse = write_file(coarse_dir / "c.cfg", text);
    text = with_line(coarse, "nz", "nz = 3");
    write_file(coarse, text);
    text = with_line(coarse, "nt", "nt = 20");
    write_file(coarse, text);
    text = with_line(coarse, "scheme_tolerance", "scheme_tolerance = 0");
    write_file(coarse, text);
    REQUIRE(cli({"solve", "--config", coarse.string(), "--out", coarse_dir.string()}).code == kExitOk);
    CHECK(cli({"evaluate", "--config", coarse.string(), "--out", coarse_dir.string()}).code == kExitAcceptance);
}
