#include "spikectl/cli.hpp"

#include "spikectl/config.hpp"
#include "spikectl/errors.hpp"
#include "spikectl/hjb.hpp"
#include "spikectl/io.hpp"
#include "spikectl/mceval.hpp"
#include "spikectl/sim.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

namespace spikectl {

namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> paths;
    std::optional<std::string> lambda_true;
    std::optional<std::string> policy;
    std::optional<double> slice_time;
};

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

RunConfig load_with_overrides(const Flags& f) {
    RunConfig c = load_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (f.out) c.out = *f.out;
    if (f.paths) c.paths = *f.paths;
    if (f.policy) {
        if (*f.policy != "pde" && *f.policy != "zero")
            throw ValidationError("--policy must be pde or zero");
        c.policy = *f.policy;
    }
    if (f.lambda_true) {
        if (*f.lambda_true == "prior") {
            c.lambda_true.reset();
        } else {
            try {
                c.lambda_true = std::stod(*f.lambda_true);
            } catch (const std::exception&) {
                throw ValidationError("--lambda-true must be a number or 'prior'");
            }
        }
    }
    return c;
}

ValueGrid load_matching_grid(const RunConfig& c, const GridSpec& expected, const Model& model) {
    ValueGrid vg = read_value_grid(fs::path(c.out) / "value_grid.bin");
    const auto& g = vg.grid();
    const bool same = g.nt == expected.nt && g.ny == expected.ny && g.nz == expected.nz &&
                      g.n_max == expected.n_max && g.horizon == expected.horizon &&
                      g.y_min == expected.y_min && g.y_max == expected.y_max &&
                      g.z_max == expected.z_max && g.kappa == expected.kappa &&
                      vg.model_name() == model.name;
    if (!same) throw ValidationError("value grid in " + c.out + " does not match the config; rerun solve");
    return vg;
}

int cmd_solve(const Flags& f, std::ostream& out) {
    RunConfig c = load_with_overrides(f);
    const Model model = build_model(c);
    const Prior prior = build_prior(c.prior);
    c.grid = complete_grid_spec(c.grid, model, prior);
    const auto cfl = cfl_report(c.grid, model, prior);
    out << "grid: nt=" << c.grid.nt << " ny=" << c.grid.ny << " nz=" << c.grid.nz
        << " n_max=" << c.grid.n_max << " z_max=" << fmt17(c.grid.z_max) << "\n"
        << "cfl: drift=" << fmt17(cfl.drift_part) << " shape=" << fmt17(cfl.shape_part)
        << " jump=" << fmt17(cfl.jump_part) << " total=" << fmt17(cfl.total()) << "\n";
    validate(c.grid, model, prior);

    const ValueGrid vg = solve(model, prior, c.grid);

    double terminal_gap = 0.0;
    const int last = vg.slices() - 1;
    for (int j = 0; j < c.grid.nz; ++j)
        for (int n = 0; n <= c.grid.n_max; ++n) {
            const double expected = c.grid.kappa * psi(prior, n, vg.z_at(j));
            for (int i = 0; i < c.grid.ny; ++i)
                terminal_gap = std::max(terminal_gap, std::abs(vg.value(last, i, j, n) - expected));
        }
    const double v0 = vg.eval_value(c.start.t, c.start.y, c.start.z, c.start.n);

    const fs::path dir(c.out);
    fs::create_directories(dir);
    write_value_grid(vg, dir / "value_grid.bin");
    const std::vector<int> ends{0, vg.slices() - 1};
    write_value_csv(vg, dir / "value_grid.csv", ends);
    {
        std::ofstream meta(dir / "metadata.cfg");
        meta << format_config(c, {{"model_name", "\"" + model.name + "\""},
                                  {"prior", "\"" + prior.describe() + "\""},
                                  {"cfl_drift", fmt17(cfl.drift_part)},
                                  {"cfl_shape", fmt17(cfl.shape_part)},
                                  {"cfl_jump", fmt17(cfl.jump_part)},
                                  {"cfl_total", fmt17(cfl.total())},
                                  {"terminal_gap", fmt17(terminal_gap)},
                                  {"v0", fmt17(v0)}});
        if (!meta) throw ValidationError("cannot write metadata in " + c.out);
    }
    out << "terminal slice max |v - kappa*Psi| = " << fmt17(terminal_gap) << "\n"
        << "v(" << fmt17(c.start.t) << ", " << fmt17(c.start.y) << ", " << fmt17(c.start.z) << ", "
        << c.start.n << ") = " << fmt17(v0) << "\n"
        << "wrote " << (dir / "value_grid.csv").string()
        << " (t = 0 and t = T), value_grid.bin, metadata.cfg\n";
    if (terminal_gap > 1e-12) throw NumericalError("terminal slice does not match kappa * Psi");
    return kExitOk;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
    const RunConfig c = load_with_overrides(f);
    const Model model = build_model(c);
    const Prior prior = build_prior(c.prior);
    const GridSpec grid = resolve_grid(c, model, prior);

    std::optional<ValueGrid> vg;
    Policy policy = zero_policy();
    if (c.policy == "pde") {
        vg.emplace(load_matching_grid(c, grid, model));
        policy = pde_policy(*vg);
    }

    SimOptions options;
    options.horizon = grid.horizon;
    options.dt_record = c.dt_record;
    options.dt_flow = c.dt_flow.value_or(grid.dt() / 4.0);
    options.seed = c.seed;
    options.start = c.start;
    const auto paths = simulate_batch(model, prior, policy, c.lambda_true, options, c.paths);

    const fs::path dir(c.out);
    fs::create_directories(dir);
    for (std::size_t p = 0; p < paths.size(); ++p) {
        const auto& tr = paths[p];
        write_trajectory_csv(tr, dir / ("trajectory_" + std::to_string(p) + ".csv"));
        write_jump_csv(tr, dir / ("jumps_" + std::to_string(p) + ".csv"));
        out << "path " << p << ": lambda=" << fmt17(tr.lambda_true)
            << " jumps=" << tr.jump_times.size() << " post_mean(T)=" << fmt17(tr.post_mean.back())
            << " post_var(T)=" << fmt17(tr.post_var.back())
            << " control_cost=" << fmt17(tr.control_cost) << "\n";
    }
    out << "wrote " << paths.size() << " trajectories to " << dir.string() << "\n";
    return kExitOk;
}

int cmd_evaluate(const Flags& f, std::ostream& out) {
    const RunConfig c = load_with_overrides(f);
    if (c.paths < 2) throw ValidationError("evaluate needs paths >= 2 for a standard error");
    const Model model = build_model(c);
    const Prior prior = build_prior(c.prior);
    const GridSpec grid = resolve_grid(c, model, prior);
    const ValueGrid vg = load_matching_grid(c, grid, model);

    std::vector<EvalPoint> points = c.eval_points;
    if (points.empty()) points.push_back({c.start.t, c.start.y, c.start.z, c.start.n});
    const auto report = compare_to_pde(vg, model, prior, points, c.paths, c.seed,
                                       c.scheme_tolerance, true, c.dt_flow);

    const fs::path dir(c.out);
    fs::create_directories(dir);
    std::ofstream txt(dir / "evaluation.txt");
    std::ofstream csv(dir / "evaluation.csv");
    csv << "t,y,z,n,v_pde,j_mc,std_error,gap,tolerance,pass,j_zero,zero_std_error,dominance_pass,mean_weight\n";
    txt << "paths = " << c.paths << "\nseed = " << c.seed
        << "\nscheme_tolerance = " << fmt17(c.scheme_tolerance) << "\n";
    for (std::size_t k = 0; k < report.rows.size(); ++k) {
        const auto& r = report.rows[k];
        const auto& p = r.point;
        const double j_zero = r.zero_policy ? r.zero_policy->estimate : NAN;
        const double se_zero = r.zero_policy ? r.zero_policy->std_error : NAN;
        csv << fmt17(p.t) << "," << fmt17(p.y) << "," << fmt17(p.z) << "," << p.n << ","
            << fmt17(r.pde_value) << "," << fmt17(r.pde_policy.estimate) << ","
            << fmt17(r.pde_policy.std_error) << "," << fmt17(r.gap) << "," << fmt17(r.tolerance)
            << "," << (r.pass ? 1 : 0) << "," << fmt17(j_zero) << "," << fmt17(se_zero) << ","
            << (r.dominance_pass ? 1 : 0) << "," << fmt17(r.pde_policy.mean_weight) << "\n";
        const std::string key = "point_" + std::to_string(k) + "_";
        txt << key << "v_pde = " << fmt17(r.pde_value) << "\n"
            << key << "j_mc = " << fmt17(r.pde_policy.estimate) << "\n"
            << key << "std_error = " << fmt17(r.pde_policy.std_error) << "\n"
            << key << "control_part = " << fmt17(r.pde_policy.control_part) << "\n"
            << key << "variance_part = " << fmt17(r.pde_policy.variance_part) << "\n"
            << key << "gap = " << fmt17(r.gap) << "\n"
            << key << "tolerance = " << fmt17(r.tolerance) << "\n"
            << key << "pass = " << (r.pass ? "true" : "false") << "\n"
            << key << "j_zero = " << fmt17(j_zero) << "\n"
            << key << "dominance_pass = " << (r.dominance_pass ? "true" : "false") << "\n";
        out << "point (" << fmt17(p.t) << ", " << fmt17(p.y) << ", " << fmt17(p.z) << ", " << p.n
            << "): v_pde=" << fmt17(r.pde_value) << " J_mc=" << fmt17(r.pde_policy.estimate)
            << " +- " << fmt17(r.pde_policy.std_error) << " gap=" << fmt17(r.gap)
            << " tol=" << fmt17(r.tolerance) << (r.pass ? " PASS" : " FAIL")
            << " | J_zero=" << fmt17(j_zero) << (r.dominance_pass ? " PASS" : " FAIL") << "\n";
    }
    const bool ok = report.all_pass();
    txt << "all_pass = " << (ok ? "true" : "false") << "\n";
    out << (ok ? "evaluation passed" : "evaluation FAILED") << "\n";
    return ok ? kExitOk : kExitAcceptance;
}

int cmd_export_policy(const Flags& f, std::ostream& out) {
    const RunConfig c = load_with_overrides(f);
    const Model model = build_model(c);
    const Prior prior = build_prior(c.prior);
    const GridSpec grid = resolve_grid(c, model, prior);
    const ValueGrid vg = load_matching_grid(c, grid, model);
    const fs::path dir(c.out);
    if (!f.slice_time) {
        write_value_csv(vg, dir / "policy.csv");
        out << "wrote " << (dir / "policy.csv").string() << "\n";
        return kExitOk;
    }
    const double t = *f.slice_time;
    if (!(t >= 0.0 && t <= grid.horizon)) throw ValidationError("--time must lie in [0, horizon]");
    std::FILE* file = std::fopen((dir / "policy.csv").c_str(), "w");
    if (!file) throw ValidationError("cannot write policy.csv in " + c.out);
    std::fputs("t,y,z,n,v,gamma\n", file);
    for (int i = 0; i < grid.ny; ++i)
        for (int j = 0; j < grid.nz; ++j)
            for (int n = 0; n <= grid.n_max; ++n)
                std::fprintf(file, "%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", t, vg.y_at(i), vg.z_at(j),
                             n, vg.eval_value(t, vg.y_at(i), vg.z_at(j), n),
                             vg.eval_policy(t, vg.y_at(i), vg.z_at(j), n));
    std::fclose(file);
    out << "wrote " << (dir / "policy.csv").string() << " at t=" << fmt17(t) << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal spike-train control for estimating an unknown intensity"};
    app.require_subcommand(1);
    Flags flags;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "Run configuration file")->required();
        sub->add_option("--seed", flags.seed, "Master seed");
        sub->add_option("--out", flags.out, "Output directory");
    };
    auto* solve_cmd = app.add_subcommand("solve", "Solve the HJB equation and write the value grid");
    add_common(solve_cmd);
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate controlled trajectories");
    add_common(sim_cmd);
    sim_cmd->add_option("--paths", flags.paths, "Number of paths");
    sim_cmd->add_option("--lambda-true", flags.lambda_true, "True intensity parameter or 'prior'");
    sim_cmd->add_option("--policy", flags.policy, "pde or zero");
    auto* eval_cmd = app.add_subcommand("evaluate", "Check the PDE value against Monte Carlo");
    add_common(eval_cmd);
    eval_cmd->add_option("--paths", flags.paths, "Monte Carlo paths per point");
    auto* export_cmd = app.add_subcommand("export-policy", "Export the value and policy as CSV");
    add_common(export_cmd);
    export_cmd->add_option("--time", flags.slice_time, "Export a single time slice");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (*solve_cmd) return cmd_solve(flags, out);
        if (*sim_cmd) return cmd_simulate(flags, out);
        if (*eval_cmd) return cmd_evaluate(flags, out);
        if (*export_cmd) return cmd_export_policy(flags, out);
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

}  // namespace spikectl
