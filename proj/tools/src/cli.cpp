#include "sovdebt/cli.hpp"

#include "sovdebt/analysis.hpp"
#include "sovdebt/config.hpp"
#include "sovdebt/io.hpp"
#include "sovdebt/montecarlo.hpp"
#include "sovdebt/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace sovdebt::cli {

namespace fs = std::filesystem;

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Wall-clock data lives beside the artifacts so that the artifacts themselves
// stay byte-identical across reruns.
void write_meta(const fs::path& dir, const std::string& command, double seconds) {
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    nlohmann::ordered_json j;
    j["command"] = command;
    j["wall_seconds"] = seconds;
    j["finished_at"] = stamp;
    write_text(dir / (command + ".meta.json"), j.dump(2));
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

fs::path resolve_out(const std::string& flag, const RunConfig& cfg) {
    return flag.empty() ? fs::path(cfg.output_dir) : fs::path(flag);
}

void apply_solver_flags(RunConfig& cfg, std::optional<std::size_t> n, std::optional<double> eps_final) {
    if (n) cfg.solver.n = *n;
    if (eps_final) {
        if (!(*eps_final > 0.0 && *eps_final < 0.5)) throw InputError("--eps-final must lie in (0, 1/2)");
        std::vector<double> schedule;
        for (double e : cfg.solver.epsilon_schedule)
            if (e > *eps_final) schedule.push_back(e);
        schedule.push_back(*eps_final);
        cfg.solver.epsilon_schedule = schedule;
    }
    try {
        cfg.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

SolutionFile load_matching_solution(const std::string& path, const RunConfig& cfg) {
    SolutionFile sf = read_solution(fs::path(path));
    if (const std::string mismatch = header_mismatch(sf.header, cfg.model); !mismatch.empty())
        throw InputError(path + ": " + mismatch);
    return sf;
}

/// Solves and writes solution.csv and trace.json into dir. Returns the exit code.
int solve_into(const RunConfig& cfg, const fs::path& dir, std::ostream& out, std::ostream& err) {
    try {
        const ContinuationResult res = continuation_solve(cfg.model, cfg.solver);
        write_solution(dir / "solution.csv", res.solution, cfg.model);
        write_text(dir / "trace.json", to_json(res.trace));
        out << "solved: n = " << res.solution.grid.n << ", eps = " << short_num(res.solution.epsilon)
            << ", max residual = " << short_num(res.solution.max_residual())
            << ", continuation error = " << short_num(res.trace.continuation_error()) << "\n";
        return kOk;
    } catch (const SolverError& e) {
        const Solution& d = e.diagnostics();
        if (d.V.size() == d.grid.nodes.size() && d.res_V.size() == d.grid.nodes.size() && d.grid.n > 0)
            write_solution(dir / "solution.csv", d, cfg.model);
        write_text(dir / "trace.json", to_json(e.trace()));
        err << "solver failed at eps = " << short_num(e.epsilon()) << ": " << e.what() << "\n";
        return kNumericalFailure;
    }
}

/// Rebuilds the model with one named parameter replaced.
Model with_parameter(const Model& m, const std::string& name, double value) {
    ModelParams p = m.params;
    double alpha_L = m.costs.alpha_L(), alpha_c = m.costs.alpha_c();
    double kappa = m.risk.kappa(), q = m.risk.q(), salvage_m = m.salvage.m();
    if (name == "r") p.r = value;
    else if (name == "lambda") p.lambda = value;
    else if (name == "mu") p.mu = value;
    else if (name == "sigma") p.sigma = value;
    else if (name == "B") p.bankruptcy_cost = value;
    else if (name == "x_star") p.x_star = value;
    else if (name == "v_max") p.v_max = value;
    else if (name == "alpha_L") alpha_L = value;
    else if (name == "alpha_c") alpha_c = value;
    else if (name == "kappa") kappa = value;
    else if (name == "q") q = value;
    else if (name == "m") salvage_m = value;
    else throw InputError("unknown sweep parameter '" + name + "'");
    return Model{p, CostSpec::barrier(alpha_L, alpha_c, p.v_max), RiskSpec::power(kappa, q, p.x_star),
                 SalvageSpec::linear(salvage_m, p.x_star)};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Debt management with bankruptcy risk and devaluation: solver, verifier, simulator",
                 "sovdebt"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string config_path, solution_path, out_flag;

    auto* solve = app.add_subcommand("solve", "Solve the stationary system along the epsilon schedule");
    std::optional<std::size_t> n_flag;
    std::optional<double> eps_final;
    solve->add_option("config", config_path, "Run configuration")->required();
    solve->add_option("--n", n_flag, "Grid points (overrides [solver] n)");
    solve->add_option("--eps-final", eps_final, "Last regularization level");
    solve->add_option("--out", out_flag, "Output directory (overrides [output] dir)");

    auto* verify = app.add_subcommand("verify", "Check a solution against the analytic bounds");
    verify->add_option("solution", solution_path, "solution.csv from `solve`")->required();
    verify->add_option("config", config_path, "Run configuration")->required();
    verify->add_option("--out", out_flag, "Output directory");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo cross-check of a solution");
    std::optional<double> x0_flag, dt_flag, horizon_flag;
    std::optional<std::size_t> paths_flag, threads_flag;
    std::optional<std::uint64_t> seed_flag;
    simulate->add_option("solution", solution_path, "solution.csv from `solve`")->required();
    simulate->add_option("config", config_path, "Run configuration")->required();
    simulate->add_option("--x0", x0_flag, "Initial debt-to-income ratio");
    simulate->add_option("--n-paths", paths_flag, "Number of paths");
    simulate->add_option("--dt", dt_flag, "Time step");
    simulate->add_option("--horizon", horizon_flag, "Truncation time");
    simulate->add_option("--seed", seed_flag, "Root seed");
    simulate->add_option("--threads", threads_flag, "Worker threads");
    simulate->add_option("--out", out_flag, "Output directory");

    auto* classify = app.add_subcommand("classify", "Classify the control regime near x*");
    classify->add_option("config", config_path, "Run configuration")->required();
    classify->add_option("--out", out_flag, "Output directory");

    auto* bounds = app.add_subcommand("bounds", "Explicit constants and bound curves");
    std::size_t samples = 201;
    bounds->add_option("config", config_path, "Run configuration")->required();
    bounds->add_option("--samples", samples, "Points per bound curve")->check(CLI::Range(2, 100000));
    bounds->add_option("--out", out_flag, "Output directory");

    auto* sweep = app.add_subcommand("sweep", "Solve and classify along one parameter axis");
    std::string sweep_param;
    std::vector<double> sweep_values;
    sweep->add_option("config", config_path, "Run configuration")->required();
    sweep->add_option("--param", sweep_param, "Parameter name, e.g. q or x_star")->required();
    sweep->add_option("--values", sweep_values, "Comma-separated values")->required()->delimiter(',');
    sweep->add_option("--n", n_flag, "Grid points");
    sweep->add_option("--eps-final", eps_final, "Last regularization level");
    sweep->add_option("--out", out_flag, "Output directory");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }

    const Timer timer;
    try {
        RunConfig cfg = load_config(config_path);

        if (solve->parsed()) {
            apply_solver_flags(cfg, n_flag, eps_final);
            const fs::path dir = resolve_out(out_flag, cfg);
            const int code = solve_into(cfg, dir, out, err);
            write_meta(dir, "solve", timer.seconds());
            return code;
        }

        if (verify->parsed()) {
            const SolutionFile sf = load_matching_solution(solution_path, cfg);
            const VerificationReport rep = verify_solution(sf.solution, cfg.model);
            const fs::path dir = resolve_out(out_flag, cfg);
            write_text(dir / "verification.json", to_json(rep));
            write_meta(dir, "verify", timer.seconds());
            for (const auto& c : rep.checks) {
                out << to_string(c.status) << "\t" << c.name << "\t" << short_num(c.worst_violation);
                if (c.witness) out << "\t@x=" << short_num(*c.witness);
                out << "\n";
            }
            if (!rep.passed()) {
                for (const auto& c : rep.checks)
                    if (c.status == CheckStatus::Fail) err << "check failed: " << c.name << "\n";
                return kVerificationFailure;
            }
            return kOk;
        }

        if (simulate->parsed()) {
            const SolutionFile sf = load_matching_solution(solution_path, cfg);
            SimConfig sim = cfg.sim;
            if (x0_flag) sim.x0 = *x0_flag;
            if (paths_flag) sim.n_paths = *paths_flag;
            if (dt_flag) sim.dt = *dt_flag;
            if (horizon_flag) sim.horizon = *horizon_flag;
            if (seed_flag) sim.seed = *seed_flag;
            if (threads_flag) sim.threads = *threads_flag;
            try {
                sim.validate();
            } catch (const std::invalid_argument& e) {
                throw InputError(e.what());
            }
            if (sim.x0 > cfg.model.params.x_star) throw InputError("--x0 must lie in [0, x_star]");
            const Feedback fb = Feedback::from_solution(sf.solution, cfg.model.params.v_max);
            const McResult res = estimate(fb, cfg.model, sim);

            // PDE values at x0 by linear interpolation, for side-by-side reading
            auto j = nlohmann::ordered_json::parse(to_json(res, sim));
            const auto& g = sf.solution.grid;
            const double s = std::min(sim.x0 / g.h, static_cast<double>(g.n - 1));
            const std::size_t i = std::min(static_cast<std::size_t>(s), g.n - 2);
            const double w = s - static_cast<double>(i);
            j["pde"] = {{"V", (1 - w) * sf.solution.V[i] + w * sf.solution.V[i + 1]},
                        {"p", (1 - w) * sf.solution.p[i] + w * sf.solution.p[i + 1]}};
            const fs::path dir = resolve_out(out_flag, cfg);
            write_text(dir / "simulation.json", j.dump(2));
            write_meta(dir, "simulate", timer.seconds());
            out << "J = " << short_num(res.value.mean) << " +- " << short_num(res.value.standard_error)
                << " (PDE " << short_num(j["pde"]["V"].get<double>()) << "), p = "
                << short_num(res.bond.mean) << " +- " << short_num(res.bond.standard_error) << " (PDE "
                << short_num(j["pde"]["p"].get<double>()) << ")\n";
            return kOk;
        }

        if (classify->parsed()) {
            const RegimeClassification c = classify_regime(cfg.model);
            const fs::path dir = resolve_out(out_flag, cfg);
            write_text(dir / "classification.json", to_json(c));
            write_meta(dir, "classify", timer.seconds());
            out << to_string(c.label) << "\n";
            return kOk;
        }

        if (bounds->parsed()) {
            const BoundsReport b = compute_constants(cfg.model);
            const BoundCurves curves = sample_bound_curves(cfg.model, b, samples);
            const fs::path dir = resolve_out(out_flag, cfg);
            write_text(dir / "bounds.json", to_json(b, &curves));
            write_meta(dir, "bounds", timer.seconds());
            out << "theta_min = " << short_num(b.theta_min) << ", K1 = " << short_num(b.K1)
                << ", gamma = " << short_num(b.gamma) << ", log M* = " << short_num(b.log_M_star) << "\n";
            return kOk;
        }

        if (sweep->parsed()) {
            apply_solver_flags(cfg, n_flag, eps_final);
            const fs::path dir = resolve_out(out_flag, cfg);
            nlohmann::ordered_json index;
            index["param"] = sweep_param;
            nlohmann::ordered_json entries = nlohmann::ordered_json::array();
            int worst = kOk;
            for (double value : sweep_values) {
                const std::string tag = sweep_param + "_" + short_num(value);
                nlohmann::ordered_json e;
                e["value"] = value;
                e["dir"] = tag;
                RunConfig point = cfg;
                point.model = with_parameter(cfg.model, sweep_param, value);
                if (const ValidationReport v = validate_params(point.model); !v.passed()) {
                    e["status"] = "invalid";
                    e["error"] = v.first_failure()->name;
                    err << tag << ": invalid parameters: " << v.first_failure()->name << "\n";
                    worst = std::max(worst, static_cast<int>(kInputError));
                    entries.push_back(std::move(e));
                    continue;
                }
                const RegimeClassification c = classify_regime(point.model);
                write_text(dir / tag / "classification.json", to_json(c));
                e["regime"] = to_string(c.label);
                e["classification"] = tag + "/classification.json";
                out << tag << ": " << to_string(c.label) << "\n";
                const int code = solve_into(point, dir / tag, out, err);
                e["status"] = code == kOk ? "ok" : "solver_failure";
                e["solution"] = tag + "/solution.csv";
                worst = std::max(worst, code);
                entries.push_back(std::move(e));
            }
            index["entries"] = std::move(entries);
            write_text(dir / "sweep.json", index.dump(2));
            write_meta(dir, "sweep", timer.seconds());
            return worst;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kInputError;
    } catch (const IoError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const SolverError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const fs::filesystem_error& e) {
        err << "filesystem error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}

}  // namespace sovdebt::cli
