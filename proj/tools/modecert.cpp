// modecert: log-concave mode inference from the command line.
//
// Subcommands: fit, fit-constrained, lrtest, ci, simulate-null, coverage,
// laplace-example.  Output is JSON on stdout (or --out).  Exit codes:
// 0 success, 2 input error, 3 non-convergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "modecert/distributions.hpp"
#include "modecert/inference.hpp"
#include "modecert/montecarlo.hpp"
#include "modecert/sample.hpp"
#include "modecert/solver.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNotConverged = 3;

struct Cfg {
    std::string input;
    std::string dist;
    double mode = 0.0;
    bool mode_set = false;
    double alpha = 0.05;
    std::string levels = "0.8,0.9,0.95,0.99";
    std::size_t n = 10000;
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double tol = 1e-7;
    int max_iter = 500;
    int grid = 201;
    std::string table;
    std::string out;
};

std::vector<double> parse_level_list(const std::string& s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        std::string tok = s.substr(pos, next - pos);
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size() || !(v > 0.0 && v < 1.0))
            throw std::invalid_argument("bad level list entry: " + tok);
        out.push_back(v);
        pos = next + 1;
    }
    if (out.empty()) throw std::invalid_argument("empty level list");
    return out;
}

// Resolve the critical-value table: --table wins; otherwise look for the
// shipped asset next to the working directory, then next to the executable.
modecert::CriticalValueTable load_table(const Cfg& cfg, const char* argv0) {
    if (!cfg.table.empty()) return modecert::CriticalValueTable::load(cfg.table);
    namespace fs = std::filesystem;
    std::vector<fs::path> candidates = {fs::path("tables/d_alpha_default.json")};
    std::error_code ec;
    fs::path exe = fs::canonical(fs::path(argv0), ec);
    if (!ec) {
        candidates.push_back(exe.parent_path() / "tables/d_alpha_default.json");
        candidates.push_back(exe.parent_path() / "../tables/d_alpha_default.json");
        candidates.push_back(exe.parent_path() / "../../tables/d_alpha_default.json");
    }
    for (const auto& p : candidates)
        if (fs::exists(p, ec)) return modecert::CriticalValueTable::load(p.string());
    throw std::runtime_error(
        "no critical-value table found; pass --table or ship tables/d_alpha_default.json");
}

modecert::Sample get_sample(const Cfg& cfg) {
    bool has_input = !cfg.input.empty(), has_dist = !cfg.dist.empty();
    if (has_input == has_dist)
        throw std::invalid_argument("exactly one of --input or --dist is required");
    if (has_input) return modecert::read_sample(cfg.input);
    if (!cfg.seed_set) throw std::invalid_argument("--seed is required with --dist");
    auto d = modecert::ReferenceDistribution::parse(cfg.dist);
    return d.sample(cfg.n, cfg.seed, 0);
}

modecert::SolverOptions solver_opts(const Cfg& cfg) {
    modecert::SolverOptions o;
    o.tol = cfg.tol;
    o.max_iter = cfg.max_iter;
    return o;
}

void emit(const json& j, const Cfg& cfg) {
    std::string text = j.dump(2);
    if (cfg.out.empty()) {
        std::cout << text << "\n";
    } else {
        std::ofstream f(cfg.out);
        if (!f) throw std::runtime_error("cannot write output file: " + cfg.out);
        f << text << "\n";
    }
}

json density_json(const modecert::PiecewiseLogLinearDensity& d) { return d.to_json(); }

int cmd_fit(const Cfg& cfg) {
    modecert::Sample s = get_sample(cfg);
    modecert::FitReport r = modecert::fit(s, solver_opts(cfg));
    modecert::CharacterizationReport c = modecert::check_characterization(r, s);
    json j;
    j["density"] = density_json(r.density);
    j["log_likelihood"] = r.log_likelihood;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["max_characterization_residual"] = r.max_characterization_residual;
    j["diagnostics"] = {{"knot_cdf_residual", c.knot_cdf_residual},
                        {"integral_sign_violation", c.integral_sign_violation},
                        {"total_mass", r.density.total_mass()}};
    emit(j, cfg);
    return r.converged ? kExitOk : kExitNotConverged;
}

int cmd_fit_constrained(const Cfg& cfg) {
    modecert::Sample s = get_sample(cfg);
    modecert::ConstrainedFitReport r = modecert::fit_constrained(s, cfg.mode, solver_opts(cfg));
    modecert::ConstrainedCharacterizationReport c =
        modecert::check_constrained_characterization(r, s);
    json j;
    j["density"] = density_json(r.density);
    j["mode"] = r.mode;
    j["log_likelihood"] = r.log_likelihood;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["max_characterization_residual"] = r.max_characterization_residual;
    j["integral_identity_residual"] = r.integral_identity_residual;
    j["diagnostics"] = {{"mass_identity_residual", c.mass_identity_residual},
                        {"knot_cdf_residual", c.knot_cdf_residual},
                        {"left_violation", c.left_violation},
                        {"right_violation", c.right_violation}};
    emit(j, cfg);
    return r.converged ? kExitOk : kExitNotConverged;
}

// p-value by inverse interpolation of the table: the level whose critical
// value equals the observed statistic; clamped to the table's alpha range.
double table_p_value(const modecert::CriticalValueTable& t, double stat) {
    const auto& a = t.alphas();
    const auto& d = t.d();
    if (stat >= d.front()) return a.front();  // more extreme than the smallest alpha
    if (stat <= d.back()) return a.back();    // less extreme than the largest alpha
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        if (stat <= d[i] && stat >= d[i + 1]) {
            double w = (d[i] - stat) / (d[i] - d[i + 1]);
            return a[i] + w * (a[i + 1] - a[i]);
        }
    }
    return a.back();
}

int cmd_lrtest(const Cfg& cfg, const char* argv0) {
    modecert::Sample s = get_sample(cfg);
    modecert::CriticalValueTable table = load_table(cfg, argv0);
    modecert::LrTestResult r = modecert::lr_test(s, cfg.mode, cfg.alpha, table, solver_opts(cfg));
    json j;
    j["m"] = r.m;
    j["stat"] = r.stat;
    j["loglik_u"] = r.loglik_u;
    j["loglik_c"] = r.loglik_c;
    j["n"] = r.n;
    j["alpha"] = cfg.alpha;
    j["critical_value"] = modecert::critical_value(table, cfg.alpha);
    j["reject"] = r.reject;
    j["p_value"] = table_p_value(table, r.stat);
    j["p_value_method"] = "table-inverse (clamped to table range)";
    if (r.clamped) j["note"] = "tiny negative statistic clamped to zero";
    emit(j, cfg);
    return r.converged ? kExitOk : kExitNotConverged;
}

int cmd_ci(const Cfg& cfg, const char* argv0) {
    modecert::Sample s = get_sample(cfg);
    modecert::CriticalValueTable table = load_table(cfg, argv0);
    modecert::CiOptions co;
    co.grid_points = cfg.grid;
    modecert::LrProfile profile(s, solver_opts(cfg));
    modecert::ConfidenceInterval ci = modecert::confidence_interval(profile, cfg.alpha, table, co);
    json j;
    j["level"] = ci.level;
    j["lower"] = ci.lower;
    j["upper"] = ci.upper;
    j["gap_flag"] = ci.gap_flag;
    j["mode_hat"] = profile.unconstrained().density.mode_summary().mode;
    j["grid"] = ci.grid;
    j["grid_accepted"] = std::vector<int>(ci.grid_accepted.begin(), ci.grid_accepted.end());
    emit(j, cfg);
    return profile.unconstrained().converged ? kExitOk : kExitNotConverged;
}

int cmd_simulate_null(const Cfg& cfg) {
    if (cfg.dist.empty()) throw std::invalid_argument("simulate-null requires --dist");
    if (!cfg.seed_set) throw std::invalid_argument("simulate-null requires --seed");
    auto d = modecert::ReferenceDistribution::parse(cfg.dist);
    std::vector<double> alphas = {0.001, 0.005, 0.01, 0.025, 0.05, 0.075, 0.1,
                                  0.15,  0.2,   0.25, 0.3,   0.4,  0.5};
    modecert::SimulationReport rep =
        modecert::simulate_null(d, d.mode(), cfg.n, cfg.reps, cfg.seed, 0, solver_opts(cfg));
    modecert::CriticalValueTable table = modecert::critical_values_from(rep, alphas);
    json j = table.to_json(); // extra keys below don't disturb table loading
    j["quantile_levels"] = rep.quantile_levels;
    j["quantiles"] = rep.quantiles;
    j["failures"] = rep.failures;
    j["wall_seconds"] = rep.wall_seconds;
    emit(j, cfg);
    return kExitOk;
}

int cmd_coverage(const Cfg& cfg, const char* argv0) {
    if (cfg.dist.empty()) throw std::invalid_argument("coverage requires --dist");
    if (!cfg.seed_set) throw std::invalid_argument("coverage requires --seed");
    auto d = modecert::ReferenceDistribution::parse(cfg.dist);
    std::vector<double> levels = parse_level_list(cfg.levels);
    modecert::CriticalValueTable table = load_table(cfg, argv0);
    modecert::CiOptions co;
    co.grid_points = cfg.grid;
    modecert::SimulationReport rep = modecert::coverage_study(d, cfg.n, cfg.reps, levels, table,
                                                              cfg.seed, co, solver_opts(cfg));
    json j;
    j["dist"] = rep.dist;
    j["n"] = rep.n;
    j["M"] = rep.M;
    j["seed"] = rep.seed;
    j["mode"] = rep.m_true;
    j["levels"] = rep.levels;
    j["coverage"] = rep.coverage;
    j["mean_length"] = rep.mean_length;
    j["failures"] = rep.failures;
    j["wall_seconds"] = rep.wall_seconds;
    emit(j, cfg);
    return kExitOk;
}

int cmd_laplace_example(const Cfg& cfg) {
    modecert::LaplaceProjection p = modecert::solve_laplace_projection();
    auto laplace = modecert::ReferenceDistribution(
        modecert::ReferenceDistribution::Family::Laplace, 0.0, 1.0);
    auto fm = [&p](double x) { return p.cdf(x); };
    auto g = [&laplace](double x) { return laplace.cdf(x); };
    modecert::ProjectionCheckReport chk =
        modecert::population_projection_check(fm, g, 1.0, -40.0, 40.0, 2000);
    json j;
    j["a_star"] = p.a_star;
    j["c_star"] = p.c_star;
    j["kl"] = p.kl;
    j["projection_check"] = {{"max_left_violation", chk.max_left_violation},
                             {"max_right_violation", chk.max_right_violation},
                             {"max_violation", chk.max_violation()}};
    emit(j, cfg);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Likelihood-ratio inference for the mode of a log-concave density"};
    app.require_subcommand(1);
    Cfg cfg;

    auto add_common = [&](CLI::App* sub, bool needs_mode) {
        sub->add_option("--input", cfg.input, "sample file, one number per line ('#' comments)");
        sub->add_option("--dist", cfg.dist, "synthetic source, e.g. normal:0,1 gamma:3,1 chisq:4");
        if (needs_mode) sub->add_option("--mode", cfg.mode, "candidate mode m")->required();
        sub->add_option("--n", cfg.n, "sample size for --dist sources");
        sub->add_option("--seed", cfg.seed, "RNG seed")->each([&](const std::string&) {
            cfg.seed_set = true;
        });
        sub->add_option("--tol", cfg.tol, "solver characterization tolerance");
        sub->add_option("--max-iter", cfg.max_iter, "solver outer iteration cap");
        sub->add_option("--out", cfg.out, "write JSON here instead of stdout");
    };

    CLI::App* fit = app.add_subcommand("fit", "unconstrained log-concave MLE");
    add_common(fit, false);
    CLI::App* fitc = app.add_subcommand("fit-constrained", "MLE with mode constrained to m");
    add_common(fitc, true);
    CLI::App* lrtest = app.add_subcommand("lrtest", "LR test of H0: mode = m");
    add_common(lrtest, true);
    lrtest->add_option("--alpha", cfg.alpha, "test level");
    lrtest->add_option("--table", cfg.table, "critical-value table JSON");
    CLI::App* ci = app.add_subcommand("ci", "confidence interval for the mode");
    add_common(ci, false);
    ci->add_option("--alpha", cfg.alpha, "1 - confidence level");
    ci->add_option("--grid", cfg.grid, "inversion grid points");
    ci->add_option("--table", cfg.table, "critical-value table JSON");
    CLI::App* sim = app.add_subcommand("simulate-null", "simulate the null LR distribution");
    add_common(sim, false);
    sim->add_option("--reps", cfg.reps, "Monte-Carlo replications");
    CLI::App* cov = app.add_subcommand("coverage", "CI coverage/length study");
    add_common(cov, false);
    cov->add_option("--reps", cfg.reps, "Monte-Carlo replications");
    cov->add_option("--levels", cfg.levels, "comma-separated confidence levels");
    cov->add_option("--alpha", cfg.alpha, "(unused; use --levels)");
    cov->add_option("--grid", cfg.grid, "inversion grid points");
    cov->add_option("--table", cfg.table, "critical-value table JSON");
    CLI::App* lap = app.add_subcommand("laplace-example", "Laplace projection constants");
    lap->add_option("--out", cfg.out, "write JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    try {
        if (fit->parsed()) return cmd_fit(cfg);
        if (fitc->parsed()) return cmd_fit_constrained(cfg);
        if (lrtest->parsed()) return cmd_lrtest(cfg, argv[0]);
        if (ci->parsed()) return cmd_ci(cfg, argv[0]);
        if (sim->parsed()) return cmd_simulate_null(cfg);
        if (cov->parsed()) return cmd_coverage(cfg, argv[0]);
        if (lap->parsed()) return cmd_laplace_example(cfg);
    } catch (const modecert::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const modecert::DegenerateSample& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::out_of_range& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
