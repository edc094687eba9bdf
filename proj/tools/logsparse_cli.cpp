// Command-line experiment harness: single solves, SE fixed points, noiseless
// phase diagrams, MSE-vs-lambda sweeps, and best-MSE grids, emitted as CSV
// (optionally mirrored as JSON lines).

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "logsparse/admm.hpp"
#include "logsparse/amp.hpp"
#include "logsparse/parallel.hpp"
#include "logsparse/penalty.hpp"
#include "logsparse/problem.hpp"
#include "logsparse/rng.hpp"
#include "logsparse/state_evolution.hpp"

namespace {

using namespace logsparse;

// ---------------------------------------------------------------------------
// Output

class Writer {
public:
    Writer(const std::string& out_path, const std::string& jsonl_path,
           std::vector<std::string> columns)
        : columns_(std::move(columns)) {
        if (!out_path.empty() && out_path != "-") {
            file_.open(out_path);
            if (!file_)
                throw std::runtime_error("cannot open output file: " + out_path);
        }
        if (!jsonl_path.empty()) {
            jsonl_.open(jsonl_path);
            if (!jsonl_)
                throw std::runtime_error("cannot open jsonl file: " + jsonl_path);
        }
        std::ostream& os = file_.is_open() ? file_ : std::cout;
        for (std::size_t i = 0; i < columns_.size(); ++i)
            os << (i ? "," : "") << columns_[i];
        os << "\n";
    }

    void row(const std::vector<std::string>& values) {
        if (values.size() != columns_.size())
            throw std::logic_error("row width does not match header");
        std::ostream& os = file_.is_open() ? file_ : std::cout;
        for (std::size_t i = 0; i < values.size(); ++i)
            os << (i ? "," : "") << values[i];
        os << "\n";
        if (jsonl_.is_open()) {
            nlohmann::json j;
            for (std::size_t i = 0; i < values.size(); ++i)
                j[columns_[i]] = values[i];
            jsonl_ << j.dump() << "\n";
        }
    }

private:
    std::vector<std::string> columns_;
    std::ofstream file_;
    std::ofstream jsonl_;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Shared option plumbing

struct CommonOptions {
    int n = 500;
    double alpha = 0.9;
    double rho = 0.4;
    double sigma2 = 1e-2;
    double lambda_pen = 0.1;
    std::string penalty = "logsum";
    std::string solver = "amp";
    int trials = 3;
    std::uint64_t seed = 1;
    std::string out;
    std::string jsonl;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool paper_scale = false;
    double damping = 0.2;
    int max_iter = 1000;
};

PenaltySpec parse_penalty(const std::string& name) {
    PenaltySpec spec;
    if (name == "logsum")
        spec.kind = PenaltyKind::LogSum;
    else if (name == "l1")
        spec.kind = PenaltyKind::L1;
    else
        throw CLI::ValidationError("--penalty", "expected 'logsum' or 'l1'");
    return spec;
}

void add_output_flags(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--out", o.out, "Output CSV path ('-' or empty for stdout)");
    cmd->add_option("--jsonl", o.jsonl, "Optional JSON-lines mirror path");
    cmd->add_option("--jobs", o.jobs, "Worker threads for trials / grid points");
    cmd->add_flag("--paper-scale", o.paper_scale,
                  "Use full experiment sizes instead of desk-scale defaults");
}

struct TrialStats {
    double mean = std::nan("");
    double stderr_ = std::nan("");
    int diverged = 0;
    int used = 0;
};

TrialStats aggregate(const std::vector<double>& mses, const std::vector<bool>& ok) {
    TrialStats s;
    double sum = 0.0;
    for (std::size_t i = 0; i < mses.size(); ++i) {
        if (ok[i]) {
            sum += mses[i];
            ++s.used;
        } else {
            ++s.diverged;
        }
    }
    if (s.used == 0)
        return s;
    s.mean = sum / s.used;
    double sq = 0.0;
    for (std::size_t i = 0; i < mses.size(); ++i)
        if (ok[i])
            sq += (mses[i] - s.mean) * (mses[i] - s.mean);
    s.stderr_ = s.used > 1 ? std::sqrt(sq / (s.used - 1) / s.used) : 0.0;
    return s;
}

struct TrialOutcome {
    double mse = std::nan("");
    int iters = 0;
    std::string status = "error";
    bool ok = false;
};

TrialOutcome run_one_trial(const std::string& solver, const ProblemConfig& pc,
                           const CommonOptions& o) {
    TrialOutcome out;
    const ProblemInstance inst = generate_instance(pc);
    const PenaltySpec spec = parse_penalty(o.penalty);
    if (solver == "amp") {
        AmpConfig cfg;
        cfg.lambda_pen = o.lambda_pen;
        cfg.damping = o.damping;
        cfg.max_iter = o.max_iter;
        cfg.penalty = spec;
        const AmpResult r = run_amp(inst, cfg);
        out.mse = mse(r.state.x_hat, inst.x_true);
        out.iters = r.state.iter;
        out.status = to_string(r.status);
        out.ok = r.status != AmpStatus::Diverged;
    } else if (solver == "admm") {
        AdmmConfig cfg;
        cfg.lambda_pen = o.lambda_pen;
        cfg.max_iter = o.max_iter;
        cfg.penalty = spec;
        if (pc.sigma2 == 0.0) {
            cfg.mode = AdmmMode::Noiseless;
            cfg.mse_stop = 1e-4;
        } else {
            cfg.mode = AdmmMode::Noisy;
        }
        const AdmmResult r = run_admm(inst, cfg);
        out.mse = mse(r.estimate(), inst.x_true);
        out.iters = r.state.iter;
        out.status = to_string(r.status);
        out.ok = r.status != AdmmStatus::Diverged;
    } else {
        throw CLI::ValidationError("--solver", "expected 'amp', 'admm', or 'se'");
    }
    return out;
}

SeConfig make_se_config(const CommonOptions& o) {
    SeConfig cfg;
    cfg.alpha = o.alpha;
    cfg.rho = o.rho;
    cfg.sigma2 = o.sigma2;
    cfg.lambda_pen = o.lambda_pen;
    cfg.damping = o.damping;
    cfg.max_iter = o.max_iter;
    cfg.penalty = parse_penalty(o.penalty);
    return cfg;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_solve(const CommonOptions& o) {
    if (o.solver == "se") {
        Writer w(o.out, o.jsonl,
                 {"alpha", "rho", "sigma2", "lambda_pen", "penalty", "e_fixed",
                  "chi_fixed", "iters", "status"});
        const SeResult r = run_se(make_se_config(o));
        w.row({fmt(o.alpha), fmt(o.rho), fmt(o.sigma2), fmt(o.lambda_pen), o.penalty,
               fmt(r.state.e), fmt(r.state.chi), std::to_string(r.state.iter),
               to_string(r.status)});
        return 0;
    }
    Writer w(o.out, o.jsonl,
             {"record", "solver", "penalty", "n", "alpha", "rho", "sigma2",
              "lambda_pen", "trial", "seed", "mse", "mse_stderr", "iters", "status",
              "diverged"});
    std::vector<TrialOutcome> outcomes(o.trials);
    std::vector<std::uint64_t> seeds(o.trials);
    parallel_for(o.trials, o.jobs, [&](std::size_t t) {
        ProblemConfig pc{o.n, o.alpha, o.rho, o.sigma2, derive_seed(o.seed, t)};
        seeds[t] = pc.seed;
        outcomes[t] = run_one_trial(o.solver, pc, o);
    });
    std::vector<double> mses;
    std::vector<bool> ok;
    for (int t = 0; t < o.trials; ++t) {
        const auto& r = outcomes[t];
        w.row({"trial", o.solver, o.penalty, std::to_string(o.n), fmt(o.alpha),
               fmt(o.rho), fmt(o.sigma2), fmt(o.lambda_pen), std::to_string(t),
               std::to_string(seeds[t]), fmt(r.mse), "", std::to_string(r.iters),
               r.status, ""});
        mses.push_back(r.mse);
        ok.push_back(r.ok);
    }
    const TrialStats s = aggregate(mses, ok);
    w.row({"aggregate", o.solver, o.penalty, std::to_string(o.n), fmt(o.alpha),
           fmt(o.rho), fmt(o.sigma2), fmt(o.lambda_pen), "", std::to_string(o.seed),
           fmt(s.mean), fmt(s.stderr_), "", s.used > 0 ? "ok" : "all_diverged",
           std::to_string(s.diverged)});
    return 0;
}

int cmd_se_fixed_point(const CommonOptions& o) {
    Writer w(o.out, o.jsonl,
             {"alpha", "rho", "sigma2", "lambda_pen", "penalty", "e_fixed", "chi_fixed",
              "iters", "status"});
    const SeResult r = run_se(make_se_config(o));
    w.row({fmt(o.alpha), fmt(o.rho), fmt(o.sigma2), fmt(o.lambda_pen), o.penalty,
           fmt(r.state.e), fmt(r.state.chi), std::to_string(r.state.iter),
           to_string(r.status)});
    return 0;
}

int cmd_phase_diagram(CommonOptions o, int grid) {
    if (o.paper_scale) {
        grid = 50;
        o.n = 1000;
        o.trials = 5;
    }
    Writer w(o.out, o.jsonl,
             {"series", "penalty", "alpha", "rho", "n", "trials", "mse_mean",
              "mse_stderr", "diverged", "status", "alpha_c"});

    struct Point {
        double alpha, rho;
        TrialStats stats;
        std::string status = "ok";
    };
    std::vector<Point> points;
    for (int ri = 1; ri <= grid; ++ri)
        for (int ai = 1; ai <= grid; ++ai)
            points.push_back({static_cast<double>(ai) / grid,
                              static_cast<double>(ri) / grid,
                              {},
                              "ok"});

    parallel_for(points.size(), o.jobs, [&](std::size_t i) {
        Point& p = points[i];
        std::vector<double> mses(o.trials);
        std::vector<bool> ok(o.trials, false);
        for (int t = 0; t < o.trials; ++t) {
            try {
                CommonOptions local = o;
                local.alpha = p.alpha;
                local.rho = p.rho;
                local.sigma2 = 0.0;
                local.lambda_pen = 0.0;
                ProblemConfig pc{o.n, p.alpha, p.rho, 0.0,
                                 derive_seed(o.seed, i * 1000 + t)};
                const TrialOutcome r = run_one_trial("admm", pc, local);
                mses[t] = r.mse;
                ok[t] = r.ok;
            } catch (const std::exception&) {
                p.status = "error";
            }
        }
        p.stats = aggregate(mses, ok);
    });
    for (const Point& p : points)
        w.row({"grid", o.penalty, fmt(p.alpha), fmt(p.rho), std::to_string(o.n),
               std::to_string(o.trials), fmt(p.stats.mean), fmt(p.stats.stderr_),
               std::to_string(p.stats.diverged), p.status, ""});

    // SE boundary overlay for both penalties.
    for (const std::string pen : {"logsum", "l1"}) {
        struct BoundaryRow {
            double rho, alpha_c;
            std::string status = "ok";
        };
        std::vector<BoundaryRow> boundary(grid);
        parallel_for(boundary.size(), o.jobs, [&](std::size_t i) {
            boundary[i].rho = static_cast<double>(i + 1) / grid;
            SeConfig tmpl;
            tmpl.penalty = parse_penalty(pen);
            tmpl.max_iter = o.max_iter;
            try {
                boundary[i].alpha_c = phase_boundary(boundary[i].rho, tmpl);
            } catch (const std::exception&) {
                boundary[i].alpha_c = std::nan("");
                boundary[i].status = "error";
            }
        });
        for (const auto& b : boundary)
            w.row({"boundary", pen, "", fmt(b.rho), "", "", "", "", "", b.status,
                   fmt(b.alpha_c)});
    }
    return 0;
}

int cmd_mse_sweep(CommonOptions o, int lambda_points, double lambda_lo,
                  double lambda_hi) {
    if (o.paper_scale) {
        o.n = 1000;
        o.trials = 10;
    }
    Writer w(o.out, o.jsonl,
             {"solver", "penalty", "alpha", "rho", "sigma2", "lambda_pen", "n",
              "trials", "mse_mean", "mse_stderr", "diverged", "status"});
    std::vector<double> lambdas(lambda_points);
    for (int i = 0; i < lambda_points; ++i)
        lambdas[i] = std::pow(10.0, std::log10(lambda_lo) +
                                        (std::log10(lambda_hi) - std::log10(lambda_lo)) *
                                            i / (lambda_points - 1));

    struct SweepRow {
        std::string solver;
        double lambda;
        TrialStats stats;
        std::string status = "ok";
    };
    std::vector<SweepRow> rows;
    for (double l : lambdas)
        for (const std::string s : {"se", "amp", "admm"})
            rows.push_back({s, l, {}, "ok"});

    parallel_for(rows.size(), o.jobs, [&](std::size_t i) {
        SweepRow& r = rows[i];
        CommonOptions local = o;
        local.lambda_pen = r.lambda;
        try {
            if (r.solver == "se") {
                const SeResult se = run_se(make_se_config(local));
                r.stats.mean = se.state.e;
                r.stats.stderr_ = 0.0;
                r.stats.used = 1;
                r.status = to_string(se.status);
            } else {
                std::vector<double> mses(o.trials);
                std::vector<bool> ok(o.trials, false);
                for (int t = 0; t < o.trials; ++t) {
                    ProblemConfig pc{o.n, o.alpha, o.rho, o.sigma2,
                                     derive_seed(o.seed, t)};
                    const TrialOutcome out = run_one_trial(r.solver, pc, local);
                    mses[t] = out.mse;
                    ok[t] = out.ok;
                }
                r.stats = aggregate(mses, ok);
            }
        } catch (const std::exception&) {
            r.status = "error";
        }
    });
    for (const SweepRow& r : rows)
        w.row({r.solver, o.penalty, fmt(o.alpha), fmt(o.rho), fmt(o.sigma2),
               fmt(r.lambda), std::to_string(o.n), std::to_string(o.trials),
               fmt(r.stats.mean), fmt(r.stats.stderr_), std::to_string(r.stats.diverged),
               r.status});
    return 0;
}

int cmd_best_mse_grid(CommonOptions o, int grid) {
    if (o.paper_scale)
        grid = 50;
    Writer w(o.out, o.jsonl,
             {"alpha", "rho", "sigma2", "mse_logsum", "lambda_logsum", "mse_l1",
              "lambda_l1", "d", "status"});
    struct Point {
        double alpha, rho;
        BestMse logsum, l1;
        std::string status = "ok";
    };
    std::vector<Point> points;
    for (int ri = 1; ri <= grid; ++ri)
        for (int ai = 1; ai <= grid; ++ai)
            points.push_back({1.5 * ai / grid, static_cast<double>(ri) / grid});

    parallel_for(points.size(), o.jobs, [&](std::size_t i) {
        Point& p = points[i];
        try {
            for (const std::string pen : {"logsum", "l1"}) {
                SeConfig tmpl;
                tmpl.alpha = p.alpha;
                tmpl.rho = p.rho;
                tmpl.sigma2 = o.sigma2;
                tmpl.damping = o.damping;
                tmpl.max_iter = o.max_iter;
                tmpl.penalty = parse_penalty(pen);
                (pen == "logsum" ? p.logsum : p.l1) = best_mse_over_lambda(tmpl);
            }
        } catch (const std::exception&) {
            p.status = "error";
        }
    });
    for (const Point& p : points)
        w.row({fmt(p.alpha), fmt(p.rho), fmt(o.sigma2), fmt(p.logsum.mse_star),
               fmt(p.logsum.lambda_star), fmt(p.l1.mse_star), fmt(p.l1.lambda_star),
               fmt(p.logsum.mse_star - p.l1.mse_star), p.status});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse recovery experiments: log-sum and l1 penalties via AMP, "
                 "state evolution, and ADMM"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI/TOML config file");

    CommonOptions o;
    int grid = 15;
    int lambda_points = 40;
    double lambda_lo = 1e-4;
    double lambda_hi = 1e2;

    auto add_point_flags = [&](CLI::App* cmd, bool with_lambda = true) {
        cmd->add_option("--n", o.n, "Signal dimension N")->check(CLI::PositiveNumber);
        cmd->add_option("--alpha", o.alpha, "Measurement rate M/N")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--rho", o.rho, "Signal density")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--sigma2", o.sigma2, "Noise variance")
            ->check(CLI::NonNegativeNumber);
        if (with_lambda)
            cmd->add_option("--lambda", o.lambda_pen, "Regularization parameter")
                ->check(CLI::NonNegativeNumber);
        cmd->add_option("--penalty", o.penalty, "Penalty: logsum or l1")
            ->check(CLI::IsMember({"logsum", "l1"}));
        cmd->add_option("--trials", o.trials, "Independent trials")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--seed", o.seed, "Master seed");
        cmd->add_option("--damping", o.damping, "Damping factor (old-iterate fraction)")
            ->check(CLI::Range(0.0, 0.999));
        cmd->add_option("--max-iter", o.max_iter, "Iteration cap")
            ->check(CLI::PositiveNumber);
        add_output_flags(cmd, o);
    };

    auto* solve = app.add_subcommand("solve", "Run one solver at one parameter point");
    add_point_flags(solve);
    solve
        ->add_option("--solver", o.solver, "Solver: amp, admm, or se")
        ->transform(CLI::Transformer(std::map<std::string, std::string>{
            {"admmn", "admm"}}))  // accepted alias
        ->check(CLI::IsMember({"amp", "admm", "se"}));

    auto* sefp = app.add_subcommand("se-fixed-point", "State-evolution fixed point");
    add_point_flags(sefp);

    auto* phase = app.add_subcommand(
        "phase-diagram", "Noiseless ADMM grid plus SE phase boundaries");
    add_point_flags(phase, false);
    phase->add_option("--grid", grid, "Grid points per axis (paper scale: 50)");

    auto* sweep = app.add_subcommand("mse-sweep", "MSE vs lambda for SE, AMP, ADMM");
    add_point_flags(sweep, false);
    sweep->add_option("--lambda-points", lambda_points, "Lambda grid size");
    sweep->add_option("--lambda-min", lambda_lo, "Lambda grid lower end");
    sweep->add_option("--lambda-max", lambda_hi, "Lambda grid upper end");

    auto* best = app.add_subcommand(
        "best-mse-grid", "SE best MSE over lambda for both penalties plus difference");
    add_point_flags(best, false);
    best->add_option("--grid", grid, "Grid points per axis (paper scale: 50)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve->parsed())
            return cmd_solve(o);
        if (sefp->parsed())
            return cmd_se_fixed_point(o);
        if (phase->parsed())
            return cmd_phase_diagram(o, grid);
        if (sweep->parsed())
            return cmd_mse_sweep(o, lambda_points, lambda_lo, lambda_hi);
        if (best->parsed())
            return cmd_best_mse_grid(o, grid);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
