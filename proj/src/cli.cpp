#include "gradsel/cli.hpp"

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "gradsel/csv.hpp"
#include "gradsel/errors.hpp"
#include "gradsel/json_writer.hpp"
#include "gradsel/model_selection.hpp"
#include "gradsel/path.hpp"
#include "gradsel/sim.hpp"
#include "gradsel/solver.hpp"

namespace fs = std::filesystem;

namespace gradsel {

namespace {

struct RunConfig {
    std::string input_path;
    std::string label_column = "y";
    std::string positive_label;
    std::string loss_name = "logistic";
    double gamma = 1.0;
    int n_lambda = 50;
    double lambda_min_ratio = 0.0;  // 0 = default (0.01, or 0.05 when p > n)
    int folds = 10;
    int knn = 0;
    double tol = 1e-7;
    int max_cycles = 2000;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::vector<std::string> emit;  // subset of {json, csv}; empty = both
    int threads = 0;
    bool one_se = false;
    double lambda = 0.0;  // fit only
    int model_id = 1;
    long long n = 300;
    long long n_test = 1000;
    long long p = 10;
    int reps = 20;
    int rep = 0;
};

Loss parse_loss(const std::string& name) {
    if (name == "logistic") return Loss::logistic;
    if (name == "sqhinge") return Loss::squared_hinge;
    fail("cli", "unknown loss '" + name + "' (use logistic or sqhinge)");
}

// Files written by one run; written atomically, removed together if a later
// step fails so no partial artifact set survives.
class OutputSet {
public:
    OutputSet(const std::string& dir, const std::vector<std::string>& emit) : dir_(dir) {
        if (emit.empty()) {
            kinds_ = {"json", "csv"};
        } else {
            for (const std::string& e : emit) {
                if (e != "json" && e != "csv")
                    fail("cli", "unknown emit kind '" + e + "' (use json and/or csv)");
                kinds_.insert(e);
            }
        }
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) fail("cli", "cannot create output directory '" + dir + "'");
    }

    bool want(const std::string& kind) const { return kinds_.count(kind) != 0; }

    void write(const std::string& name, const std::string& content) {
        fs::path final_path = fs::path(dir_) / name;
        fs::path tmp = final_path;
        tmp += ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) fail("cli", "cannot write '" + tmp.string() + "'");
            f << content;
            if (!f) fail("cli", "write failed for '" + tmp.string() + "'");
        }
        std::error_code ec;
        fs::rename(tmp, final_path, ec);
        if (ec) fail("cli", "cannot move '" + tmp.string() + "' into place");
        written_.push_back(final_path.string());
    }

    void discard_all() {
        for (const std::string& f : written_) std::remove(f.c_str());
        written_.clear();
    }

private:
    std::string dir_;
    std::set<std::string> kinds_;
    std::vector<std::string> written_;
};

Json vec_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push(Json::num(v[i]));
    return a;
}

Json ints_json(const std::vector<int>& v) {
    Json a = Json::array();
    for (int x : v) a.push(Json::integer(x));
    return a;
}

Json names_json(const std::vector<std::string>& v) {
    Json a = Json::array();
    for (const std::string& s : v) a.push(Json::str(s));
    return a;
}

Json weights_json(const PenaltyWeights& w) {
    Json j = Json::object();
    j.set("theta0", Json::num(w.theta0));
    j.set("theta", vec_json(w.theta));
    j.set("gamma", Json::num(w.gamma));
    return j;
}

Json fit_diag_json(const FitDiagnostics& d) {
    Json j = Json::object();
    j.set("cycles", Json::integer(d.cycles));
    j.set("objective", Json::num(d.objective));
    j.set("converged", Json::boolean(d.converged));
    j.set("kkt_ridge", Json::num(d.kkt_ridge));
    j.set("kkt_active_max", Json::num(d.kkt_active_max));
    j.set("kkt_inactive_ratio", Json::num(d.kkt_inactive_ratio));
    j.set("kkt_allowance", Json::num(d.kkt_allowance));
    return j;
}

SolverSettings solver_settings(const RunConfig& cfg) {
    SolverSettings ss;
    ss.tol = cfg.tol;
    ss.max_cycles = cfg.max_cycles;
    return ss;
}

Dataset load_input(const RunConfig& cfg) {
    if (cfg.input_path.empty()) fail("cli", "--data is required");
    LoadOptions opts;
    opts.label_column = cfg.label_column;
    opts.positive_label = cfg.positive_label;
    return load_csv(cfg.input_path, opts);
}

void run_fit(const RunConfig& cfg, OutputSet& out) {
    Dataset data = load_input(cfg);
    Loss loss = parse_loss(cfg.loss_name);
    KernelContext ctx = build_context(data, cfg.knn);
    PenaltyWeights weights = adaptive_weights(ctx, data, loss, cfg.gamma);
    FitResult res = fit_single(ctx, data, loss, cfg.lambda, weights, solver_settings(cfg));

    if (!out.want("json")) return;
    Json j = Json::object();
    j.set("subcommand", Json::str("fit"));
    j.set("loss", Json::str(cfg.loss_name));
    j.set("n", Json::integer(data.n()));
    j.set("p", Json::integer(data.p()));
    j.set("lambda", Json::num(cfg.lambda));
    j.set("weights", weights_json(weights));
    j.set("feature_names", names_json(data.feature_names));
    j.set("active_set", ints_json(res.alpha.active_set()));
    Json norms = Json::array();
    for (Eigen::Index ell = 1; ell <= data.p(); ++ell)
        norms.push(Json::num(res.alpha.coef.col(ell).norm()));
    j.set("block_norms", norms);
    j.set("diagnostics", fit_diag_json(res.diagnostics));
    Json coef = Json::array();
    for (Eigen::Index ell = 0; ell <= data.p(); ++ell)
        coef.push(vec_json(res.alpha.coef.col(ell)));
    j.set("coefficients", coef);
    out.write("fit.json", j.dump());
}

void run_path(const RunConfig& cfg, OutputSet& out) {
    Dataset data = load_input(cfg);
    Loss loss = parse_loss(cfg.loss_name);
    KernelContext ctx = build_context(data, cfg.knn);
    SolverSettings ss = solver_settings(cfg);
    PenaltyWeights weights = adaptive_weights(ctx, data, loss, cfg.gamma);
    Eigen::VectorXd pilot = path_pilot(ctx, data, loss, weights.theta0, ss);
    double lmax = lambda_max(ctx, data, loss, weights, ss);
    Eigen::VectorXd grid = lambda_grid(lmax, cfg.n_lambda, cfg.lambda_min_ratio, data.n(),
                                       data.p());
    PathResult pr = fit_path(ctx, data, loss, weights, grid, ss, true, pilot);

    if (!out.want("json")) return;
    Json j = Json::object();
    j.set("subcommand", Json::str("path"));
    j.set("loss", Json::str(cfg.loss_name));
    j.set("n", Json::integer(data.n()));
    j.set("p", Json::integer(data.p()));
    j.set("lambda_max", Json::num(lmax));
    j.set("weights", weights_json(weights));
    j.set("feature_names", names_json(data.feature_names));
    Json points = Json::array();
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        std::size_t ku = static_cast<std::size_t>(k);
        Json pt = Json::object();
        pt.set("lambda", Json::num(grid[k]));
        pt.set("active_set", ints_json(pr.active_sets[ku]));
        pt.set("block_norms", vec_json(pr.block_norms.col(k)));
        pt.set("objective", Json::num(pr.diagnostics[ku].objective));
        pt.set("loss_term", Json::num(pr.loss_terms[ku]));
        pt.set("cycles", Json::integer(pr.diagnostics[ku].cycles));
        pt.set("converged", Json::boolean(pr.diagnostics[ku].converged));
        pt.set("screened_count", Json::integer(static_cast<std::int64_t>(pr.screened_initial[ku].size())));
        pt.set("violations", Json::integer(pr.violation_counts[ku]));
        points.push(std::move(pt));
    }
    j.set("points", points);
    out.write("path.json", j.dump());
}

void run_cv(const RunConfig& cfg, OutputSet& out) {
    Dataset data = load_input(cfg);
    CvConfig cc;
    cc.loss = parse_loss(cfg.loss_name);
    cc.folds = cfg.folds;
    cc.seed = cfg.seed;
    cc.n_lambda = cfg.n_lambda;
    cc.lambda_min_ratio = cfg.lambda_min_ratio;
    cc.gamma = cfg.gamma;
    cc.knn = cfg.knn;
    cc.one_se = cfg.one_se;
    cc.threads = cfg.threads;
    cc.solver = solver_settings(cfg);
    CvResult res = cross_validate(data, cc);

    if (out.want("csv")) {
        std::string csv = "lambda,mean_error,se_error\n";
        for (Eigen::Index k = 0; k < res.lambdas.size(); ++k) {
            csv += Json::format_double(res.lambdas[k]);
            csv += ',';
            csv += Json::format_double(res.mean_error[k]);
            csv += ',';
            csv += Json::format_double(res.se_error[k]);
            csv += '\n';
        }
        out.write("cv_curve.csv", csv);
    }

    if (!out.want("json")) return;
    Json j = Json::object();
    j.set("subcommand", Json::str("cv"));
    j.set("loss", Json::str(cfg.loss_name));
    j.set("n", Json::integer(data.n()));
    j.set("p", Json::integer(data.p()));
    j.set("folds", Json::integer(cfg.folds));
    j.set("seed", Json::integer(static_cast<std::int64_t>(cfg.seed)));
    j.set("one_se", Json::boolean(cfg.one_se));
    j.set("lambda_max", Json::num(res.lambdas[0]));
    j.set("chosen_lambda", Json::num(res.chosen_lambda));
    j.set("chosen_index", Json::integer(res.chosen_index));
    j.set("selected", ints_json(res.selected));
    Json sel_names = Json::array();
    for (int v : res.selected) {
        if (!data.feature_names.empty())
            sel_names.push(Json::str(data.feature_names[static_cast<std::size_t>(v - 1)]));
    }
    j.set("selected_names", sel_names);
    j.set("weights", weights_json(res.path.weights));
    Json diag = Json::object();
    diag.set("mean_error", Json::num(res.mean_error[res.chosen_index]));
    diag.set("se_error", Json::num(res.se_error[res.chosen_index]));
    bool all_conv = true;
    for (const FitDiagnostics& d : res.path.diagnostics) all_conv = all_conv && d.converged;
    diag.set("path_converged", Json::boolean(all_conv));
    diag.set("majority_fallback", Json::boolean(res.refit.majority));
    diag.set("refit_ridge", Json::num(res.refit.ridge));
    j.set("diagnostics", diag);
    out.write("selection.json", j.dump());
}

void run_simulate(const RunConfig& cfg, OutputSet& out) {
    SimModel model = sim_model_from_int(cfg.model_id);
    Dataset train = sim_generate(model, cfg.n, cfg.p, cfg.seed, cfg.rep, false);
    Dataset test = sim_generate(model, cfg.n_test, cfg.p, cfg.seed, cfg.rep, true);

    auto count_pos = [](const Dataset& d) {
        Eigen::Index c = 0;
        for (Eigen::Index i = 0; i < d.n(); ++i)
            if (d.y[i] > 0) ++c;
        return c;
    };

    if (out.want("csv")) {
        out.write("sim_train.csv", render_csv(train));
        out.write("sim_test.csv", render_csv(test));
    }

    if (!out.want("json")) return;
    Json j = Json::object();
    j.set("subcommand", Json::str("simulate"));
    j.set("model", Json::str(sim_model_name(model)));
    j.set("n", Json::integer(cfg.n));
    j.set("n_test", Json::integer(cfg.n_test));
    j.set("p", Json::integer(cfg.p));
    j.set("seed", Json::integer(static_cast<std::int64_t>(cfg.seed)));
    j.set("rep", Json::integer(cfg.rep));
    j.set("train_file", Json::str("sim_train.csv"));
    j.set("test_file", Json::str("sim_test.csv"));
    j.set("train_positive", Json::integer(count_pos(train)));
    j.set("train_negative", Json::integer(train.n() - count_pos(train)));
    j.set("test_positive", Json::integer(count_pos(test)));
    j.set("test_negative", Json::integer(test.n() - count_pos(test)));
    out.write("sim_meta.json", j.dump());
}

void run_bench(const RunConfig& cfg, OutputSet& out) {
    BenchConfig bc;
    bc.model = sim_model_from_int(cfg.model_id);
    bc.loss = parse_loss(cfg.loss_name);
    bc.n = cfg.n;
    bc.p = cfg.p;
    bc.reps = cfg.reps;
    bc.n_test = cfg.n_test;
    bc.seed = cfg.seed;
    bc.threads = cfg.threads;
    bc.cv.folds = cfg.folds;
    bc.cv.n_lambda = cfg.n_lambda;
    bc.cv.lambda_min_ratio = cfg.lambda_min_ratio;
    bc.cv.gamma = cfg.gamma;
    bc.cv.knn = cfg.knn;
    bc.cv.one_se = cfg.one_se;
    bc.cv.solver = solver_settings(cfg);

    if (cfg.n >= 500 || cfg.p >= 50 || cfg.reps >= 100)
        std::fprintf(stderr,
                     "note: full-scale bench settings (n=%lld p=%lld reps=%d); "
                     "this can run for hours\n",
                     cfg.n, cfg.p, cfg.reps);

    BenchResult res = gradsel::run_bench(bc);

    if (out.want("csv")) {
        std::string csv =
            "rep,selected,tp,fp,exact,test_error,chosen_lambda,refit_ridge,majority,seconds\n";
        for (const BenchRow& row : res.rows) {
            csv += std::to_string(row.rep);
            csv += ',';
            for (std::size_t i = 0; i < row.selected.size(); ++i) {
                if (i) csv += '|';
                csv += std::to_string(row.selected[i]);
            }
            csv += ',';
            csv += std::to_string(row.tp);
            csv += ',';
            csv += std::to_string(row.fp);
            csv += ',';
            csv += row.exact ? "1," : "0,";
            csv += Json::format_double(row.test_error);
            csv += ',';
            csv += Json::format_double(row.chosen_lambda);
            csv += ',';
            csv += Json::format_double(row.refit_ridge);
            csv += ',';
            csv += row.majority ? "1," : "0,";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3f", row.seconds);
            csv += buf;
            csv += '\n';
        }
        out.write("bench_rows.csv", csv);
    }

    if (!out.want("json")) return;
    Json j = Json::object();
    j.set("subcommand", Json::str("bench"));
    j.set("model", Json::str(sim_model_name(bc.model)));
    j.set("loss", Json::str(cfg.loss_name));
    j.set("n", Json::integer(cfg.n));
    j.set("p", Json::integer(cfg.p));
    j.set("reps", Json::integer(cfg.reps));
    j.set("n_test", Json::integer(cfg.n_test));
    j.set("seed", Json::integer(static_cast<std::int64_t>(cfg.seed)));
    j.set("tp_mean", Json::num(res.tp_mean));
    j.set("tp_se", Json::num(res.tp_se));
    j.set("fp_mean", Json::num(res.fp_mean));
    j.set("fp_se", Json::num(res.fp_se));
    j.set("correct_fraction", Json::num(res.correct_fraction));
    j.set("err_mean", Json::num(res.err_mean));
    j.set("err_se", Json::num(res.err_se));
    j.set("se_valid", Json::boolean(res.se_valid));
    Json rows = Json::array();
    for (const BenchRow& row : res.rows) {
        Json r = Json::object();
        r.set("rep", Json::integer(row.rep));
        r.set("selected", ints_json(row.selected));
        r.set("tp", Json::integer(row.tp));
        r.set("fp", Json::integer(row.fp));
        r.set("exact", Json::boolean(row.exact));
        r.set("test_error", Json::num(row.test_error));
        r.set("chosen_lambda", Json::num(row.chosen_lambda));
        r.set("refit_ridge", Json::num(row.refit_ridge));
        r.set("majority", Json::boolean(row.majority));
        rows.push(std::move(r));
    }
    j.set("rows", rows);
    out.write("bench_summary.json", j.dump());
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"')
            out += '\'';
        else if (c == '\n')
            out += ' ';
        else
            out += c;
    }
    return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    RunConfig cfg;
    CLI::App app{"Nonparametric variable selection for binary classification via "
                 "penalized gradient learning"};
    app.require_subcommand(1);

    auto add_data_opts = [&](CLI::App* sub) {
        sub->add_option("--data", cfg.input_path, "input CSV with a header row")->required();
        sub->add_option("--label", cfg.label_column, "label column name")->capture_default_str();
        sub->add_option("--positive-label", cfg.positive_label,
                        "positive class value for string labels");
    };
    auto add_model_opts = [&](CLI::App* sub, bool tuning) {
        sub->add_option("--loss", cfg.loss_name, "loss: logistic or sqhinge")
            ->capture_default_str();
        sub->add_option("--gamma", cfg.gamma, "adaptive weight exponent (0 = unit weights)")
            ->capture_default_str();
        sub->add_option("--knn", cfg.knn, "neighbor truncation of the smoothing weights (0 = off)")
            ->capture_default_str();
        if (tuning) {
            sub->add_option("--tol", cfg.tol,
                            "solver convergence tolerance (default 1e-05: tuning-stage fits "
                            "stay certified at the looser level and run much faster)");
        } else {
            sub->add_option("--tol", cfg.tol, "solver convergence tolerance")
                ->capture_default_str();
        }
        sub->add_option("--max-cycles", cfg.max_cycles, "solver cycle cap")->capture_default_str();
    };
    auto add_grid_opts = [&](CLI::App* sub) {
        sub->add_option("--n-lambda", cfg.n_lambda, "penalty grid size")->capture_default_str();
        sub->add_option("--lambda-min-ratio", cfg.lambda_min_ratio,
                        "smallest grid point as a fraction of lambda_max "
                        "(default 0.01, or 0.05 when p > n)");
    };
    auto add_out_opts = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
        sub->add_option("--emit", cfg.emit, "outputs to write: json, csv (default both)")
            ->delimiter(',');
        sub->add_option("--threads", cfg.threads,
                        "worker threads (0 = GRADSEL_THREADS or all cores)")
            ->capture_default_str();
    };

    CLI::App* fit = app.add_subcommand("fit", "one fit at a fixed penalty level");
    add_data_opts(fit);
    add_model_opts(fit, false);
    add_out_opts(fit);
    fit->add_option("--lambda", cfg.lambda, "penalty level")
        ->required()
        ->check(CLI::PositiveNumber);

    CLI::App* path = app.add_subcommand("path", "warm-started fits over a penalty grid");
    add_data_opts(path);
    add_model_opts(path, false);
    add_grid_opts(path);
    add_out_opts(path);

    CLI::App* cv = app.add_subcommand("cv", "cross-validated variable selection");
    add_data_opts(cv);
    add_model_opts(cv, true);
    add_grid_opts(cv);
    add_out_opts(cv);
    cv->add_option("--folds", cfg.folds, "cross-validation folds")->capture_default_str();
    cv->add_option("--seed", cfg.seed, "fold shuffling seed")->capture_default_str();
    cv->add_flag("--one-se", cfg.one_se, "pick the largest penalty within one SE of the best");

    CLI::App* sim = app.add_subcommand("simulate", "generate a benchmark dataset pair");
    sim->add_option("--model", cfg.model_id, "decision surface: 1..4")->capture_default_str();
    sim->add_option("--n", cfg.n, "training rows")->capture_default_str();
    sim->add_option("--n-test", cfg.n_test, "test rows")->capture_default_str();
    sim->add_option("--p", cfg.p, "variables")->capture_default_str();
    sim->add_option("--seed", cfg.seed, "generator seed")->capture_default_str();
    sim->add_option("--rep", cfg.rep, "repetition index")->capture_default_str();
    add_out_opts(sim);

    CLI::App* bench = app.add_subcommand("bench", "selection benchmark over repetitions");
    bench->add_option("--model", cfg.model_id, "decision surface: 1..4")->capture_default_str();
    bench->add_option("--n", cfg.n, "training rows per repetition")->capture_default_str();
    bench->add_option("--n-test", cfg.n_test, "test rows per repetition")->capture_default_str();
    bench->add_option("--p", cfg.p, "variables")->capture_default_str();
    bench->add_option("--reps", cfg.reps, "repetitions")->capture_default_str();
    bench->add_option("--seed", cfg.seed, "generator seed")->capture_default_str();
    bench->add_option("--folds", cfg.folds, "cross-validation folds")->capture_default_str();
    bench->add_flag("--one-se", cfg.one_se, "one-SE selection rule inside each repetition");
    add_model_opts(bench, true);
    add_grid_opts(bench);
    add_out_opts(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if ((cv->parsed() && cv->count("--tol") == 0) ||
        (bench->parsed() && bench->count("--tol") == 0))
        cfg.tol = 1e-5;

    OutputSet* active_out = nullptr;
    try {
        OutputSet out(cfg.out_dir, cfg.emit);
        active_out = &out;
        if (fit->parsed()) run_fit(cfg, out);
        else if (path->parsed()) run_path(cfg, out);
        else if (cv->parsed()) run_cv(cfg, out);
        else if (sim->parsed()) run_simulate(cfg, out);
        else if (bench->parsed()) run_bench(cfg, out);
        active_out = nullptr;
        return 0;
    } catch (const Error& e) {
        if (active_out) active_out->discard_all();
        std::fprintf(stderr, "error module=%s msg=\"%s\"\n", e.module().c_str(),
                     sanitize(e.what()).c_str());
        return 1;
    } catch (const std::exception& e) {
        if (active_out) active_out->discard_all();
        std::fprintf(stderr, "error module=cli msg=\"%s\"\n", sanitize(e.what()).c_str());
        return 1;
    }
}

}  // namespace gradsel
