// Command-line front end: simulate paths, fit models, estimate sandwich
// covariances, check stationarity regions, and run Monte Carlo experiments
// from JSON plan files. Exit code 0 only if every enabled assertion passes.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "qmle/asymptotics.hpp"
#include "qmle/fit.hpp"
#include "qmle/harness.hpp"
#include "qmle/json_io.hpp"

using namespace qmle;

namespace {

json report_from(const McReport& rep) {
    json j;
    j["failures"] = rep.failures;
    j["failure_rate"] = rep.failure_rate;
    if (!rep.note.empty()) j["note"] = rep.note;
    j["n_grid"] = rep.n_grid;
    if (!rep.median_error.empty()) {
        j["median_error"] = rep.median_error;
        j["loglog_slope"] = rep.loglog_slope;
        json bias = json::array(), rmse = json::array();
        for (const auto& b : rep.bias) bias.push_back(to_json(b));
        for (const auto& r : rep.rmse) rmse.push_back(to_json(r));
        j["bias"] = bias;
        j["rmse"] = rmse;
    }
    if (!rep.ks_stat.empty()) {
        j["ks_stat"] = rep.ks_stat;
        j["ks_p"] = rep.ks_p;
        j["coverage90"] = rep.coverage90;
        j["coverage95"] = rep.coverage95;
        j["coverage99"] = rep.coverage99;
        j["empirical_cov"] = to_json(rep.empirical_cov);
        j["mean_sigma"] = to_json(rep.mean_sigma);
        j["sigma_rel_err"] = rep.sigma_rel_err;
    }
    return j;
}

void write_records_csv(const std::string& path, const McReport& rep, int d) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot open " + path + " for writing");
    out << "n,rep,seed,converged,error";
    for (int i = 0; i < d; ++i) out << ",theta_" << (i + 1);
    out << '\n';
    out.precision(17);
    for (const auto& r : rep.records) {
        out << r.n << ',' << r.rep << ',' << r.seed << ',' << (r.converged ? 1 : 0)
            << ',' << (r.error.empty() ? "" : "\"" + r.error + "\"");
        for (int i = 0; i < d; ++i)
            out << ',' << (r.theta_hat.size() == d ? r.theta_hat[i] : 0.0);
        out << '\n';
    }
}

struct PlanDoc {
    ModelConfig model_cfg;
    ExperimentPlan plan;
    json assertions;  // optional "assert" object
};

PlanDoc load_plan(const std::string& path) {
    const json j = load_json_file(path);
    reject_unknown(j,
                   {"model", "model_path", "n_grid", "replications", "seed", "starts",
                    "max_failure_rate", "assert"},
                   "plan");
    PlanDoc doc;
    if (j.contains("model") == j.contains("model_path"))
        throw ContractError("plan: exactly one of \"model\" / \"model_path\" required");
    doc.model_cfg = j.contains("model") ? model_config_from_json(j.at("model"))
                                        : load_model_config(j.at("model_path"));
    const BuiltModel built = doc.model_cfg.build();
    doc.plan.model = built.model;
    doc.plan.theta0 = built.theta;
    doc.plan.innov = doc.model_cfg.innov;
    if (!j.contains("n_grid")) throw ContractError("plan: missing \"n_grid\"");
    doc.plan.n_grid = j.at("n_grid").get<std::vector<long>>();
    doc.plan.replications = j.value("replications", 1);
    doc.plan.base_seed = j.value("seed", std::uint64_t{1});
    doc.plan.fit_options.starts = j.value("starts", doc.plan.fit_options.starts);
    doc.plan.max_failure_rate = j.value("max_failure_rate", doc.plan.max_failure_rate);
    doc.assertions = j.value("assert", json::object());
    return doc;
}

// Returns the number of failed assertions, printing one line per check.
int check_range(const json& a, const char* key, double got) {
    if (!a.contains(key)) return 0;
    const auto range = a.at(key).get<std::vector<double>>();
    if (range.size() != 2) throw ContractError(std::string("assert.") + key + ": need [lo, hi]");
    const bool ok = got >= range[0] && got <= range[1];
    std::cout << (ok ? "PASS " : "FAIL ") << key << " = " << got << " in [" << range[0]
              << ", " << range[1] << "]\n";
    return ok ? 0 : 1;
}

int cmd_simulate(const std::string& model_path, long n, long burn_in, std::uint64_t seed,
                 const std::string& out_path) {
    const ModelConfig cfg = load_model_config(model_path);
    const BuiltModel built = cfg.build();
    SimConfig sc;
    sc.n = n;
    sc.burn_in = burn_in;
    sc.seed = seed;
    write_series(out_path, simulate_path(*built.model, built.theta, cfg.innov, sc));
    std::cout << "wrote " << n << " x " << built.model->obs_dim() << " series to "
              << out_path << '\n';
    return 0;
}

int cmd_fit(const std::string& model_path, const std::string& data_path,
            const std::string& out_path, int starts, std::uint64_t seed) {
    const ModelConfig cfg = load_model_config(model_path);
    const BuiltModel built = cfg.build();
    const Series data = read_series(data_path);
    FitOptions opts;
    opts.starts = starts;
    opts.seed = seed;
    const FitResult fr = fit(*built.model, data, built.theta, opts);
    json j;
    j["theta_hat"] = to_json(fr.theta_hat.values);
    j["objective"] = fr.objective;
    j["diagnostics"] = {{"converged", fr.converged},
                        {"iterations", fr.iterations},
                        {"grad_norm", fr.grad_norm},
                        {"best_start", fr.best_start},
                        {"failed_starts", fr.failed_starts}};
    j["config"] = {{"model", model_config_to_json(cfg)},
                   {"data", data_path},
                   {"starts", starts},
                   {"seed", seed},
                   {"n", data.n()}};
    save_json_file(out_path, j);
    std::cout << "theta_hat = " << fr.theta_hat.values.transpose() << '\n';
    return fr.converged ? 0 : 1;
}

int cmd_asymptotics(const std::string& model_path, const std::string& data_path,
                    const std::string& fit_path, const std::string& out_path,
                    const std::string& f_method, const std::string& g_method,
                    double level) {
    const ModelConfig cfg = load_model_config(model_path);
    const BuiltModel built = cfg.build();
    const Series data = read_series(data_path);
    const json fj = load_json_file(fit_path);
    const VectorXd theta = vector_from_json(fj.at("theta_hat"), "fit.theta_hat");

    const FMethod fm = f_method == "formula_F0" ? FMethod::FormulaF0 : FMethod::HessianAvg;
    const GMethod gm = g_method == "formula_G0" ? GMethod::FormulaG0 : GMethod::ScoreOuter;
    const MatrixXd F = estimate_F(*built.model, theta, data, fm);
    const double m4 =
        gm == GMethod::FormulaG0 ? estimate_m4(*built.model, theta, data) : 3.0;
    const MatrixXd G = estimate_G(*built.model, theta, data, gm, m4);
    SandwichCov cov = sandwich(F, G, data.n());
    cov.f_method = fm;
    cov.g_method = gm;
    const std::vector<Interval> ci = confidence_intervals(theta, cov, level);

    json j;
    j["F"] = to_json(cov.F);
    j["G"] = to_json(cov.G);
    j["sigma"] = to_json(cov.sigma);
    json lo = json::array(), hi = json::array();
    for (const Interval& iv : ci) {
        lo.push_back(iv.lo);
        hi.push_back(iv.hi);
    }
    j["intervals"] = {{"level", level}, {"lo", lo}, {"hi", hi}};
    j["methods"] = {{"F", f_method_name(fm)}, {"G", g_method_name(gm)}};
    if (gm == GMethod::FormulaG0) {
        // Flag large disagreement with the empirical score-outer estimate.
        const MatrixXd Ge = estimate_G(*built.model, theta, data, GMethod::ScoreOuter);
        const double rel = (G - Ge).norm() / std::max(Ge.norm(), 1e-300);
        j["methods"]["G_vs_score_outer_rel_gap"] = rel;
        if (rel > 0.25) j["methods"]["warning"] = "formula G differs from score outer by > 25%";
    }
    j["n"] = data.n();
    save_json_file(out_path, j);
    std::cout << "sigma diag = " << cov.sigma.diagonal().transpose() << '\n';
    return 0;
}

int cmd_check_region(const std::string& model_path, double r) {
    const ModelConfig cfg = load_model_config(model_path);
    const BuiltModel built = cfg.build();
    const double v = contraction_value(*built.model, built.theta.values, cfg.innov, r);
    const bool inside = v < 1.0;
    std::cout << (inside ? "PASS" : "FAIL") << " contraction value at r = " << r << ": "
              << v << (inside ? " < 1\n" : " >= 1\n");
    return inside ? 0 : 1;
}

int cmd_mc(const std::string& plan_path, const std::string& out_path,
           const std::string& records_path, bool normality) {
    PlanDoc doc = load_plan(plan_path);
    const McReport rep = normality ? run_normality(doc.plan) : run_consistency(doc.plan);
    if (!out_path.empty()) save_json_file(out_path, report_from(rep));
    if (!records_path.empty())
        write_records_csv(records_path, rep, doc.plan.theta0.dim());

    int failed = 0;
    if (normality) {
        if (doc.assertions.contains("ks_p_min")) {
            const double lim = doc.assertions.at("ks_p_min").get<double>();
            double worst = 1.0;
            for (double p : rep.ks_p) worst = std::min(worst, p);
            const bool ok = worst > lim;
            std::cout << (ok ? "PASS " : "FAIL ") << "min KS p-value " << worst << " > "
                      << lim << '\n';
            failed += ok ? 0 : 1;
        }
        if (doc.assertions.contains("coverage95")) {
            const auto range = doc.assertions.at("coverage95").get<std::vector<double>>();
            bool ok = true;
            for (double c : rep.coverage95) ok = ok && c >= range[0] && c <= range[1];
            std::cout << (ok ? "PASS " : "FAIL ") << "95% coverage within [" << range[0]
                      << ", " << range[1] << "]\n";
            failed += ok ? 0 : 1;
        }
    } else {
        failed += check_range(doc.assertions, "slope", rep.loglog_slope);
    }
    failed += check_range(doc.assertions, "failure_rate_max",
                          rep.failure_rate);  // range [0, max]
    return failed == 0 ? 0 : 1;
}

int cmd_sweep(const std::string& plan_path, const std::string& out_path) {
    const json j = load_json_file(plan_path);
    reject_unknown(j, {"model", "model_path", "coordinate", "s_lo", "s_hi", "r_grid"},
                   "sweep plan");
    if (j.contains("model") == j.contains("model_path"))
        throw ContractError("sweep plan: exactly one of \"model\" / \"model_path\" required");
    const ModelConfig cfg = j.contains("model")
                                ? model_config_from_json(j.at("model"))
                                : load_model_config(j.at("model_path"));
    const BuiltModel built = cfg.build();
    const int coord = j.at("coordinate").get<int>();
    if (coord < 0 || coord >= built.theta.dim())
        throw ContractError("sweep plan: coordinate out of range");
    const double s_lo = j.at("s_lo").get<double>();
    const double s_hi = j.at("s_hi").get<double>();
    const auto r_grid = j.at("r_grid").get<std::vector<double>>();
    VectorXd base = built.theta.values;
    const auto table = run_region_sweep(
        *built.model,
        [&](double s) {
            VectorXd th = base;
            th[coord] = s;
            return th;
        },
        cfg.innov, r_grid, s_lo, s_hi);
    json rows = json::array();
    for (const auto& row : table) {
        json r{{"r", row.r},
               {"crossed", row.crossed},
               {"value_lo", row.value_lo},
               {"value_hi", row.value_hi}};
        if (row.crossed) r["s_star"] = row.s_star;
        rows.push_back(r);
        std::cout << "r = " << row.r << ": "
                  << (row.crossed ? "boundary at s = " + std::to_string(row.s_star)
                                  : "no crossing")
                  << '\n';
    }
    if (!out_path.empty()) save_json_file(out_path, json{{"rows", rows}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation, quasi-likelihood fitting, and Monte Carlo experiments "
                 "for conditionally heteroscedastic time-series models"};
    app.require_subcommand(1);

    std::string model_path, data_path, fit_path, out_path, records_path, plan_path;
    long n = 1000, burn_in = -1;
    std::uint64_t seed = 1;
    int starts = 5;
    double r = 2.0, level = 0.95;
    std::string f_method = "hessian_avg", g_method = "score_outer";

    auto* sim = app.add_subcommand("simulate", "Simulate a path and write it to disk");
    sim->add_option("--model", model_path, "Model JSON document")->required();
    sim->add_option("--n", n, "Path length")->required();
    sim->add_option("--burn-in", burn_in, "Burn-in steps (-1: 2x lag truncation)");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--out", out_path, "Output path (.csv or .qsb)")->required();

    auto* ft = app.add_subcommand("fit", "Fit the model by quasi-maximum likelihood");
    ft->add_option("--model", model_path)->required();
    ft->add_option("--data", data_path, "Series file (.csv or .qsb)")->required();
    ft->add_option("--out", out_path, "fit.json output")->required();
    ft->add_option("--starts", starts, "Multi-start count");
    ft->add_option("--seed", seed, "Multi-start RNG seed");

    auto* asy = app.add_subcommand("asymptotics", "Sandwich covariance and intervals");
    asy->add_option("--model", model_path)->required();
    asy->add_option("--data", data_path)->required();
    asy->add_option("--fit", fit_path, "fit.json with theta_hat")->required();
    asy->add_option("--out", out_path, "cov.json output")->required();
    asy->add_option("--f-method", f_method, "hessian_avg | formula_F0");
    asy->add_option("--g-method", g_method, "score_outer | formula_G0");
    asy->add_option("--level", level, "Confidence level");

    auto* reg = app.add_subcommand("check-region", "Stationarity-region membership");
    reg->add_option("--model", model_path)->required();
    reg->add_option("--r", r, "Moment order");

    auto* mcc = app.add_subcommand("mc-consistency", "Estimation-error decay over an n grid");
    mcc->add_option("--config", plan_path, "plan.json")->required();
    mcc->add_option("--out", out_path, "Report JSON");
    mcc->add_option("--records", records_path, "Per-replication CSV table");

    auto* mcn = app.add_subcommand("mc-normality", "CLT rendering at fixed n");
    mcn->add_option("--config", plan_path, "plan.json")->required();
    mcn->add_option("--out", out_path, "Report JSON");
    mcn->add_option("--records", records_path, "Per-replication CSV table");

    auto* sw = app.add_subcommand("sweep", "Region boundary sweep along one coordinate");
    sw->add_option("--config", plan_path, "sweep plan JSON")->required();
    sw->add_option("--out", out_path, "Table JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(model_path, n, burn_in, seed, out_path);
        if (ft->parsed()) return cmd_fit(model_path, data_path, out_path, starts, seed);
        if (asy->parsed())
            return cmd_asymptotics(model_path, data_path, fit_path, out_path, f_method,
                                   g_method, level);
        if (reg->parsed()) return cmd_check_region(model_path, r);
        if (mcc->parsed()) return cmd_mc(plan_path, out_path, records_path, false);
        if (mcn->parsed()) return cmd_mc(plan_path, out_path, records_path, true);
        if (sw->parsed()) return cmd_sweep(plan_path, out_path);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
    return 2;
}
