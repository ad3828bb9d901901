/*
 * Copyright 2026 The lcirt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Exit codes: 0 success, 1 user error, 2 internal
// error; failures also print a JSON error object on stderr.

#include "lcirt/estimation.hpp"
#include "lcirt/inference.hpp"
#include "lcirt/io.hpp"
#include "lcirt/simulate.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <iostream>

namespace {

using namespace lcirt;
using io::json;

struct FitFlags {
    int max_iter = 2000;
    double tol = 1e-8;
    int restarts = 10;
    std::uint64_t seed = kDefaultSeed;
    std::string init = "mixed";
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
    cmd->add_option("--max-iter", f.max_iter, "EM iteration limit")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", f.tol, "log-likelihood change that stops EM")->check(CLI::PositiveNumber);
    cmd->add_option("--restarts", f.restarts, "number of starts (first is deterministic)")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "master random seed");
    cmd->add_option("--init", f.init, "deterministic, random or mixed");
}

io::RunInfo run_info(const FitFlags& f, int threads) {
    io::RunInfo run;
    run.options.max_iter = f.max_iter;
    run.options.tol = f.tol;
    run.options.n_restarts = f.restarts;
    run.options.seed = f.seed;
    run.options.init_strategy = parse_init_strategy(f.init);
    run.threads = threads;
    return run;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    return out;
}

void error_exit_json(const std::string& kind, const std::string& message) {
    json e;
    e["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << e.dump() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-class IRT with non-ignorable missingness"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (0 = runtime default)")->check(CLI::NonNegativeNumber);

    std::string design_path, data_path, params_path, out_path, fit_path, block;
    int n = 0;
    std::uint64_t sim_seed = kDefaultSeed;
    std::string due = "all";
    FitFlags ff;
    bool no_se = false;
    std::string ku = "2..5", kv = "1..3";
    std::string u_list = "-1,0,1", v_list = "-1,0,1", scale = "standardized";

    auto* sim = app.add_subcommand("simulate", "draw a dataset from given parameters");
    sim->add_option("--design", design_path)->required();
    sim->add_option("--params", params_path)->required();
    sim->add_option("--n", n)->required()->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed);
    sim->add_option("--due", due, "all or one-per-group");
    sim->add_option("--out", out_path)->required();

    auto* fitc = app.add_subcommand("fit", "maximum-likelihood fit by EM");
    fitc->add_option("--design", design_path)->required();
    fitc->add_option("--data", data_path)->required();
    fitc->add_option("--out", out_path)->required();
    fitc->add_flag("--no-se", no_se, "skip standard errors");
    add_fit_flags(fitc, ff);

    auto* sel = app.add_subcommand("select", "BIC over a grid of class numbers");
    sel->add_option("--design", design_path)->required();
    sel->add_option("--data", data_path)->required();
    sel->add_option("--ku", ku, "e.g. 2..5");
    sel->add_option("--kv", kv, "e.g. 1..3");
    sel->add_option("--out", out_path)->required();
    add_fit_flags(sel, ff);

    auto* ign = app.add_subcommand("test-ignorability", "LRT of gamma_u = 0 for all items");
    ign->add_option("--design", design_path)->required();
    ign->add_option("--data", data_path)->required();
    ign->add_option("--out", out_path)->required();
    add_fit_flags(ign, ff);

    auto* hom = app.add_subcommand("test-homogeneity", "LRT of equal parameters within a course block");
    hom->add_option("--design", design_path)->required();
    hom->add_option("--data", data_path)->required();
    hom->add_option("--block", block, "group label")->required();
    hom->add_option("--out", out_path)->required();
    add_fit_flags(hom, ff);

    auto* pred = app.add_subcommand("predict", "item probability tables at chosen latent values");
    pred->add_option("--fit", fit_path)->required();
    pred->add_option("--u", u_list, "U values, e.g. -1,0,1");
    pred->add_option("--v", v_list, "V values, e.g. -1,0,1");
    pred->add_option("--scale", scale, "standardized or raw");
    pred->add_option("--out", out_path)->required();

    auto* cls = app.add_subcommand("classify", "posterior class assignment");
    cls->add_option("--fit", fit_path)->required();
    cls->add_option("--data", data_path)->required();
    cls->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_exit_json("usage", e.what());
        return 1;
    }

    try {
        if (threads > 0) omp_set_num_threads(threads);

        if (*sim) {
            const auto df = io::read_design(design_path);
            const auto spec = io::covariate_spec(df);
            const auto params = io::read_params(params_path, df.design, df.config, spec.C());
            const auto rep = validate_params(params, df.design, df.config);
            if (!rep.ok()) throw InputError("parameters violate constraints: " + rep.to_string());
            DueRule rule = DueRule::all;
            if (due == "one-per-group") rule = DueRule::one_per_group;
            else if (due != "all") throw InputError("--due must be all or one-per-group");
            const Dataset data = generate(params, df.design, n, spec, sim_seed, rule);
            io::write_dataset(out_path, data, df);
        } else if (*fitc) {
            const auto df = io::read_design(design_path);
            const Dataset data = io::read_dataset(data_path, df);
            const auto run = run_info(ff, threads);
            const FitResult f = fit(df.design, df.config, data, run.options);
            StandardErrorReport se;
            if (!no_se) se = standard_errors(f, df.design, data);
            io::write_json(out_path, io::fit_to_json(f, df, data, run, no_se ? nullptr : &se));
        } else if (*sel) {
            const auto df = io::read_design(design_path);
            const Dataset data = io::read_dataset(data_path, df);
            const auto run = run_info(ff, threads);
            const auto rows = select_grid(df.design, data, df.config.S, df.design.T(), io::parse_int_list(ku),
                                          io::parse_int_list(kv), run.options);
            auto out = open_out(out_path);
            io::write_grid(out, rows);
        } else if (*ign) {
            const auto df = io::read_design(design_path);
            const Dataset data = io::read_dataset(data_path, df);
            const auto run = run_info(ff, threads);
            const auto t = test_ignorability(df.design, df.config, data, run.options);
            io::write_json(out_path, io::test_to_json("ignorability", t, df, run));
        } else if (*hom) {
            const auto df = io::read_design(design_path);
            const Dataset data = io::read_dataset(data_path, df);
            const auto items = df.design.group_items(block);
            if (items.size() < 2) throw InputError("group '" + block + "' has fewer than two items");
            const auto run = run_info(ff, threads);
            const auto t = test_group_homogeneity(df.design, df.config, data, items, run.options);
            json j = io::test_to_json("homogeneity", t, df, run);
            j["block"] = block;
            io::write_json(out_path, j);
        } else if (*pred) {
            const auto lf = io::read_fit(fit_path);
            ParameterSet p = lf.params;
            if (scale == "standardized") {
                if (lf.document.at("standardized").is_null()) {
                    throw InputError("fit has no standardized parameters; use --scale raw");
                }
                p = io::params_from_json(lf.document.at("standardized"), lf.design.design, lf.design.config,
                                         lf.params.C());
            } else if (scale != "raw") {
                throw InputError("--scale must be standardized or raw");
            }
            std::vector<double> vs = io::parse_double_list(v_list);
            if (!lf.design.config.v_side()) vs = {0.0};
            const auto tables = predict_item_probs(p, lf.design.design, io::parse_double_list(u_list), vs);
            auto out = open_out(out_path);
            io::write_predictions(out, tables);
        } else if (*cls) {
            const auto lf = io::read_fit(fit_path);
            const Dataset data = io::read_dataset(data_path, lf.design);
            const double ll = marginal_loglik(lf.design.design, lf.params, data);
            if (data.n == lf.n && std::abs(ll - lf.loglik) > 1e-6 * std::max(1.0, std::abs(ll))) {
                std::cerr << "warning: log-likelihood on this data (" << io::format_double(ll)
                          << ") differs from the stored fit value (" << io::format_double(lf.loglik)
                          << "); the data may not be the fitted sample\n";
            }
            const auto c = posterior_classify(lf.params, lf.design.design, data);
            auto out = open_out(out_path);
            io::write_classes(out, data, c);
        }
    } catch (const InputError& e) {
        error_exit_json("user_error", e.what());
        return 1;
    } catch (const std::exception& e) {
        error_exit_json("internal_error", e.what());
        return 2;
    }
    return 0;
}
