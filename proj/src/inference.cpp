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

#include "lcirt/inference.hpp"

#include "lcirt/chisq.hpp"
#include "lcirt/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lcirt {

double bic(double loglik, int npar, int n) {
    if (n < 1) {
        throw std::invalid_argument("bic needs n >= 1");
    }
    return -2.0 * loglik + npar * std::log(static_cast<double>(n));
}

TestReport lrt(double loglik_full, double loglik_restricted, int df) {
    if (df <= 0) {
        throw std::invalid_argument("likelihood-ratio test needs df > 0 (restricted model must be nested)");
    }
    TestReport r;
    r.loglik_full = loglik_full;
    r.loglik_restricted = loglik_restricted;
    r.statistic = 2.0 * (loglik_full - loglik_restricted);
    r.df = df;
    r.p_value = chisq_upper_tail(std::max(r.statistic, 0.0), df);
    return r;
}

TestReport lrt(const FitResult& full, const FitResult& restricted) {
    TestReport r = lrt(full.loglik, restricted.loglik, full.npar - restricted.npar);
    r.npar_full = full.npar;
    r.npar_restricted = restricted.npar;
    return r;
}

namespace {

// Fits both models, then restarts each from the other's optimum when that
// optimum scores better under the other's constraints.
NestedTest nested_test(const ItemDesign& design, const LatentConfig& config, const Dataset& data,
                       const FitOptions& options, const Restrictions& restricted_by) {
    NestedTest out;
    FitOptions full_opts = options;
    out.full = fit(design, config, data, full_opts);

    FitOptions restricted_opts = options;
    restricted_opts.restrictions = restricted_by;
    restricted_opts.extra_starts.push_back(out.full.params);
    out.restricted = fit(design, config, data, restricted_opts);

    if (out.restricted.loglik > out.full.loglik) {
        const ParameterLayout layout(design, config, data.C(), options.restrictions);
        FitResult warm = run_em(out.restricted.params, layout, data, full_opts);
        if (warm.loglik > out.full.loglik) {
            warm.restart = static_cast<int>(out.full.restart_logliks.size());
            warm.restart_logliks = out.full.restart_logliks;
            warm.restart_logliks.push_back(warm.loglik);
            out.full = std::move(warm);
        }
    }
    out.report = lrt(out.full, out.restricted);
    return out;
}

} // namespace

NestedTest test_ignorability(const ItemDesign& design, const LatentConfig& config, const Dataset& data,
                             const FitOptions& options) {
    Restrictions r = options.restrictions;
    r.ignorable = true;
    return nested_test(design, config, data, options, r);
}

NestedTest test_group_homogeneity(const ItemDesign& design, const LatentConfig& config, const Dataset& data,
                                  const std::vector<int>& block, const FitOptions& options) {
    if (block.size() < 2) {
        throw InputError("homogeneity test needs a block of at least two items");
    }
    Restrictions r = options.restrictions;
    r.tied_items.push_back(block);
    return nested_test(design, config, data, options, r);
}

SupportMoments support_moments(const ParameterSet& params, const ClassWeights& avg) {
    auto moments = [](const Eigen::MatrixXd& support, const Eigen::VectorXd& w, Eigen::VectorXd& mean,
                      Eigen::VectorXd& sd) {
        mean = support * w;
        sd.resize(support.rows());
        for (Eigen::Index d = 0; d < support.rows(); ++d) {
            const double var = ((support.row(d).array() - mean[d]).square() * w.transpose().array()).sum();
            sd[d] = std::sqrt(std::max(var, 0.0));
        }
    };
    SupportMoments m;
    moments(params.u, avg.lambda, m.u_mean, m.u_sd);
    moments(params.v, avg.pi, m.v_mean, m.v_sd);
    return m;
}

ParameterSet standardize(const ParameterSet& params, const ClassWeights& avg, const ItemDesign& design) {
    const SupportMoments mo = support_moments(params, avg);
    for (Eigen::Index s = 0; s < mo.u_sd.size(); ++s) {
        if (!(mo.u_sd[s] > 0.0)) {
            throw std::domain_error("cannot standardize: U-dimension " + std::to_string(s + 1) + " has zero variance");
        }
    }
    for (Eigen::Index t = 0; t < mo.v_sd.size(); ++t) {
        if (!(mo.v_sd[t] > 0.0)) {
            throw std::domain_error("cannot standardize: V-dimension " + std::to_string(t + 1) + " has zero variance");
        }
    }
    ParameterSet p = params;
    for (Eigen::Index s = 0; s < p.u.rows(); ++s) p.u.row(s) = (params.u.row(s).array() - mo.u_mean[s]) / mo.u_sd[s];
    for (Eigen::Index t = 0; t < p.v.rows(); ++t) p.v.row(t) = (params.v.row(t).array() - mo.v_mean[t]) / mo.v_sd[t];
    for (int j = 0; j < design.m(); ++j) {
        const int s = design.u_dim(j);
        const int t = p.v.rows() > 0 ? design.v_dim(j) : -1;
        p.alpha[j] = params.alpha[j] * mo.u_sd[s];
        p.beta[j] = params.beta[j].array() - params.alpha[j] * mo.u_mean[s];
        p.gamma_u[j] = params.gamma_u[j] * mo.u_sd[s];
        p.delta[j] = params.delta[j] - params.gamma_u[j] * mo.u_mean[s];
        if (t >= 0) {
            p.gamma_v[j] = params.gamma_v[j] * mo.v_sd[t];
            p.delta[j] -= params.gamma_v[j] * mo.v_mean[t];
        }
    }
    return p;
}

ParameterSet standardize(const ParameterSet& params, const ItemDesign& design, const Dataset& data) {
    return standardize(params, average_class_weights(data.X, params), design);
}

Eigen::MatrixXd numerical_jacobian(const VectorFunction& f, const Eigen::VectorXd& theta) {
    const Eigen::Index p = theta.size();
    if (p == 0) {
        return Eigen::MatrixXd(f(theta).size(), 0);
    }
    std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(p));
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index k = 0; k < p; ++k) {
        const double h = std::max(1e-4, 1e-4 * std::abs(theta[k]));
        Eigen::VectorXd up = theta;
        Eigen::VectorXd down = theta;
        up[k] += h;
        down[k] -= h;
        cols[k] = (f(up) - f(down)) / (2.0 * h);
    }
    Eigen::MatrixXd J(cols[0].size(), p);
    for (Eigen::Index k = 0; k < p; ++k) J.col(k) = cols[k];
    return J;
}

Covariance invert_information(const Eigen::MatrixXd& information) {
    const Eigen::Index p = information.rows();
    Covariance out;
    out.matrix = Eigen::MatrixXd::Zero(p, p);
    out.failed.assign(static_cast<std::size_t>(p), false);
    if (p == 0) {
        return out;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const Eigen::MatrixXd& V = eig.eigenvectors();
    const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    const double cut = top * 1e-12;
    for (Eigen::Index k = 0; k < p; ++k) {
        if (ev[k] > cut) {
            out.matrix.noalias() += (1.0 / ev[k]) * V.col(k) * V.col(k).transpose();
        } else {
            for (Eigen::Index r = 0; r < p; ++r) {
                if (std::abs(V(r, k)) > 1e-3) out.failed[r] = true;
            }
        }
    }
    for (Eigen::Index r = 0; r < p; ++r) {
        if (!(out.matrix(r, r) > 0.0) || !std::isfinite(out.matrix(r, r))) out.failed[r] = true;
    }
    return out;
}

DeltaResult delta_method(const Covariance& cov, const Eigen::MatrixXd& jacobian) {
    const Eigen::Index q = jacobian.rows();
    DeltaResult out;
    out.se = Eigen::VectorXd::Zero(q);
    out.fixed.assign(static_cast<std::size_t>(q), false);
    out.failed.assign(static_cast<std::size_t>(q), false);
    const Eigen::MatrixXd JS = jacobian * cov.matrix;
    for (Eigen::Index r = 0; r < q; ++r) {
        const auto row = jacobian.row(r);
        const double scale = std::max(1.0, row.cwiseAbs().maxCoeff());
        bool any = false;
        for (Eigen::Index k = 0; k < row.size(); ++k) {
            if (std::abs(row[k]) > 1e-9 * scale) {
                any = true;
                if (cov.failed[k]) out.failed[r] = true;
            }
        }
        if (!any) {
            out.fixed[r] = true;
            continue;
        }
        const double var = JS.row(r).dot(row);
        if (var >= 0.0 && std::isfinite(var)) {
            out.se[r] = std::sqrt(var);
        } else {
            out.failed[r] = true;
            out.se[r] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

StandardErrorReport standard_errors(const FitResult& fit, const ItemDesign& design, const Dataset& data) {
    const ParameterLayout layout(design, fit.config, data.C(), fit.restrictions);
    const ParameterSet& base = fit.params;
    const Eigen::VectorXd theta = layout.pack(base);

    StandardErrorReport rep;
    for (std::size_t k = 0; k < layout.size(); ++k) rep.free_names.push_back(layout.name(k));

    const VectorFunction grad = [&](const Eigen::VectorXd& t) {
        return layout.gather(score(design, layout.unpack(t, base), data));
    };
    const Eigen::MatrixXd H = numerical_jacobian(grad, theta);
    const double hmax = std::max(1.0, H.cwiseAbs().maxCoeff());
    rep.hessian_asymmetry = H.size() > 0 ? (H - H.transpose()).cwiseAbs().maxCoeff() / hmax : 0.0;
    rep.hessian = 0.5 * (H + H.transpose());
    rep.covariance = invert_information(-rep.hessian);

    auto estimates = [&](const VectorFunction& g, const FlatParameters& values) {
        ParameterEstimates est;
        est.values = values;
        const DeltaResult d = delta_method(rep.covariance, numerical_jacobian(g, theta));
        est.se = d.se;
        est.fixed = d.fixed;
        est.failed = d.failed;
        return est;
    };
    rep.raw = estimates([&](const Eigen::VectorXd& t) { return flatten(layout.unpack(t, base), design).values; },
                        flatten(base, design));
    try {
        const ParameterSet std_params = standardize(base, design, data);
        rep.standardized = estimates(
            [&](const Eigen::VectorXd& t) {
                return flatten(standardize(layout.unpack(t, base), design, data), design).values;
            },
            flatten(std_params, design));
        rep.has_standardized = true;
    } catch (const std::domain_error&) {
        rep.has_standardized = false;
    }
    return rep;
}

PredictionTables predict_item_probs(const ParameterSet& params, const ItemDesign& design,
                                    const std::vector<double>& u_values, const std::vector<double>& v_values) {
    if (u_values.empty() || v_values.empty()) {
        throw InputError("prediction needs at least one u value and one v value");
    }
    auto nearest_zero = [](const std::vector<double>& xs) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < xs.size(); ++k)
            if (std::abs(xs[k]) < std::abs(xs[best])) best = k;
        return best;
    };
    const std::size_t u0 = nearest_zero(u_values);
    const std::size_t v0 = nearest_zero(v_values);
    const auto S = params.u.rows();
    const auto T = params.v.rows();

    PredictionTables out;
    out.u_values = u_values;
    out.v_values = v_values;
    for (int j = 0; j < design.m(); ++j) {
        ItemPrediction ip;
        ip.name = design.names[j];
        ip.group = design.groups.empty() ? "" : design.groups[j];
        for (double u : u_values) {
            const Eigen::VectorXd upt = Eigen::VectorXd::Constant(S, u);
            ip.category.push_back(grm_category(design, params, j, upt).probs);
            ip.passing.push_back(grm_cumulative(design, params, j, 2, upt));
            std::vector<double> row;
            for (double v : v_values) {
                const Eigen::VectorXd vpt = Eigen::VectorXd::Constant(T, v);
                row.push_back(indicator_prob(design, params, j, upt, vpt));
            }
            ip.answer.push_back(std::move(row));
        }
        ip.passing_range = ip.passing.back() - ip.passing.front();
        ip.answer_range_u = ip.answer.back()[v0] - ip.answer.front()[v0];
        ip.answer_range_v = ip.answer[u0].back() - ip.answer[u0].front();
        out.items.push_back(std::move(ip));
    }
    return out;
}

double joint_pattern_probability(std::span<const double> pass_probs, std::span<const bool> passed) {
    if (pass_probs.size() != passed.size()) {
        throw std::invalid_argument("pattern length does not match probability count");
    }
    double prod = 1.0;
    for (std::size_t k = 0; k < pass_probs.size(); ++k) {
        prod *= passed[k] ? pass_probs[k] : 1.0 - pass_probs[k];
    }
    return prod;
}

int argmax_lower(std::span<const double> values) {
    int best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    return best;
}

Classification posterior_classify(const ParameterSet& params, const ItemDesign& design, const Dataset& data) {
    Classification c;
    c.posterior = e_step(design, params, data);
    std::vector<double> mu(static_cast<std::size_t>(params.kU()));
    std::vector<double> mv(static_cast<std::size_t>(params.kV()));
    for (int i = 0; i < data.n; ++i) {
        for (int h = 0; h < params.kU(); ++h) mu[h] = c.posterior.marginal_u(i, h);
        for (int h = 0; h < params.kV(); ++h) mv[h] = c.posterior.marginal_v(i, h);
        c.class_u.push_back(argmax_lower(mu));
        c.class_v.push_back(argmax_lower(mv));
    }
    return c;
}

std::vector<SelectionRow> select_grid(const ItemDesign& design, const Dataset& data, int S, int T,
                                      const std::vector<int>& ku_values, const std::vector<int>& kv_values,
                                      const FitOptions& options) {
    std::vector<SelectionRow> rows;
    for (int kU : ku_values) {
        for (int kV : kv_values) {
            if (kV >= 2 && T == 0) {
                throw InputError("kV >= 2 needs a design with tendency loadings");
            }
            const LatentConfig config{S, kV >= 2 ? T : 0, kU, kV};
            const ItemDesign d = kV >= 2 ? design : design.without_v_side();
            const FitResult f = fit(d, config, data, options);
            SelectionRow row;
            row.kU = kU;
            row.kV = kV;
            row.loglik = f.loglik;
            row.npar = f.npar;
            row.bic = bic(f.loglik, f.npar, data.n);
            row.converged = f.converged;
            rows.push_back(row);
        }
    }
    if (!rows.empty()) {
        auto best = std::min_element(rows.begin(), rows.end(),
                                     [](const SelectionRow& a, const SelectionRow& b) { return a.bic < b.bic; });
        best->bic_min = true;
    }
    return rows;
}

} // namespace lcirt
