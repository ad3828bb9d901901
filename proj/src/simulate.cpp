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

#include "lcirt/simulate.hpp"

#include "lcirt/measurement.hpp"
#include "lcirt/random.hpp"
#include "lcirt/structural.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcirt {

int CovariateSpec::C() const { return fixed ? static_cast<int>(fixed->cols()) : static_cast<int>(columns.size()); }

CovariateSpec CovariateSpec::standard() {
    CovariateSpec s;
    s.columns.push_back({"x1", Kind::bernoulli, 0.5, 0.0});
    return s;
}

Simulation simulate(const ParameterSet& params, const ItemDesign& design, int n, const CovariateSpec& covariates,
                    std::uint64_t seed, DueRule due) {
    if (n < 1) {
        throw InputError("simulation needs n >= 1");
    }
    const int m = design.m();
    const int C = covariates.C();
    if (C != params.C()) {
        throw InputError("covariate spec has " + std::to_string(C) + " columns but the parameters expect " +
                         std::to_string(params.C()));
    }
    if (covariates.fixed && covariates.fixed->rows() != n) {
        throw InputError("fixed covariate matrix has " + std::to_string(covariates.fixed->rows()) + " rows, expected " +
                         std::to_string(n));
    }
    for (const auto& col : covariates.columns) {
        const bool bad = (col.kind == CovariateSpec::Kind::bernoulli && !(col.a >= 0.0 && col.a <= 1.0)) ||
                         (col.kind == CovariateSpec::Kind::uniform && !(col.a < col.b)) ||
                         (col.kind == CovariateSpec::Kind::normal && !(col.b > 0.0));
        if (bad) throw InputError("invalid distribution for covariate '" + col.name + "'");
    }

    // item groups for the due rule
    std::vector<std::vector<int>> blocks;
    std::vector<int> always;
    if (due == DueRule::one_per_group && !design.groups.empty()) {
        std::map<std::string, std::vector<int>> by_label;
        for (int j = 0; j < m; ++j) {
            if (design.groups[j].empty()) always.push_back(j);
            else by_label[design.groups[j]].push_back(j);
        }
        for (auto& [label, items] : by_label) blocks.push_back(items);
    } else {
        for (int j = 0; j < m; ++j) always.push_back(j);
    }

    Simulation sim;
    sim.data = Dataset::empty(n, m, C);
    sim.class_u.assign(static_cast<std::size_t>(n), 0);
    sim.class_v.assign(static_cast<std::size_t>(n), 0);
    if (covariates.fixed) {
        sim.data.X = *covariates.fixed;
    }
    for (int c = 0; c < static_cast<int>(covariates.columns.size()); ++c) {
        sim.data.covariate_names[c] = covariates.columns[c].name;
    }
    Dataset& d = sim.data;

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
        if (!covariates.fixed) {
            for (int c = 0; c < C; ++c) {
                const auto& col = covariates.columns[c];
                switch (col.kind) {
                case CovariateSpec::Kind::bernoulli: d.X(i, c) = rng.bernoulli(col.a) ? 1.0 : 0.0; break;
                case CovariateSpec::Kind::uniform: d.X(i, c) = rng.uniform(col.a, col.b); break;
                case CovariateSpec::Kind::normal: d.X(i, c) = rng.normal(col.a, col.b); break;
                }
            }
        }
        const ClassWeights w = class_weights(d.X.row(i), params);
        const int hU = rng.categorical({w.lambda.data(), static_cast<std::size_t>(w.lambda.size())});
        const int hV = rng.categorical({w.pi.data(), static_cast<std::size_t>(w.pi.size())});
        sim.class_u[i] = hU;
        sim.class_v[i] = hV;

        std::vector<int> due_items = always;
        for (const auto& block : blocks) {
            const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(block.size()));
            due_items.push_back(block[std::min(pick, block.size() - 1)]);
        }
        std::sort(due_items.begin(), due_items.end());
        for (int j : due_items) {
            const std::size_t cell = static_cast<std::size_t>(i) * m + j;
            const double q = indicator_prob(design, params, j, params.u.col(hU), params.v.col(hV));
            if (rng.uniform() < q) {
                const auto cat = grm_category(design, params, j, params.u.col(hU));
                d.R[cell] = Response::answered;
                d.Y[cell] = static_cast<std::int16_t>(rng.categorical(cat.probs) + 1);
            } else {
                d.R[cell] = Response::skipped;
            }
        }
    }
    return sim;
}

Dataset generate(const ParameterSet& params, const ItemDesign& design, int n, const CovariateSpec& covariates,
                 std::uint64_t seed, DueRule due) {
    return simulate(params, design, n, covariates, seed, due).data;
}

namespace {

// Written from the model definition without the measurement module, so it
// can serve as an independent check.
double plain_logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double support_sum(const Eigen::MatrixXi& z, int j, const Eigen::MatrixXd& support, int h) {
    double s = 0.0;
    for (int d = 0; d < z.cols() && d < support.rows(); ++d) {
        if (z(j, d) == 1) s += support(d, h);
    }
    return s;
}

std::vector<double> plain_class_probs(const Eigen::RowVectorXd& x, const Eigen::MatrixXd& coef) {
    std::vector<double> e(static_cast<std::size_t>(coef.rows() + 1), 1.0);
    double total = 1.0;
    for (int h = 0; h < coef.rows(); ++h) {
        double eta = coef(h, 0);
        for (int c = 0; c < x.size(); ++c) eta += coef(h, c + 1) * x[c];
        e[h + 1] = std::exp(eta);
        total += e[h + 1];
    }
    for (double& v : e) v /= total;
    return e;
}

} // namespace

std::map<Pattern, double> brute_force_pattern_probs(const ParameterSet& params, const ItemDesign& design,
                                                    const Eigen::RowVectorXd& x, const std::vector<bool>& due) {
    const int m = design.m();
    if (static_cast<int>(due.size()) != m) {
        throw std::invalid_argument("due mask length does not match item count");
    }
    std::vector<int> items;
    std::size_t count = 1;
    for (int j = 0; j < m; ++j) {
        if (!due[j]) continue;
        items.push_back(j);
        count *= static_cast<std::size_t>(design.categories[j] + 1);
    }
    if (static_cast<int>(items.size()) > kMaxEnumerationItems || count > kMaxEnumerationPatterns) {
        throw std::invalid_argument("instance too large for pattern enumeration");
    }
    const auto lambda = plain_class_probs(x, params.phi);
    const auto pi = plain_class_probs(x, params.psi);
    const int kU = params.kU();
    const int kV = params.kV();

    // per class pair, per item: probability of each outcome (index 0 = skip)
    std::vector<std::vector<std::vector<double>>> outcome(static_cast<std::size_t>(kU * kV));
    for (int hU = 0; hU < kU; ++hU) {
        for (int hV = 0; hV < kV; ++hV) {
            auto& table = outcome[hU * kV + hV];
            for (int j : items) {
                const int L = design.categories[j];
                const double a = support_sum(design.zU, j, params.u, hU);
                const double b = support_sum(design.zV, j, params.v, hV);
                const double q = plain_logistic(params.gamma_u[j] * a + params.gamma_v[j] * b - params.delta[j]);
                std::vector<double> cum(static_cast<std::size_t>(L + 2), 0.0);
                cum[1] = 1.0;
                for (int y = 2; y <= L; ++y) cum[y] = plain_logistic(params.alpha[j] * a - params.beta[j][y - 2]);
                std::vector<double> row(static_cast<std::size_t>(L + 1));
                row[0] = 1.0 - q;
                for (int y = 1; y <= L; ++y) row[y] = q * (cum[y] - cum[y + 1]);
                table.push_back(std::move(row));
            }
        }
    }

    std::map<Pattern, double> out;
    std::vector<int> idx(items.size(), 0); // 0 = skip, y = category
    for (std::size_t n = 0; n < count; ++n) {
        double prob = 0.0;
        for (int hU = 0; hU < kU; ++hU) {
            for (int hV = 0; hV < kV; ++hV) {
                double p = lambda[hU] * pi[hV];
                for (std::size_t k = 0; k < items.size(); ++k) p *= outcome[hU * kV + hV][k][idx[k]];
                prob += p;
            }
        }
        Pattern pat(items.size());
        for (std::size_t k = 0; k < items.size(); ++k) pat[k] = idx[k] == 0 ? -1 : idx[k];
        out.emplace(std::move(pat), prob);
        for (std::size_t k = 0; k < items.size(); ++k) {
            if (++idx[k] <= design.categories[items[k]]) break;
            idx[k] = 0;
        }
    }
    return out;
}

double brute_force_loglik(const ParameterSet& params, const ItemDesign& design, const Dataset& data) {
    double ll = 0.0;
    for (int i = 0; i < data.n; ++i) {
        std::vector<bool> due(static_cast<std::size_t>(data.m));
        Pattern pat;
        for (int j = 0; j < data.m; ++j) {
            const Response r = data.r(i, j);
            due[j] = r != Response::structural_missing;
            if (r == Response::skipped) pat.push_back(-1);
            else if (r == Response::answered) pat.push_back(data.y(i, j));
        }
        const auto table = brute_force_pattern_probs(params, design, data.X.row(i), due);
        ll += std::log(table.at(pat));
    }
    return ll;
}

} // namespace lcirt
