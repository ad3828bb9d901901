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

#include "lcirt/kernels.hpp"

#include "lcirt/measurement.hpp"
#include "lcirt/structural.hpp"

#include <algorithm>
#include <cmath>

namespace lcirt::kernels {

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ClassTables build_class_tables(const ItemDesign& design, const ParameterSet& params) {
    ClassTables t;
    t.m = design.m();
    t.kU = params.kU();
    t.kV = params.kV();
    t.L = design.categories;
    t.y_offset.resize(static_cast<std::size_t>(t.m));
    std::size_t off = 0;
    for (int j = 0; j < t.m; ++j) {
        t.y_offset[j] = off;
        off += static_cast<std::size_t>(t.kU) * t.L[j];
    }
    t.log_py.resize(off);
    t.log_q.resize(static_cast<std::size_t>(t.m) * t.kU * t.kV);
    t.log_nq.resize(t.log_q.size());

    for (int j = 0; j < t.m; ++j) {
        const auto& b = params.beta[j];
        const std::span<const double> beta(b.data(), static_cast<std::size_t>(b.size()));
        for (int hU = 0; hU < t.kU; ++hU) {
            const double a = item_ability(design, j, params.u.col(hU));
            for (int y = 1; y <= t.L[j]; ++y) {
                t.log_py[t.py_index(j, hU, y)] = grm_log_category(params.alpha[j], beta, a, y);
            }
            for (int hV = 0; hV < t.kV; ++hV) {
                const double eta = params.gamma_u[j] * a +
                                   params.gamma_v[j] * item_tendency(design, j, params.v.col(hV)) - params.delta[j];
                t.log_q[t.q_index(j, hU, hV)] = log_logistic(eta);
                t.log_nq[t.q_index(j, hU, hV)] = log_logistic(-eta);
            }
        }
    }
    return t;
}

void SufficientStats::resize_like(const ClassTables& tables) {
    y_counts.assign(tables.log_py.size(), 0.0);
    answered.assign(tables.log_q.size(), 0.0);
    skipped.assign(tables.log_q.size(), 0.0);
}

void SufficientStats::add(const SufficientStats& other) {
    for (std::size_t k = 0; k < y_counts.size(); ++k) y_counts[k] += other.y_counts[k];
    for (std::size_t k = 0; k < answered.size(); ++k) answered[k] += other.answered[k];
    for (std::size_t k = 0; k < skipped.size(); ++k) skipped[k] += other.skipped[k];
}

namespace {

// Adds subject i's posterior to the counts.
void add_subject(const ClassTables& t, const Dataset& data, int i, const double* w, SufficientStats& st) {
    const int kU = t.kU;
    const int kV = t.kV;
    for (int j = 0; j < data.m; ++j) {
        const Response r = data.r(i, j);
        if (r == Response::structural_missing) {
            continue;
        }
        const std::size_t q0 = t.q_index(j, 0, 0);
        if (r == Response::answered) {
            const int y = data.y(i, j);
            for (int hU = 0; hU < kU; ++hU) {
                double wu = 0.0;
                for (int hV = 0; hV < kV; ++hV) {
                    const double x = w[hU * kV + hV];
                    st.answered[q0 + static_cast<std::size_t>(hU) * kV + hV] += x;
                    wu += x;
                }
                st.y_counts[t.py_index(j, hU, y)] += wu;
            }
        } else {
            for (int k = 0; k < kU * kV; ++k) {
                st.skipped[q0 + k] += w[k];
            }
        }
    }
}

} // namespace

EStepResult e_step_parallel(const ItemDesign& design, const ParameterSet& params, const Dataset& data,
                            EStepOutputs outputs) {
    const ClassTables t = build_class_tables(design, params);
    const int n = data.n;
    const int kU = t.kU;
    const int kV = t.kV;
    const int K = kU * kV;
    const bool posterior = outputs == EStepOutputs::posterior;

    EStepResult res;
    res.subject_loglik.resize(static_cast<std::size_t>(n));
    if (posterior) {
        res.weights.resize(static_cast<std::size_t>(n) * K);
    }
    const Eigen::MatrixXd log_lambda = multinomial_logit_log_prob_rows(data.X, params.phi);
    const Eigen::MatrixXd log_pi = multinomial_logit_log_prob_rows(data.X, params.psi);
    const int blocks = (n + kSubjectBlock - 1) / kSubjectBlock;
    std::vector<SufficientStats> partial(posterior ? static_cast<std::size_t>(blocks) : 0);

#pragma omp parallel for schedule(static)
    for (int b = 0; b < blocks; ++b) {
        std::vector<double> lp(static_cast<std::size_t>(K));
        std::vector<double> wbuf(static_cast<std::size_t>(K));
        if (posterior) {
            partial[b].resize_like(t);
        }
        const int begin = b * kSubjectBlock;
        const int end = std::min(n, begin + kSubjectBlock);
        for (int i = begin; i < end; ++i) {
            for (int hU = 0; hU < kU; ++hU) {
                for (int hV = 0; hV < kV; ++hV) {
                    lp[hU * kV + hV] = log_lambda(i, hU) + log_pi(i, hV);
                }
            }
            for (int j = 0; j < data.m; ++j) {
                const Response r = data.r(i, j);
                if (r == Response::structural_missing) {
                    continue;
                }
                const std::size_t q0 = t.q_index(j, 0, 0);
                if (r == Response::answered) {
                    const int y = data.y(i, j);
                    for (int hU = 0; hU < kU; ++hU) {
                        const double a = t.log_py[t.py_index(j, hU, y)];
                        const std::size_t row = q0 + static_cast<std::size_t>(hU) * kV;
                        for (int hV = 0; hV < kV; ++hV) {
                            lp[hU * kV + hV] += a + t.log_q[row + hV];
                        }
                    }
                } else {
                    for (int k = 0; k < K; ++k) {
                        lp[k] += t.log_nq[q0 + k];
                    }
                }
            }
            const double top = *std::max_element(lp.begin(), lp.end());
            double acc = 0.0;
            for (int k = 0; k < K; ++k) {
                wbuf[k] = std::exp(lp[k] - top);
                acc += wbuf[k];
            }
            res.subject_loglik[i] = top + std::log(acc);
            if (posterior) {
                double* w = res.weights.data() + static_cast<std::size_t>(i) * K;
                for (int k = 0; k < K; ++k) {
                    w[k] = wbuf[k] / acc;
                }
                add_subject(t, data, i, w, partial[b]);
            }
        }
    }

    res.loglik = pairwise_sum(res.subject_loglik);
    if (posterior) {
        res.stats.resize_like(t);
        for (const auto& p : partial) {
            res.stats.add(p);
        }
    }
    return res;
}

EStepResult e_step_serial(const ItemDesign& design, const ParameterSet& params, const Dataset& data,
                          EStepOutputs outputs) {
    const int kU = params.kU();
    const int kV = params.kV();
    const int K = kU * kV;
    EStepResult res;
    res.subject_loglik.resize(static_cast<std::size_t>(data.n));
    std::vector<double> lp(static_cast<std::size_t>(K));
    for (int i = 0; i < data.n; ++i) {
        const ClassWeights cw = class_weights(data.X.row(i), params);
        for (int hU = 0; hU < kU; ++hU) {
            for (int hV = 0; hV < kV; ++hV) {
                lp[hU * kV + hV] = std::log(cw.lambda[hU]) + std::log(cw.pi[hV]) +
                                   subject_class_log_prob(design, params, data, i, hU, hV);
            }
        }
        const double top = *std::max_element(lp.begin(), lp.end());
        double acc = 0.0;
        for (double x : lp) {
            acc += std::exp(x - top);
        }
        const double ll = top + std::log(acc);
        res.subject_loglik[i] = ll;
        res.loglik += ll;
        if (outputs == EStepOutputs::posterior) {
            for (double x : lp) {
                res.weights.push_back(std::exp(x - ll));
            }
        }
    }
    if (outputs == EStepOutputs::posterior) {
        res.stats = accumulate_stats(design, data, kU, kV, res.weights);
    }
    return res;
}

SufficientStats accumulate_stats(const ItemDesign& design, const Dataset& data, int kU, int kV,
                                 std::span<const double> weights) {
    ClassTables shape;
    shape.m = design.m();
    shape.kU = kU;
    shape.kV = kV;
    shape.L = design.categories;
    shape.y_offset.resize(static_cast<std::size_t>(shape.m));
    std::size_t off = 0;
    for (int j = 0; j < shape.m; ++j) {
        shape.y_offset[j] = off;
        off += static_cast<std::size_t>(kU) * shape.L[j];
    }
    shape.log_py.resize(off);
    shape.log_q.resize(static_cast<std::size_t>(shape.m) * kU * kV);
    SufficientStats st;
    st.resize_like(shape);
    for (int i = 0; i < data.n; ++i) {
        add_subject(shape, data, i, weights.data() + static_cast<std::size_t>(i) * kU * kV, st);
    }
    return st;
}

} // namespace lcirt::kernels
