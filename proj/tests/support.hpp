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


#pragma once

// Builders for random designs, parameter sets and datasets shared by the tests.

#include "lcirt/estimation.hpp"
#include "lcirt/io.hpp"
#include "lcirt/model.hpp"
#include "lcirt/random.hpp"

#include <algorithm>
#include <string>
#include <vector>

#ifndef LCIRT_DATA_DIR
#define LCIRT_DATA_DIR "data"
#endif

namespace lcirt::testing {

/// Item j loads on U-dimension j % S and V-dimension j % T.
inline ItemDesign make_design(const std::vector<int>& categories, int S = 1, int T = 1,
                              std::vector<std::string> groups = {}) {
    ItemDesign d;
    const int m = static_cast<int>(categories.size());
    d.categories = categories;
    d.zU = Eigen::MatrixXi::Zero(m, S);
    d.zV = Eigen::MatrixXi::Zero(m, T);
    for (int j = 0; j < m; ++j) {
        d.names.push_back("i" + std::to_string(j + 1));
        d.zU(j, j % S) = 1;
        if (T > 0) d.zV(j, j % T) = 1;
    }
    d.groups = groups.empty() ? std::vector<std::string>(static_cast<std::size_t>(m)) : std::move(groups);
    assign_default_anchors(d);
    return d;
}

inline ItemDesign make_design(int m, int L, int S = 1, int T = 1) {
    return make_design(std::vector<int>(static_cast<std::size_t>(m), L), S, T);
}

inline LatentConfig make_config(int kU, int kV, int S = 1, int T = 1) {
    return {S, kV > 1 ? T : 0, kU, kV};
}

/// Valid parameters: distinct sorted supports, ordered thresholds, anchors applied.
inline ParameterSet random_params(const ItemDesign& design, const LatentConfig& config, int C, Rng& rng,
                                  const Restrictions& restrictions = {}) {
    ParameterSet p = ParameterSet::zeros(design, config, C);
    for (Eigen::Index s = 0; s < p.u.rows(); ++s) {
        double x = rng.uniform(-2.5, -1.0);
        for (Eigen::Index h = 0; h < p.u.cols(); ++h) {
            p.u(s, h) = x;
            x += rng.uniform(0.6, 1.8);
        }
    }
    for (Eigen::Index t = 0; t < p.v.rows(); ++t) {
        double x = rng.uniform(-2.0, -0.5);
        for (Eigen::Index h = 0; h < p.v.cols(); ++h) {
            p.v(t, h) = x;
            x += rng.uniform(0.6, 1.8);
        }
    }
    for (Eigen::Index k = 0; k < p.phi.size(); ++k) p.phi.data()[k] = rng.normal(0.0, 0.6);
    for (Eigen::Index k = 0; k < p.psi.size(); ++k) p.psi.data()[k] = rng.normal(0.0, 0.6);
    for (int j = 0; j < design.m(); ++j) {
        p.alpha[j] = rng.uniform(0.5, 2.0);
        double b = rng.uniform(-1.5, 0.5);
        for (Eigen::Index k = 0; k < p.beta[j].size(); ++k) {
            p.beta[j][k] = b;
            b += rng.uniform(0.3, 1.5);
        }
        p.gamma_u[j] = rng.uniform(-1.5, 1.5);
        p.gamma_v[j] = config.v_side() ? rng.uniform(0.5, 1.5) : 0.0;
        p.delta[j] = rng.uniform(-1.0, 1.0);
    }
    const ParameterLayout layout(design, config, C, restrictions);
    apply_constraints(p, layout);
    canonicalize(p);
    return p;
}

/// Random responses; every subject has at least one due item.
inline Dataset random_dataset(const ItemDesign& design, int n, int C, Rng& rng, double p_structural = 0.2) {
    const int m = design.m();
    Dataset d = Dataset::empty(n, m, C);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < C; ++c) d.X(i, c) = rng.normal();
        const int forced = static_cast<int>(rng.uniform() * m) % m;
        for (int j = 0; j < m; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * m + j;
            if (j != forced && rng.bernoulli(p_structural)) continue;
            if (rng.bernoulli(0.3)) {
                d.R[k] = Response::skipped;
            } else {
                d.R[k] = Response::answered;
                d.Y[k] = static_cast<std::int16_t>(1 + static_cast<int>(rng.uniform() * design.categories[j]));
            }
        }
    }
    return d;
}

inline io::DesignFile demo_design() { return io::read_design(std::string(LCIRT_DATA_DIR) + "/demo.design"); }

inline ParameterSet demo_truth(const io::DesignFile& df) {
    return io::read_params(std::string(LCIRT_DATA_DIR) + "/demo_params.json", df.design, df.config,
                           static_cast<int>(df.column_names().size()));
}

inline double max_abs_diff(const ParameterSet& a, const ParameterSet& b, const ItemDesign& design) {
    const auto fa = flatten(a, design);
    const auto fb = flatten(b, design);
    return (fa.values - fb.values).cwiseAbs().maxCoeff();
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

} // namespace lcirt::testing
