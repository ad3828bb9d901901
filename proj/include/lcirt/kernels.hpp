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

#include "lcirt/model.hpp"

#include <cstddef>
#include <span>
#include <vector>

/// Per-subject E-step kernels. `e_step_parallel` is the production path:
/// subjects are processed in fixed-size blocks under OpenMP and block
/// partials are reduced in block order, so results do not depend on the
/// thread count. `e_step_serial` is a direct, unoptimized reference used by
/// the tests and the benchmark.
namespace lcirt::kernels {

inline constexpr int kSubjectBlock = 128;

/// Item log-probabilities for every latent class, evaluated once per E-step.
struct ClassTables {
    int m = 0;
    int kU = 0;
    int kV = 0;
    std::vector<int> L;
    std::vector<std::size_t> y_offset; // item j occupies [y_offset[j], y_offset[j] + kU * L[j])
    std::vector<double> log_py;        // log Pr(Y_j = y | hU) at y_offset[j] + hU * L[j] + y - 1
    std::vector<double> log_q;         // log Pr(R_j = 1 | hU, hV) at (j * kU + hU) * kV + hV
    std::vector<double> log_nq;        // log Pr(R_j = 0 | hU, hV)

    [[nodiscard]] std::size_t py_index(int j, int hU, int y) const {
        return y_offset[j] + static_cast<std::size_t>(hU) * L[j] + static_cast<std::size_t>(y - 1);
    }
    [[nodiscard]] std::size_t q_index(int j, int hU, int hV) const {
        return (static_cast<std::size_t>(j) * kU + hU) * kV + hV;
    }
};

[[nodiscard]] ClassTables build_class_tables(const ItemDesign& design, const ParameterSet& params);

/// Posterior-weighted counts; everything the item and support M-steps need.
struct SufficientStats {
    std::vector<double> y_counts; // layout of ClassTables::log_py
    std::vector<double> answered; // layout of ClassTables::log_q
    std::vector<double> skipped;

    void resize_like(const ClassTables& tables);
    void add(const SufficientStats& other);
    [[nodiscard]] bool empty() const { return answered.empty(); }
};

enum class EStepOutputs { loglik, posterior };

struct EStepResult {
    std::vector<double> subject_loglik;
    double loglik = 0.0;
    std::vector<double> weights; // n * kU * kV, subject-major; empty for EStepOutputs::loglik
    SufficientStats stats;       // empty for EStepOutputs::loglik
};

[[nodiscard]] EStepResult e_step_parallel(const ItemDesign& design, const ParameterSet& params, const Dataset& data,
                                          EStepOutputs outputs);
[[nodiscard]] EStepResult e_step_serial(const ItemDesign& design, const ParameterSet& params, const Dataset& data,
                                        EStepOutputs outputs);

/// Counts implied by a set of posterior weights.
[[nodiscard]] SufficientStats accumulate_stats(const ItemDesign& design, const Dataset& data, int kU, int kV,
                                               std::span<const double> weights);

/// Pairwise summation; fixed association order for a given length.
[[nodiscard]] double pairwise_sum(std::span<const double> values);

} // namespace lcirt::kernels
