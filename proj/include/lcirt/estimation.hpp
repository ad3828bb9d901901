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

#include "lcirt/kernels.hpp"
#include "lcirt/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lcirt {

/// Joint posterior over (U-class, V-class) pairs, one row per subject.
struct PosteriorWeights {
    int n = 0;
    int kU = 1;
    int kV = 1;
    std::vector<double> w; // (i * kU + hU) * kV + hV

    [[nodiscard]] double operator()(int i, int hU, int hV) const {
        return w[(static_cast<std::size_t>(i) * kU + hU) * kV + hV];
    }
    [[nodiscard]] double marginal_u(int i, int hU) const;
    [[nodiscard]] double marginal_v(int i, int hV) const;
};

/// Discrete marginal log-likelihood, summed over subjects.
[[nodiscard]] double marginal_loglik(const ItemDesign& design, const ParameterSet& params, const Dataset& data);

[[nodiscard]] PosteriorWeights e_step(const ItemDesign& design, const ParameterSet& params, const Dataset& data);

/// Expected complete-data log-likelihood split by M-step block.
struct CompleteDataObjective {
    double structural_u = 0.0;
    double structural_v = 0.0;
    double items_y = 0.0;
    double items_r = 0.0;
    [[nodiscard]] double total() const { return structural_u + structural_v + items_y + items_r; }
};

[[nodiscard]] CompleteDataObjective expected_complete_loglik(const PosteriorWeights& weights,
                                                             const kernels::SufficientStats& stats,
                                                             const ParameterSet& params, const ItemDesign& design,
                                                             const Dataset& data);

/// Analytic gradient of the expected complete-data log-likelihood with
/// respect to every natural parameter (same shape as ParameterSet). At the
/// weights' own parameters this is also the score of the marginal
/// log-likelihood.
[[nodiscard]] ParameterSet complete_data_gradient(const PosteriorWeights& weights,
                                                  const kernels::SufficientStats& stats, const ParameterSet& params,
                                                  const ItemDesign& design, const Dataset& data);

/// Gradient of marginal_loglik with respect to every natural parameter.
[[nodiscard]] ParameterSet score(const ItemDesign& design, const ParameterSet& params, const Dataset& data);

/// Thresholds as (beta_2, log increments) and back; the M-step works in the
/// increment scale so ordering holds by construction.
[[nodiscard]] Eigen::VectorXd thresholds_to_increments(const Eigen::VectorXd& beta);
[[nodiscard]] Eigen::VectorXd increments_to_thresholds(const Eigen::VectorXd& increments);

struct MStepOptions {
    int structural_iterations = 2;
    int item_iterations = 3;
    int support_iterations = 3;
    double discrimination_cap = 20.0;
};

struct MStepReport {
    int caps_hit = 0;
    int gradient_fallbacks = 0; // Newton/scoring direction failed, gradient step used
    int stalled_blocks = 0;     // neither direction improved the block
};

/// One generalized M-step: the expected complete-data log-likelihood at the
/// returned parameters is no lower than at `params`.
[[nodiscard]] ParameterSet m_step(const PosteriorWeights& weights, const ParameterSet& params,
                                  const ParameterLayout& layout, const Dataset& data, const MStepOptions& options = {},
                                  MStepReport* report = nullptr);
[[nodiscard]] ParameterSet m_step(const PosteriorWeights& weights, const kernels::SufficientStats& stats,
                                  const ParameterSet& params, const ParameterLayout& layout, const Dataset& data,
                                  const MStepOptions& options = {}, MStepReport* report = nullptr);

enum class InitStrategy { deterministic, random, mixed };

[[nodiscard]] InitStrategy parse_init_strategy(const std::string& name);
[[nodiscard]] std::string to_string(InitStrategy strategy);

/// Starting values. `deterministic`: equally spaced supports on [-2, 2],
/// zero logit coefficients, unit discriminations, empirical-quantile
/// thresholds. `random`: the deterministic start plus seeded noise.
[[nodiscard]] ParameterSet init_params(const ItemDesign& design, const LatentConfig& config, const Dataset& data,
                                       InitStrategy strategy, std::uint64_t seed,
                                       const Restrictions& restrictions = {});

inline constexpr std::uint64_t kDefaultSeed = 20160917;

struct FitOptions {
    int max_iter = 2000;
    double tol = 1e-8;
    int n_restarts = 10; // restart 0 is deterministic under InitStrategy::mixed
    std::uint64_t seed = kDefaultSeed;
    InitStrategy init_strategy = InitStrategy::mixed;
    Restrictions restrictions;
    MStepOptions m_step;
    /// Additional starting points tried after the regular restarts.
    std::vector<ParameterSet> extra_starts;
};

struct FitResult {
    ParameterSet params; // canonicalized
    double loglik = 0.0;
    std::vector<double> trace;
    int npar = 0;
    int n = 0;
    bool converged = false;
    int iterations = 0;
    std::uint64_t seed = 0;
    int restart = 0; // index of the winning run; extra starts follow the regular ones
    int caps_hit = 0;
    std::vector<double> restart_logliks;
    LatentConfig config;
    Restrictions restrictions;
};

/// Runs EM from one start until the log-likelihood change drops below tol.
[[nodiscard]] FitResult run_em(const ParameterSet& start, const ParameterLayout& layout, const Dataset& data,
                               const FitOptions& options);

/// Best of the restarts (ties go to the lower restart index).
[[nodiscard]] FitResult fit(const ItemDesign& design, const LatentConfig& config, const Dataset& data,
                            const FitOptions& options = {});

} // namespace lcirt
