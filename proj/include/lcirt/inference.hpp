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

#include "lcirt/estimation.hpp"
#include "lcirt/structural.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lcirt {

// ---- information criteria and likelihood-ratio tests -----------------------

[[nodiscard]] double bic(double loglik, int npar, int n);

struct TestReport {
    double loglik_full = 0.0;
    double loglik_restricted = 0.0;
    int npar_full = 0;
    int npar_restricted = 0;
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};

[[nodiscard]] TestReport lrt(double loglik_full, double loglik_restricted, int df);
/// df is the difference of the free-parameter counts.
[[nodiscard]] TestReport lrt(const FitResult& full, const FitResult& restricted);

/// Full and restricted fits of a nested test, kept for reporting.
struct NestedTest {
    TestReport report;
    FitResult full;
    FitResult restricted;
};

/// gamma_u = 0 for every item versus the free model. Each fit is also started
/// from the other's optimum so the statistic is not hurt by a poor local mode.
[[nodiscard]] NestedTest test_ignorability(const ItemDesign& design, const LatentConfig& config, const Dataset& data,
                                           const FitOptions& options = {});
/// All items of the block share one parameter set versus the free model.
[[nodiscard]] NestedTest test_group_homogeneity(const ItemDesign& design, const LatentConfig& config,
                                                const Dataset& data, const std::vector<int>& block,
                                                const FitOptions& options = {});

// ---- standardization -------------------------------------------------------

/// Probability-weighted mean and SD of each dimension's support points.
struct SupportMoments {
    Eigen::VectorXd u_mean, u_sd; // S
    Eigen::VectorXd v_mean, v_sd; // T
};

[[nodiscard]] SupportMoments support_moments(const ParameterSet& params, const ClassWeights& avg);

/// Rescales supports to weighted mean 0 and SD 1 and transforms the item
/// parameters so every probability is unchanged. Throws std::domain_error for
/// a dimension whose support points do not vary.
[[nodiscard]] ParameterSet standardize(const ParameterSet& params, const ClassWeights& avg, const ItemDesign& design);
/// Uses class probabilities averaged over the subjects of `data`.
[[nodiscard]] ParameterSet standardize(const ParameterSet& params, const ItemDesign& design, const Dataset& data);

// ---- standard errors -------------------------------------------------------

using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central differences with step max(1e-4, 1e-4 |theta_k|); columns are
/// evaluated in parallel.
[[nodiscard]] Eigen::MatrixXd numerical_jacobian(const VectorFunction& f, const Eigen::VectorXd& theta);

struct Covariance {
    Eigen::MatrixXd matrix;
    std::vector<bool> failed; // coordinate touches a non-positive direction of the information
};

/// Pseudo-inverse of a symmetric information matrix with per-coordinate flags.
[[nodiscard]] Covariance invert_information(const Eigen::MatrixXd& information);

struct DeltaResult {
    Eigen::VectorXd se;
    std::vector<bool> fixed;  // row of the Jacobian is zero
    std::vector<bool> failed; // depends on a failed coordinate
};

/// SEs of g(theta) given cov(theta) and the Jacobian of g.
[[nodiscard]] DeltaResult delta_method(const Covariance& cov, const Eigen::MatrixXd& jacobian);

struct ParameterEstimates {
    FlatParameters values;
    Eigen::VectorXd se;
    std::vector<bool> fixed;
    std::vector<bool> failed;
};

struct StandardErrorReport {
    std::vector<std::string> free_names;
    Eigen::MatrixXd hessian;
    double hessian_asymmetry = 0.0; // before symmetrization, relative to max |H|
    Covariance covariance;
    ParameterEstimates raw;
    bool has_standardized = false;
    ParameterEstimates standardized;
};

[[nodiscard]] StandardErrorReport standard_errors(const FitResult& fit, const ItemDesign& design, const Dataset& data);

// ---- prediction and classification ----------------------------------------

struct ItemPrediction {
    std::string name;
    std::string group;
    std::vector<std::vector<double>> category; // [u][y-1]
    std::vector<double> passing;               // Pr(Y > 1 | u)
    double passing_range = 0.0;                // last u minus first u
    std::vector<std::vector<double>> answer;   // Pr(R = 1 | u, v), [u][v]
    double answer_range_u = 0.0;               // at the v value nearest 0
    double answer_range_v = 0.0;               // at the u value nearest 0
};

struct PredictionTables {
    std::vector<double> u_values;
    std::vector<double> v_values;
    std::vector<ItemPrediction> items;
};

/// Item probabilities at chosen latent values (on the scale of `params`,
/// normally standardized so values are in SD units).
[[nodiscard]] PredictionTables predict_item_probs(const ParameterSet& params, const ItemDesign& design,
                                                  const std::vector<double>& u_values,
                                                  const std::vector<double>& v_values);

/// Probability of a pass/fail pattern over items treated as independent
/// given the latent values: prod p_j for passes, prod (1 - p_j) for fails.
[[nodiscard]] double joint_pattern_probability(std::span<const double> pass_probs, std::span<const bool> passed);

struct Classification {
    std::vector<int> class_u; // 0-based MAP class of the U marginal
    std::vector<int> class_v;
    PosteriorWeights posterior;
};

/// Index of the largest entry; ties go to the lower index.
[[nodiscard]] int argmax_lower(std::span<const double> values);

[[nodiscard]] Classification posterior_classify(const ParameterSet& params, const ItemDesign& design,
                                                const Dataset& data);

// ---- class-number selection -----------------------------------------------

struct SelectionRow {
    int kU = 0;
    int kV = 0;
    double loglik = 0.0;
    int npar = 0;
    double bic = 0.0;
    bool converged = false;
    bool bic_min = false;
};

/// Fits every (kU, kV) pair, kU outer; kV = 1 drops the tendency side.
[[nodiscard]] std::vector<SelectionRow> select_grid(const ItemDesign& design, const Dataset& data, int S, int T,
                                                    const std::vector<int>& ku_values,
                                                    const std::vector<int>& kv_values, const FitOptions& options = {});

} // namespace lcirt
