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

#include <span>
#include <vector>

namespace lcirt {

/// Log-probabilities are floored here so that degenerate thresholds never
/// produce -inf inside the EM.
inline constexpr double kLogProbFloor = -700.0;

/// Numerically stable 1 / (1 + exp(-eta)).
[[nodiscard]] double logistic(double eta);
/// log(logistic(eta)) without cancellation, floored at kLogProbFloor.
[[nodiscard]] double log_logistic(double eta);

struct CategoryDistribution {
    std::vector<double> probs; // probs[y-1], y = 1..L
};

/// sum_s z_Usj u_s for a U support vector (the ability item j sees).
[[nodiscard]] double item_ability(const ItemDesign& design, int j, const Eigen::Ref<const Eigen::VectorXd>& u_point);
/// sum_t z_Vtj v_t, zero when the V side is disabled.
[[nodiscard]] double item_tendency(const ItemDesign& design, int j, const Eigen::Ref<const Eigen::VectorXd>& v_point);

/// Pr(Y >= y) for a graded-response item at a given ability; 2 <= y <= L.
[[nodiscard]] double grm_cumulative(double alpha, std::span<const double> beta, double ability, int y);
[[nodiscard]] CategoryDistribution grm_category(double alpha, std::span<const double> beta, double ability);
/// log Pr(Y = y), computed from the logistic pieces to avoid cancellation.
[[nodiscard]] double grm_log_category(double alpha, std::span<const double> beta, double ability, int y);

[[nodiscard]] double grm_cumulative(const ItemDesign& design, const ParameterSet& params, int j, int y,
                                    const Eigen::Ref<const Eigen::VectorXd>& u_point);
[[nodiscard]] CategoryDistribution grm_category(const ItemDesign& design, const ParameterSet& params, int j,
                                                const Eigen::Ref<const Eigen::VectorXd>& u_point);

/// Linear predictor of the answering probability of item j.
[[nodiscard]] double indicator_logit(const ItemDesign& design, const ParameterSet& params, int j,
                                     const Eigen::Ref<const Eigen::VectorXd>& u_point,
                                     const Eigen::Ref<const Eigen::VectorXd>& v_point);
/// q = Pr(R_j = 1 | u, v).
[[nodiscard]] double indicator_prob(const ItemDesign& design, const ParameterSet& params, int j,
                                    const Eigen::Ref<const Eigen::VectorXd>& u_point,
                                    const Eigen::Ref<const Eigen::VectorXd>& v_point);

/// log of the joint probability of subject i's responses and indicators
/// given latent classes (hU, hV); structural-missing items contribute 0.
[[nodiscard]] double subject_class_log_prob(const ItemDesign& design, const ParameterSet& params, const Dataset& data,
                                            int i, int hU, int hV);
[[nodiscard]] double subject_class_prob(const ItemDesign& design, const ParameterSet& params, const Dataset& data,
                                        int i, int hU, int hV);

} // namespace lcirt
