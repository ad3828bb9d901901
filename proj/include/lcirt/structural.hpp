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

namespace lcirt {

/// Concomitant-variable class probabilities for one subject.
struct ClassWeights {
    Eigen::VectorXd lambda; // kU
    Eigen::VectorXd pi;     // kV
};

/// Reference-category multinomial logit: class 1 has logit 0, class h has
/// (1, x)' coef.row(h-2). `x` excludes the constant.
[[nodiscard]] Eigen::VectorXd multinomial_logit_probs(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                                      const Eigen::MatrixXd& coef);
[[nodiscard]] Eigen::VectorXd multinomial_logit_log_probs(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                                          const Eigen::MatrixXd& coef);
/// Log class probabilities for every row of X (n x k).
[[nodiscard]] Eigen::MatrixXd multinomial_logit_log_prob_rows(const Eigen::MatrixXd& X, const Eigen::MatrixXd& coef);

[[nodiscard]] Eigen::VectorXd class_weights_U(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::MatrixXd& phi);
[[nodiscard]] Eigen::VectorXd class_weights_V(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::MatrixXd& psi);
[[nodiscard]] ClassWeights class_weights(const Eigen::Ref<const Eigen::RowVectorXd>& x, const ParameterSet& params);

/// Class probabilities averaged over the rows of X.
[[nodiscard]] ClassWeights average_class_weights(const Eigen::MatrixXd& X, const ParameterSet& params);

} // namespace lcirt
