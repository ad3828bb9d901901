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

#include "lcirt/structural.hpp"

#include <cmath>
#include <stdexcept>

namespace lcirt {

namespace {

Eigen::VectorXd logits(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::MatrixXd& coef) {
    const auto k = coef.rows() + 1;
    if (coef.rows() > 0 && coef.cols() != x.size() + 1) {
        throw std::invalid_argument("logit coefficients have " + std::to_string(coef.cols()) +
                                    " columns for " + std::to_string(x.size()) + " covariates");
    }
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(k);
    for (Eigen::Index h = 1; h < k; ++h) {
        eta[h] = coef(h - 1, 0) + x.dot(coef.row(h - 1).tail(x.size()));
    }
    return eta;
}

} // namespace

Eigen::VectorXd multinomial_logit_log_probs(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::MatrixXd& coef) {
    Eigen::VectorXd eta = logits(x, coef);
    const double top = eta.maxCoeff();
    const double lse = top + std::log((eta.array() - top).exp().sum());
    return eta.array() - lse;
}

Eigen::MatrixXd multinomial_logit_log_prob_rows(const Eigen::MatrixXd& X, const Eigen::MatrixXd& coef) {
    const auto k = coef.rows() + 1;
    if (coef.rows() > 0 && coef.cols() != X.cols() + 1) {
        throw std::invalid_argument("logit coefficients have " + std::to_string(coef.cols()) +
                                    " columns for " + std::to_string(X.cols()) + " covariates");
    }
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(X.rows(), k);
    if (k > 1) {
        eta.rightCols(k - 1) = X * coef.rightCols(X.cols()).transpose();
        eta.rightCols(k - 1).rowwise() += coef.col(0).transpose();
    }
    const Eigen::VectorXd top = eta.rowwise().maxCoeff();
    eta.colwise() -= top;
    const Eigen::VectorXd lse = eta.array().exp().rowwise().sum().log().matrix();
    eta.colwise() -= lse;
    return eta;
}

Eigen::VectorXd multinomial_logit_probs(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::MatrixXd& coef) {
    Eigen::VectorXd eta = logits(x, coef);
    Eigen::VectorXd p = (eta.array() - eta.maxCoeff()).exp();
    return p / p.sum();
}

Eigen::VectorXd class_weights_U(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::MatrixXd& phi) {
    return multinomial_logit_probs(x, phi);
}

Eigen::VectorXd class_weights_V(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::MatrixXd& psi) {
    return multinomial_logit_probs(x, psi);
}

ClassWeights class_weights(const Eigen::Ref<const Eigen::RowVectorXd>& x, const ParameterSet& params) {
    return {class_weights_U(x, params.phi), class_weights_V(x, params.psi)};
}

ClassWeights average_class_weights(const Eigen::MatrixXd& X, const ParameterSet& params) {
    ClassWeights avg{Eigen::VectorXd::Zero(params.phi.rows() + 1), Eigen::VectorXd::Zero(params.psi.rows() + 1)};
    const auto n = X.rows();
    if (n == 0) {
        throw std::invalid_argument("average_class_weights needs at least one covariate row");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        avg.lambda += class_weights_U(X.row(i), params.phi);
        avg.pi += class_weights_V(X.row(i), params.psi);
    }
    avg.lambda /= static_cast<double>(n);
    avg.pi /= static_cast<double>(n);
    return avg;
}

} // namespace lcirt
