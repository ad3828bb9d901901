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

#include "lcirt/measurement.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lcirt {

double logistic(double eta) {
    if (eta >= 0.0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double log_logistic(double eta) {
    const double value = eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
    return value < kLogProbFloor ? kLogProbFloor : value;
}

double item_ability(const ItemDesign& design, int j, const Eigen::Ref<const Eigen::VectorXd>& u_point) {
    double sum = 0.0;
    for (int s = 0; s < design.zU.cols(); ++s) {
        if (design.zU(j, s) != 0) {
            sum += u_point[s];
        }
    }
    return sum;
}

double item_tendency(const ItemDesign& design, int j, const Eigen::Ref<const Eigen::VectorXd>& v_point) {
    double sum = 0.0;
    const int T = static_cast<int>(std::min<Eigen::Index>(design.zV.cols(), v_point.size()));
    for (int t = 0; t < T; ++t) {
        if (design.zV(j, t) != 0) {
            sum += v_point[t];
        }
    }
    return sum;
}

double grm_cumulative(double alpha, std::span<const double> beta, double ability, int y) {
    const int L = static_cast<int>(beta.size()) + 1;
    if (y < 2 || y > L) {
        throw std::out_of_range("category " + std::to_string(y) + " outside 2.." + std::to_string(L));
    }
    return logistic(alpha * ability - beta[static_cast<std::size_t>(y - 2)]);
}

CategoryDistribution grm_category(double alpha, std::span<const double> beta, double ability) {
    const int L = static_cast<int>(beta.size()) + 1;
    CategoryDistribution out;
    out.probs.resize(static_cast<std::size_t>(L));
    double upper = 1.0; // Pr(Y >= y)
    for (int y = 1; y <= L; ++y) {
        const double next = y < L ? logistic(alpha * ability - beta[static_cast<std::size_t>(y - 1)]) : 0.0;
        out.probs[static_cast<std::size_t>(y - 1)] = upper - next;
        upper = next;
    }
    return out;
}

double grm_log_category(double alpha, std::span<const double> beta, double ability, int y) {
    const int L = static_cast<int>(beta.size()) + 1;
    const double theta = alpha * ability;
    double value = 0.0;
    if (y == 1) {
        value = log_logistic(-(theta - beta[0]));
    } else if (y == L) {
        value = log_logistic(theta - beta[static_cast<std::size_t>(L - 2)]);
    } else {
        // logistic(a) - logistic(b) = logistic(a) logistic(-b) (1 - exp(b - a)), a >= b
        const double lo = beta[static_cast<std::size_t>(y - 2)];
        const double hi = beta[static_cast<std::size_t>(y - 1)];
        const double gap = hi - lo;
        if (!(gap > 0.0)) {
            return kLogProbFloor;
        }
        value = log_logistic(theta - lo) + log_logistic(-(theta - hi)) + std::log1p(-std::exp(-gap));
    }
    return value < kLogProbFloor ? kLogProbFloor : value;
}

double grm_cumulative(const ItemDesign& design, const ParameterSet& params, int j, int y,
                      const Eigen::Ref<const Eigen::VectorXd>& u_point) {
    const auto& b = params.beta[static_cast<std::size_t>(j)];
    return grm_cumulative(params.alpha[j], {b.data(), static_cast<std::size_t>(b.size())},
                          item_ability(design, j, u_point), y);
}

CategoryDistribution grm_category(const ItemDesign& design, const ParameterSet& params, int j,
                                  const Eigen::Ref<const Eigen::VectorXd>& u_point) {
    const auto& b = params.beta[static_cast<std::size_t>(j)];
    return grm_category(params.alpha[j], {b.data(), static_cast<std::size_t>(b.size())},
                        item_ability(design, j, u_point));
}

double indicator_logit(const ItemDesign& design, const ParameterSet& params, int j,
                       const Eigen::Ref<const Eigen::VectorXd>& u_point,
                       const Eigen::Ref<const Eigen::VectorXd>& v_point) {
    return params.gamma_u[j] * item_ability(design, j, u_point) +
           params.gamma_v[j] * item_tendency(design, j, v_point) - params.delta[j];
}

double indicator_prob(const ItemDesign& design, const ParameterSet& params, int j,
                      const Eigen::Ref<const Eigen::VectorXd>& u_point,
                      const Eigen::Ref<const Eigen::VectorXd>& v_point) {
    return logistic(indicator_logit(design, params, j, u_point, v_point));
}

double subject_class_log_prob(const ItemDesign& design, const ParameterSet& params, const Dataset& data, int i,
                              int hU, int hV) {
    const Eigen::VectorXd u_point = params.u.col(hU);
    const Eigen::VectorXd v_point = params.v.col(hV);
    double sum = 0.0;
    for (int j = 0; j < data.m; ++j) {
        const Response r = data.r(i, j);
        if (r == Response::structural_missing) {
            continue;
        }
        const double eta = indicator_logit(design, params, j, u_point, v_point);
        if (r == Response::skipped) {
            sum += log_logistic(-eta);
        } else {
            const auto& b = params.beta[static_cast<std::size_t>(j)];
            sum += log_logistic(eta) + grm_log_category(params.alpha[j], {b.data(), static_cast<std::size_t>(b.size())},
                                                        item_ability(design, j, u_point), data.y(i, j));
        }
    }
    return sum;
}

double subject_class_prob(const ItemDesign& design, const ParameterSet& params, const Dataset& data, int i, int hU,
                          int hV) {
    return std::exp(subject_class_log_prob(design, params, data, i, hU, hV));
}

} // namespace lcirt
