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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "lcirt/structural.hpp"

#include <cmath>

using namespace lcirt;
using namespace lcirt::testing;

TEST_CASE("class weights at zero coefficients are uniform") {
    const Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(3, 0.7);
    const Eigen::VectorXd lambda = class_weights_U(x, Eigen::MatrixXd::Zero(3, 4));
    REQUIRE(lambda.size() == 4);
    for (int h = 0; h < 4; ++h) CHECK(lambda[h] == doctest::Approx(0.25).epsilon(1e-15));
    const Eigen::VectorXd pi = class_weights_V(x, Eigen::MatrixXd::Zero(1, 4));
    CHECK(pi[0] == doctest::Approx(0.5));
    CHECK(pi[1] == doctest::Approx(0.5));
}

TEST_CASE("one free class reduces to a binary logit") {
    const Eigen::RowVectorXd x(0);
    const Eigen::MatrixXd phi = Eigen::MatrixXd::Constant(1, 1, 0.5);
    const Eigen::VectorXd lambda = class_weights_U(x, phi);
    CHECK(lambda[0] == doctest::Approx(1.0 / (1.0 + std::exp(0.5))).epsilon(1e-14));
    CHECK(lambda[1] == doctest::Approx(0.62246).epsilon(1e-5));

    const Eigen::MatrixXd psi = Eigen::MatrixXd::Constant(1, 1, -0.869);
    CHECK(class_weights_V(x, psi)[1] == doctest::Approx(0.2955).epsilon(5e-4));
}

TEST_CASE("a single class has probability one") {
    const Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(2, 1.0);
    const Eigen::VectorXd lambda = class_weights_U(x, Eigen::MatrixXd::Zero(0, 3));
    REQUIRE(lambda.size() == 1);
    CHECK(lambda[0] == 1.0);
}

TEST_CASE("dimension mismatch is rejected") {
    const Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(2, 1.0);
    CHECK_THROWS((void)class_weights_U(x, Eigen::MatrixXd::Zero(2, 2)));
}

TEST_CASE("weights are probability vectors and survive extreme logits") {
    Rng rng(17);
    for (int rep = 0; rep < 2000; ++rep) {
        const int k = 1 + rep % 5;
        const int C = rep % 4;
        Eigen::MatrixXd coef(k - 1, C + 1);
        for (Eigen::Index e = 0; e < coef.size(); ++e) coef.data()[e] = rng.normal(0.0, rep % 10 == 0 ? 300.0 : 2.0);
        Eigen::RowVectorXd x(C);
        for (int c = 0; c < C; ++c) x[c] = rng.normal();
        const Eigen::VectorXd w = multinomial_logit_probs(x, coef);
        REQUIRE(w.allFinite());
        REQUIRE((w.array() >= 0.0).all());
        REQUIRE(std::abs(w.sum() - 1.0) <= 1e-12);
        const Eigen::VectorXd lw = multinomial_logit_log_probs(x, coef);
        REQUIRE(lw.allFinite());
    }
}

TEST_CASE("weights depend on coefficients only through the class logits") {
    // coefficients on a constant covariate and on the intercept are interchangeable
    Rng rng(2);
    Eigen::MatrixXd a(2, 2), b(2, 2);
    for (int h = 0; h < 2; ++h) {
        const double c0 = rng.normal();
        const double c1 = rng.normal();
        const double shift = rng.normal();
        a.row(h) << c0, c1;
        b.row(h) << c0 + shift, c1 - shift;
    }
    const Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(1, 1.0);
    CHECK((multinomial_logit_probs(x, a) - multinomial_logit_probs(x, b)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("log-weight gradient matches central differences") {
    Rng rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        const int k = 2 + rep % 3;
        const int C = 1 + rep % 3;
        Eigen::MatrixXd coef(k - 1, C + 1);
        for (Eigen::Index e = 0; e < coef.size(); ++e) coef.data()[e] = rng.normal();
        Eigen::RowVectorXd x(C);
        for (int c = 0; c < C; ++c) x[c] = rng.normal();
        Eigen::RowVectorXd xt(C + 1);
        xt << 1.0, x;
        const Eigen::VectorXd lambda = multinomial_logit_probs(x, coef);
        for (int h = 0; h < k; ++h) {
            for (int g = 1; g < k; ++g) {
                for (int c = 0; c <= C; ++c) {
                    const double analytic = ((h == g ? 1.0 : 0.0) - lambda[g]) * xt[c];
                    const double step = 1e-6;
                    Eigen::MatrixXd up = coef, down = coef;
                    up(g - 1, c) += step;
                    down(g - 1, c) -= step;
                    const double fd = (multinomial_logit_log_probs(x, up)[h] - multinomial_logit_log_probs(x, down)[h]) /
                                      (2.0 * step);
                    CHECK(std::abs(fd - analytic) <= 1e-6 * std::max(1.0, std::abs(analytic)));
                }
            }
        }
    }
}

TEST_CASE("row-wise log probabilities agree with the single-row form") {
    Rng rng(29);
    Eigen::MatrixXd X(7, 2);
    for (Eigen::Index e = 0; e < X.size(); ++e) X.data()[e] = rng.normal();
    Eigen::MatrixXd coef(3, 3);
    for (Eigen::Index e = 0; e < coef.size(); ++e) coef.data()[e] = rng.normal();
    const Eigen::MatrixXd rows = multinomial_logit_log_prob_rows(X, coef);
    for (int i = 0; i < 7; ++i) {
        const Eigen::VectorXd single = multinomial_logit_log_probs(X.row(i), coef);
        for (int h = 0; h < 4; ++h) CHECK(rows(i, h) == doctest::Approx(single[h]).epsilon(1e-14));
    }
}

TEST_CASE("average class weights") {
    const ItemDesign d = make_design(2, 2);
    ParameterSet p = ParameterSet::zeros(d, make_config(2, 2), 1);
    p.phi(0, 1) = 1.0;
    Eigen::MatrixXd X(2, 1);
    X << -1.0, 1.0;
    const ClassWeights avg = average_class_weights(X, p);
    CHECK(avg.lambda.sum() == doctest::Approx(1.0));
    CHECK(avg.lambda[1] == doctest::Approx(0.5 * (1.0 / (1.0 + std::exp(1.0)) + 1.0 / (1.0 + std::exp(-1.0)))));
    CHECK(avg.pi[0] == doctest::Approx(0.5));
}
