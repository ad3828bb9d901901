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

#include "lcirt/inference.hpp"
#include "lcirt/measurement.hpp"

#include <cmath>

using namespace lcirt;
using namespace lcirt::testing;

namespace {

double plain_logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

} // namespace

TEST_CASE("graded-response cumulative probabilities") {
    const std::vector<double> zero{0.0};
    CHECK(grm_cumulative(1.0, zero, 0.0, 2) == doctest::Approx(0.5).epsilon(1e-15));
    const std::vector<double> one{1.0};
    CHECK(grm_cumulative(2.0, one, 1.0, 2) == doctest::Approx(plain_logistic(1.0)).epsilon(1e-14));
    CHECK(grm_cumulative(2.0, one, 1.0, 2) == doctest::Approx(0.7310586).epsilon(1e-7));
    const std::vector<double> far{50.0};
    CHECK(grm_cumulative(1.0, far, 0.0, 2) <= 1e-20);
    CHECK_THROWS((void)grm_cumulative(1.0, zero, 0.0, 3));
    CHECK_THROWS((void)grm_cumulative(1.0, zero, 0.0, 1));
}

TEST_CASE("graded-response category distributions") {
    const std::vector<double> b2{0.0};
    const auto two = grm_category(1.0, b2, 0.0);
    CHECK(two.probs[0] == doctest::Approx(0.5));
    CHECK(two.probs[1] == doctest::Approx(0.5));

    const std::vector<double> b3{-1.0, 1.0};
    const auto three = grm_category(1.0, b3, 0.0);
    CHECK(three.probs[0] == doctest::Approx(1.0 - plain_logistic(1.0)).epsilon(1e-14));
    CHECK(three.probs[1] == doctest::Approx(plain_logistic(1.0) - plain_logistic(-1.0)).epsilon(1e-14));
    CHECK(three.probs[2] == doctest::Approx(plain_logistic(-1.0)).epsilon(1e-14));
    CHECK(three.probs[0] == doctest::Approx(0.26894).epsilon(1e-5));
    CHECK(three.probs[1] == doctest::Approx(0.46212).epsilon(1e-5));
    for (int y = 1; y <= 3; ++y) {
        CHECK(std::exp(grm_log_category(1.0, b3, 0.0, y)) == doctest::Approx(three.probs[y - 1]).epsilon(1e-14));
    }
}

TEST_CASE("category distributions are probability vectors over random draws") {
    Rng rng(101);
    for (int draw = 0; draw < 10000; ++draw) {
        const int L = 2 + static_cast<int>(rng.uniform() * 6);
        std::vector<double> beta;
        double b = rng.uniform(-4.0, 2.0);
        for (int k = 2; k <= L; ++k) {
            beta.push_back(b);
            b += rng.uniform(0.0, 2.0);
        }
        const double alpha = rng.uniform(-5.0, 5.0);
        const double a = rng.uniform(-4.0, 4.0);
        const auto dist = grm_category(alpha, beta, a);
        double sum = 0.0;
        for (double p : dist.probs) {
            REQUIRE(p >= 0.0);
            REQUIRE(p <= 1.0);
            sum += p;
        }
        REQUIRE(std::abs(sum - 1.0) <= 1e-12);
        for (int y = 3; y <= L; ++y) {
            REQUIRE(grm_cumulative(alpha, beta, a, y) <= grm_cumulative(alpha, beta, a, y - 1));
        }
    }
}

TEST_CASE("answering probabilities") {
    ItemDesign d = make_design(1, 2);
    ParameterSet p = ParameterSet::zeros(d, make_config(1, 2), 0);
    CHECK(indicator_prob(d, p, 0, vec1(0.3), vec1(-0.4)) == doctest::Approx(0.5));

    p.gamma_u[0] = 1.0;
    p.gamma_v[0] = 1.0;
    p.delta[0] = 1.0;
    CHECK(indicator_prob(d, p, 0, vec1(2.0), vec1(-1.0)) == doctest::Approx(0.5).epsilon(1e-15));

    p.gamma_u[0] = 0.5;
    p.gamma_v[0] = 2.0;
    p.delta[0] = 0.0;
    CHECK(indicator_prob(d, p, 0, vec1(1.0), vec1(0.5)) == doctest::Approx(plain_logistic(1.5)).epsilon(1e-14));
    CHECK(indicator_prob(d, p, 0, vec1(1.0), vec1(0.5)) == doctest::Approx(0.8175745).epsilon(1e-7));

    // tendency term drops out without a V side
    const ItemDesign no_v = d.without_v_side();
    ParameterSet q = ParameterSet::zeros(no_v, make_config(1, 1), 0);
    q.gamma_u[0] = 0.5;
    CHECK(indicator_prob(no_v, q, 0, vec1(1.0), Eigen::VectorXd(0)) == doctest::Approx(plain_logistic(0.5)));
}

TEST_CASE("answering probability is monotone in ability and location") {
    Rng rng(5);
    const ItemDesign d = make_design(1, 2);
    ParameterSet p = ParameterSet::zeros(d, make_config(1, 2), 0);
    for (int draw = 0; draw < 1000; ++draw) {
        p.gamma_u[0] = rng.uniform(0.05, 3.0);
        p.gamma_v[0] = rng.uniform(-2.0, 2.0);
        p.delta[0] = rng.uniform(-3.0, 3.0);
        const double u = rng.uniform(-3.0, 3.0);
        const double v = rng.uniform(-3.0, 3.0);
        const double q0 = indicator_prob(d, p, 0, vec1(u), vec1(v));
        CHECK(indicator_prob(d, p, 0, vec1(u + 0.1), vec1(v)) > q0);
        ParameterSet r = p;
        r.delta[0] += 0.1;
        CHECK(indicator_prob(d, r, 0, vec1(u), vec1(v)) < q0);
    }
}

TEST_CASE("logistic helpers stay finite at the extremes") {
    CHECK(logistic(800.0) == 1.0);
    CHECK(logistic(-800.0) >= 0.0);
    CHECK(log_logistic(-1000.0) >= kLogProbFloor);
    CHECK(log_logistic(0.0) == doctest::Approx(std::log(0.5)));
    CHECK(std::isfinite(log_logistic(1000.0)));
}

TEST_CASE("subject class probabilities") {
    const ItemDesign d = make_design(2, 2);
    ParameterSet p = ParameterSet::zeros(d, make_config(1, 2), 0);

    SUBCASE("all items structurally missing") {
        Dataset data = Dataset::empty(1, 2, 0);
        CHECK(subject_class_prob(d, p, data, 0, 0, 0) == 1.0);
    }
    SUBCASE("single skipped item") {
        Dataset data = Dataset::empty(1, 2, 0);
        data.R[0] = Response::skipped;
        p.delta[0] = -std::log(0.3 / 0.7); // q = 0.3
        CHECK(subject_class_prob(d, p, data, 0, 0, 0) == doctest::Approx(0.7).epsilon(1e-14));
    }
    SUBCASE("answered and skipped items multiply") {
        Dataset data = Dataset::empty(1, 2, 0);
        data.R = {Response::answered, Response::skipped};
        data.Y = {2, 0};
        p.delta[0] = -std::log(0.8 / 0.2);
        p.delta[1] = -std::log(0.3 / 0.7);
        p.beta[0][0] = std::log(3.0); // Pr(Y = 2) = 0.25 at u = 0
        CHECK(subject_class_prob(d, p, data, 0, 0, 0) == doctest::Approx(0.14).epsilon(1e-13));
    }
}

TEST_CASE("subject class probabilities lie in (0, 1] and are invariant under standardization") {
    Rng rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        const ItemDesign d = make_design(4, 3);
        const LatentConfig c = make_config(3, 2);
        const ParameterSet p = random_params(d, c, 1, rng);
        const Dataset data = random_dataset(d, 10, 1, rng, 0.1);
        const ParameterSet s = standardize(p, d, data);
        for (int i = 0; i < data.n; ++i) {
            for (int hU = 0; hU < 3; ++hU) {
                for (int hV = 0; hV < 2; ++hV) {
                    const double raw = subject_class_prob(d, p, data, i, hU, hV);
                    CHECK(raw > 0.0);
                    CHECK(raw < 1.0);
                    CHECK(std::abs(raw - subject_class_prob(d, s, data, i, hU, hV)) <= 1e-12);
                }
            }
        }
    }
}
