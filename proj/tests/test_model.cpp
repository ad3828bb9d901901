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

#include "lcirt/estimation.hpp"
#include "lcirt/model.hpp"

using namespace lcirt;
using namespace lcirt::testing;

TEST_CASE("free-parameter counts of the 24-item selection grid") {
    const ItemDesign d = make_design(24, 5);
    struct Row {
        int kU, kV, npar;
    };
    const Row rows[] = {{2, 2, 208}, {2, 3, 217}, {3, 2, 217}, {3, 3, 226},
                        {4, 2, 226}, {4, 3, 235}, {5, 2, 235}, {5, 3, 244}};
    for (const auto& r : rows) {
        CAPTURE(r.kU);
        CAPTURE(r.kV);
        CHECK(count_free_parameters(d, make_config(r.kU, r.kV), 7) == r.npar);
    }
    const ItemDesign no_v = d.without_v_side();
    CHECK(count_free_parameters(no_v, make_config(4, 1), 7) == 194);
}

TEST_CASE("layout size equals the closed-form count") {
    Rng rng(11);
    for (int rep = 0; rep < 30; ++rep) {
        const int S = 1 + rep % 2;
        const int kV = 1 + rep % 3;
        const int T = kV > 1 ? 1 + (rep / 3) % 2 : 0;
        const int m = 2 + rep % 5 + S + T;
        std::vector<int> L;
        for (int j = 0; j < m; ++j) L.push_back(2 + static_cast<int>(rng.uniform() * 4));
        ItemDesign d = make_design(L, S, T);
        const LatentConfig c{S, T, 1 + rep % 4, kV};
        REQUIRE(validate_design(d, c).ok());
        const int C = rep % 3;
        CHECK(ParameterLayout(d, c, C).size() == static_cast<std::size_t>(count_free_parameters(d, c, C)));
    }
}

TEST_CASE("design validation") {
    SUBCASE("well-formed 24-item design passes") {
        CHECK(validate_design(make_design(24, 5), make_config(4, 2)).ok());
    }
    SUBCASE("item with an empty U row") {
        ItemDesign d = make_design(5, 5);
        d.zU.row(2).setZero();
        const auto rep = validate_design(d, make_config(2, 2));
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.to_string().find("item 3 loads on no U-dimension") != std::string::npos);
    }
    SUBCASE("dimension mismatch") {
        const auto rep = validate_design(make_design(4, 3), make_config(2, 2, 2, 1));
        CHECK_FALSE(rep.ok());
    }
    SUBCASE("anchor conflict") {
        ItemDesign d = make_design(4, 3, 2, 1);
        d.anchors_U = {1, 1};
        const auto rep = validate_design(d, make_config(2, 2, 2, 1));
        CHECK(rep.to_string().find("anchor conflict") != std::string::npos);
    }
    SUBCASE("T must vanish exactly when kV is 1") {
        CHECK_FALSE(validate_design(make_design(3, 3), LatentConfig{1, 1, 2, 1}).ok());
    }
    SUBCASE("answered item without a response names subject and item") {
        const ItemDesign d = make_design(2, 3);
        Dataset data = Dataset::empty(2, 2, 0);
        data.R = {Response::answered, Response::skipped, Response::answered, Response::answered};
        data.Y = {2, 0, 1, 0};
        const auto rep = validate_design(d, make_config(2, 2), data);
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.to_string().find("subject 2, item 2") != std::string::npos);
    }
    SUBCASE("orphan subject") {
        const ItemDesign d = make_design(2, 3);
        Dataset data = Dataset::empty(1, 2, 0);
        CHECK(validate_design(d, make_config(2, 2), data).to_string().find("orphan") != std::string::npos);
    }
}

TEST_CASE("default anchors are the first item on each dimension") {
    const ItemDesign d = make_design(6, 4, 2, 2);
    CHECK(d.anchors_U == std::vector<int>{0, 1});
    CHECK(d.anchors_V == std::vector<int>{0, 1});
}

TEST_CASE("apply_constraints is idempotent and yields valid parameters") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const ItemDesign d = make_design(5, 2 + rep % 3, 1 + rep % 2, 1);
        const LatentConfig c = make_config(2 + rep % 3, 1 + rep % 2, 1 + rep % 2, 1);
        const ItemDesign dd = c.v_side() ? d : d.without_v_side();
        Restrictions r;
        r.ignorable = rep % 4 == 0;
        if (rep % 5 == 0) r.tied_items = {{2, 4}};
        const ParameterLayout layout(dd, c, 1, r);
        ParameterSet p = random_params(dd, c, 1, rng);
        apply_constraints(p, layout);
        CHECK(validate_params(p, dd, c, r).ok());
        ParameterSet q = p;
        apply_constraints(q, layout);
        CHECK(max_abs_diff(p, q, dd) == 0.0);
    }
}

TEST_CASE("pack and unpack are inverse on free coordinates") {
    Rng rng(5);
    const ItemDesign d = make_design(4, 4);
    const LatentConfig c = make_config(3, 2);
    const ParameterLayout layout(d, c, 2);
    const ParameterSet p = random_params(d, c, 2, rng);
    const Eigen::VectorXd theta = layout.pack(p);
    CHECK(max_abs_diff(layout.unpack(theta, p), p, d) == 0.0);
    Eigen::VectorXd shifted = theta.array() + 0.25;
    CHECK((layout.pack(layout.unpack(shifted, p)) - shifted).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t k = 0; k < layout.size(); ++k) CHECK_FALSE(layout.name(k).empty());
}

TEST_CASE("canonicalize sorts classes and keeps the likelihood") {
    Rng rng(7);
    const ItemDesign d = make_design(3, 3);
    const LatentConfig c = make_config(3, 2);
    Dataset data = random_dataset(d, 40, 2, rng);
    for (int rep = 0; rep < 20; ++rep) {
        ParameterSet p = random_params(d, c, 2, rng);
        const double before = marginal_loglik(d, p, data);
        // reverse the U classes and re-express phi against the new first class
        ParameterSet q = p;
        q.u = p.u.rowwise().reverse();
        Eigen::MatrixXd full = Eigen::MatrixXd::Zero(3, 3);
        full.bottomRows(2) = p.phi;
        Eigen::MatrixXd rev = full.colwise().reverse();
        for (int h = 1; h < 3; ++h) q.phi.row(h - 1) = rev.row(h) - rev.row(0);
        CHECK(marginal_loglik(d, q, data) == doctest::Approx(before).epsilon(1e-12));
        canonicalize(q);
        CHECK(max_abs_diff(q, p, d) < 1e-12);
        CHECK(marginal_loglik(d, q, data) == doctest::Approx(before).epsilon(1e-12));
    }
}

TEST_CASE("tied blocks reject mismatched items") {
    ItemDesign d = make_design(std::vector<int>{3, 4, 3});
    Restrictions r;
    r.tied_items = {{0, 1}};
    CHECK_THROWS_AS(ParameterLayout(d, make_config(2, 2), 0, r), InputError);
}
