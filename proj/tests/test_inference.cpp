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

#include "lcirt/chisq.hpp"
#include "lcirt/inference.hpp"
#include "lcirt/simulate.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

using namespace lcirt;
using namespace lcirt::testing;

namespace {

ParameterSet table6_params(const ItemDesign& d, ClassWeights& avg) {
    ParameterSet p = ParameterSet::zeros(d, make_config(4, 2), 0);
    p.u.row(0) << -1.485, -0.129, 0.784, 1.937;
    p.v.row(0) << -1.0, 1.0;
    avg.lambda = Eigen::Vector4d(0.228, 0.395, 0.294, 0.083);
    avg.pi = Eigen::Vector2d(0.5, 0.5);
    return p;
}

Dataset bernoulli_sample(int n, double p, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d = Dataset::empty(n, 1, 0);
    for (int i = 0; i < n; ++i) d.Y[static_cast<std::size_t>(i)] = rng.bernoulli(p) ? 1 : 0;
    return d;
}

// Observed-information SE of a logit intercept through the numerical Hessian path.
double logit_intercept_se(const Dataset& d) {
    double ones = 0.0;
    for (auto y : d.Y) ones += y;
    const double n = d.n;
    Eigen::VectorXd mle(1);
    mle[0] = std::log(ones / (n - ones));
    const VectorFunction score = [&](const Eigen::VectorXd& t) {
        Eigen::VectorXd g(1);
        g[0] = ones - n / (1.0 + std::exp(-t[0]));
        return g;
    };
    const Eigen::MatrixXd info = -numerical_jacobian(score, mle);
    const Covariance cov = invert_information(info);
    const DeltaResult identity = delta_method(cov, Eigen::MatrixXd::Identity(1, 1));
    return identity.se[0];
}

} // namespace

TEST_CASE("information criterion") {
    CHECK(std::abs(bic(-6338.27, 226, 861) - 14203.86) <= 0.05);
    CHECK(std::abs(bic(-6520.37, 208, 861) - 14446.41) <= 0.05);
    CHECK(bic(0.0, 0, 1) == 0.0);
    for (int n = 3; n < 2000; n += 97) {
        for (int k = 0; k < 20; ++k) CHECK(bic(-100.0, k + 1, n) > bic(-100.0, k, n));
    }
    CHECK_THROWS((void)bic(-1.0, 2, 0));
}

TEST_CASE("likelihood-ratio statistics from printed log-likelihoods") {
    const TestReport r = lrt(-6338.268, -6533.720, 24);
    CHECK(r.statistic == doctest::Approx(390.904).epsilon(1e-9));
    CHECK(r.p_value < 1e-6);
    CHECK(r.p_value >= 0.0);

    struct Row {
        double restricted, printed;
    };
    // Accounting, Mathematics, Law, Management, MicroEcon, Statistics
    const Row rows[] = {{-6389.59, 102.64}, {-6349.62, 22.70}, {-6397.06, 117.59},
                        {-6464.91, 253.29}, {-6411.62, 146.71}, {-6358.22, 39.90}};
    for (const auto& row : rows) {
        CAPTURE(row.printed);
        CHECK(std::abs(lrt(-6338.27, row.restricted, 24).statistic - row.printed) <= 0.01 + 1e-9);
    }
    CHECK(std::abs(lrt(-6338.27, -6349.62, 24).p_value - 0.538) <= 0.005);
    CHECK(std::abs(lrt(-6338.27, -6358.22, 24).p_value - 0.022) <= 0.002);
}

TEST_CASE("chi-square tail agrees with the incomplete gamma oracle") {
    for (double df : {1.0, 2.0, 3.0, 5.0, 8.0, 24.0, 50.0, 120.0}) {
        for (double x : {0.01, 0.5, 1.0, 3.0, 7.5, 20.0, 22.7, 39.9, 60.0, 150.0, 390.904}) {
            CAPTURE(df);
            CAPTURE(x);
            const double oracle = boost::math::gamma_q(df / 2.0, x / 2.0);
            const double ours = chisq_upper_tail(x, df);
            CHECK(std::abs(ours - oracle) <= 1e-12 + 1e-10 * oracle);
            CHECK(regularized_gamma_p(df / 2.0, x / 2.0) + regularized_gamma_q(df / 2.0, x / 2.0) ==
                  doctest::Approx(1.0).epsilon(1e-13));
        }
    }
    CHECK(chisq_upper_tail(0.0, 3.0) == 1.0);
}

TEST_CASE("printed support points are already standardized") {
    const ItemDesign d = make_design(2, 5);
    ClassWeights avg;
    const ParameterSet p = table6_params(d, avg);
    const SupportMoments mo = support_moments(p, avg);
    CHECK(std::abs(mo.u_mean[0]) < 0.01);
    CHECK(std::abs(mo.u_sd[0] - 1.0) < 0.01);
    const ParameterSet s1 = standardize(p, avg, d);
    const ParameterSet s2 = standardize(s1, avg, d);
    CHECK(max_abs_diff(s1, s2, d) <= 1e-10);
    CHECK(max_abs_diff(s1, p, d) < 0.01);
}

TEST_CASE("standardization preserves likelihood and classifications") {
    Rng rng(77);
    for (int rep = 0; rep < 20; ++rep) {
        const ItemDesign d = make_design(std::vector<int>{4, 3, 5}, 1, 1);
        const LatentConfig c = make_config(3, 2);
        const ParameterSet p = random_params(d, c, 2, rng);
        const Dataset data = random_dataset(d, 80, 2, rng);
        const ParameterSet s = standardize(p, d, data);
        CHECK(std::abs(marginal_loglik(d, s, data) - marginal_loglik(d, p, data)) <= 1e-10);
        const Classification a = posterior_classify(p, d, data);
        const Classification b = posterior_classify(s, d, data);
        CHECK(a.class_u == b.class_u);
        CHECK(a.class_v == b.class_v);
        const SupportMoments mo = support_moments(s, average_class_weights(data.X, s));
        CHECK(std::abs(mo.u_mean[0]) < 1e-12);
        CHECK(std::abs(mo.u_sd[0] - 1.0) < 1e-12);
        CHECK(std::abs(mo.v_sd[0] - 1.0) < 1e-12);
        CHECK(max_abs_diff(standardize(s, d, data), s, d) <= 1e-10);
    }
}

TEST_CASE("standardizing a degenerate dimension fails") {
    const ItemDesign d = make_design(2, 3);
    ParameterSet p = ParameterSet::zeros(d, make_config(2, 2), 0);
    p.v.row(0) << -1.0, 1.0;
    const ClassWeights avg{Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5)};
    CHECK_THROWS_AS((void)standardize(p, avg, d), std::domain_error);
}

TEST_CASE("delta method on linear maps") {
    Eigen::MatrixXd info(2, 2);
    info << 4.0, 1.0, 1.0, 3.0;
    const Covariance cov = invert_information(info);
    const Eigen::MatrixXd inv = info.inverse();
    const DeltaResult id = delta_method(cov, Eigen::MatrixXd::Identity(2, 2));
    CHECK(id.se[0] == doctest::Approx(std::sqrt(inv(0, 0))).epsilon(1e-14));
    CHECK(id.se[1] == doctest::Approx(std::sqrt(inv(1, 1))).epsilon(1e-14));
    Eigen::MatrixXd twice = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    const DeltaResult two = delta_method(cov, twice);
    CHECK(two.se[0] == doctest::Approx(2.0 * id.se[0]).epsilon(1e-14));
    Eigen::MatrixXd with_fixed = Eigen::MatrixXd::Zero(3, 2);
    with_fixed.topRows(2) = Eigen::MatrixXd::Identity(2, 2);
    const DeltaResult f = delta_method(cov, with_fixed);
    CHECK(f.fixed[2]);
    CHECK(f.se[2] == 0.0);
    CHECK_FALSE(f.fixed[0]);
}

TEST_CASE("singular information flags the affected coordinates") {
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(3, 3);
    info(0, 0) = 2.0;
    info(1, 1) = 1.0;
    info(1, 2) = 1.0;
    info(2, 1) = 1.0;
    info(2, 2) = 1.0;
    const Covariance cov = invert_information(info);
    CHECK_FALSE(cov.failed[0]);
    CHECK(cov.failed[1]);
    CHECK(cov.failed[2]);
    CHECK(cov.matrix(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("logit intercept standard error matches Fisher information") {
    const Dataset big = bernoulli_sample(100000, 0.3, 3);
    const double se_big = logit_intercept_se(big);
    CHECK(std::abs(se_big - 0.00690) <= 0.05 * 0.00690);
    const Dataset small = bernoulli_sample(10000, 0.3, 4);
    const double closed = std::sqrt(1.0 / (10000 * 0.3 * 0.7));
    CHECK(std::abs(logit_intercept_se(small) - closed) <= 0.05 * closed);
}

TEST_CASE("numerical Jacobian of a smooth map") {
    const VectorFunction f = [](const Eigen::VectorXd& t) {
        Eigen::VectorXd out(2);
        out << std::sin(t[0]) * t[1], t[0] * t[0] + std::exp(t[1]);
        return out;
    };
    Eigen::VectorXd t(2);
    t << 0.3, -0.7;
    const Eigen::MatrixXd J = numerical_jacobian(f, t);
    CHECK(J(0, 0) == doctest::Approx(std::cos(0.3) * -0.7).epsilon(1e-7));
    CHECK(J(0, 1) == doctest::Approx(std::sin(0.3)).epsilon(1e-7));
    CHECK(J(1, 0) == doctest::Approx(0.6).epsilon(1e-7));
    CHECK(J(1, 1) == doctest::Approx(std::exp(-0.7)).epsilon(1e-7));
}

TEST_CASE("standard errors of a fitted model") {
    const auto df = demo_design();
    const ParameterSet truth = demo_truth(df);
    const Dataset data = generate(truth, df.design, 1500, io::covariate_spec(df), 2024);
    FitOptions opt;
    opt.n_restarts = 0;
    opt.extra_starts = {truth};
    opt.tol = 1e-10;
    const FitResult f = fit(df.design, df.config, data, opt);
    const StandardErrorReport se = standard_errors(f, df.design, data);
    CHECK(se.hessian_asymmetry < 1e-4);
    CHECK(se.free_names.size() == static_cast<std::size_t>(f.npar));
    CHECK(se.has_standardized);
    const auto& raw = se.raw;
    int fixed = 0;
    for (std::size_t k = 0; k < raw.fixed.size(); ++k) {
        if (raw.fixed[k]) {
            ++fixed;
            CHECK(raw.se[static_cast<Eigen::Index>(k)] == 0.0);
        } else {
            CHECK_FALSE(raw.failed[k]);
            CHECK(raw.se[static_cast<Eigen::Index>(k)] > 0.0);
        }
    }
    // alpha, beta_2, gamma_v and delta of the anchor
    CHECK(fixed == 4);
    // the negative Hessian is positive definite at the optimum
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-0.5 * (se.hessian + se.hessian.transpose()));
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("prediction tables") {
    Rng rng(12);
    const ItemDesign d = make_design(std::vector<int>{5, 4, 3});
    ParameterSet p = random_params(d, make_config(3, 2), 0, rng);
    p.gamma_u.setConstant(0.8);
    const std::vector<double> us{-1.0, 0.0, 1.0};
    const std::vector<double> vs{-1.0, 0.0, 1.0};
    const PredictionTables t = predict_item_probs(p, d, us, vs);
    REQUIRE(t.items.size() == 3);
    for (int j = 0; j < 3; ++j) {
        const auto& it = t.items[static_cast<std::size_t>(j)];
        for (std::size_t a = 0; a < us.size(); ++a) {
            double sum = 0.0;
            for (double x : it.category[a]) sum += x;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(it.passing[a] == doctest::Approx(1.0 - it.category[a][0]).epsilon(1e-12));
            for (std::size_t b = 0; b < vs.size(); ++b) {
                if (a > 0) CHECK(it.answer[a][b] > it.answer[a - 1][b]);
            }
        }
        CHECK(it.passing_range == doctest::Approx(it.passing.back() - it.passing.front()));
        CHECK(it.answer_range_u == doctest::Approx(it.answer[2][1] - it.answer[0][1]));
        CHECK(it.answer_range_v == doctest::Approx(it.answer[1][2] - it.answer[1][0]));
    }
}

TEST_CASE("joint pattern probability multiplies passes and failures") {
    const std::vector<double> probs{0.940, 0.643, 0.576, 0.778, 0.591, 0.942};
    const bool all[] = {true, true, true, true, true, true};
    double direct = 1.0;
    for (double x : probs) direct *= x;
    CHECK(joint_pattern_probability(probs, all) == doctest::Approx(direct).epsilon(1e-15));
    const bool mixed[] = {true, false, true, false, true, true};
    const double expect = 0.940 * (1 - 0.643) * 0.576 * (1 - 0.778) * 0.591 * 0.942;
    CHECK(joint_pattern_probability(probs, mixed) == doctest::Approx(expect).epsilon(1e-15));
    CHECK_THROWS((void)joint_pattern_probability(probs, std::span<const bool>(all, 5)));
}

TEST_CASE("classification takes the largest posterior with ties to the lower class") {
    const double clear[] = {0.9, 0.1};
    CHECK(argmax_lower(clear) == 0);
    const double tie[] = {0.5, 0.5};
    CHECK(argmax_lower(tie) == 0);
    const double late[] = {0.2, 0.4, 0.4};
    CHECK(argmax_lower(late) == 1);
}

TEST_CASE("classification recovers well-separated classes") {
    const ItemDesign d = make_design(8, 5);
    ParameterSet p = ParameterSet::zeros(d, make_config(2, 2), 0);
    p.u.row(0) << -2.0, 2.0;
    p.v.row(0) << -2.0, 2.0;
    p.alpha.setConstant(1.5);
    for (int j = 0; j < 8; ++j) p.beta[j] << -1.0, -0.3, 0.3, 1.0;
    p.gamma_u.setConstant(0.3);
    p.gamma_v.setConstant(1.5);
    p.delta.setConstant(-0.5);
    apply_constraints(p, ParameterLayout(d, make_config(2, 2), 0));
    const Simulation sim = simulate(p, d, 3000, CovariateSpec::none(), 5);
    const Classification c = posterior_classify(p, d, sim.data);
    int hit_u = 0, hit_v = 0;
    for (int i = 0; i < sim.data.n; ++i) {
        hit_u += c.class_u[static_cast<std::size_t>(i)] == sim.class_u[static_cast<std::size_t>(i)];
        hit_v += c.class_v[static_cast<std::size_t>(i)] == sim.class_v[static_cast<std::size_t>(i)];
    }
    CHECK(hit_u >= 0.9 * sim.data.n);
    MESSAGE("U accuracy " << hit_u / 3000.0 << ", V accuracy " << hit_v / 3000.0);
}

TEST_CASE("nested tests") {
    const auto df = demo_design();
    const ParameterSet truth = demo_truth(df);
    const Dataset data = generate(truth, df.design, 600, io::covariate_spec(df), 31);
    FitOptions opt;
    opt.n_restarts = 2;
    opt.tol = 1e-6;

    const NestedTest ign = test_ignorability(df.design, df.config, data, opt);
    CHECK(ign.report.df == df.design.m());
    CHECK(ign.report.statistic >= -1e-6);
    CHECK(ign.report.p_value >= 0.0);
    CHECK(ign.report.p_value <= 1.0);
    const TestReport again = lrt(ign.full, ign.restricted);
    CHECK(again.statistic == ign.report.statistic);
    CHECK(again.p_value == ign.report.p_value);

    // the statistic does not depend on the scale the fits are reported on
    const double full_std = marginal_loglik(df.design, standardize(ign.full.params, df.design, data), data);
    const double restr_std = marginal_loglik(df.design, standardize(ign.restricted.params, df.design, data), data);
    CHECK(std::abs(2.0 * (full_std - restr_std) - ign.report.statistic) < 1e-8);

    const NestedTest hom = test_group_homogeneity(df.design, df.config, data, {1, 2, 3, 4}, opt);
    CHECK(hom.report.df == 3 * (5 + 3));
    CHECK(hom.report.statistic >= -1e-6);
    CHECK(lrt(hom.full, hom.restricted).statistic == hom.report.statistic);
}

TEST_CASE("collapsing four five-category items removes 24 parameters") {
    std::vector<std::string> groups;
    for (int j = 0; j < 24; ++j) groups.push_back("course" + std::to_string(j / 4));
    const ItemDesign d = make_design(std::vector<int>(24, 5), 1, 1, groups);
    const LatentConfig c = make_config(4, 2);
    Restrictions r;
    r.tied_items = {d.group_items("course2")};
    CHECK(ParameterLayout(d, c, 7).size() == 226);
    CHECK(ParameterLayout(d, c, 7, r).size() == 202);
    Restrictions anchor_block;
    anchor_block.tied_items = {d.group_items("course0")};
    CHECK(ParameterLayout(d, c, 7, anchor_block).size() == 202);
}

TEST_CASE("selection grid") {
    const auto df = demo_design();
    const ParameterSet truth = demo_truth(df);
    const Dataset data = generate(truth, df.design, 500, io::covariate_spec(df), 8);
    FitOptions opt;
    opt.n_restarts = 2;
    opt.tol = 1e-6;
    const auto rows = select_grid(df.design, data, 1, 1, {2, 3}, {1, 2}, opt);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].kU == 2);
    CHECK(rows[0].kV == 1);
    CHECK(rows[1].kU == 2);
    CHECK(rows[1].kV == 2);
    CHECK(rows[2].kU == 3);
    int minima = 0;
    for (const auto& r : rows) {
        minima += r.bic_min;
        CHECK(r.bic == doctest::Approx(bic(r.loglik, r.npar, data.n)).epsilon(1e-14));
    }
    CHECK(minima == 1);
    CHECK(rows[0].npar == count_free_parameters(df.design.without_v_side(), LatentConfig{1, 0, 2, 1}, data.C()));
}
