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

#include "lcirt/estimation.hpp"

#include "lcirt/measurement.hpp"
#include "lcirt/random.hpp"
#include "lcirt/structural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lcirt {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kMinLogIncrement = -20.0;
constexpr double kMaxLogIncrement = 6.0;
constexpr double kLocationBound = 60.0;
constexpr double kSupportBound = 50.0;

std::vector<std::size_t> y_offsets(const ItemDesign& design, int kU) {
    std::vector<std::size_t> off(static_cast<std::size_t>(design.m()));
    std::size_t acc = 0;
    for (int j = 0; j < design.m(); ++j) {
        off[j] = acc;
        acc += static_cast<std::size_t>(kU) * design.categories[j];
    }
    return off;
}

std::size_t q_index(int j, int hU, int hV, int kU, int kV) {
    return (static_cast<std::size_t>(j) * kU + hU) * kV + hV;
}

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Category probabilities and logistic densities D_k = P_k (1 - P_k) of a
// graded-response item at one ability; D_1 = D_{L+1} = 0.
struct GrmPieces {
    std::vector<double> p; // p[y-1]
    std::vector<double> D; // D[k], k = 0..L+1
};

void grm_pieces(double alpha, const Vec& beta, double a, GrmPieces& g) {
    const int L = static_cast<int>(beta.size()) + 1;
    g.p.resize(static_cast<std::size_t>(L));
    g.D.assign(static_cast<std::size_t>(L + 2), 0.0);
    for (int k = 2; k <= L; ++k) {
        const double P = logistic(alpha * a - beta[k - 2]);
        g.D[k] = P * (1.0 - P);
    }
    for (int y = 1; y <= L; ++y) {
        g.p[y - 1] = std::exp(grm_log_category(alpha, as_span(beta), a, y));
    }
}

// Row-wise log class probabilities for a design matrix with explicit constant.
Mat log_class_probs(const Mat& Xt, const Mat& coef) {
    const auto n = Xt.rows();
    const auto k = coef.rows() + 1;
    Mat eta = Mat::Zero(n, k);
    if (k > 1) {
        eta.rightCols(k - 1).noalias() = Xt * coef.transpose();
    }
    const Vec top = eta.rowwise().maxCoeff();
    eta.colwise() -= top;
    const Vec lse = eta.array().exp().rowwise().sum().log().matrix();
    eta.colwise() -= lse;
    return eta;
}

Mat with_constant(const Mat& X) {
    Mat Xt(X.rows(), X.cols() + 1);
    Xt.col(0).setOnes();
    Xt.rightCols(X.cols()) = X;
    return Xt;
}

Mat marginal_u_matrix(const PosteriorWeights& w) {
    Mat W = Mat::Zero(w.n, w.kU);
    for (int i = 0; i < w.n; ++i)
        for (int hU = 0; hU < w.kU; ++hU)
            for (int hV = 0; hV < w.kV; ++hV)
                W(i, hU) += w(i, hU, hV);
    return W;
}

Mat marginal_v_matrix(const PosteriorWeights& w) {
    Mat W = Mat::Zero(w.n, w.kV);
    for (int i = 0; i < w.n; ++i)
        for (int hU = 0; hU < w.kU; ++hU)
            for (int hV = 0; hV < w.kV; ++hV)
                W(i, hV) += w(i, hU, hV);
    return W;
}

// ---- structural blocks ---------------------------------------------------

double logit_value(const Mat& Xt, const Mat& W, const Mat& coef) {
    return (W.array() * log_class_probs(Xt, coef).array()).sum();
}

Mat logit_gradient(const Mat& Xt, const Mat& W, const Mat& coef) {
    const Mat P = log_class_probs(Xt, coef).array().exp();
    const Vec total = W.rowwise().sum();
    const Mat resid = W - (P.array().colwise() * total.array()).matrix();
    return resid.rightCols(coef.rows()).transpose() * Xt;
}

// Gradient and negative Hessian over coef flattened row-major (class-major).
void logit_derivatives(const Mat& Xt, const Mat& W, const Mat& coef, Mat& grad, Mat& info) {
    const Mat P = log_class_probs(Xt, coef).array().exp();
    const Vec total = W.rowwise().sum();
    const Mat resid = W - (P.array().colwise() * total.array()).matrix();
    grad = resid.rightCols(coef.rows()).transpose() * Xt;
    const auto km1 = coef.rows();
    const auto p = Xt.cols();
    info = Mat::Zero(km1 * p, km1 * p);
    for (Eigen::Index a = 0; a < km1; ++a) {
        for (Eigen::Index b = a; b < km1; ++b) {
            Vec c = P.col(a + 1).cwiseProduct(total);
            if (a == b) {
                c = c.cwiseProduct((1.0 - P.col(a + 1).array()).matrix());
            } else {
                c = -c.cwiseProduct(P.col(b + 1));
            }
            const Mat block = Xt.transpose() * c.asDiagonal() * Xt;
            info.block(a * p, b * p, p, p) = block;
            if (a != b) {
                info.block(b * p, a * p, p, p) = block.transpose();
            }
        }
    }
}

Vec flatten_rows(const Mat& m) {
    Vec v(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        v.segment(r * m.cols(), m.cols()) = m.row(r).transpose();
    return v;
}

Mat unflatten_rows(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        m.row(r) = v.segment(r * cols, cols).transpose();
    return m;
}

// ---- item blocks -----------------------------------------------------------

double item_y_value(const ItemDesign& design, const ParameterSet& p, const kernels::SufficientStats& st,
                    const std::vector<std::size_t>& off, int j, double alpha, const Vec& beta) {
    const int L = design.categories[j];
    const int kU = p.kU();
    double sum = 0.0;
    for (int hU = 0; hU < kU; ++hU) {
        const double a = item_ability(design, j, p.u.col(hU));
        for (int y = 1; y <= L; ++y) {
            const double n = st.y_counts[off[j] + static_cast<std::size_t>(hU) * L + y - 1];
            if (n != 0.0) {
                sum += n * grm_log_category(alpha, as_span(beta), a, y);
            }
        }
    }
    return sum;
}

// Natural gradient and expected information over (alpha, beta_2..beta_L).
void item_y_derivatives(const ItemDesign& design, const ParameterSet& p, const kernels::SufficientStats& st,
                        const std::vector<std::size_t>& off, int j, double alpha, const Vec& beta, Vec& grad,
                        Mat* info) {
    const int L = design.categories[j];
    GrmPieces g;
    Vec gy(L);
    for (int hU = 0; hU < p.kU(); ++hU) {
        const double a = item_ability(design, j, p.u.col(hU));
        grm_pieces(alpha, beta, a, g);
        double total = 0.0;
        for (int y = 1; y <= L; ++y) {
            total += st.y_counts[off[j] + static_cast<std::size_t>(hU) * L + y - 1];
        }
        if (total == 0.0) {
            continue;
        }
        for (int y = 1; y <= L; ++y) {
            const double n = st.y_counts[off[j] + static_cast<std::size_t>(hU) * L + y - 1];
            const double py = std::max(g.p[y - 1], 1e-300);
            gy.setZero();
            gy[0] = a * (g.D[y] - g.D[y + 1]);
            if (y >= 2) gy[y - 1] -= g.D[y];
            if (y + 1 <= L) gy[y] += g.D[y + 1];
            if (n != 0.0) {
                grad += (n / py) * gy;
            }
            if (info != nullptr) {
                info->noalias() += (total / py) * gy * gy.transpose();
            }
        }
    }
}

double item_r_value(const ItemDesign& design, const ParameterSet& p, const kernels::SufficientStats& st, int j,
                    double gu, double gv, double delta) {
    const int kU = p.kU();
    const int kV = p.kV();
    double sum = 0.0;
    for (int hU = 0; hU < kU; ++hU) {
        const double a = item_ability(design, j, p.u.col(hU));
        for (int hV = 0; hV < kV; ++hV) {
            const double b = item_tendency(design, j, p.v.col(hV));
            const double eta = gu * a + gv * b - delta;
            const auto k = q_index(j, hU, hV, kU, kV);
            if (st.answered[k] != 0.0) sum += st.answered[k] * log_logistic(eta);
            if (st.skipped[k] != 0.0) sum += st.skipped[k] * log_logistic(-eta);
        }
    }
    return sum;
}

// Gradient and negative Hessian over (gamma_u, gamma_v, delta).
void item_r_derivatives(const ItemDesign& design, const ParameterSet& p, const kernels::SufficientStats& st, int j,
                        const Eigen::Vector3d& x, Eigen::Vector3d& grad, Eigen::Matrix3d& info) {
    const int kU = p.kU();
    const int kV = p.kV();
    for (int hU = 0; hU < kU; ++hU) {
        const double a = item_ability(design, j, p.u.col(hU));
        for (int hV = 0; hV < kV; ++hV) {
            const double b = item_tendency(design, j, p.v.col(hV));
            const Eigen::Vector3d z(a, b, -1.0);
            const auto k = q_index(j, hU, hV, kU, kV);
            const double A = st.answered[k];
            const double N = A + st.skipped[k];
            if (N == 0.0) continue;
            const double q = logistic(x.dot(z));
            grad += (A - N * q) * z;
            info.noalias() += N * q * (1.0 - q) * z * z.transpose();
        }
    }
}

// ---- generic ascent --------------------------------------------------------

template <class Objective, class Project>
bool backtrack(Vec& x, double& fx, const Vec& dir, Objective&& f, Project&& project) {
    double t = 1.0;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
        const Vec cand = project(Vec(x + t * dir));
        const double fc = f(cand);
        if (std::isfinite(fc) && fc >= fx) {
            x = cand;
            fx = fc;
            return true;
        }
    }
    return false;
}

// Scoring iterations with step halving; `eval` fills the gradient and a
// positive semidefinite curvature matrix at x.
template <class Objective, class Eval, class Project>
void ascend(Vec& x, int iterations, Objective&& f, Eval&& eval, Project&& project, MStepReport& rep) {
    if (x.size() == 0) {
        return;
    }
    double fx = f(x);
    for (int it = 0; it < iterations; ++it) {
        Vec g = Vec::Zero(x.size());
        Mat info = Mat::Zero(x.size(), x.size());
        eval(x, g, info);
        if (!g.allFinite() || g.cwiseAbs().maxCoeff() < 1e-12) {
            break;
        }
        const double scale = std::max(1.0, info.diagonal().cwiseAbs().maxCoeff());
        info.diagonal().array() += 1e-10 * scale;
        Vec dir = info.ldlt().solve(g);
        const double before = fx;
        bool moved = false;
        if (dir.allFinite() && dir.dot(g) > 0.0) {
            moved = backtrack(x, fx, dir, f, project);
        }
        if (!moved) {
            ++rep.gradient_fallbacks;
            moved = backtrack(x, fx, Vec(g / scale), f, project);
        }
        if (!moved) {
            ++rep.stalled_blocks;
            break;
        }
        if (fx - before <= 1e-13 * (1.0 + std::abs(before))) {
            break;
        }
    }
}

// ---- M-step blocks ---------------------------------------------------------

void update_logit(const Mat& Xt, const Mat& W, Mat& coef, int iterations, MStepReport& rep) {
    if (coef.rows() == 0) {
        return;
    }
    const auto rows = coef.rows();
    const auto cols = coef.cols();
    Vec x = flatten_rows(coef);
    ascend(
        x, iterations, [&](const Vec& c) { return logit_value(Xt, W, unflatten_rows(c, rows, cols)); },
        [&](const Vec& c, Vec& g, Mat& info) {
            Mat gm;
            logit_derivatives(Xt, W, unflatten_rows(c, rows, cols), gm, info);
            g = flatten_rows(gm);
        },
        [](Vec c) { return c; }, rep);
    coef = unflatten_rows(x, rows, cols);
}

void update_item_y(ParameterSet& p, const ParameterLayout& layout, int g, const kernels::SufficientStats& st,
                   const std::vector<std::size_t>& off, const MStepOptions& opt, MStepReport& rep) {
    const auto& design = layout.design();
    const auto& items = layout.item_groups()[g];
    const int j0 = items.front();
    const int L = design.categories[j0];

    // theta = (alpha, beta_2, log increments); mask selects free entries
    Vec theta(L);
    theta[0] = p.alpha[j0];
    theta.tail(L - 1) = thresholds_to_increments(p.beta[j0]);
    std::vector<int> free;
    if (!layout.alpha_fixed(g)) free.push_back(0);
    if (!layout.beta2_fixed(g)) free.push_back(1);
    for (int k = 2; k < L; ++k) free.push_back(k);

    auto expand = [&](const Vec& x) {
        Vec t = theta;
        for (std::size_t k = 0; k < free.size(); ++k) t[free[k]] = x[static_cast<Eigen::Index>(k)];
        return t;
    };
    auto value = [&](const Vec& x) {
        const Vec t = expand(x);
        const Vec beta = increments_to_thresholds(t.tail(L - 1));
        double sum = 0.0;
        for (int j : items) sum += item_y_value(design, p, st, off, j, t[0], beta);
        return sum;
    };
    auto eval = [&](const Vec& x, Vec& g_out, Mat& info_out) {
        const Vec t = expand(x);
        const Vec beta = increments_to_thresholds(t.tail(L - 1));
        Vec grad = Vec::Zero(L);
        Mat info = Mat::Zero(L, L);
        for (int j : items) item_y_derivatives(design, p, st, off, j, t[0], beta, grad, &info);
        // d(alpha, beta) / d theta
        Mat J = Mat::Zero(L, L);
        J(0, 0) = 1.0;
        for (int k = 1; k < L; ++k) {
            J(k, 1) = 1.0;
            for (int l = 2; l <= k; ++l) J(k, l) = std::exp(t[l]);
        }
        const Vec gt = J.transpose() * grad;
        const Mat it = J.transpose() * info * J;
        for (std::size_t a = 0; a < free.size(); ++a) {
            g_out[static_cast<Eigen::Index>(a)] = gt[free[a]];
            for (std::size_t b = 0; b < free.size(); ++b)
                info_out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = it(free[a], free[b]);
        }
    };
    auto project = [&](Vec x) {
        for (std::size_t k = 0; k < free.size(); ++k) {
            double& v = x[static_cast<Eigen::Index>(k)];
            if (free[k] == 0) v = std::clamp(v, -opt.discrimination_cap, opt.discrimination_cap);
            else if (free[k] == 1) v = std::clamp(v, -kLocationBound, kLocationBound);
            else v = std::clamp(v, kMinLogIncrement, kMaxLogIncrement);
        }
        return x;
    };

    Vec x(static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) x[static_cast<Eigen::Index>(k)] = theta[free[k]];
    x = project(x);
    ascend(x, opt.item_iterations, value, eval, project, rep);
    const Vec t = expand(x);
    const Vec beta = increments_to_thresholds(t.tail(L - 1));
    for (int j : items) {
        p.alpha[j] = t[0];
        p.beta[j] = beta;
    }
}

void update_item_r(ParameterSet& p, const ParameterLayout& layout, int g, const kernels::SufficientStats& st,
                   const MStepOptions& opt, MStepReport& rep) {
    const auto& design = layout.design();
    const auto& items = layout.item_groups()[g];
    const int j0 = items.front();
    const Eigen::Vector3d theta(p.gamma_u[j0], p.gamma_v[j0], p.delta[j0]);
    std::vector<int> free;
    if (!layout.restrictions().ignorable) free.push_back(0);
    if (!layout.gamma_v_fixed(g)) free.push_back(1);
    if (!layout.delta_fixed(g)) free.push_back(2);

    auto expand = [&](const Vec& x) {
        Eigen::Vector3d t = theta;
        for (std::size_t k = 0; k < free.size(); ++k) t[free[k]] = x[static_cast<Eigen::Index>(k)];
        return t;
    };
    auto value = [&](const Vec& x) {
        const Eigen::Vector3d t = expand(x);
        double sum = 0.0;
        for (int j : items) sum += item_r_value(design, p, st, j, t[0], t[1], t[2]);
        return sum;
    };
    auto eval = [&](const Vec& x, Vec& g_out, Mat& info_out) {
        const Eigen::Vector3d t = expand(x);
        Eigen::Vector3d grad = Eigen::Vector3d::Zero();
        Eigen::Matrix3d info = Eigen::Matrix3d::Zero();
        for (int j : items) item_r_derivatives(design, p, st, j, t, grad, info);
        for (std::size_t a = 0; a < free.size(); ++a) {
            g_out[static_cast<Eigen::Index>(a)] = grad[free[a]];
            for (std::size_t b = 0; b < free.size(); ++b)
                info_out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = info(free[a], free[b]);
        }
    };
    auto project = [&](Vec x) {
        for (std::size_t k = 0; k < free.size(); ++k) {
            double& v = x[static_cast<Eigen::Index>(k)];
            v = free[k] == 2 ? std::clamp(v, -kLocationBound, kLocationBound)
                             : std::clamp(v, -opt.discrimination_cap, opt.discrimination_cap);
        }
        return x;
    };
    Vec x(static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) x[static_cast<Eigen::Index>(k)] = theta[free[k]];
    x = project(x);
    ascend(x, opt.item_iterations, value, eval, project, rep);
    const Eigen::Vector3d t = expand(x);
    for (int j : items) {
        p.gamma_u[j] = t[0];
        p.gamma_v[j] = t[1];
        p.delta[j] = t[2];
    }
}

// Support points enter the item terms only; u is shared by both item blocks.
struct SupportTerms {
    double value = 0.0;
    Vec grad;
    Mat info;
};

SupportTerms support_terms(const ItemDesign& design, const ParameterSet& p, const kernels::SufficientStats& st,
                           const std::vector<std::size_t>& off, bool derivatives) {
    const int kU = p.kU();
    const int kV = p.kV();
    const int S = static_cast<int>(p.u.rows());
    const int T = static_cast<int>(p.v.rows());
    const int dim = S * kU + T * kV;
    SupportTerms out;
    if (derivatives) {
        out.grad = Vec::Zero(dim);
        out.info = Mat::Zero(dim, dim);
    }
    GrmPieces g;
    for (int j = 0; j < design.m(); ++j) {
        const int L = design.categories[j];
        const int s = design.u_dim(j);
        const int t = T > 0 ? design.v_dim(j) : -1;
        for (int hU = 0; hU < kU; ++hU) {
            const double a = p.u(s, hU);
            const int iu = hU * S + s;
            double total = 0.0;
            for (int y = 1; y <= L; ++y) {
                const double n = st.y_counts[off[j] + static_cast<std::size_t>(hU) * L + y - 1];
                total += n;
                if (n != 0.0) out.value += n * grm_log_category(p.alpha[j], as_span(p.beta[j]), a, y);
            }
            if (derivatives && total != 0.0) {
                grm_pieces(p.alpha[j], p.beta[j], a, g);
                for (int y = 1; y <= L; ++y) {
                    const double n = st.y_counts[off[j] + static_cast<std::size_t>(hU) * L + y - 1];
                    const double dp = p.alpha[j] * (g.D[y] - g.D[y + 1]);
                    const double py = std::max(g.p[y - 1], 1e-300);
                    out.grad[iu] += n * dp / py;
                    out.info(iu, iu) += total * dp * dp / py;
                }
            }
            for (int hV = 0; hV < kV; ++hV) {
                const double b = t >= 0 ? p.v(t, hV) : 0.0;
                const double eta = p.gamma_u[j] * a + p.gamma_v[j] * b - p.delta[j];
                const auto k = q_index(j, hU, hV, kU, kV);
                const double A = st.answered[k];
                const double N = A + st.skipped[k];
                if (N == 0.0) continue;
                if (A != 0.0) out.value += A * log_logistic(eta);
                if (st.skipped[k] != 0.0) out.value += st.skipped[k] * log_logistic(-eta);
                if (!derivatives) continue;
                const double q = logistic(eta);
                const double e = A - N * q;
                const double c = N * q * (1.0 - q);
                out.grad[iu] += e * p.gamma_u[j];
                out.info(iu, iu) += c * p.gamma_u[j] * p.gamma_u[j];
                if (t >= 0) {
                    const int iv = S * kU + hV * T + t;
                    out.grad[iv] += e * p.gamma_v[j];
                    out.info(iv, iv) += c * p.gamma_v[j] * p.gamma_v[j];
                    out.info(iu, iv) += c * p.gamma_u[j] * p.gamma_v[j];
                    out.info(iv, iu) += c * p.gamma_u[j] * p.gamma_v[j];
                }
            }
        }
    }
    return out;
}

void set_support(ParameterSet& p, const Vec& x) {
    const auto S = p.u.rows();
    const auto kU = p.u.cols();
    for (Eigen::Index h = 0; h < kU; ++h) p.u.col(h) = x.segment(h * S, S);
    const auto T = p.v.rows();
    for (Eigen::Index h = 0; h < p.v.cols(); ++h) p.v.col(h) = x.segment(S * kU + h * T, T);
}

void update_support(ParameterSet& p, const ItemDesign& design, const kernels::SufficientStats& st,
                    const std::vector<std::size_t>& off, const MStepOptions& opt, MStepReport& rep) {
    const auto S = p.u.rows();
    const auto kU = p.u.cols();
    const auto T = p.v.rows();
    Vec x(S * kU + T * p.v.cols());
    for (Eigen::Index h = 0; h < kU; ++h) x.segment(h * S, S) = p.u.col(h);
    for (Eigen::Index h = 0; h < p.v.cols(); ++h) x.segment(S * kU + h * T, T) = p.v.col(h);
    ParameterSet work = p;
    ascend(
        x, opt.support_iterations,
        [&](const Vec& c) {
            set_support(work, c);
            return support_terms(design, work, st, off, false).value;
        },
        [&](const Vec& c, Vec& g, Mat& info) {
            set_support(work, c);
            auto terms = support_terms(design, work, st, off, true);
            g = std::move(terms.grad);
            info = std::move(terms.info);
        },
        [](Vec c) { return Vec(c.cwiseMax(-kSupportBound).cwiseMin(kSupportBound)); }, rep);
    set_support(p, x);
}

} // namespace

double PosteriorWeights::marginal_u(int i, int hU) const {
    double s = 0.0;
    for (int hV = 0; hV < kV; ++hV) s += (*this)(i, hU, hV);
    return s;
}

double PosteriorWeights::marginal_v(int i, int hV) const {
    double s = 0.0;
    for (int hU = 0; hU < kU; ++hU) s += (*this)(i, hU, hV);
    return s;
}

double marginal_loglik(const ItemDesign& design, const ParameterSet& params, const Dataset& data) {
    return kernels::e_step_parallel(design, params, data, kernels::EStepOutputs::loglik).loglik;
}

PosteriorWeights e_step(const ItemDesign& design, const ParameterSet& params, const Dataset& data) {
    auto res = kernels::e_step_parallel(design, params, data, kernels::EStepOutputs::posterior);
    return {data.n, params.kU(), params.kV(), std::move(res.weights)};
}

Eigen::VectorXd thresholds_to_increments(const Eigen::VectorXd& beta) {
    Vec out(beta.size());
    if (beta.size() == 0) return out;
    out[0] = beta[0];
    for (Eigen::Index k = 1; k < beta.size(); ++k) {
        const double gap = beta[k] - beta[k - 1];
        out[k] = gap > 0.0 ? std::max(std::log(gap), kMinLogIncrement) : kMinLogIncrement;
    }
    return out;
}

Eigen::VectorXd increments_to_thresholds(const Eigen::VectorXd& increments) {
    Vec out(increments.size());
    if (increments.size() == 0) return out;
    out[0] = increments[0];
    for (Eigen::Index k = 1; k < increments.size(); ++k) out[k] = out[k - 1] + std::exp(increments[k]);
    return out;
}

CompleteDataObjective expected_complete_loglik(const PosteriorWeights& weights, const kernels::SufficientStats& stats,
                                               const ParameterSet& params, const ItemDesign& design,
                                               const Dataset& data) {
    CompleteDataObjective q;
    const Mat Xt = with_constant(data.X);
    q.structural_u = logit_value(Xt, marginal_u_matrix(weights), params.phi);
    q.structural_v = logit_value(Xt, marginal_v_matrix(weights), params.psi);
    const auto off = y_offsets(design, params.kU());
    for (int j = 0; j < design.m(); ++j) {
        q.items_y += item_y_value(design, params, stats, off, j, params.alpha[j], params.beta[j]);
        q.items_r += item_r_value(design, params, stats, j, params.gamma_u[j], params.gamma_v[j], params.delta[j]);
    }
    return q;
}

ParameterSet complete_data_gradient(const PosteriorWeights& weights, const kernels::SufficientStats& stats,
                                    const ParameterSet& params, const ItemDesign& design, const Dataset& data) {
    ParameterSet g = params;
    const Mat Xt = with_constant(data.X);
    g.phi = params.phi.rows() > 0 ? logit_gradient(Xt, marginal_u_matrix(weights), params.phi) : params.phi;
    g.psi = params.psi.rows() > 0 ? logit_gradient(Xt, marginal_v_matrix(weights), params.psi) : params.psi;

    const auto off = y_offsets(design, params.kU());
    for (int j = 0; j < design.m(); ++j) {
        const int L = design.categories[j];
        Vec grad = Vec::Zero(L);
        item_y_derivatives(design, params, stats, off, j, params.alpha[j], params.beta[j], grad, nullptr);
        g.alpha[j] = grad[0];
        g.beta[j] = grad.tail(L - 1);

        Eigen::Vector3d gr = Eigen::Vector3d::Zero();
        Eigen::Matrix3d unused = Eigen::Matrix3d::Zero();
        item_r_derivatives(design, params, stats, j,
                           Eigen::Vector3d(params.gamma_u[j], params.gamma_v[j], params.delta[j]), gr, unused);
        g.gamma_u[j] = gr[0];
        g.gamma_v[j] = params.v.rows() > 0 ? gr[1] : 0.0;
        g.delta[j] = gr[2];
    }
    const auto terms = support_terms(design, params, stats, off, true);
    set_support(g, terms.grad);
    return g;
}

ParameterSet score(const ItemDesign& design, const ParameterSet& params, const Dataset& data) {
    auto res = kernels::e_step_parallel(design, params, data, kernels::EStepOutputs::posterior);
    const PosteriorWeights w{data.n, params.kU(), params.kV(), std::move(res.weights)};
    return complete_data_gradient(w, res.stats, params, design, data);
}

ParameterSet m_step(const PosteriorWeights& weights, const ParameterSet& params, const ParameterLayout& layout,
                    const Dataset& data, const MStepOptions& options, MStepReport* report) {
    const auto stats = kernels::accumulate_stats(layout.design(), data, weights.kU, weights.kV, weights.w);
    return m_step(weights, stats, params, layout, data, options, report);
}

ParameterSet m_step(const PosteriorWeights& weights, const kernels::SufficientStats& stats, const ParameterSet& params,
                    const ParameterLayout& layout, const Dataset& data, const MStepOptions& options,
                    MStepReport* report) {
    MStepReport rep;
    ParameterSet p = params;
    const auto& design = layout.design();
    const Mat Xt = with_constant(data.X);
    if (p.phi.rows() > 0) update_logit(Xt, marginal_u_matrix(weights), p.phi, options.structural_iterations, rep);
    if (p.psi.rows() > 0) update_logit(Xt, marginal_v_matrix(weights), p.psi, options.structural_iterations, rep);

    const auto off = y_offsets(design, p.kU());
    const int groups = static_cast<int>(layout.item_groups().size());
    for (int g = 0; g < groups; ++g) {
        update_item_y(p, layout, g, stats, off, options, rep);
        update_item_r(p, layout, g, stats, options, rep);
    }
    update_support(p, design, stats, off, options, rep);

    for (int j = 0; j < design.m(); ++j) {
        const double cap = options.discrimination_cap;
        if (std::abs(p.alpha[j]) >= cap || std::abs(p.gamma_u[j]) >= cap || std::abs(p.gamma_v[j]) >= cap) {
            ++rep.caps_hit;
        }
    }
    if (report != nullptr) *report = rep;
    return p;
}

InitStrategy parse_init_strategy(const std::string& name) {
    if (name == "deterministic") return InitStrategy::deterministic;
    if (name == "random") return InitStrategy::random;
    if (name == "mixed") return InitStrategy::mixed;
    throw InputError("unknown init strategy '" + name + "' (expected deterministic, random or mixed)");
}

std::string to_string(InitStrategy strategy) {
    switch (strategy) {
    case InitStrategy::deterministic: return "deterministic";
    case InitStrategy::random: return "random";
    case InitStrategy::mixed: return "mixed";
    }
    return "?";
}

ParameterSet init_params(const ItemDesign& design, const LatentConfig& config, const Dataset& data,
                         InitStrategy strategy, std::uint64_t seed, const Restrictions& restrictions) {
    if (strategy == InitStrategy::mixed) {
        throw InputError("init strategy 'mixed' selects per restart; a single start needs deterministic or random");
    }
    const ParameterLayout layout(design, config, data.C(), restrictions);
    ParameterSet p = ParameterSet::zeros(design, config, data.C());
    auto spaced = [](int k, int h) { return k == 1 ? 0.0 : -2.0 + 4.0 * h / (k - 1); };
    for (int h = 0; h < config.kU; ++h) p.u.col(h).setConstant(spaced(config.kU, h));
    for (int h = 0; h < config.kV; ++h) p.v.col(h).setConstant(spaced(config.kV, h));
    p.alpha.setOnes();
    p.gamma_u.setConstant(restrictions.ignorable ? 0.0 : 1.0);
    p.gamma_v.setConstant(config.v_side() ? 1.0 : 0.0);

    auto neg_logit = [](double prob) {
        const double c = std::clamp(prob, 0.02, 0.98);
        return -std::log(c / (1.0 - c));
    };
    for (int j = 0; j < design.m(); ++j) {
        const int L = design.categories[j];
        std::vector<double> counts(static_cast<std::size_t>(L + 1), 0.0);
        double answered = 0.0;
        double due = 0.0;
        for (int i = 0; i < data.n; ++i) {
            const Response r = data.r(i, j);
            if (r == Response::structural_missing) continue;
            due += 1.0;
            if (r == Response::answered) {
                answered += 1.0;
                counts[data.y(i, j)] += 1.0;
            }
        }
        double at_least = answered;
        for (int k = 2; k <= L; ++k) {
            at_least -= counts[k - 1];
            const double b = answered > 0 ? neg_logit(at_least / answered) : -1.0 + 2.0 * (k - 2) / std::max(1, L - 2);
            p.beta[j][k - 2] = k == 2 ? b : std::max(b, p.beta[j][k - 3] + 0.05);
        }
        p.delta[j] = due > 0 ? neg_logit(answered / due) : 0.0;
    }

    if (strategy == InitStrategy::random) {
        Rng rng(substream_seed(seed, 0));
        for (Eigen::Index k = 0; k < p.u.size(); ++k) p.u.data()[k] += rng.uniform(-1.0, 1.0);
        for (Eigen::Index k = 0; k < p.v.size(); ++k) p.v.data()[k] += rng.uniform(-1.0, 1.0);
        for (Eigen::Index k = 0; k < p.phi.size(); ++k) p.phi.data()[k] += rng.normal(0.0, 0.5);
        for (Eigen::Index k = 0; k < p.psi.size(); ++k) p.psi.data()[k] += rng.normal(0.0, 0.5);
        for (int j = 0; j < design.m(); ++j) {
            p.alpha[j] += rng.normal(0.0, 0.5);
            p.beta[j].array() += rng.normal(0.0, 0.5);
            p.gamma_u[j] += rng.normal(0.0, 0.5);
            p.gamma_v[j] += rng.normal(0.0, 0.5);
            p.delta[j] += rng.normal(0.0, 0.5);
        }
    }
    apply_constraints(p, layout);
    canonicalize(p);
    return p;
}

FitResult run_em(const ParameterSet& start, const ParameterLayout& layout, const Dataset& data,
                 const FitOptions& options) {
    const auto& design = layout.design();
    ParameterSet p = start;
    apply_constraints(p, layout);

    FitResult out;
    auto es = kernels::e_step_parallel(design, p, data, kernels::EStepOutputs::posterior);
    out.trace.push_back(es.loglik);
    for (int it = 1; it <= options.max_iter; ++it) {
        const PosteriorWeights w{data.n, p.kU(), p.kV(), std::move(es.weights)};
        MStepReport rep;
        p = m_step(w, es.stats, p, layout, data, options.m_step, &rep);
        es = kernels::e_step_parallel(design, p, data, kernels::EStepOutputs::posterior);
        out.trace.push_back(es.loglik);
        out.iterations = it;
        out.caps_hit = rep.caps_hit;
        if (std::abs(out.trace[out.trace.size() - 1] - out.trace[out.trace.size() - 2]) < options.tol) {
            out.converged = true;
            break;
        }
    }
    canonicalize(p);
    out.params = std::move(p);
    out.loglik = out.trace.back();
    out.npar = static_cast<int>(layout.size());
    out.n = data.n;
    out.seed = options.seed;
    out.config = layout.config();
    out.restrictions = layout.restrictions();
    return out;
}

FitResult fit(const ItemDesign& design, const LatentConfig& config, const Dataset& data, const FitOptions& options) {
    if (options.max_iter < 1 || !(options.tol > 0.0) || options.n_restarts < 0 ||
        (options.n_restarts == 0 && options.extra_starts.empty())) {
        throw InputError("invalid fit options: need max_iter >= 1, tol > 0 and at least one start");
    }
    const auto report = validate_design(design, config, data);
    if (!report.ok()) {
        throw InputError("invalid model input: " + report.to_string());
    }
    const ParameterLayout layout(design, config, data.C(), options.restrictions);

    std::vector<ParameterSet> starts;
    for (int r = 0; r < options.n_restarts; ++r) {
        InitStrategy s = options.init_strategy;
        if (s == InitStrategy::mixed) s = r == 0 ? InitStrategy::deterministic : InitStrategy::random;
        starts.push_back(init_params(design, config, data, s, substream_seed(options.seed, static_cast<std::uint64_t>(r)),
                                     options.restrictions));
    }
    for (const auto& extra : options.extra_starts) {
        starts.push_back(extra);
    }

    const int total = static_cast<int>(starts.size());
    std::vector<FitResult> runs(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(dynamic, 1) if (total > 1)
    for (int r = 0; r < total; ++r) {
        runs[r] = run_em(starts[r], layout, data, options);
    }

    int best = 0;
    for (int r = 1; r < total; ++r) {
        if (runs[r].loglik > runs[best].loglik) best = r;
    }
    FitResult out = std::move(runs[best]);
    out.restart = best;
    for (int r = 0; r < total; ++r) {
        out.restart_logliks.push_back(r == best ? out.loglik : runs[r].loglik);
    }
    return out;
}

} // namespace lcirt
