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

#include "lcirt/model.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace lcirt {

namespace {

std::string item_label(int j) { return "item " + std::to_string(j + 1); }

int single_one(const Eigen::MatrixXi& z, int row) {
    for (int c = 0; c < z.cols(); ++c) {
        if (z(row, c) != 0) {
            return c;
        }
    }
    return -1;
}

// Full class-by-covariate logit matrix with the reference row restored.
Eigen::MatrixXd with_reference_row(const Eigen::MatrixXd& coef, int k, int cols) {
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(k, cols);
    if (k > 1) {
        full.bottomRows(k - 1) = coef;
    }
    return full;
}

std::vector<int> class_order(const Eigen::MatrixXd& support) {
    std::vector<int> order(static_cast<std::size_t>(support.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        for (int d = 0; d < support.rows(); ++d) {
            if (support(d, a) != support(d, b)) {
                return support(d, a) < support(d, b);
            }
        }
        return false;
    });
    return order;
}

void reorder_classes(Eigen::MatrixXd& support, Eigen::MatrixXd& coef) {
    const int k = static_cast<int>(support.cols());
    if (k <= 1 || support.rows() == 0) {
        return;
    }
    const auto order = class_order(support);
    const int cols = static_cast<int>(coef.cols());
    const Eigen::MatrixXd full = with_reference_row(coef, k, cols);
    Eigen::MatrixXd new_support(support.rows(), k);
    Eigen::MatrixXd new_full(k, cols);
    for (int h = 0; h < k; ++h) {
        new_support.col(h) = support.col(order[h]);
        new_full.row(h) = full.row(order[h]);
    }
    for (int h = k - 1; h >= 0; --h) {
        new_full.row(h) -= new_full.row(0);
    }
    support = new_support;
    coef = new_full.bottomRows(k - 1);
}

} // namespace

int ItemDesign::max_categories() const {
    return categories.empty() ? 0 : *std::max_element(categories.begin(), categories.end());
}

int ItemDesign::u_dim(int j) const { return single_one(zU, j); }

int ItemDesign::v_dim(int j) const { return zV.cols() == 0 ? -1 : single_one(zV, j); }

std::vector<int> ItemDesign::group_items(const std::string& label) const {
    std::vector<int> out;
    for (int j = 0; j < static_cast<int>(groups.size()); ++j) {
        if (groups[j] == label) {
            out.push_back(j);
        }
    }
    return out;
}

ItemDesign ItemDesign::without_v_side() const {
    ItemDesign out = *this;
    out.zV = Eigen::MatrixXi::Zero(m(), 0);
    out.anchors_V.clear();
    return out;
}

void assign_default_anchors(ItemDesign& design) {
    auto fill = [&](std::vector<int>& anchors, const Eigen::MatrixXi& z) {
        anchors.resize(static_cast<std::size_t>(z.cols()), -1);
        for (int d = 0; d < z.cols(); ++d) {
            if (anchors[d] >= 0) {
                continue;
            }
            for (int j = 0; j < z.rows(); ++j) {
                if (z(j, d) != 0) {
                    anchors[d] = j;
                    break;
                }
            }
        }
    };
    fill(design.anchors_U, design.zU);
    fill(design.anchors_V, design.zV);
}

Dataset Dataset::empty(int n, int m, int C) {
    Dataset d;
    d.n = n;
    d.m = m;
    d.ids.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        d.ids[i] = std::to_string(i + 1);
    }
    d.X = Eigen::MatrixXd::Zero(n, C);
    for (int c = 0; c < C; ++c) {
        d.covariate_names.push_back("x" + std::to_string(c + 1));
    }
    d.R.assign(static_cast<std::size_t>(n) * m, Response::structural_missing);
    d.Y.assign(static_cast<std::size_t>(n) * m, 0);
    return d;
}

ParameterSet ParameterSet::zeros(const ItemDesign& design, const LatentConfig& config, int C) {
    ParameterSet p;
    const int m = design.m();
    const int T = config.v_side() ? config.T : 0;
    p.u = Eigen::MatrixXd::Zero(config.S, config.kU);
    p.v = Eigen::MatrixXd::Zero(T, config.kV);
    p.phi = Eigen::MatrixXd::Zero(config.kU - 1, C + 1);
    p.psi = Eigen::MatrixXd::Zero(config.kV - 1, C + 1);
    p.alpha = Eigen::VectorXd::Ones(m);
    p.beta.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        p.beta[j] = Eigen::VectorXd::Zero(design.categories[j] - 1);
    }
    p.gamma_u = Eigen::VectorXd::Zero(m);
    p.gamma_v = Eigen::VectorXd::Zero(m);
    p.delta = Eigen::VectorXd::Zero(m);
    return p;
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < violations.size(); ++k) {
        if (k > 0) {
            os << "; ";
        }
        os << violations[k];
    }
    return os.str();
}

ValidationReport validate_design(const ItemDesign& design, const LatentConfig& config) {
    ValidationReport rep;
    auto& out = rep.violations;
    const int m = design.m();

    if (config.S < 1) out.push_back("S must be at least 1");
    if (config.kU < 1) out.push_back("kU must be at least 1");
    if (config.kV < 1) out.push_back("kV must be at least 1");
    if (config.T < 0) out.push_back("T must be nonnegative");
    if ((config.T == 0) != (config.kV == 1)) {
        out.push_back("T must be 0 exactly when kV is 1");
    }
    if (m < 1) {
        out.push_back("design has no items");
        return rep;
    }
    if (static_cast<int>(design.names.size()) != m) out.push_back("item name count does not match item count");
    if (design.zU.rows() != m) out.push_back("zU row count does not match item count");
    if (design.zU.cols() != config.S) out.push_back("zU has " + std::to_string(design.zU.cols()) + " columns, expected S = " + std::to_string(config.S));
    const int T = config.v_side() ? config.T : 0;
    if (design.zV.cols() != T) {
        out.push_back("zV has " + std::to_string(design.zV.cols()) + " columns, expected " + std::to_string(T));
    }
    if (design.zV.cols() > 0 && design.zV.rows() != m) out.push_back("zV row count does not match item count");
    if (!design.groups.empty() && static_cast<int>(design.groups.size()) != m) {
        out.push_back("group label count does not match item count");
    }
    if (!out.empty()) {
        return rep;
    }

    bool some_item_on_u = false;
    for (int j = 0; j < m; ++j) {
        if (design.categories[j] < 2) {
            out.push_back(item_label(j) + " has fewer than 2 categories");
        }
        const int ones_u = static_cast<int>((design.zU.row(j).array() != 0).count());
        if (ones_u == 0) {
            out.push_back(item_label(j) + " loads on no U-dimension");
        } else if (ones_u > 1) {
            out.push_back(item_label(j) + " loads on more than one U-dimension");
        } else {
            some_item_on_u = true;
        }
        if (T > 0) {
            const int ones_v = static_cast<int>((design.zV.row(j).array() != 0).count());
            if (ones_v == 0) {
                out.push_back(item_label(j) + " loads on no V-dimension");
            } else if (ones_v > 1) {
                out.push_back(item_label(j) + " loads on more than one V-dimension");
            }
        }
    }
    // Y_j items measure U only, which satisfies the first identification condition.
    if (!some_item_on_u) {
        out.push_back("no item loads on a single U-dimension");
    }

    auto check_anchors = [&](const std::vector<int>& anchors, const Eigen::MatrixXi& z, int dims, char side) {
        if (static_cast<int>(anchors.size()) != dims) {
            out.push_back(std::string("expected ") + std::to_string(dims) + " " + side + "-anchors, got " + std::to_string(anchors.size()));
            return;
        }
        std::set<int> seen;
        for (int d = 0; d < dims; ++d) {
            const int j = anchors[d];
            if (j < 0 || j >= m) {
                out.push_back(std::string(1, side) + "-dimension " + std::to_string(d + 1) + " has no valid anchor item");
                continue;
            }
            if (z(j, d) == 0) {
                out.push_back(std::string("anchor conflict: ") + item_label(j) + " anchors " + side + "-dimension " + std::to_string(d + 1) + " but does not load on it");
            }
            if (!seen.insert(j).second) {
                out.push_back(std::string("anchor conflict: ") + item_label(j) + " anchors two " + side + "-dimensions");
            }
        }
    };
    check_anchors(design.anchors_U, design.zU, config.S, 'U');
    if (T > 0) {
        check_anchors(design.anchors_V, design.zV, T, 'V');
    } else if (!design.anchors_V.empty()) {
        out.push_back("V-anchors given but the V side is disabled");
    }
    return rep;
}

ValidationReport validate_design(const ItemDesign& design, const LatentConfig& config, const Dataset& data) {
    ValidationReport rep = validate_design(design, config);
    auto& out = rep.violations;
    if (data.m != design.m()) {
        out.push_back("dataset has " + std::to_string(data.m) + " items, design has " + std::to_string(design.m()));
        return rep;
    }
    if (data.X.rows() != data.n) {
        out.push_back("covariate matrix has " + std::to_string(data.X.rows()) + " rows for " + std::to_string(data.n) + " subjects");
    }
    if (data.R.size() != static_cast<std::size_t>(data.n) * data.m || data.Y.size() != data.R.size()) {
        out.push_back("response arrays do not match n x m");
        return rep;
    }
    for (int i = 0; i < data.n; ++i) {
        bool any_due = false;
        const std::string who = "subject " + (i < static_cast<int>(data.ids.size()) ? data.ids[i] : std::to_string(i + 1));
        for (int j = 0; j < data.m; ++j) {
            const int y = data.y(i, j);
            switch (data.r(i, j)) {
            case Response::structural_missing:
                if (y != 0) out.push_back(who + ", " + item_label(j) + ": response present but item not due");
                break;
            case Response::skipped:
                any_due = true;
                if (y != 0) out.push_back(who + ", " + item_label(j) + ": response present but item skipped");
                break;
            case Response::answered:
                any_due = true;
                if (y == 0) {
                    out.push_back(who + ", " + item_label(j) + ": answered but response missing");
                } else if (y < 1 || y > design.categories[j]) {
                    out.push_back(who + ", " + item_label(j) + ": response " + std::to_string(y) + " outside 1.." + std::to_string(design.categories[j]));
                }
                break;
            }
        }
        if (!any_due) {
            out.push_back("orphan subject: " + who + " has every item structurally missing");
        }
    }
    return rep;
}

ValidationReport validate_params(const ParameterSet& p, const ItemDesign& design, const LatentConfig& config,
                                 const Restrictions& restrictions) {
    ValidationReport rep;
    auto& out = rep.violations;
    const int m = design.m();
    const int T = config.v_side() ? config.T : 0;
    if (p.u.rows() != config.S || p.u.cols() != config.kU) out.push_back("u has wrong shape");
    if (p.v.rows() != T || p.v.cols() != config.kV) out.push_back("v has wrong shape");
    if (p.phi.rows() != config.kU - 1) out.push_back("phi has wrong row count");
    if (p.psi.rows() != config.kV - 1) out.push_back("psi has wrong row count");
    if (p.psi.cols() != p.phi.cols()) out.push_back("phi and psi disagree on covariate count");
    if (p.alpha.size() != m || p.gamma_u.size() != m || p.gamma_v.size() != m || p.delta.size() != m ||
        static_cast<int>(p.beta.size()) != m) {
        out.push_back("item parameter vectors have wrong length");
        return rep;
    }
    for (int j = 0; j < m; ++j) {
        if (p.beta[j].size() != design.categories[j] - 1) {
            out.push_back(item_label(j) + " has wrong threshold count");
            continue;
        }
        for (int k = 1; k < p.beta[j].size(); ++k) {
            if (p.beta[j][k] < p.beta[j][k - 1]) {
                out.push_back(item_label(j) + " thresholds are not ordered");
                break;
            }
        }
    }
    if (!out.empty()) {
        return rep;
    }
    for (int s = 0; s < config.S && s < static_cast<int>(design.anchors_U.size()); ++s) {
        const int j = design.anchors_U[s];
        if (p.alpha[j] != 1.0 || p.beta[j][0] != 0.0) {
            out.push_back("U anchor " + item_label(j) + " does not satisfy alpha = 1, beta_2 = 0");
        }
    }
    if (T > 0) {
        for (int t = 0; t < T && t < static_cast<int>(design.anchors_V.size()); ++t) {
            const int j = design.anchors_V[t];
            if (p.gamma_v[j] != 1.0 || p.delta[j] != 0.0) {
                out.push_back("V anchor " + item_label(j) + " does not satisfy gamma_v = 1, delta = 0");
            }
        }
    }
    for (int d = 0; d < p.u.rows() && d < 1; ++d) {
        for (int h = 1; h < p.u.cols(); ++h) {
            if (!(p.u(d, h) > p.u(d, h - 1))) {
                out.push_back("U support points are not strictly increasing");
                break;
            }
        }
    }
    for (int d = 0; d < p.v.rows() && d < 1; ++d) {
        for (int h = 1; h < p.v.cols(); ++h) {
            if (!(p.v(d, h) > p.v(d, h - 1))) {
                out.push_back("V support points are not strictly increasing");
                break;
            }
        }
    }
    if (restrictions.ignorable && p.gamma_u.cwiseAbs().maxCoeff() != 0.0) {
        out.push_back("ignorable restriction requires gamma_u = 0");
    }
    for (const auto& block : restrictions.tied_items) {
        for (std::size_t k = 1; k < block.size(); ++k) {
            const int a = block[0];
            const int b = block[k];
            if (p.alpha[a] != p.alpha[b] || p.beta[a] != p.beta[b] || p.gamma_u[a] != p.gamma_u[b] ||
                p.gamma_v[a] != p.gamma_v[b] || p.delta[a] != p.delta[b]) {
                out.push_back("tied " + item_label(b) + " differs from " + item_label(a));
            }
        }
    }
    return rep;
}

int count_free_parameters(const ItemDesign& design, const LatentConfig& config, int C) {
    const int m = design.m();
    const int S = config.S;
    int item_y = -2 * S;
    for (int L : design.categories) {
        item_y += L;
    }
    int item_r = 0;
    int support = S * config.kU;
    if (config.v_side()) {
        item_r = 3 * m - 2 * config.T;
        support += config.T * config.kV;
    } else {
        // gamma_u and delta stay free for every item; gamma_v and v are absent.
        item_r = 2 * m;
    }
    const int structural = (config.kU - 1) * (C + 1) + (config.kV - 1) * (C + 1);
    return item_y + item_r + support + structural;
}

ParameterLayout::ParameterLayout(const ItemDesign& design, const LatentConfig& config, int C,
                                 Restrictions restrictions)
    : design_(design), config_(config), C_(C), restrictions_(std::move(restrictions)) {
    const int m = design_.m();
    std::vector<int> owner(static_cast<std::size_t>(m), -1);
    for (const auto& block : restrictions_.tied_items) {
        if (block.empty()) {
            continue;
        }
        for (int j : block) {
            if (j < 0 || j >= m) {
                throw InputError("tied block references item " + std::to_string(j + 1) + " outside the design");
            }
            if (owner[j] >= 0) {
                throw InputError(item_label(j) + " appears in more than one tied block");
            }
            if (design_.categories[j] != design_.categories[block[0]] || design_.u_dim(j) != design_.u_dim(block[0]) ||
                design_.v_dim(j) != design_.v_dim(block[0])) {
                throw InputError("tied items " + std::to_string(block[0] + 1) + " and " + std::to_string(j + 1) +
                                 " differ in categories or loadings");
            }
            owner[j] = block[0];
        }
    }
    for (const auto& block : restrictions_.tied_items) {
        if (!block.empty()) {
            auto sorted = block;
            std::sort(sorted.begin(), sorted.end());
            item_groups_.push_back(std::move(sorted));
        }
    }
    for (int j = 0; j < m; ++j) {
        if (owner[j] < 0) {
            item_groups_.push_back({j});
        }
    }
    std::sort(item_groups_.begin(), item_groups_.end());

    const bool v_side = config_.v_side();
    const auto groups = item_groups_.size();
    alpha_fixed_.assign(groups, false);
    beta2_fixed_.assign(groups, false);
    gamma_v_fixed_.assign(groups, !v_side);
    delta_fixed_.assign(groups, false);
    for (std::size_t g = 0; g < groups; ++g) {
        for (int j : item_groups_[g]) {
            if (std::find(design_.anchors_U.begin(), design_.anchors_U.end(), j) != design_.anchors_U.end()) {
                alpha_fixed_[g] = true;
                beta2_fixed_[g] = true;
            }
            if (v_side && std::find(design_.anchors_V.begin(), design_.anchors_V.end(), j) != design_.anchors_V.end()) {
                gamma_v_fixed_[g] = true;
                delta_fixed_[g] = true;
            }
        }
    }

    for (int h = 0; h < config_.kU; ++h) {
        for (int s = 0; s < config_.S; ++s) {
            slots_.push_back({Block::u, s, h, {}});
        }
    }
    if (v_side) {
        for (int h = 0; h < config_.kV; ++h) {
            for (int t = 0; t < config_.T; ++t) {
                slots_.push_back({Block::v, t, h, {}});
            }
        }
    }
    for (int h = 0; h + 1 < config_.kU; ++h) {
        for (int c = 0; c <= C_; ++c) {
            slots_.push_back({Block::phi, h, c, {}});
        }
    }
    for (int h = 0; h + 1 < config_.kV; ++h) {
        for (int c = 0; c <= C_; ++c) {
            slots_.push_back({Block::psi, h, c, {}});
        }
    }
    for (std::size_t g = 0; g < groups; ++g) {
        const auto& items = item_groups_[g];
        const int j = items.front();
        if (!alpha_fixed_[g]) {
            slots_.push_back({Block::alpha, j, 0, items});
        }
        for (int k = 0; k < design_.categories[j] - 1; ++k) {
            if (k == 0 && beta2_fixed_[g]) {
                continue;
            }
            slots_.push_back({Block::beta, j, k, items});
        }
        if (!restrictions_.ignorable) {
            slots_.push_back({Block::gamma_u, j, 0, items});
        }
        if (!gamma_v_fixed_[g]) {
            slots_.push_back({Block::gamma_v, j, 0, items});
        }
        if (!delta_fixed_[g]) {
            slots_.push_back({Block::delta, j, 0, items});
        }
    }
}

namespace {

double& slot_ref(ParameterSet& p, Block b, int row, int col, int item) {
    switch (b) {
    case Block::u: return p.u(row, col);
    case Block::v: return p.v(row, col);
    case Block::phi: return p.phi(row, col);
    case Block::psi: return p.psi(row, col);
    case Block::alpha: return p.alpha[item];
    case Block::beta: return p.beta[item][col];
    case Block::gamma_u: return p.gamma_u[item];
    case Block::gamma_v: return p.gamma_v[item];
    case Block::delta: return p.delta[item];
    }
    throw std::logic_error("unknown parameter block");
}

double slot_value(const ParameterSet& p, Block b, int row, int col, int item) {
    return slot_ref(const_cast<ParameterSet&>(p), b, row, col, item);
}

} // namespace

Eigen::VectorXd ParameterLayout::pack(const ParameterSet& params) const {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(slots_.size()));
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const auto& s = slots_[k];
        theta[static_cast<Eigen::Index>(k)] = slot_value(params, s.block, s.row, s.col, s.row);
    }
    return theta;
}

ParameterSet ParameterLayout::unpack(const Eigen::VectorXd& theta, const ParameterSet& base) const {
    ParameterSet p = base;
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const auto& s = slots_[k];
        const double value = theta[static_cast<Eigen::Index>(k)];
        if (s.items.empty()) {
            slot_ref(p, s.block, s.row, s.col, s.row) = value;
        } else {
            for (int j : s.items) {
                slot_ref(p, s.block, s.row, s.col, j) = value;
            }
        }
    }
    return p;
}

Eigen::VectorXd ParameterLayout::gather(const ParameterSet& gradient) const {
    Eigen::VectorXd g(static_cast<Eigen::Index>(slots_.size()));
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const auto& s = slots_[k];
        double sum = 0.0;
        if (s.items.empty()) {
            sum = slot_value(gradient, s.block, s.row, s.col, s.row);
        } else {
            for (int j : s.items) {
                sum += slot_value(gradient, s.block, s.row, s.col, j);
            }
        }
        g[static_cast<Eigen::Index>(k)] = sum;
    }
    return g;
}

std::string ParameterLayout::name(std::size_t k) const {
    const auto& s = slots_.at(k);
    const auto item = [&] { return design_.names[s.row]; };
    switch (s.block) {
    case Block::u: return "u[" + std::to_string(s.row + 1) + "," + std::to_string(s.col + 1) + "]";
    case Block::v: return "v[" + std::to_string(s.row + 1) + "," + std::to_string(s.col + 1) + "]";
    case Block::phi: return "phi[" + std::to_string(s.row + 2) + "," + std::to_string(s.col) + "]";
    case Block::psi: return "psi[" + std::to_string(s.row + 2) + "," + std::to_string(s.col) + "]";
    case Block::alpha: return "alpha[" + item() + "]";
    case Block::beta: return "beta[" + item() + "," + std::to_string(s.col + 2) + "]";
    case Block::gamma_u: return "gamma_u[" + item() + "]";
    case Block::gamma_v: return "gamma_v[" + item() + "]";
    case Block::delta: return "delta[" + item() + "]";
    }
    return "?";
}

void apply_constraints(ParameterSet& p, const ParameterLayout& layout) {
    const auto& design = layout.design();
    const auto& groups = layout.item_groups();
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const int j0 = groups[g].front();
        if (layout.alpha_fixed(static_cast<int>(g))) {
            p.alpha[j0] = 1.0;
        }
        if (layout.beta2_fixed(static_cast<int>(g))) {
            const double shift = p.beta[j0][0];
            // keep increments, move the whole ladder so that beta_2 = 0
            p.beta[j0].array() -= shift;
        }
        if (layout.restrictions().ignorable) {
            p.gamma_u[j0] = 0.0;
        }
        if (!layout.config().v_side()) {
            p.gamma_v[j0] = 0.0;
        } else if (layout.gamma_v_fixed(static_cast<int>(g))) {
            p.gamma_v[j0] = 1.0;
        }
        if (layout.config().v_side() && layout.delta_fixed(static_cast<int>(g))) {
            p.delta[j0] = 0.0;
        }
        for (int j : groups[g]) {
            p.alpha[j] = p.alpha[j0];
            p.beta[j] = p.beta[j0];
            p.gamma_u[j] = p.gamma_u[j0];
            p.gamma_v[j] = p.gamma_v[j0];
            p.delta[j] = p.delta[j0];
        }
    }
    (void)design;
}

void canonicalize(ParameterSet& params) {
    reorder_classes(params.u, params.phi);
    reorder_classes(params.v, params.psi);
}

FlatParameters flatten(const ParameterSet& p, const ItemDesign& design) {
    FlatParameters f;
    std::vector<double> values;
    auto add = [&](std::string name, Block b, double x) {
        f.names.push_back(std::move(name));
        f.blocks.push_back(b);
        values.push_back(x);
    };
    for (int h = 0; h < p.u.cols(); ++h)
        for (int s = 0; s < p.u.rows(); ++s)
            add("u[" + std::to_string(s + 1) + "," + std::to_string(h + 1) + "]", Block::u, p.u(s, h));
    for (int h = 0; h < p.v.cols(); ++h)
        for (int t = 0; t < p.v.rows(); ++t)
            add("v[" + std::to_string(t + 1) + "," + std::to_string(h + 1) + "]", Block::v, p.v(t, h));
    for (int h = 0; h < p.phi.rows(); ++h)
        for (int c = 0; c < p.phi.cols(); ++c)
            add("phi[" + std::to_string(h + 2) + "," + std::to_string(c) + "]", Block::phi, p.phi(h, c));
    for (int h = 0; h < p.psi.rows(); ++h)
        for (int c = 0; c < p.psi.cols(); ++c)
            add("psi[" + std::to_string(h + 2) + "," + std::to_string(c) + "]", Block::psi, p.psi(h, c));
    const bool v_side = p.v.rows() > 0;
    for (int j = 0; j < design.m(); ++j) {
        const auto& nm = design.names[j];
        add("alpha[" + nm + "]", Block::alpha, p.alpha[j]);
        for (int k = 0; k < p.beta[j].size(); ++k)
            add("beta[" + nm + "," + std::to_string(k + 2) + "]", Block::beta, p.beta[j][k]);
        add("gamma_u[" + nm + "]", Block::gamma_u, p.gamma_u[j]);
        if (v_side)
            add("gamma_v[" + nm + "]", Block::gamma_v, p.gamma_v[j]);
        add("delta[" + nm + "]", Block::delta, p.delta[j]);
    }
    f.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return f;
}

} // namespace lcirt
