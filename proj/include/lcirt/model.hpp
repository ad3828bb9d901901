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

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

/// Latent-class IRT with within-item multidimensionality and non-ignorable
/// missingness. Items Y_j are ordinal (graded response) and load on one
/// ability dimension U_s; response indicators R_j are binary (2PL) and load on
/// one U_s and one tendency dimension V_t.
namespace lcirt {

/// Thrown for malformed user input (bad files, inconsistent designs).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Three-state response indicator of an item for a subject.
enum class Response : std::uint8_t {
    structural_missing, // not due by design
    skipped,            // due but not answered
    answered
};

struct LatentConfig {
    int S = 1;  // ability dimensions
    int T = 1;  // tendency dimensions (0 when kV == 1)
    int kU = 2; // ability support points
    int kV = 2; // tendency support points; 1 disables the V side

    [[nodiscard]] bool v_side() const { return kV > 1; }
};

/// Confirmatory loading structure of the m items.
struct ItemDesign {
    std::vector<std::string> names;
    std::vector<int> categories;   // L_j >= 2
    Eigen::MatrixXi zU;            // m x S, one 1 per row
    Eigen::MatrixXi zV;            // m x T, one 1 per row (T = 0 when V is disabled)
    std::vector<int> anchors_U;    // item index per U-dimension
    std::vector<int> anchors_V;    // item index per V-dimension
    std::vector<std::string> groups; // course block label per item, "" when ungrouped

    [[nodiscard]] int m() const { return static_cast<int>(categories.size()); }
    [[nodiscard]] int S() const { return static_cast<int>(zU.cols()); }
    [[nodiscard]] int T() const { return static_cast<int>(zV.cols()); }
    [[nodiscard]] int max_categories() const;

    /// Dimension item j loads on, or -1.
    [[nodiscard]] int u_dim(int j) const;
    [[nodiscard]] int v_dim(int j) const;

    /// Items carrying the given group label, in index order.
    [[nodiscard]] std::vector<int> group_items(const std::string& label) const;

    /// Copy with the tendency side removed (zV emptied, no V anchors).
    [[nodiscard]] ItemDesign without_v_side() const;
};

/// Fills missing anchors (-1 or absent) with the lowest-indexed item loading
/// on each dimension.
void assign_default_anchors(ItemDesign& design);

struct Dataset {
    int n = 0;
    int m = 0;
    std::vector<std::string> ids;
    std::vector<std::string> covariate_names; // dummy-coded columns; constant is implicit
    Eigen::MatrixXd X;                         // n x C
    std::vector<Response> R;                   // row-major n x m
    std::vector<std::int16_t> Y;               // row-major n x m, 0 = missing

    /// Raw covariate cells as read from file (optional, used for writing back).
    std::vector<std::vector<std::string>> raw_covariates;
    std::vector<std::string> raw_covariate_names;

    [[nodiscard]] int C() const { return static_cast<int>(X.cols()); }
    [[nodiscard]] Response r(int i, int j) const { return R[static_cast<std::size_t>(i) * m + j]; }
    [[nodiscard]] int y(int i, int j) const { return Y[static_cast<std::size_t>(i) * m + j]; }

    static Dataset empty(int n, int m, int C);
};

/// All model parameters on the raw (identified) scale, or on the standardized
/// scale after inference::standardize.
struct ParameterSet {
    Eigen::MatrixXd u;   // S x kU support points
    Eigen::MatrixXd v;   // T x kV support points
    Eigen::MatrixXd phi; // (kU-1) x (C+1), row h-1 holds class h+1 vs class 1
    Eigen::MatrixXd psi; // (kV-1) x (C+1)
    Eigen::VectorXd alpha;
    std::vector<Eigen::VectorXd> beta; // beta[j][y-2], y = 2..L_j
    Eigen::VectorXd gamma_u;
    Eigen::VectorXd gamma_v;           // zeros when the V side is disabled
    Eigen::VectorXd delta;

    /// Zero-initialized set shaped for the design and config.
    static ParameterSet zeros(const ItemDesign& design, const LatentConfig& config, int C);

    [[nodiscard]] int kU() const { return static_cast<int>(u.cols()); }
    [[nodiscard]] int kV() const { return static_cast<int>(v.cols()); }
    [[nodiscard]] int C() const { return static_cast<int>(phi.cols()) - 1; }
};

/// Nested-model restrictions layered on top of identification constraints.
struct Restrictions {
    bool ignorable = false;                  // gamma_u fixed at 0 for every item
    std::vector<std::vector<int>> tied_items; // each block shares all item parameters
};

struct ValidationReport {
    std::vector<std::string> violations;
    [[nodiscard]] bool ok() const { return violations.empty(); }
    [[nodiscard]] std::string to_string() const;
};

[[nodiscard]] ValidationReport validate_design(const ItemDesign& design, const LatentConfig& config);
[[nodiscard]] ValidationReport validate_design(const ItemDesign& design, const LatentConfig& config,
                                               const Dataset& data);

/// Parameter-level invariants: shapes, anchors, ordered thresholds, sorted supports.
[[nodiscard]] ValidationReport validate_params(const ParameterSet& params, const ItemDesign& design,
                                               const LatentConfig& config,
                                               const Restrictions& restrictions = {});

/// Free-parameter count of the unrestricted model (closed form).
[[nodiscard]] int count_free_parameters(const ItemDesign& design, const LatentConfig& config, int C);

/// Which scalar slot of a ParameterSet a coordinate refers to.
enum class Block : std::uint8_t { u, v, phi, psi, alpha, beta, gamma_u, gamma_v, delta };

struct Slot {
    Block block;
    int row = 0;            // dimension / class row / item representative
    int col = 0;            // class / covariate / threshold index
    std::vector<int> items; // every item sharing an item slot (ties)
};

/// Ordered list of the free coordinates of a model given its identification
/// constraints and any nesting restrictions.
class ParameterLayout {
public:
    ParameterLayout(const ItemDesign& design, const LatentConfig& config, int C,
                    Restrictions restrictions = {});

    [[nodiscard]] std::size_t size() const { return slots_.size(); }
    [[nodiscard]] const std::vector<Slot>& slots() const { return slots_; }
    [[nodiscard]] const Restrictions& restrictions() const { return restrictions_; }
    [[nodiscard]] const ItemDesign& design() const { return design_; }
    [[nodiscard]] const LatentConfig& config() const { return config_; }
    [[nodiscard]] int C() const { return C_; }

    [[nodiscard]] Eigen::VectorXd pack(const ParameterSet& params) const;
    /// Writes the coordinates into a copy of `base`; fixed entries come from base.
    [[nodiscard]] ParameterSet unpack(const Eigen::VectorXd& theta, const ParameterSet& base) const;
    /// Sums a full natural-parameter gradient onto the free coordinates.
    [[nodiscard]] Eigen::VectorXd gather(const ParameterSet& gradient) const;
    [[nodiscard]] std::string name(std::size_t k) const;

    /// Item groups that share parameters (singletons unless tied).
    [[nodiscard]] const std::vector<std::vector<int>>& item_groups() const { return item_groups_; }

    [[nodiscard]] bool alpha_fixed(int group) const { return alpha_fixed_[group]; }
    [[nodiscard]] bool beta2_fixed(int group) const { return beta2_fixed_[group]; }
    [[nodiscard]] bool gamma_v_fixed(int group) const { return gamma_v_fixed_[group]; }
    [[nodiscard]] bool delta_fixed(int group) const { return delta_fixed_[group]; }

private:
    ItemDesign design_;
    LatentConfig config_;
    int C_;
    Restrictions restrictions_;
    std::vector<std::vector<int>> item_groups_;
    std::vector<bool> alpha_fixed_, beta2_fixed_, gamma_v_fixed_, delta_fixed_;
    std::vector<Slot> slots_;
};

/// Forces anchors, restrictions and ties onto `params` (ties copy the first item).
void apply_constraints(ParameterSet& params, const ParameterLayout& layout);

/// Sorts each latent variable's classes by their first-dimension support
/// point and re-expresses the logit coefficients against the new first class.
void canonicalize(ParameterSet& params);

/// Flat view over every scalar of a ParameterSet (fixed or free), with names.
struct FlatParameters {
    std::vector<std::string> names;
    std::vector<Block> blocks;
    Eigen::VectorXd values;
};
[[nodiscard]] FlatParameters flatten(const ParameterSet& params, const ItemDesign& design);

} // namespace lcirt
