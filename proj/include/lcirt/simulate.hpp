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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lcirt {

/// How the concomitant variables of simulated subjects are drawn.
struct CovariateSpec {
    enum class Kind { bernoulli, uniform, normal };
    struct Column {
        std::string name;
        Kind kind = Kind::bernoulli;
        double a = 0.5; // bernoulli: p; uniform: lower; normal: mean
        double b = 0.0; // uniform: upper; normal: sd
    };
    std::vector<Column> columns;
    std::optional<Eigen::MatrixXd> fixed; // n x C, used as-is when set

    [[nodiscard]] int C() const;
    /// One Bernoulli(0.5) column.
    static CovariateSpec standard();
    static CovariateSpec none() { return {}; }
};

/// Which items are due for each simulated subject.
enum class DueRule {
    all,          // every item
    one_per_group // one item drawn uniformly within each group label; ungrouped items always due
};

struct Simulation {
    Dataset data;
    std::vector<int> class_u; // generating classes, 0-based
    std::vector<int> class_v;
};

/// Draws n subjects from the model. Subject i uses its own random substream,
/// so the result depends only on the seed.
[[nodiscard]] Simulation simulate(const ParameterSet& params, const ItemDesign& design, int n,
                                  const CovariateSpec& covariates, std::uint64_t seed, DueRule due = DueRule::all);
[[nodiscard]] Dataset generate(const ParameterSet& params, const ItemDesign& design, int n,
                               const CovariateSpec& covariates, std::uint64_t seed, DueRule due = DueRule::all);

/// Response pattern over the due items: -1 skipped, y >= 1 answered in category y.
using Pattern = std::vector<int>;

inline constexpr int kMaxEnumerationItems = 6;
inline constexpr std::size_t kMaxEnumerationPatterns = 2'000'000;

/// Every complete pattern of the items flagged in `due` and its probability
/// for a subject with covariates x, by direct enumeration over latent classes.
/// Items not due are left out of the pattern.
[[nodiscard]] std::map<Pattern, double> brute_force_pattern_probs(const ParameterSet& params, const ItemDesign& design,
                                                                  const Eigen::RowVectorXd& x,
                                                                  const std::vector<bool>& due);

/// Log-likelihood of a small dataset read off the enumerated pattern table.
[[nodiscard]] double brute_force_loglik(const ParameterSet& params, const ItemDesign& design, const Dataset& data);

} // namespace lcirt
