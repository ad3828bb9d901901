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

#include "lcirt/estimation.hpp"
#include "lcirt/inference.hpp"
#include "lcirt/simulate.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace lcirt::io {

using nlohmann::json;

/// Dummy-coding rule for one covariate column of a data file.
struct CovariateRule {
    std::string name;
    bool categorical = false;
    std::vector<std::string> levels; // categorical only
    std::string reference;           // categorical only; no dummy column
    std::string sim = "bernoulli(0.5)"; // numeric only: distribution used by `simulate`
};

/// Parsed design file: loading structure, latent config and covariates.
///
/// Format (version 1), one statement per line, `#` starts a comment:
///
///     version 1
///     latent S=1 T=1 kU=4 kV=2
///     covariate female categorical levels=no,yes ref=no
///     covariate grade numeric sim=normal(0,1)
///     item acc_ac categories=5 u=1 v=1 anchor=u,v group=accounting
///
/// `u`/`v` name the 1-based dimension an item loads on; `anchor` marks the
/// item as the scale anchor of those dimensions (defaults to the first item
/// loading on each dimension); `group` is the course-block label.
struct DesignFile {
    ItemDesign design;
    LatentConfig config;
    std::vector<CovariateRule> covariates;

    /// Names of the dummy-coded X columns in order.
    [[nodiscard]] std::vector<std::string> column_names() const;
};

[[nodiscard]] DesignFile parse_design(std::istream& in, const std::string& source = "<design>");
[[nodiscard]] DesignFile parse_design_text(const std::string& text, const std::string& source = "<design>");
[[nodiscard]] DesignFile read_design(const std::string& path);
[[nodiscard]] std::string format_design(const DesignFile& df);

/// Missing-value token in data files.
inline constexpr const char* kNA = "NA";

/// Reads `id, covariates..., R_<item>, Y_<item>...` with a header row.
[[nodiscard]] Dataset read_dataset(std::istream& in, const DesignFile& df, const std::string& source = "<data>");
[[nodiscard]] Dataset read_dataset(const std::string& path, const DesignFile& df);
void write_dataset(std::ostream& out, const Dataset& data, const DesignFile& df);
void write_dataset(const std::string& path, const Dataset& data, const DesignFile& df);

/// Shortest decimal text that reads back to the same double.
[[nodiscard]] std::string format_double(double x);

[[nodiscard]] json params_to_json(const ParameterSet& params, const ItemDesign& design);
[[nodiscard]] ParameterSet params_from_json(const json& j, const ItemDesign& design, const LatentConfig& config,
                                            int C);
[[nodiscard]] ParameterSet read_params(const std::string& path, const ItemDesign& design, const LatentConfig& config,
                                       int C);

[[nodiscard]] json estimates_to_json(const ParameterEstimates& est);

/// Settings echoed into every result file.
struct RunInfo {
    FitOptions options;
    int threads = 0;
};

[[nodiscard]] json fit_to_json(const FitResult& fit, const DesignFile& df, const Dataset& data, const RunInfo& run,
                               const StandardErrorReport* se);

/// Reloaded fit.json: design, parameters and stored summary values.
struct LoadedFit {
    DesignFile design;
    ParameterSet params;
    double loglik = 0.0;
    int npar = 0;
    int n = 0;
    double bic = 0.0;
    json document;
};

/// Parses fit.json and checks its internal consistency (parameter shapes,
/// constraints and the stored BIC).
[[nodiscard]] LoadedFit read_fit(const std::string& path);

[[nodiscard]] json test_to_json(const std::string& test, const NestedTest& t, const DesignFile& df, const RunInfo& run);

void write_grid(std::ostream& out, const std::vector<SelectionRow>& rows);
void write_predictions(std::ostream& out, const PredictionTables& tables);
void write_classes(std::ostream& out, const Dataset& data, const Classification& c);

/// Parses "2..5" or "2,3,5" into a list of integers.
[[nodiscard]] std::vector<int> parse_int_list(const std::string& text);
/// Parses "-1,0,1" into a list of doubles.
[[nodiscard]] std::vector<double> parse_double_list(const std::string& text);

/// Covariate draw rules for simulation; categorical covariates are rejected.
[[nodiscard]] CovariateSpec covariate_spec(const DesignFile& df);

void write_json(const std::string& path, const json& j);
void write_text(const std::string& path, const std::string& text);

} // namespace lcirt::io
