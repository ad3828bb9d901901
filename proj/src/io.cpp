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

#include "lcirt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace lcirt::io {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

bool parse_int(const std::string& s, int& out) {
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end && !s.empty();
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && p == end && std::isfinite(out);
}

struct ItemLine {
    std::string name;
    int categories = 0;
    int u = 0;
    int v = 0;
    bool anchor_u = false;
    bool anchor_v = false;
    std::string group;
    int line = 0;
};

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    return out;
}

} // namespace

std::vector<std::string> DesignFile::column_names() const {
    std::vector<std::string> out;
    for (const auto& c : covariates) {
        if (!c.categorical) {
            out.push_back(c.name);
            continue;
        }
        for (const auto& level : c.levels)
            if (level != c.reference) out.push_back(c.name + "=" + level);
    }
    return out;
}

DesignFile parse_design(std::istream& in, const std::string& source) {
    DesignFile df;
    std::vector<ItemLine> items;
    bool have_version = false;
    bool have_latent = false;
    std::string raw;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> InputError {
        return InputError(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    auto key_values = [&](const std::vector<std::string>& tok, std::size_t from, std::set<std::string> allowed) {
        std::map<std::string, std::string> kv;
        for (std::size_t k = from; k < tok.size(); ++k) {
            const auto eq = tok[k].find('=');
            if (eq == std::string::npos || eq == 0) throw fail("expected key=value, got '" + tok[k] + "'");
            const std::string key = tok[k].substr(0, eq);
            if (!allowed.count(key)) throw fail("unknown key '" + key + "'");
            if (kv.count(key)) throw fail("duplicate key '" + key + "'");
            kv[key] = tok[k].substr(eq + 1);
        }
        return kv;
    };
    auto int_value = [&](const std::map<std::string, std::string>& kv, const std::string& key, int& out) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw fail("missing " + key + "=");
        if (!parse_int(it->second, out)) throw fail("'" + key + "' must be an integer, got '" + it->second + "'");
    };

    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        std::vector<std::string> tok;
        {
            std::istringstream ss(line);
            std::string t;
            while (ss >> t) tok.push_back(t);
        }
        const std::string& kw = tok[0];
        if (!have_version && kw != "version") throw fail("design file must start with 'version 1'");
        if (kw == "version") {
            if (have_version) throw fail("duplicate version line");
            if (tok.size() != 2 || tok[1] != "1") throw fail("unsupported design version (expected 'version 1')");
            have_version = true;
        } else if (kw == "latent") {
            if (have_latent) throw fail("duplicate latent line");
            const auto kv = key_values(tok, 1, {"S", "T", "kU", "kV"});
            int_value(kv, "S", df.config.S);
            int_value(kv, "T", df.config.T);
            int_value(kv, "kU", df.config.kU);
            int_value(kv, "kV", df.config.kV);
            have_latent = true;
        } else if (kw == "covariate") {
            if (tok.size() < 3) throw fail("expected 'covariate <name> numeric|categorical ...'");
            CovariateRule rule;
            rule.name = tok[1];
            for (const auto& c : df.covariates)
                if (c.name == rule.name) throw fail("duplicate covariate '" + rule.name + "'");
            if (tok[2] == "numeric") {
                const auto kv = key_values(tok, 3, {"sim"});
                if (kv.count("sim")) rule.sim = kv.at("sim");
            } else if (tok[2] == "categorical") {
                rule.categorical = true;
                const auto kv = key_values(tok, 3, {"levels", "ref"});
                if (!kv.count("levels")) throw fail("categorical covariate needs levels=");
                rule.levels = split(kv.at("levels"), ',');
                if (rule.levels.size() < 2) throw fail("categorical covariate needs at least two levels");
                std::set<std::string> uniq(rule.levels.begin(), rule.levels.end());
                if (uniq.size() != rule.levels.size() || uniq.count("")) throw fail("levels must be distinct and nonempty");
                rule.reference = kv.count("ref") ? kv.at("ref") : rule.levels.front();
                if (!uniq.count(rule.reference)) throw fail("reference level '" + rule.reference + "' is not listed");
            } else {
                throw fail("covariate type must be numeric or categorical, got '" + tok[2] + "'");
            }
            df.covariates.push_back(std::move(rule));
        } else if (kw == "item") {
            if (tok.size() < 2) throw fail("expected 'item <name> ...'");
            ItemLine it;
            it.name = tok[1];
            it.line = lineno;
            for (const auto& other : items)
                if (other.name == it.name) throw fail("duplicate item '" + it.name + "'");
            const auto kv = key_values(tok, 2, {"categories", "u", "v", "anchor", "group"});
            int_value(kv, "categories", it.categories);
            int_value(kv, "u", it.u);
            if (kv.count("v")) int_value(kv, "v", it.v);
            if (kv.count("anchor")) {
                for (const auto& a : split(kv.at("anchor"), ',')) {
                    if (a == "u") it.anchor_u = true;
                    else if (a == "v") it.anchor_v = true;
                    else if (a != "none") throw fail("anchor must list u and/or v, got '" + a + "'");
                }
            }
            if (kv.count("group")) it.group = kv.at("group");
            items.push_back(std::move(it));
        } else {
            throw fail("unknown statement '" + kw + "'");
        }
    }
    if (!have_version) throw InputError(source + ": empty design file");
    if (!have_latent) throw InputError(source + ": missing 'latent' line");
    if (items.empty()) throw InputError(source + ": design declares no items");

    const LatentConfig& cfg = df.config;
    const int m = static_cast<int>(items.size());
    const int T = cfg.v_side() ? cfg.T : 0;
    ItemDesign& d = df.design;
    d.zU = Eigen::MatrixXi::Zero(m, std::max(cfg.S, 0));
    d.zV = Eigen::MatrixXi::Zero(m, std::max(T, 0));
    d.anchors_U.assign(static_cast<std::size_t>(std::max(cfg.S, 0)), -1);
    d.anchors_V.assign(static_cast<std::size_t>(std::max(T, 0)), -1);
    bool any_group = false;
    for (int j = 0; j < m; ++j) {
        const auto& it = items[j];
        lineno = it.line;
        d.names.push_back(it.name);
        d.categories.push_back(it.categories);
        d.groups.push_back(it.group);
        any_group = any_group || !it.group.empty();
        if (it.categories < 2) throw fail("item '" + it.name + "' needs categories >= 2");
        if (it.u < 1 || it.u > cfg.S) throw fail("item '" + it.name + "': u must be in 1.." + std::to_string(cfg.S));
        d.zU(j, it.u - 1) = 1;
        if (T > 0) {
            if (it.v < 1 || it.v > T) throw fail("item '" + it.name + "': v must be in 1.." + std::to_string(T));
            d.zV(j, it.v - 1) = 1;
        } else if (it.v != 0 || it.anchor_v) {
            throw fail("item '" + it.name + "' has a v loading but the tendency side is disabled (kV = 1)");
        }
        if (it.anchor_u) {
            if (d.anchors_U[it.u - 1] >= 0) throw fail("anchor conflict: two anchors for U-dimension " + std::to_string(it.u));
            d.anchors_U[it.u - 1] = j;
        }
        if (it.anchor_v) {
            if (d.anchors_V[it.v - 1] >= 0) throw fail("anchor conflict: two anchors for V-dimension " + std::to_string(it.v));
            d.anchors_V[it.v - 1] = j;
        }
    }
    if (!any_group) d.groups.clear();
    assign_default_anchors(d);
    const auto rep = validate_design(d, cfg);
    if (!rep.ok()) throw InputError(source + ": " + rep.to_string());
    return df;
}

DesignFile parse_design_text(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    return parse_design(in, source);
}

DesignFile read_design(const std::string& path) {
    auto in = open_in(path);
    return parse_design(in, path);
}

std::string format_design(const DesignFile& df) {
    std::ostringstream out;
    const auto& c = df.config;
    out << "version 1\n";
    out << "latent S=" << c.S << " T=" << c.T << " kU=" << c.kU << " kV=" << c.kV << "\n";
    for (const auto& cov : df.covariates) {
        out << "covariate " << cov.name;
        if (cov.categorical) {
            out << " categorical levels=";
            for (std::size_t k = 0; k < cov.levels.size(); ++k) out << (k ? "," : "") << cov.levels[k];
            out << " ref=" << cov.reference;
        } else {
            out << " numeric sim=" << cov.sim;
        }
        out << "\n";
    }
    const auto& d = df.design;
    for (int j = 0; j < d.m(); ++j) {
        out << "item " << d.names[j] << " categories=" << d.categories[j] << " u=" << d.u_dim(j) + 1;
        if (d.T() > 0) out << " v=" << d.v_dim(j) + 1;
        std::vector<std::string> anchors;
        if (std::find(d.anchors_U.begin(), d.anchors_U.end(), j) != d.anchors_U.end()) anchors.push_back("u");
        if (std::find(d.anchors_V.begin(), d.anchors_V.end(), j) != d.anchors_V.end()) anchors.push_back("v");
        if (!anchors.empty()) {
            out << " anchor=" << anchors[0];
            if (anchors.size() > 1) out << "," << anchors[1];
        }
        if (!d.groups.empty() && !d.groups[j].empty()) out << " group=" << d.groups[j];
        out << "\n";
    }
    return out.str();
}

std::string format_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, p);
}

Dataset read_dataset(std::istream& in, const DesignFile& df, const std::string& source) {
    const auto& design = df.design;
    const int m = design.m();
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> InputError {
        return InputError(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    auto unquote = [](std::string s) {
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
        return s;
    };
    if (!std::getline(in, line)) throw InputError(source + ": empty data file");
    ++lineno;
    auto header = split(trim(line), ',');
    for (auto& h : header) h = unquote(h);
    if (header.empty() || header[0] != "id") throw fail("first column must be 'id'");

    // column index of every expected field
    std::map<std::string, int> where;
    for (int k = 0; k < static_cast<int>(header.size()); ++k) {
        if (!where.emplace(header[k], k).second) throw fail("duplicate column '" + header[k] + "'");
    }
    std::vector<int> cov_col;
    for (const auto& c : df.covariates) {
        if (!where.count(c.name)) throw fail("missing covariate column '" + c.name + "'");
        cov_col.push_back(where[c.name]);
    }
    std::vector<int> r_col(m), y_col(m);
    for (int j = 0; j < m; ++j) {
        const std::string rn = "R_" + design.names[j];
        const std::string yn = "Y_" + design.names[j];
        if (!where.count(rn)) throw fail("missing column '" + rn + "'");
        if (!where.count(yn)) throw fail("missing column '" + yn + "'");
        r_col[j] = where[rn];
        y_col[j] = where[yn];
    }
    const std::size_t expected = 1 + df.covariates.size() + 2 * static_cast<std::size_t>(m);
    if (header.size() != expected) {
        for (const auto& h : header) {
            bool known = h == "id";
            for (const auto& c : df.covariates) known = known || h == c.name;
            for (int j = 0; j < m; ++j) known = known || h == "R_" + design.names[j] || h == "Y_" + design.names[j];
            if (!known) throw fail("unexpected column '" + h + "'");
        }
    }

    const auto xnames = df.column_names();
    Dataset d;
    d.m = m;
    d.covariate_names = xnames;
    for (const auto& c : df.covariates) d.raw_covariate_names.push_back(c.name);
    std::vector<std::vector<double>> xrows;
    std::set<std::string> seen_ids;
    int row = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        ++row;
        auto cells = split(trim(line), ',');
        for (auto& c : cells) c = unquote(c);
        if (cells.size() != header.size()) {
            throw fail("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
        }
        auto cell_error = [&](int col, const std::string& msg) {
            return fail("row " + std::to_string(row) + ", column '" + header[col] + "': " + msg);
        };
        if (cells[0].empty()) throw cell_error(0, "empty id");
        if (!seen_ids.insert(cells[0]).second) throw cell_error(0, "duplicate id '" + cells[0] + "'");
        d.ids.push_back(cells[0]);

        std::vector<double> x;
        std::vector<std::string> raw;
        for (std::size_t c = 0; c < df.covariates.size(); ++c) {
            const auto& rule = df.covariates[c];
            const std::string& cell = cells[cov_col[c]];
            raw.push_back(cell);
            if (!rule.categorical) {
                double v = 0.0;
                if (!parse_double(cell, v)) throw cell_error(cov_col[c], "expected a number, got '" + cell + "'");
                x.push_back(v);
            } else {
                if (std::find(rule.levels.begin(), rule.levels.end(), cell) == rule.levels.end()) {
                    throw cell_error(cov_col[c], "unknown level '" + cell + "'");
                }
                for (const auto& level : rule.levels)
                    if (level != rule.reference) x.push_back(cell == level ? 1.0 : 0.0);
            }
        }
        xrows.push_back(std::move(x));
        d.raw_covariates.push_back(std::move(raw));

        bool any_due = false;
        for (int j = 0; j < m; ++j) {
            const std::string& rc = cells[r_col[j]];
            const std::string& yc = cells[y_col[j]];
            Response r;
            if (rc == kNA) r = Response::structural_missing;
            else if (rc == "0") r = Response::skipped;
            else if (rc == "1") r = Response::answered;
            else throw cell_error(r_col[j], "expected NA, 0 or 1, got '" + rc + "'");
            int y = 0;
            if (yc != kNA) {
                if (!parse_int(yc, y) || y < 1 || y > design.categories[j]) {
                    throw cell_error(y_col[j], "expected NA or 1.." + std::to_string(design.categories[j]) + ", got '" + yc + "'");
                }
            }
            if (r == Response::answered && y == 0) throw cell_error(y_col[j], "answered (R=1) but response is NA");
            if (r != Response::answered && y != 0) {
                throw cell_error(y_col[j], std::string("response present but R=") + (r == Response::skipped ? "0" : "NA"));
            }
            any_due = any_due || r != Response::structural_missing;
            d.R.push_back(r);
            d.Y.push_back(static_cast<std::int16_t>(y));
        }
        if (!any_due) {
            throw fail("row " + std::to_string(row) + " (id '" + cells[0] + "'): orphan subject, every item is NA");
        }
    }
    d.n = row;
    if (d.n == 0) throw InputError(source + ": no data rows");
    d.X.resize(d.n, static_cast<Eigen::Index>(xnames.size()));
    for (int i = 0; i < d.n; ++i)
        for (std::size_t c = 0; c < xnames.size(); ++c) d.X(i, static_cast<Eigen::Index>(c)) = xrows[i][c];
    return d;
}

Dataset read_dataset(const std::string& path, const DesignFile& df) {
    auto in = open_in(path);
    return read_dataset(in, df, path);
}

void write_dataset(std::ostream& out, const Dataset& data, const DesignFile& df) {
    const auto& design = df.design;
    const bool have_raw = static_cast<int>(data.raw_covariates.size()) == data.n &&
                          data.raw_covariate_names.size() == df.covariates.size();
    if (!have_raw && static_cast<std::size_t>(data.C()) != df.column_names().size()) {
        throw InputError("dataset covariates do not match the design's covariate declarations");
    }
    out << "id";
    for (const auto& c : df.covariates) out << "," << c.name;
    for (int j = 0; j < design.m(); ++j) out << ",R_" << design.names[j] << ",Y_" << design.names[j];
    out << "\n";
    for (int i = 0; i < data.n; ++i) {
        out << data.ids[i];
        if (have_raw) {
            for (const auto& cell : data.raw_covariates[i]) out << "," << cell;
        } else {
            Eigen::Index col = 0;
            for (const auto& rule : df.covariates) {
                if (!rule.categorical) {
                    out << "," << format_double(data.X(i, col++));
                    continue;
                }
                std::string level = rule.reference;
                for (const auto& l : rule.levels) {
                    if (l == rule.reference) continue;
                    if (data.X(i, col++) == 1.0) level = l;
                }
                out << "," << level;
            }
        }
        for (int j = 0; j < data.m; ++j) {
            switch (data.r(i, j)) {
            case Response::structural_missing: out << ",NA,NA"; break;
            case Response::skipped: out << ",0,NA"; break;
            case Response::answered: out << ",1," << data.y(i, j); break;
            }
        }
        out << "\n";
    }
}

void write_dataset(const std::string& path, const Dataset& data, const DesignFile& df) {
    auto out = open_out(path);
    write_dataset(out, data, df);
}

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw InputError("parameter '" + what + "' must have " + std::to_string(rows) + " rows");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw InputError("parameter '" + what + "' row " + std::to_string(r + 1) + " must have " +
                             std::to_string(cols) + " entries");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

} // namespace

json params_to_json(const ParameterSet& p, const ItemDesign& design) {
    json j;
    j["u"] = matrix_json(p.u);
    j["v"] = matrix_json(p.v);
    j["phi"] = matrix_json(p.phi);
    j["psi"] = matrix_json(p.psi);
    json items = json::array();
    for (int k = 0; k < design.m(); ++k) {
        json it;
        it["name"] = design.names[k];
        it["alpha"] = p.alpha[k];
        it["beta"] = std::vector<double>(p.beta[k].data(), p.beta[k].data() + p.beta[k].size());
        it["gamma_u"] = p.gamma_u[k];
        it["gamma_v"] = p.gamma_v[k];
        it["delta"] = p.delta[k];
        items.push_back(it);
    }
    j["items"] = items;
    return j;
}

ParameterSet params_from_json(const json& j, const ItemDesign& design, const LatentConfig& config, int C) {
    try {
        ParameterSet p = ParameterSet::zeros(design, config, C);
        p.u = matrix_from(j.at("u"), p.u.rows(), p.u.cols(), "u");
        p.v = matrix_from(j.contains("v") ? j.at("v") : json::array(), p.v.rows(), p.v.cols(), "v");
        p.phi = matrix_from(j.at("phi"), p.phi.rows(), p.phi.cols(), "phi");
        p.psi = matrix_from(j.contains("psi") ? j.at("psi") : json::array(), p.psi.rows(), p.psi.cols(), "psi");
        const auto& items = j.at("items");
        if (!items.is_array() || static_cast<int>(items.size()) != design.m()) {
            throw InputError("parameters list " + std::to_string(items.size()) + " items, design has " +
                             std::to_string(design.m()));
        }
        for (int k = 0; k < design.m(); ++k) {
            const auto& it = items[static_cast<std::size_t>(k)];
            if (it.at("name").get<std::string>() != design.names[k]) {
                throw InputError("parameter item " + std::to_string(k + 1) + " is '" + it.at("name").get<std::string>() +
                                 "', design has '" + design.names[k] + "'");
            }
            p.alpha[k] = it.at("alpha").get<double>();
            const auto beta = it.at("beta").get<std::vector<double>>();
            if (static_cast<int>(beta.size()) != design.categories[k] - 1) {
                throw InputError("item '" + design.names[k] + "' needs " + std::to_string(design.categories[k] - 1) +
                                 " thresholds");
            }
            for (std::size_t b = 0; b < beta.size(); ++b) p.beta[k][static_cast<Eigen::Index>(b)] = beta[b];
            p.gamma_u[k] = it.at("gamma_u").get<double>();
            p.gamma_v[k] = config.v_side() ? it.value("gamma_v", 0.0) : 0.0;
            p.delta[k] = it.at("delta").get<double>();
        }
        return p;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed parameter JSON: ") + e.what());
    }
}

ParameterSet read_params(const std::string& path, const ItemDesign& design, const LatentConfig& config, int C) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError(path + ": invalid JSON: " + e.what());
    }
    return params_from_json(j, design, config, C);
}

json estimates_to_json(const ParameterEstimates& est) {
    json arr = json::array();
    for (std::size_t k = 0; k < est.values.names.size(); ++k) {
        json e;
        e["name"] = est.values.names[k];
        e["estimate"] = est.values.values[static_cast<Eigen::Index>(k)];
        const double se = est.se[static_cast<Eigen::Index>(k)];
        e["se"] = std::isfinite(se) ? json(se) : json(nullptr);
        e["fixed"] = static_cast<bool>(est.fixed[k]);
        e["failed"] = static_cast<bool>(est.failed[k]);
        arr.push_back(e);
    }
    return arr;
}

namespace {

json options_json(const RunInfo& run) {
    const auto& o = run.options;
    json j;
    j["max_iter"] = o.max_iter;
    j["tol"] = o.tol;
    j["restarts"] = o.n_restarts;
    j["seed"] = o.seed;
    j["init"] = to_string(o.init_strategy);
    j["threads"] = run.threads;
    return j;
}

} // namespace

json fit_to_json(const FitResult& fit, const DesignFile& df, const Dataset& data, const RunInfo& run,
                 const StandardErrorReport* se) {
    json j;
    j["format"] = "lcirt-fit";
    j["version"] = 1;
    j["design"] = format_design(df);
    j["options"] = options_json(run);
    j["seed"] = fit.seed;
    j["n"] = fit.n;
    j["C"] = data.C();
    j["covariate_columns"] = data.covariate_names;
    j["loglik"] = fit.loglik;
    j["npar"] = fit.npar;
    j["bic"] = bic(fit.loglik, fit.npar, fit.n);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["restart"] = fit.restart;
    j["restart_logliks"] = fit.restart_logliks;
    j["caps_hit"] = fit.caps_hit;
    j["trace"] = fit.trace;
    j["params"] = params_to_json(fit.params, df.design);
    const ClassWeights avg = average_class_weights(data.X, fit.params);
    j["average_class_probabilities"] = {
        {"lambda", std::vector<double>(avg.lambda.data(), avg.lambda.data() + avg.lambda.size())},
        {"pi", std::vector<double>(avg.pi.data(), avg.pi.data() + avg.pi.size())}};
    try {
        j["standardized"] = params_to_json(standardize(fit.params, avg, df.design), df.design);
    } catch (const std::domain_error&) {
        j["standardized"] = nullptr;
    }
    if (se != nullptr) {
        json s;
        s["hessian_asymmetry"] = se->hessian_asymmetry;
        s["raw"] = estimates_to_json(se->raw);
        s["standardized"] = se->has_standardized ? estimates_to_json(se->standardized) : json(nullptr);
        j["standard_errors"] = s;
    } else {
        j["standard_errors"] = nullptr;
    }
    return j;
}

LoadedFit read_fit(const std::string& path) {
    auto in = open_in(path);
    LoadedFit lf;
    try {
        in >> lf.document;
        const auto& d = lf.document;
        if (d.at("format").get<std::string>() != "lcirt-fit" || d.at("version").get<int>() != 1) {
            throw InputError(path + ": not a version-1 fit file");
        }
        lf.design = parse_design_text(d.at("design").get<std::string>(), path + " (embedded design)");
        const int C = d.at("C").get<int>();
        if (static_cast<std::size_t>(C) != lf.design.column_names().size()) {
            throw InputError(path + ": covariate count does not match the embedded design");
        }
        lf.params = params_from_json(d.at("params"), lf.design.design, lf.design.config, C);
        lf.loglik = d.at("loglik").get<double>();
        lf.npar = d.at("npar").get<int>();
        lf.n = d.at("n").get<int>();
        lf.bic = d.at("bic").get<double>();
    } catch (const json::exception& e) {
        throw InputError(path + ": malformed fit file: " + e.what());
    }
    const auto rep = validate_params(lf.params, lf.design.design, lf.design.config);
    if (!rep.ok()) throw InputError(path + ": stored parameters violate constraints: " + rep.to_string());
    const int C = static_cast<int>(lf.design.column_names().size());
    if (lf.npar != count_free_parameters(lf.design.design, lf.design.config, C)) {
        throw InputError(path + ": stored npar does not match the design");
    }
    if (std::abs(bic(lf.loglik, lf.npar, lf.n) - lf.bic) > 1e-6 * std::max(1.0, std::abs(lf.bic))) {
        throw InputError(path + ": stored BIC does not match loglik, npar and n");
    }
    return lf;
}

json test_to_json(const std::string& test, const NestedTest& t, const DesignFile& df, const RunInfo& run) {
    json j;
    j["format"] = "lcirt-test";
    j["version"] = 1;
    j["test"] = test;
    j["design"] = format_design(df);
    j["options"] = options_json(run);
    j["loglik_full"] = t.report.loglik_full;
    j["loglik_restricted"] = t.report.loglik_restricted;
    j["npar_full"] = t.report.npar_full;
    j["npar_restricted"] = t.report.npar_restricted;
    j["statistic"] = t.report.statistic;
    j["df"] = t.report.df;
    j["p_value"] = t.report.p_value;
    auto fit_summary = [](const FitResult& f) {
        return json{{"loglik", f.loglik},
                    {"npar", f.npar},
                    {"bic", bic(f.loglik, f.npar, f.n)},
                    {"converged", f.converged},
                    {"iterations", f.iterations},
                    {"restart", f.restart}};
    };
    j["full"] = fit_summary(t.full);
    j["restricted"] = fit_summary(t.restricted);
    return j;
}

void write_grid(std::ostream& out, const std::vector<SelectionRow>& rows) {
    out << "kU,kV,loglik,npar,BIC,converged,bic_min\n";
    for (const auto& r : rows) {
        out << r.kU << "," << r.kV << "," << format_double(r.loglik) << "," << r.npar << "," << format_double(r.bic)
            << "," << (r.converged ? 1 : 0) << "," << (r.bic_min ? 1 : 0) << "\n";
    }
}

void write_predictions(std::ostream& out, const PredictionTables& t) {
    const auto& us = t.u_values;
    const auto& vs = t.v_values;
    int L = 0;
    for (const auto& it : t.items) L = std::max(L, static_cast<int>(it.category.front().size()));
    out << "item,group";
    for (double u : us)
        for (int y = 1; y <= L; ++y) out << ",P(Y=" << y << "|u=" << format_double(u) << ")";
    for (double u : us) out << ",P(Y>1|u=" << format_double(u) << ")";
    out << ",pass_range";
    for (double u : us)
        for (double v : vs) out << ",P(R=1|u=" << format_double(u) << ";v=" << format_double(v) << ")";
    out << ",answer_range_u,answer_range_v\n";
    for (const auto& it : t.items) {
        out << it.name << "," << it.group;
        for (const auto& cat : it.category) {
            for (int y = 0; y < L; ++y) {
                out << ",";
                if (y < static_cast<int>(cat.size())) out << format_double(cat[y]);
                else out << kNA;
            }
        }
        for (double p : it.passing) out << "," << format_double(p);
        out << "," << format_double(it.passing_range);
        for (const auto& row : it.answer)
            for (double p : row) out << "," << format_double(p);
        out << "," << format_double(it.answer_range_u) << "," << format_double(it.answer_range_v) << "\n";
    }
}

void write_classes(std::ostream& out, const Dataset& data, const Classification& c) {
    const auto& w = c.posterior;
    out << "id,class_u,class_v";
    for (int h = 0; h < w.kU; ++h) out << ",post_u" << h + 1;
    for (int h = 0; h < w.kV; ++h) out << ",post_v" << h + 1;
    out << "\n";
    for (int i = 0; i < data.n; ++i) {
        out << data.ids[i] << "," << c.class_u[i] + 1 << "," << c.class_v[i] + 1;
        for (int h = 0; h < w.kU; ++h) out << "," << format_double(w.marginal_u(i, h));
        for (int h = 0; h < w.kV; ++h) out << "," << format_double(w.marginal_v(i, h));
        out << "\n";
    }
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        int lo = 0, hi = 0;
        if (!parse_int(trim(text.substr(0, dots)), lo) || !parse_int(trim(text.substr(dots + 2)), hi) || lo > hi) {
            throw InputError("invalid range '" + text + "' (expected a..b with a <= b)");
        }
        for (int k = lo; k <= hi; ++k) out.push_back(k);
        return out;
    }
    for (const auto& part : split(text, ',')) {
        int v = 0;
        if (!parse_int(part, v)) throw InputError("invalid integer '" + part + "' in '" + text + "'");
        out.push_back(v);
    }
    if (out.empty()) throw InputError("empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& part : split(text, ',')) {
        double v = 0.0;
        if (!parse_double(part, v)) throw InputError("invalid number '" + part + "' in '" + text + "'");
        out.push_back(v);
    }
    if (out.empty()) throw InputError("empty list");
    return out;
}

CovariateSpec covariate_spec(const DesignFile& df) {
    CovariateSpec spec;
    for (const auto& rule : df.covariates) {
        if (rule.categorical) {
            throw InputError("simulate supports numeric covariates only; '" + rule.name + "' is categorical");
        }
        const auto open = rule.sim.find('(');
        const auto close = rule.sim.rfind(')');
        if (open == std::string::npos || close != rule.sim.size() - 1) {
            throw InputError("covariate '" + rule.name + "': sim must look like bernoulli(p), uniform(a,b) or normal(m,s)");
        }
        const std::string kind = rule.sim.substr(0, open);
        const auto args = parse_double_list(rule.sim.substr(open + 1, close - open - 1));
        CovariateSpec::Column col;
        col.name = rule.name;
        if (kind == "bernoulli" && args.size() == 1) {
            col.kind = CovariateSpec::Kind::bernoulli;
            col.a = args[0];
        } else if (kind == "uniform" && args.size() == 2) {
            col.kind = CovariateSpec::Kind::uniform;
            col.a = args[0];
            col.b = args[1];
        } else if (kind == "normal" && args.size() == 2) {
            col.kind = CovariateSpec::Kind::normal;
            col.a = args[0];
            col.b = args[1];
        } else {
            throw InputError("covariate '" + rule.name + "': unsupported sim '" + rule.sim + "'");
        }
        spec.columns.push_back(col);
    }
    return spec;
}

void write_json(const std::string& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

} // namespace lcirt::io
