#pragma once

// Survey data model: schema, Likert/covariate records, CSV ingest, listwise
// cleaning and per-item response distributions.

#include "surveyrank/common.hpp"
#include "surveyrank/csv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace surveyrank {

// Agreement / importance level on the 7-point scale (1 = strongly disagree).
class LikertValue {
public:
    static constexpr int min = 1;
    static constexpr int max = 7;
    static constexpr int levels = max - min + 1;

    explicit LikertValue(int v) : value_(v) {
        if (v < min || v > max) throw DataError(fmt::format("Likert value {} outside [1, 7]", v));
    }
    int value() const noexcept { return value_; }
    friend bool operator==(LikertValue, LikertValue) = default;

private:
    int value_;
};

enum class ScaleKind { attitude, motivator, deterrent };

inline std::string to_string(ScaleKind k) {
    switch (k) {
        case ScaleKind::attitude: return "attitude";
        case ScaleKind::motivator: return "motivator";
        case ScaleKind::deterrent: return "deterrent";
    }
    return "?";
}

inline ScaleKind scale_kind_from_string(const std::string& s) {
    if (s == "attitude") return ScaleKind::attitude;
    if (s == "motivator") return ScaleKind::motivator;
    if (s == "deterrent") return ScaleKind::deterrent;
    throw DataError("unknown scale kind '" + s + "'");
}

struct IndicatorItem {
    std::string code;
    std::string prompt;
    std::string scale_id;
};

struct Scale {
    std::string id;
    std::string name;
    ScaleKind kind = ScaleKind::attitude;
    std::vector<std::string> item_codes;
};

enum class CovariateKind { categorical, continuous };

struct CovariateSpec {
    std::string code;
    CovariateKind kind = CovariateKind::categorical;
    std::vector<std::string> levels;  // categorical only
    std::string units;                // continuous only
};

struct ConsistencyRule {
    enum class Type {
        straight_lining,  // identical answer to every listed item
        max_difference,   // |a - b| > max for some pair of listed items
    };
    std::string name;
    Type type = Type::straight_lining;
    std::vector<std::string> items;
    int max_difference = 6;
};

class SurveySchema {
public:
    SurveySchema() = default;
    SurveySchema(std::vector<IndicatorItem> items, std::vector<Scale> scales,
                 std::vector<CovariateSpec> covariates, std::vector<ConsistencyRule> rules = {})
        : items_(std::move(items)), scales_(std::move(scales)), covariates_(std::move(covariates)),
          rules_(std::move(rules)) {
        validate();
    }

    const std::vector<IndicatorItem>& items() const noexcept { return items_; }
    const std::vector<Scale>& scales() const noexcept { return scales_; }
    const std::vector<CovariateSpec>& covariates() const noexcept { return covariates_; }
    const std::vector<ConsistencyRule>& rules() const noexcept { return rules_; }

    std::optional<std::size_t> item_index(const std::string& code) const {
        auto it = item_index_.find(code);
        if (it == item_index_.end()) return std::nullopt;
        return it->second;
    }
    std::size_t require_item(const std::string& code) const {
        auto i = item_index(code);
        if (!i) throw DataError("unknown item '" + code + "'");
        return *i;
    }
    std::optional<std::size_t> covariate_index(const std::string& code) const {
        auto it = covariate_index_.find(code);
        if (it == covariate_index_.end()) return std::nullopt;
        return it->second;
    }
    const Scale& scale(const std::string& id) const {
        for (const auto& s : scales_)
            if (s.id == id) return s;
        throw DataError("unknown scale '" + id + "'");
    }
    std::vector<const Scale*> scales_of_kind(ScaleKind kind) const {
        std::vector<const Scale*> out;
        for (const auto& s : scales_)
            if (s.kind == kind) out.push_back(&s);
        return out;
    }
    // Item codes of every scale of the given kind, in scale order.
    std::vector<std::string> items_of_kind(ScaleKind kind) const {
        std::vector<std::string> out;
        for (const auto* s : scales_of_kind(kind)) out.insert(out.end(), s->item_codes.begin(), s->item_codes.end());
        return out;
    }

    static SurveySchema from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    void validate();

    std::vector<IndicatorItem> items_;
    std::vector<Scale> scales_;
    std::vector<CovariateSpec> covariates_;
    std::vector<ConsistencyRule> rules_;
    std::unordered_map<std::string, std::size_t> item_index_;
    std::unordered_map<std::string, std::size_t> covariate_index_;
};

inline void SurveySchema::validate() {
    item_index_.clear();
    covariate_index_.clear();
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].code.empty()) throw DataError("schema: empty item code");
        if (!item_index_.emplace(items_[i].code, i).second)
            throw DataError("schema: duplicate item code '" + items_[i].code + "'");
    }
    std::set<std::string> scale_ids;
    std::set<std::string> claimed;
    for (const auto& s : scales_) {
        if (!scale_ids.insert(s.id).second) throw DataError("schema: duplicate scale id '" + s.id + "'");
        if (s.item_codes.size() < 2) throw DataError("schema: scale '" + s.id + "' needs at least 2 items");
        for (const auto& code : s.item_codes) {
            auto idx = item_index(code);
            if (!idx) throw DataError("schema: scale '" + s.id + "' lists unknown item '" + code + "'");
            if (!claimed.insert(code).second)
                throw DataError("schema: item '" + code + "' belongs to more than one scale");
            items_[*idx].scale_id = s.id;
        }
    }
    for (const auto& item : items_)
        if (!claimed.count(item.code)) throw DataError("schema: item '" + item.code + "' belongs to no scale");
    for (std::size_t i = 0; i < covariates_.size(); ++i) {
        const auto& c = covariates_[i];
        if (c.code == "respondent_id" || item_index(c.code))
            throw DataError("schema: covariate code '" + c.code + "' collides with another column");
        if (!covariate_index_.emplace(c.code, i).second)
            throw DataError("schema: duplicate covariate code '" + c.code + "'");
        if (c.kind == CovariateKind::categorical && c.levels.empty())
            throw DataError("schema: categorical covariate '" + c.code + "' declares no levels");
    }
    for (const auto& r : rules_) {
        if (r.items.size() < 2) throw DataError("schema: rule '" + r.name + "' needs at least 2 items");
        for (const auto& code : r.items)
            if (!item_index(code)) throw DataError("schema: rule '" + r.name + "' lists unknown item '" + code + "'");
    }
}

inline SurveySchema SurveySchema::from_json(const nlohmann::json& j) {
    std::vector<IndicatorItem> items;
    for (const auto& it : j.at("items")) items.push_back({it.at("code").get<std::string>(), it.value("prompt", ""), ""});
    std::vector<Scale> scales;
    for (const auto& s : j.at("scales")) {
        scales.push_back({s.at("id").get<std::string>(), s.value("name", ""),
                          scale_kind_from_string(s.value("kind", "attitude")),
                          s.at("items").get<std::vector<std::string>>()});
    }
    std::vector<CovariateSpec> covs;
    if (j.contains("covariates")) {
        for (const auto& c : j.at("covariates")) {
            CovariateSpec spec;
            spec.code = c.at("code").get<std::string>();
            auto kind = c.value("kind", "categorical");
            if (kind == "categorical") {
                spec.kind = CovariateKind::categorical;
                spec.levels = c.at("levels").get<std::vector<std::string>>();
            } else if (kind == "continuous") {
                spec.kind = CovariateKind::continuous;
                spec.units = c.value("units", "");
            } else {
                throw DataError("schema: covariate '" + spec.code + "' has unknown kind '" + kind + "'");
            }
            if (c.value("role", "passive") != "passive")
                throw DataError("schema: covariate '" + spec.code + "' must be passive");
            covs.push_back(std::move(spec));
        }
    }
    std::vector<ConsistencyRule> rules;
    if (j.contains("consistency_rules")) {
        for (const auto& r : j.at("consistency_rules")) {
            ConsistencyRule rule;
            rule.name = r.value("name", "");
            auto type = r.at("type").get<std::string>();
            if (type == "straight_lining") {
                rule.type = ConsistencyRule::Type::straight_lining;
            } else if (type == "max_difference") {
                rule.type = ConsistencyRule::Type::max_difference;
                rule.max_difference = r.at("max").get<int>();
            } else {
                throw DataError("schema: unknown consistency rule type '" + type + "'");
            }
            rule.items = r.at("items").get<std::vector<std::string>>();
            if (rule.name.empty()) rule.name = type;
            rules.push_back(std::move(rule));
        }
    }
    return SurveySchema(std::move(items), std::move(scales), std::move(covs), std::move(rules));
}

inline nlohmann::json SurveySchema::to_json() const {
    nlohmann::json j;
    j["items"] = nlohmann::json::array();
    for (const auto& it : items_) j["items"].push_back({{"code", it.code}, {"prompt", it.prompt}});
    j["scales"] = nlohmann::json::array();
    for (const auto& s : scales_)
        j["scales"].push_back({{"id", s.id}, {"name", s.name}, {"kind", to_string(s.kind)}, {"items", s.item_codes}});
    j["covariates"] = nlohmann::json::array();
    for (const auto& c : covariates_) {
        nlohmann::json cj{{"code", c.code}, {"role", "passive"}};
        if (c.kind == CovariateKind::categorical) {
            cj["kind"] = "categorical";
            cj["levels"] = c.levels;
        } else {
            cj["kind"] = "continuous";
            cj["units"] = c.units;
        }
        j["covariates"].push_back(cj);
    }
    j["consistency_rules"] = nlohmann::json::array();
    for (const auto& r : rules_) {
        nlohmann::json rj{{"name", r.name}, {"items", r.items}};
        if (r.type == ConsistencyRule::Type::straight_lining) {
            rj["type"] = "straight_lining";
        } else {
            rj["type"] = "max_difference";
            rj["max"] = r.max_difference;
        }
        j["consistency_rules"].push_back(rj);
    }
    return j;
}

inline SurveySchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
        return SurveySchema::from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("schema '" + path + "': " + e.what());
    }
}

// Categorical level, continuous value, or missing.
using CovariateValue = std::variant<std::monostate, std::string, double>;

struct SurveyRecord {
    std::string respondent_id;
    std::vector<std::optional<int>> responses;  // schema item order
    std::vector<CovariateValue> covariates;      // schema covariate order

    friend bool operator==(const SurveyRecord&, const SurveyRecord&) = default;
};

struct RowError {
    std::size_t row = 0;  // 1-based data row (header excluded)
    std::string respondent_id;
    std::string column;
    std::string message;
};

struct CleaningEntry {
    std::string respondent_id;
    std::string reason;  // "un-filled", "partially-filled" or "inconsistent"
    std::string detail;
};

struct CleaningReport {
    std::size_t input = 0;
    std::size_t kept = 0;
    std::vector<CleaningEntry> dropped;

    std::string to_csv() const {
        std::vector<csv::Row> rows{{"respondent_id", "reason"}};
        for (const auto& d : dropped) rows.push_back({d.respondent_id, d.reason});
        return csv::to_string(rows);
    }
};

struct Provenance {
    std::string source;
    std::size_t rows_read = 0;
    std::vector<RowError> load_errors;
    std::optional<CleaningReport> cleaning;
};

struct SurveyDataset {
    SurveySchema schema;
    std::vector<SurveyRecord> records;
    Provenance provenance;

    std::size_t size() const noexcept { return records.size(); }

    std::optional<int> response(std::size_t record, const std::string& item) const {
        return records.at(record).responses.at(schema.require_item(item));
    }

    // Column of complete responses as doubles; throws if any value is missing.
    Vector item_column(const std::string& item) const {
        const std::size_t idx = schema.require_item(item);
        Vector out(static_cast<Eigen::Index>(records.size()));
        for (std::size_t r = 0; r < records.size(); ++r) {
            const auto& v = records[r].responses[idx];
            if (!v) throw DataError(fmt::format("item {} missing for respondent {}", item, records[r].respondent_id));
            out(static_cast<Eigen::Index>(r)) = *v;
        }
        return out;
    }

    // n x p matrix of the listed items.
    Matrix item_matrix(const std::vector<std::string>& items) const {
        Matrix out(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(items.size()));
        for (std::size_t j = 0; j < items.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = item_column(items[j]);
        return out;
    }

    std::vector<std::string> respondent_ids() const {
        std::vector<std::string> ids;
        ids.reserve(records.size());
        for (const auto& r : records) ids.push_back(r.respondent_id);
        return ids;
    }

    // Data equality (schema identity and records); provenance is ignored.
    bool same_data(const SurveyDataset& other) const {
        return schema.to_json() == other.schema.to_json() && records == other.records;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::optional<long long> parse_integer(std::string_view s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<double> parse_real(std::string_view s) {
    // from_chars for double is unavailable in libstdc++ 11; strtod on a copy is
    // locale-sensitive only for the decimal separator, which is fixed to '.'.
    std::string copy(s);
    if (copy.empty()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace detail

// Parses a survey CSV. Header problems are fatal; cell problems reject the
// row and are recorded in provenance.load_errors with the row number.
inline SurveyDataset read_dataset(std::istream& in, const SurveySchema& schema, const std::string& source = "<stream>") {
    SurveyDataset ds;
    ds.schema = schema;
    ds.provenance.source = source;

    auto header = csv::read_row(in);
    if (!header) throw DataError(source + ": empty file");
    for (auto& h : *header) h = std::string(detail::trim(h));

    enum class Kind { id, item, covariate };
    std::vector<std::pair<Kind, std::size_t>> columns;
    std::set<std::string> seen;
    bool has_id = false;
    for (const auto& name : *header) {
        if (!seen.insert(name).second) throw DataError(source + ": duplicate column '" + name + "'");
        if (name == "respondent_id") {
            columns.emplace_back(Kind::id, 0);
            has_id = true;
        } else if (auto i = schema.item_index(name)) {
            columns.emplace_back(Kind::item, *i);
        } else if (auto c = schema.covariate_index(name)) {
            columns.emplace_back(Kind::covariate, *c);
        } else {
            throw DataError(source + ": unknown column '" + name + "'");
        }
    }
    if (!has_id) throw DataError(source + ": missing column 'respondent_id'");
    for (const auto& item : schema.items())
        if (!seen.count(item.code)) throw DataError(source + ": missing column '" + item.code + "'");
    for (const auto& cov : schema.covariates())
        if (!seen.count(cov.code)) throw DataError(source + ": missing column '" + cov.code + "'");

    std::set<std::string> ids;
    std::size_t row_no = 0;
    while (auto row = csv::read_row(in)) {
        ++row_no;
        if (row->size() == 1 && detail::trim((*row)[0]).empty()) {
            --row_no;  // blank line
            continue;
        }
        ds.provenance.rows_read = row_no;
        auto fail = [&](const std::string& id, const std::string& column, const std::string& msg) {
            ds.provenance.load_errors.push_back({row_no, id, column, msg});
        };
        if (row->size() != header->size()) {
            fail("", "", fmt::format("expected {} fields, found {}", header->size(), row->size()));
            continue;
        }
        SurveyRecord rec;
        rec.responses.assign(schema.items().size(), std::nullopt);
        rec.covariates.assign(schema.covariates().size(), std::monostate{});
        bool ok = true;
        for (std::size_t c = 0; c < columns.size() && ok; ++c) {
            auto cell = detail::trim((*row)[c]);
            auto [kind, idx] = columns[c];
            if (kind == Kind::id) {
                rec.respondent_id = std::string(cell);
                continue;
            }
            if (cell.empty()) continue;  // missing
            if (kind == Kind::item) {
                const auto& code = schema.items()[idx].code;
                auto v = detail::parse_integer(cell);
                if (!v) {
                    fail(rec.respondent_id, code, fmt::format("item {} row {}: non-integer Likert value '{}'", code, row_no, cell));
                    ok = false;
                } else if (*v < LikertValue::min || *v > LikertValue::max) {
                    fail(rec.respondent_id, code, fmt::format("item {} row {}: value {} outside [1, 7]", code, row_no, *v));
                    ok = false;
                } else {
                    rec.responses[idx] = static_cast<int>(*v);
                }
            } else {
                const auto& spec = schema.covariates()[idx];
                if (spec.kind == CovariateKind::categorical) {
                    std::string level(cell);
                    if (std::find(spec.levels.begin(), spec.levels.end(), level) == spec.levels.end()) {
                        fail(rec.respondent_id, spec.code,
                             fmt::format("covariate {} row {}: undeclared level '{}'", spec.code, row_no, level));
                        ok = false;
                    } else {
                        rec.covariates[idx] = level;
                    }
                } else {
                    auto v = detail::parse_real(cell);
                    if (!v) {
                        fail(rec.respondent_id, spec.code,
                             fmt::format("covariate {} row {}: non-numeric value '{}'", spec.code, row_no, cell));
                        ok = false;
                    } else {
                        rec.covariates[idx] = *v;
                    }
                }
            }
        }
        if (!ok) continue;
        if (rec.respondent_id.empty()) {
            fail("", "respondent_id", fmt::format("row {}: empty respondent_id", row_no));
            continue;
        }
        if (!ids.insert(rec.respondent_id).second) {
            fail(rec.respondent_id, "respondent_id", fmt::format("row {}: duplicate respondent_id '{}'", row_no, rec.respondent_id));
            continue;
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

inline SurveyDataset load_dataset(const std::string& path, const SurveySchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_dataset(in, schema, path);
}

inline std::string format_covariate(const CovariateValue& v) {
    if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
    if (std::holds_alternative<double>(v)) return fmt::format("{}", std::get<double>(v));
    return "";
}

inline void write_dataset(std::ostream& out, const SurveyDataset& ds) {
    csv::Row header{"respondent_id"};
    for (const auto& it : ds.schema.items()) header.push_back(it.code);
    for (const auto& c : ds.schema.covariates()) header.push_back(c.code);
    csv::write_row(out, header);
    for (const auto& rec : ds.records) {
        csv::Row row{rec.respondent_id};
        for (const auto& v : rec.responses) row.push_back(v ? std::to_string(*v) : "");
        for (const auto& c : rec.covariates) row.push_back(format_covariate(c));
        csv::write_row(out, row);
    }
}

inline void save_dataset(const std::string& path, const SurveyDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_dataset(out, ds);
}

namespace detail {

inline std::optional<std::string> violated_rule(const SurveyRecord& rec, const SurveySchema& schema,
                                                const std::vector<ConsistencyRule>& rules) {
    for (const auto& rule : rules) {
        std::vector<int> vals;
        for (const auto& code : rule.items) vals.push_back(*rec.responses[schema.require_item(code)]);
        const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
        if (rule.type == ConsistencyRule::Type::straight_lining) {
            if (*lo == *hi) return rule.name;
        } else if (*hi - *lo > rule.max_difference) {
            return rule.name;
        }
    }
    return std::nullopt;
}

}  // namespace detail

// Listwise deletion on all schema items, then consistency rules.
inline std::pair<SurveyDataset, CleaningReport> clean_dataset(const SurveyDataset& raw,
                                                              const std::vector<ConsistencyRule>& rules) {
    SurveyDataset out;
    out.schema = raw.schema;
    out.provenance = raw.provenance;
    CleaningReport report;
    report.input = raw.records.size();
    for (const auto& rec : raw.records) {
        std::size_t missing = 0;
        for (const auto& v : rec.responses)
            if (!v) ++missing;
        if (missing == rec.responses.size() && missing > 0) {
            report.dropped.push_back({rec.respondent_id, "un-filled", "no item answered"});
            continue;
        }
        if (missing > 0) {
            report.dropped.push_back({rec.respondent_id, "partially-filled", fmt::format("{} items missing", missing)});
            continue;
        }
        if (auto rule = detail::violated_rule(rec, raw.schema, rules)) {
            report.dropped.push_back({rec.respondent_id, "inconsistent", *rule});
            continue;
        }
        out.records.push_back(rec);
    }
    report.kept = out.records.size();
    if (out.records.empty()) throw DataError("cleaning dropped every record");
    out.provenance.cleaning = report;
    return {std::move(out), std::move(report)};
}

inline std::pair<SurveyDataset, CleaningReport> clean_dataset(const SurveyDataset& raw) {
    return clean_dataset(raw, raw.schema.rules());
}

struct DistributionRow {
    std::string item;
    std::array<double, LikertValue::levels> shares{};  // percent, levels 1..7
    std::size_t n = 0;

    double total() const {
        double s = 0.0;
        for (double v : shares) s += v;
        return s;
    }
    void validate(double tolerance = 0.1) const {
        for (double v : shares)
            if (!(v >= 0.0)) throw DataError("distribution " + item + ": negative or NaN share");
        if (std::abs(total() - 100.0) > tolerance)
            throw DataError(fmt::format("distribution {}: shares sum to {} (expected 100 +/- {})", item, total(), tolerance));
    }
};

inline DistributionRow likert_distribution(const SurveyDataset& ds, const std::string& item) {
    const std::size_t idx = ds.schema.require_item(item);
    std::array<std::size_t, LikertValue::levels> counts{};
    std::size_t n = 0;
    for (const auto& rec : ds.records) {
        if (const auto& v = rec.responses[idx]) {
            ++counts[static_cast<std::size_t>(*v - 1)];
            ++n;
        }
    }
    if (n == 0) throw DataError("distribution " + item + ": no responses");
    DistributionRow row;
    row.item = item;
    row.n = n;
    for (std::size_t k = 0; k < counts.size(); ++k) row.shares[k] = 100.0 * static_cast<double>(counts[k]) / static_cast<double>(n);
    return row;
}

// Reference tables round each share to 0.1, so their totals drift by a few tenths.
inline constexpr double reference_share_tolerance = 0.5;

inline double weighted_mean(const DistributionRow& row) {
    row.validate(reference_share_tolerance);
    double m = 0.0;
    for (std::size_t k = 0; k < row.shares.size(); ++k) m += static_cast<double>(k + 1) * row.shares[k];
    return m / 100.0;
}

// Cochran sample size z^2 p (1 - p) / e^2, floored: the reference survey
// reports 384 for (1.96, 0.5, 0.05), where the exact value is 384.16.
inline long long required_sample_size(double z, double p, double e) {
    if (!(z > 0.0)) throw PreconditionError("required_sample_size: z must be positive");
    if (!(p > 0.0 && p < 1.0)) throw PreconditionError("required_sample_size: p must lie in (0, 1)");
    if (!(e > 0.0 && e < 1.0)) throw PreconditionError("required_sample_size: e must lie in (0, 1)");
    return static_cast<long long>(std::floor(z * z * p * (1.0 - p) / (e * e)));
}

}  // namespace surveyrank
