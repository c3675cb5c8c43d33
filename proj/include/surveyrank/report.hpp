#pragma once

// Plain-text report rendering: CSV and Markdown tables, an SVG scree plot,
// and an artifact writer that records every file it produces.

#include "surveyrank/common.hpp"
#include "surveyrank/csv.hpp"
#include "surveyrank/efa.hpp"
#include "surveyrank/lcca.hpp"
#include "surveyrank/mcdm.hpp"
#include "surveyrank/psychometrics.hpp"
#include "surveyrank/rank_agg.hpp"
#include "surveyrank/survey_data.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace surveyrank {

inline std::string num(double v, int precision = 3) {
    if (std::isnan(v)) return "NA";
    std::string s = fmt::format("{:.{}f}", v, precision);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);  // no "-0.000"
    return s;
}

struct Table {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> notes;

    std::string to_csv() const {
        std::vector<csv::Row> all{header};
        all.insert(all.end(), rows.begin(), rows.end());
        return csv::to_string(all);
    }

    std::string to_markdown(const Warnings& warnings) const {
        std::string out;
        if (!title.empty()) out += "## " + title + "\n\n";
        auto line = [](const std::vector<std::string>& cells) {
            std::string l = "|";
            for (const auto& c : cells) l += " " + c + " |";
            return l + "\n";
        };
        out += line(header);
        std::string sep = "|";
        for (std::size_t i = 0; i < header.size(); ++i) sep += i == 0 ? " --- |" : " ---: |";
        out += sep + "\n";
        for (const auto& r : rows) out += line(r);
        out += "\n";
        for (const auto& n : notes) out += n + "\n";
        if (!notes.empty()) out += "\n";
        if (warnings.empty()) {
            out += "warnings: none\n";
        } else {
            out += "warnings:\n";
            for (const auto& w : warnings) out += "- " + w + "\n";
        }
        return out;
    }
};

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const noexcept { return root_; }
    const std::vector<std::string>& written() const noexcept { return written_; }

    // Writes `content` to root/relative and returns the relative path.
    std::string write(const std::string& relative, const std::string& content) {
        const auto path = root_ / relative;
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out << content;
        out.close();
        if (!out) throw Error("write failed for '" + path.string() + "'");
        written_.push_back(relative);
        return relative;
    }

    void table(const std::string& stem, const Table& t, const Warnings& warnings = {}) {
        write(stem + ".csv", t.to_csv());
        write(stem + ".md", t.to_markdown(warnings));
    }

private:
    std::filesystem::path root_;
    std::vector<std::string> written_;
};

// Item distributions and weighted means, one row per item.
inline Table distribution_table(const SurveyDataset& ds, const std::vector<std::string>& items) {
    Table t;
    t.title = "Item response distributions (%)";
    t.header = {"scale", "code", "statement", "1", "2", "3", "4", "5", "6", "7", "mean", "n"};
    for (const auto& code : items) {
        const auto row = likert_distribution(ds, code);
        std::string scale;
        for (const auto& s : ds.schema.scales())
            if (std::find(s.item_codes.begin(), s.item_codes.end(), code) != s.item_codes.end()) scale = s.name.empty() ? s.id : s.name;
        std::vector<std::string> r{scale, code, ds.schema.items()[ds.schema.require_item(code)].prompt};
        for (double s : row.shares) r.push_back(num(s, 1));
        r.push_back(num(weighted_mean(row), 2));
        r.push_back(std::to_string(row.n));
        t.rows.push_back(std::move(r));
    }
    t.notes.push_back("1 = strongly disagree, 7 = strongly agree; mean is the share-weighted level.");
    return t;
}

inline Table reliability_table(const std::vector<AlphaResult>& alphas) {
    Table t;
    t.title = "Scale reliability";
    t.header = {"scale", "items", "alpha", "standardized_alpha", "below_0.70"};
    for (const auto& a : alphas)
        t.rows.push_back({a.scale, std::to_string(a.k), num(a.raw), num(a.standardized), a.below_threshold ? "yes" : "no"});
    return t;
}

inline Table adequacy_table(const AdequacyReport& a) {
    Table t;
    t.title = "Sampling adequacy";
    t.header = {"statistic", "value"};
    t.rows.push_back({"KMO", num(a.kmo_overall)});
    t.rows.push_back({"Bartlett chi2", num(a.bartlett_chi2, 2)});
    t.rows.push_back({"Bartlett df", std::to_string(a.bartlett_df)});
    t.rows.push_back({"Bartlett p", fmt::format("{:.3g}", a.bartlett_p)});
    t.rows.push_back({"condition number", fmt::format("{:.4g}", a.condition_number)});
    for (const auto& [item, msa] : a.kmo_per_item) t.rows.push_back({"MSA " + item, num(msa)});
    return t;
}

inline Table eigenvalue_table(const Vector& initial, const Vector& reduced) {
    Table t;
    t.title = "Eigenvalues";
    t.header = {"index", "initial", "initial_pct", "cumulative_pct", "reduced"};
    const double p = static_cast<double>(initial.size());
    double cum = 0.0;
    for (Eigen::Index i = 0; i < initial.size(); ++i) {
        cum += initial(i);
        t.rows.push_back({std::to_string(i + 1), num(initial(i)), num(100.0 * initial(i) / p, 2), num(100.0 * cum / p, 2),
                          i < reduced.size() ? num(reduced(i)) : ""});
    }
    return t;
}

inline std::string scree_svg(const Vector& eigenvalues, int chosen) {
    const double w = 480.0;
    const double h = 320.0;
    const double left = 50.0;
    const double bottom = 40.0;
    const double top = 20.0;
    const double right = 20.0;
    const auto n = eigenvalues.size();
    const double ymax = std::max(1.0, std::ceil(eigenvalues.maxCoeff()));
    auto x = [&](Eigen::Index i) { return left + (w - left - right) * (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5); };
    auto y = [&](double v) { return h - bottom - (h - top - bottom) * std::max(v, 0.0) / ymax; };
    std::string s = fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n", w, h, w, h);
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n", left, h - bottom, w - right);
    s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n", left, h - bottom, top);
    for (int k = 0; k <= static_cast<int>(ymax); ++k)
        s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n", left - 6, y(k) + 3, k);
    s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n", left, y(1.0), w - right);
    std::string pts;
    for (Eigen::Index i = 0; i < n; ++i) pts += fmt::format("{}{:.1f},{:.1f}", i ? " " : "", x(i), y(eigenvalues(i)));
    s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool mark = i + 1 == chosen;
        s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"{}\" fill=\"{}\"/>\n", x(i), y(eigenvalues(i)), mark ? 5 : 3, mark ? "crimson" : "steelblue");
        s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n", x(i), h - bottom + 14, i + 1);
    }
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" text-anchor=\"middle\">factor</text>\n", (left + w - right) / 2, h - 6);
    s += fmt::format("<text x=\"12\" y=\"{:.1f}\" font-size=\"11\" transform=\"rotate(-90 12 {:.1f})\" text-anchor=\"middle\">eigenvalue</text>\n", h / 2, h / 2);
    s += "</svg>\n";
    return s;
}

inline Table pruning_table(const PruneResult& pr) {
    Table t;
    t.title = "Indicator pruning";
    t.header = {"step", "deleted_item", "max_abs_loading", "items_remaining"};
    for (std::size_t i = 0; i < pr.deleted.size(); ++i)
        t.rows.push_back({std::to_string(i + 1), pr.deleted[i].item, num(pr.deleted[i].loading), std::to_string(pr.deleted[i].remaining)});
    return t;
}

inline std::vector<std::string> factor_names(int m) {
    std::vector<std::string> out;
    for (int f = 0; f < m; ++f) out.push_back(fmt::format("F{}", f + 1));
    return out;
}

inline Table pattern_table(const FactorSolution& s) {
    Table t;
    t.title = "Promax pattern loadings";
    t.header = {"item"};
    for (const auto& f : factor_names(s.n_factors())) t.header.push_back(f);
    t.header.push_back("communality");
    for (Eigen::Index i = 0; i < s.pattern.rows(); ++i) {
        std::vector<std::string> r{s.items[static_cast<std::size_t>(i)]};
        for (Eigen::Index f = 0; f < s.pattern.cols(); ++f) r.push_back(num(s.pattern(i, f)));
        r.push_back(num(s.communalities(i)));
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline Table phi_table(const FactorSolution& s) {
    Table t;
    t.title = "Factor correlations";
    const auto names = factor_names(s.n_factors());
    t.header = {"factor"};
    t.header.insert(t.header.end(), names.begin(), names.end());
    for (Eigen::Index i = 0; i < s.phi.rows(); ++i) {
        std::vector<std::string> r{names[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < s.phi.cols(); ++j) r.push_back(num(s.phi(i, j)));
        t.rows.push_back(std::move(r));
    }
    return t;
}

// One row per original indicator; pruned indicators keep an empty loading.
inline Table measurement_model_table(const SurveySchema& schema, const std::vector<std::string>& all_items,
                                     const FactorSolution& s, double threshold) {
    Table t;
    t.title = "Measurement model";
    t.header = {"scale", "code", "indicator", "factor", "loading"};
    for (const auto& code : all_items) {
        std::string scale;
        for (const auto& sc : schema.scales())
            if (std::find(sc.item_codes.begin(), sc.item_codes.end(), code) != sc.item_codes.end()) scale = sc.name.empty() ? sc.id : sc.name;
        std::vector<std::string> r{scale, code, schema.items()[schema.require_item(code)].prompt, "", ""};
        auto it = std::find(s.items.begin(), s.items.end(), code);
        if (it != s.items.end()) {
            const auto i = static_cast<Eigen::Index>(it - s.items.begin());
            Eigen::Index f = 0;
            const double v = s.pattern.row(i).cwiseAbs().maxCoeff(&f);
            if (v >= threshold) {
                r[3] = fmt::format("F{}", f + 1);
                r[4] = num(s.pattern(i, f));
            }
        }
        t.rows.push_back(std::move(r));
    }
    t.notes.push_back(fmt::format("Loadings below {:.2f} are left blank.", threshold));
    return t;
}

inline Table fit_table(const ModelSelection& sel, SelectionCriterion criterion) {
    Table t;
    t.title = "Latent class model comparison";
    t.header = {"K", "status", "loglik", "parameters", "AIC", "BIC", "iterations", "chosen"};
    for (const auto& r : sel.table) {
        if (!r.ok) {
            t.rows.push_back({std::to_string(r.k), "failed", "", "", "", "", "", ""});
            continue;
        }
        t.rows.push_back({std::to_string(r.k), "ok", num(r.loglik, 3), std::to_string(r.n_parameters), num(r.aic, 3), num(r.bic, 3),
                          std::to_string(r.iterations), r.k == sel.chosen.model.k ? "*" : ""});
    }
    t.notes.push_back(std::string("Selection criterion: ") + (criterion == SelectionCriterion::bic ? "BIC" : "AIC") + " (ties to smaller K).");
    return t;
}

inline std::vector<std::string> class_names(int k) {
    std::vector<std::string> out;
    for (int c = 0; c < k; ++c) out.push_back(fmt::format("LC{}", c + 1));
    return out;
}

inline Table class_means_table(const Matrix& means, const std::vector<double>& shares) {
    Table t;
    t.title = "Class means of factor scores";
    const auto k = static_cast<int>(means.rows());
    t.header = {"factor"};
    for (int c = 0; c < k; ++c) t.header.push_back(fmt::format("LC{} ({}%)", c + 1, num(100.0 * shares[static_cast<std::size_t>(c)], 1)));
    for (Eigen::Index f = 0; f < means.cols(); ++f) {
        std::vector<std::string> r{fmt::format("F{}", f + 1)};
        for (Eigen::Index c = 0; c < means.rows(); ++c) r.push_back(num(means(c, f)));
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline Table covariate_table(const std::vector<CovariateProfile>& profiles, int k) {
    Table t;
    t.title = "Passive covariate profiles";
    t.header = {"covariate", "level"};
    for (const auto& c : class_names(k)) t.header.push_back(c);
    t.header.push_back("overall");
    for (const auto& p : profiles) {
        if (p.kind == CovariateKind::categorical) {
            for (std::size_t l = 0; l < p.levels.size(); ++l) {
                std::vector<std::string> r{p.code, p.levels[l]};
                for (int c = 0; c < k; ++c) r.push_back(num(p.class_shares(c, static_cast<Eigen::Index>(l)), 1));
                r.push_back(num(p.overall_shares[l], 1));
                t.rows.push_back(std::move(r));
            }
        } else {
            std::vector<std::string> r{p.code, "mean"};
            for (int c = 0; c < k; ++c) r.push_back(num(p.class_means(c), 1));
            r.push_back(num(p.overall_mean, 1));
            t.rows.push_back(std::move(r));
        }
    }
    t.notes.push_back("Categorical rows are % of respondents within each class; continuous rows are class means.");
    return t;
}

// One panel: alternatives x (methods x classes + meta per class), competition ranks.
struct RankingPanel {
    std::string id;  // file stem
    std::string title;
    std::vector<std::string> labels;
    std::vector<std::vector<MethodResult>> per_class;  // [class][method]
    std::vector<AggregationResult> meta;               // [class]
};

inline Table ranking_table(const RankingPanel& panel) {
    Table t;
    t.title = panel.title;
    const int k = static_cast<int>(panel.per_class.size());
    t.header = {"attribute"};
    const std::vector<Method> methods{Method::moora, Method::topsis, Method::vikor};
    for (auto m : methods)
        for (int c = 0; c < k; ++c) t.header.push_back(fmt::format("{} LC{}", to_string(m), c + 1));
    for (int c = 0; c < k; ++c) t.header.push_back(fmt::format("Meta LC{}", c + 1));
    for (std::size_t a = 0; a < panel.labels.size(); ++a) {
        std::vector<std::string> r{panel.labels[a]};
        for (std::size_t m = 0; m < methods.size(); ++m)
            for (int c = 0; c < k; ++c) r.push_back(std::to_string(panel.per_class[static_cast<std::size_t>(c)][m].ranks.competition[a]));
        for (int c = 0; c < k; ++c) r.push_back(std::to_string(panel.meta[static_cast<std::size_t>(c)].meta[a]));
        t.rows.push_back(std::move(r));
    }
    for (int c = 0; c < k; ++c) {
        for (const auto& res : panel.per_class[static_cast<std::size_t>(c)])
            for (const auto& tie : res.ranks.ties) t.notes.push_back(fmt::format("LC{} {}: {}", c + 1, to_string(res.method), tie));
        const auto& agg = panel.meta[static_cast<std::size_t>(c)];
        t.notes.push_back(fmt::format("LC{} meta: {} {} objective {}{}", c + 1, to_string(agg.method), to_string(agg.metric),
                                      num(agg.objective, 3), agg.optimal ? " (optimal)" : ""));
    }
    return t;
}

inline Table method_detail_table(const std::string& set, const std::vector<std::vector<MethodResult>>& per_class) {
    Table t;
    t.title = "MCDM details: " + set;
    t.header = {"class", "method", "alternative", "score", "competition_rank", "total_rank", "S", "R", "Q"};
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        for (const auto& res : per_class[c]) {
            for (std::size_t a = 0; a < res.alternatives.size(); ++a) {
                const auto ai = static_cast<Eigen::Index>(a);
                std::vector<std::string> r{fmt::format("LC{}", c + 1), to_string(res.method), res.alternatives[a], num(res.scores(ai), 6),
                                           std::to_string(res.ranks.competition[a]), std::to_string(res.ranks.total[a])};
                if (res.vikor) {
                    r.push_back(num(res.vikor->s(ai), 6));
                    r.push_back(num(res.vikor->r(ai), 6));
                    r.push_back(num(res.vikor->q(ai), 6));
                } else {
                    r.insert(r.end(), {"", "", ""});
                }
                t.rows.push_back(std::move(r));
            }
            if (res.vikor)
                t.notes.push_back(fmt::format("LC{} VIKOR (v = {}): acceptable advantage {}, acceptable stability {}", c + 1, num(res.vikor->v, 2),
                                              res.vikor->acceptable_advantage ? "yes" : "no", res.vikor->acceptable_stability ? "yes" : "no"));
        }
    }
    return t;
}

inline Table decision_matrix_table(const DecisionMatrix& dm, const std::vector<std::string>& labels) {
    Table t;
    t.header = {"alternative"};
    for (const auto& c : dm.criteria) t.header.push_back(fmt::format("{} ({}, w={})", c.name, to_string(c.direction), num(c.weight, 4)));
    for (Eigen::Index i = 0; i < dm.x.rows(); ++i) {
        std::vector<std::string> r{labels[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < dm.x.cols(); ++j) r.push_back(num(dm.x(i, j), 4));
        t.rows.push_back(std::move(r));
    }
    return t;
}

}  // namespace surveyrank
