#pragma once

// Multi-criteria ranking of attributes: decision-matrix construction from
// within-class response distributions, and the MOORA, TOPSIS and VIKOR
// ranking methods.

#include "surveyrank/common.hpp"
#include "surveyrank/survey_data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace surveyrank {

enum class Direction { benefit, cost };

inline std::string to_string(Direction d) { return d == Direction::benefit ? "benefit" : "cost"; }

struct Criterion {
    std::string name;
    Direction direction = Direction::benefit;
    double weight = 1.0;
};

struct DecisionMatrix {
    std::vector<std::string> alternatives;
    std::vector<Criterion> criteria;
    Matrix x;  // alternatives x criteria, non-negative
    Warnings warnings;

    Eigen::Index n_alternatives() const noexcept { return x.rows(); }
    Eigen::Index n_criteria() const noexcept { return x.cols(); }
};

// Validates shapes and values and normalizes the weights to sum to 1.
inline DecisionMatrix make_decision_matrix(std::vector<std::string> alternatives, std::vector<Criterion> criteria, Matrix x) {
    if (alternatives.empty() || criteria.empty()) throw PreconditionError("decision matrix: no alternatives or criteria");
    if (x.rows() != static_cast<Eigen::Index>(alternatives.size()) || x.cols() != static_cast<Eigen::Index>(criteria.size()))
        throw PreconditionError(fmt::format("decision matrix: {}x{} values for {} alternatives and {} criteria", x.rows(),
                                            x.cols(), alternatives.size(), criteria.size()));
    if (!x.allFinite()) throw PreconditionError("decision matrix: non-finite value");
    if ((x.array() < 0.0).any()) throw PreconditionError("decision matrix: negative value");
    double total = 0.0;
    for (const auto& c : criteria) {
        if (!(c.weight > 0.0) || !std::isfinite(c.weight))
            throw PreconditionError("decision matrix: criterion '" + c.name + "' needs a positive weight");
        total += c.weight;
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (x.col(j).isZero(0.0))
            throw PreconditionError("decision matrix: criterion '" + criteria[static_cast<std::size_t>(j)].name + "' is all zero");
    for (auto& c : criteria) c.weight /= total;
    return {std::move(alternatives), std::move(criteria), std::move(x), {}};
}

enum class MatrixConstruction { level_shares, mean_importance };

struct MatrixOptions {
    MatrixConstruction construction = MatrixConstruction::level_shares;
    std::vector<int> benefit_levels{5, 6, 7};
    std::vector<int> cost_levels{1, 2, 3};
    std::vector<double> weights;  // empty: equal
    std::size_t min_members = 5;
};

// Criteria are Likert-level response shares (percent) within the class, or
// a single mean-importance criterion.
inline DecisionMatrix build_decision_matrix(const SurveyDataset& ds, const std::vector<std::size_t>& class_members,
                                            const std::vector<std::string>& attribute_items, std::optional<ScaleKind> kind = {},
                                            const MatrixOptions& opt = {}) {
    if (class_members.empty()) throw PreconditionError("build_decision_matrix: empty class");
    if (class_members.size() < opt.min_members)
        throw PreconditionError(fmt::format("build_decision_matrix: class has {} members, need at least {}", class_members.size(),
                                            opt.min_members));
    if (attribute_items.size() < 2) throw PreconditionError("build_decision_matrix: need at least 2 attributes");
    std::vector<std::size_t> cols;
    for (const auto& code : attribute_items) {
        cols.push_back(ds.schema.require_item(code));
        if (kind) {
            const auto& of_kind = ds.schema.items_of_kind(*kind);
            if (std::find(of_kind.begin(), of_kind.end(), code) == of_kind.end())
                throw PreconditionError("build_decision_matrix: item '" + code + "' is not a " + to_string(*kind));
        }
    }
    for (auto r : class_members)
        if (r >= ds.records.size()) throw PreconditionError("build_decision_matrix: member index out of range");

    const auto a = static_cast<Eigen::Index>(attribute_items.size());
    std::vector<Criterion> criteria;
    Matrix x;
    Warnings warnings;
    if (opt.construction == MatrixConstruction::mean_importance) {
        criteria.push_back({"mean importance", Direction::benefit, 1.0});
        x.resize(a, 1);
    } else {
        for (int lv : opt.cost_levels) criteria.push_back({fmt::format("level {}", lv), Direction::cost, 1.0});
        for (int lv : opt.benefit_levels) criteria.push_back({fmt::format("level {}", lv), Direction::benefit, 1.0});
        for (const auto& c : criteria) {
            const int lv = std::stoi(c.name.substr(6));
            if (lv < LikertValue::min || lv > LikertValue::max) throw PreconditionError("build_decision_matrix: level out of range");
        }
        x.resize(a, static_cast<Eigen::Index>(criteria.size()));
    }
    if (!opt.weights.empty()) {
        if (opt.weights.size() != criteria.size())
            throw PreconditionError(fmt::format("build_decision_matrix: {} weights for {} criteria", opt.weights.size(), criteria.size()));
        for (std::size_t j = 0; j < criteria.size(); ++j) criteria[j].weight = opt.weights[j];
    }

    for (Eigen::Index i = 0; i < a; ++i) {
        std::array<double, LikertValue::levels> counts{};
        double n = 0.0;
        double sum = 0.0;
        for (auto r : class_members) {
            const auto& v = ds.records[r].responses[cols[static_cast<std::size_t>(i)]];
            if (!v) continue;
            counts[static_cast<std::size_t>(*v - LikertValue::min)] += 1.0;
            sum += *v;
            n += 1.0;
        }
        if (n == 0.0)
            throw DataError("build_decision_matrix: attribute '" + attribute_items[static_cast<std::size_t>(i)] + "' has no responses in class");
        if (opt.construction == MatrixConstruction::mean_importance) {
            x(i, 0) = sum / n;
        } else {
            for (std::size_t j = 0; j < criteria.size(); ++j) {
                const int lv = std::stoi(criteria[j].name.substr(6));
                x(i, static_cast<Eigen::Index>(j)) = 100.0 * counts[static_cast<std::size_t>(lv - LikertValue::min)] / n;
            }
        }
    }

    // Levels nobody in the class used carry no information and have no norm.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (x.col(j).isZero(0.0))
            warnings.push_back("criterion '" + criteria[static_cast<std::size_t>(j)].name + "' unused in class; dropped");
        else
            keep.push_back(j);
    }
    if (keep.empty()) throw DataError("build_decision_matrix: every criterion column is zero");
    std::vector<Criterion> kept;
    Matrix xk(a, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        kept.push_back(criteria[static_cast<std::size_t>(keep[k])]);
        xk.col(static_cast<Eigen::Index>(k)) = x.col(keep[k]);
    }
    DecisionMatrix dm = make_decision_matrix(attribute_items, std::move(kept), std::move(xk));
    dm.warnings = std::move(warnings);
    return dm;
}

enum class Method { moora, topsis, vikor };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::moora: return "MOORA";
        case Method::topsis: return "TOPSIS";
        case Method::vikor: return "VIKOR";
    }
    return "?";
}

enum class ScoreOrder { descending, ascending };

struct RankVector {
    std::vector<int> competition;  // 1 = best, ties share the minimum rank
    std::vector<int> total;        // ties broken by alternative index
    std::vector<std::string> ties;

    std::size_t size() const noexcept { return total.size(); }
};

inline RankVector ranks_from_scores(const std::vector<double>& scores, ScoreOrder order = ScoreOrder::descending,
                                    const std::vector<std::string>& labels = {}) {
    const std::size_t a = scores.size();
    for (std::size_t i = 0; i < a; ++i)
        if (std::isnan(scores[i])) throw PreconditionError(fmt::format("ranks_from_scores: NaN score at alternative {}", i + 1));
    double scale = 1.0;
    for (double s : scores) scale = std::max(scale, std::abs(s));
    const double tol = 1e-12 * scale;

    std::vector<std::size_t> idx(a);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
        return order == ScoreOrder::descending ? scores[l] > scores[r] : scores[l] < scores[r];
    });
    RankVector rv;
    rv.competition.assign(a, 0);
    rv.total.assign(a, 0);
    std::size_t pos = 0;
    while (pos < a) {
        std::size_t end = pos + 1;
        while (end < a && std::abs(scores[idx[end]] - scores[idx[pos]]) <= tol) ++end;
        std::vector<std::size_t> group(idx.begin() + static_cast<std::ptrdiff_t>(pos), idx.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(group.begin(), group.end());
        for (std::size_t g = 0; g < group.size(); ++g) {
            rv.competition[group[g]] = static_cast<int>(pos + 1);
            rv.total[group[g]] = static_cast<int>(pos + g + 1);
        }
        if (group.size() > 1) {
            std::string names;
            for (auto g : group) {
                if (!names.empty()) names += ", ";
                names += labels.empty() ? fmt::format("#{}", g + 1) : labels[g];
            }
            rv.ties.push_back(fmt::format("tie at rank {}: {} (total order by index)", pos + 1, names));
        }
        pos = end;
    }
    return rv;
}

inline RankVector ranks_from_scores(const Vector& scores, ScoreOrder order = ScoreOrder::descending,
                                    const std::vector<std::string>& labels = {}) {
    return ranks_from_scores(std::vector<double>(scores.data(), scores.data() + scores.size()), order, labels);
}

struct VikorDiagnostics {
    double v = 0.5;
    Vector s;
    Vector r;
    Vector q;
    bool acceptable_advantage = false;
    bool acceptable_stability = false;
};

struct MethodResult {
    Method method = Method::moora;
    std::vector<std::string> alternatives;
    Vector scores;  // MOORA y, TOPSIS closeness, VIKOR Q
    RankVector ranks;
    std::optional<VikorDiagnostics> vikor;
    Warnings warnings;
};

namespace detail {

inline Matrix vector_normalized(const DecisionMatrix& dm) {
    const Vector norms = dm.x.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < norms.size(); ++j)
        if (!(norms(j) > 0.0)) throw PreconditionError("criterion '" + dm.criteria[static_cast<std::size_t>(j)].name + "' has zero norm");
    return dm.x * norms.cwiseInverse().asDiagonal();
}

inline double signed_weight(const Criterion& c) { return c.direction == Direction::benefit ? c.weight : -c.weight; }

}  // namespace detail

inline MethodResult moora_rank(const DecisionMatrix& dm) {
    const Matrix xn = detail::vector_normalized(dm);
    Vector w(dm.n_criteria());
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = detail::signed_weight(dm.criteria[static_cast<std::size_t>(j)]);
    MethodResult res;
    res.method = Method::moora;
    res.alternatives = dm.alternatives;
    res.scores = xn * w;
    res.ranks = ranks_from_scores(res.scores, ScoreOrder::descending, dm.alternatives);
    return res;
}

inline MethodResult topsis_rank(const DecisionMatrix& dm) {
    Matrix v = detail::vector_normalized(dm);
    for (Eigen::Index j = 0; j < v.cols(); ++j) v.col(j) *= dm.criteria[static_cast<std::size_t>(j)].weight;
    const auto a = v.rows();
    Vector pis(v.cols());
    Vector nis(v.cols());
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const bool benefit = dm.criteria[static_cast<std::size_t>(j)].direction == Direction::benefit;
        pis(j) = benefit ? v.col(j).maxCoeff() : v.col(j).minCoeff();
        nis(j) = benefit ? v.col(j).minCoeff() : v.col(j).maxCoeff();
    }
    MethodResult res;
    res.method = Method::topsis;
    res.alternatives = dm.alternatives;
    res.scores.resize(a);
    bool all_degenerate = true;
    for (Eigen::Index i = 0; i < a; ++i) {
        const double dp = (v.row(i) - pis.transpose()).norm();
        const double dn = (v.row(i) - nis.transpose()).norm();
        if (dp + dn == 0.0) {
            res.scores(i) = 0.5;
            continue;
        }
        all_degenerate = false;
        // Same as dn / (dp + dn), written so rounding stays monotone in dp and dn.
        res.scores(i) = dn == 0.0 ? 0.0 : 1.0 / (1.0 + dp / dn);
    }
    if (all_degenerate) res.warnings.push_back("TOPSIS: all alternatives identical; universal tie");
    res.ranks = ranks_from_scores(res.scores, ScoreOrder::descending, dm.alternatives);
    return res;
}

inline MethodResult vikor_rank(const DecisionMatrix& dm, double v = 0.5) {
    if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError("vikor_rank: v must lie in [0, 1]");
    const auto a = dm.n_alternatives();
    const auto c = dm.n_criteria();
    MethodResult res;
    res.method = Method::vikor;
    res.alternatives = dm.alternatives;
    VikorDiagnostics diag;
    diag.v = v;
    diag.s = Vector::Zero(a);
    diag.r = Vector::Zero(a);
    for (Eigen::Index j = 0; j < c; ++j) {
        const auto& crit = dm.criteria[static_cast<std::size_t>(j)];
        const bool benefit = crit.direction == Direction::benefit;
        const double best = benefit ? dm.x.col(j).maxCoeff() : dm.x.col(j).minCoeff();
        const double worst = benefit ? dm.x.col(j).minCoeff() : dm.x.col(j).maxCoeff();
        if (best == worst) {
            res.warnings.push_back("VIKOR: criterion '" + crit.name + "' is constant; contributes 0");
            continue;
        }
        for (Eigen::Index i = 0; i < a; ++i) {
            const double term = crit.weight * (best - dm.x(i, j)) / (best - worst);
            diag.s(i) += term;
            diag.r(i) = std::max(diag.r(i), term);
        }
    }
    const double s_best = diag.s.minCoeff();
    const double s_worst = diag.s.maxCoeff();
    const double r_best = diag.r.minCoeff();
    const double r_worst = diag.r.maxCoeff();
    diag.q = Vector::Zero(a);
    for (Eigen::Index i = 0; i < a; ++i) {
        if (s_worst > s_best) diag.q(i) += v * (diag.s(i) - s_best) / (s_worst - s_best);
        if (r_worst > r_best) diag.q(i) += (1.0 - v) * (diag.r(i) - r_best) / (r_worst - r_best);
    }
    if (s_worst == s_best && r_worst == r_best) res.warnings.push_back("VIKOR: all alternatives equivalent; universal tie");
    res.scores = diag.q;
    res.ranks = ranks_from_scores(diag.q, ScoreOrder::ascending, dm.alternatives);

    std::vector<std::size_t> by_q(static_cast<std::size_t>(a));
    for (std::size_t i = 0; i < by_q.size(); ++i) by_q[static_cast<std::size_t>(res.ranks.total[i] - 1)] = i;
    const auto first = static_cast<Eigen::Index>(by_q[0]);
    if (a >= 2) {
        const auto second = static_cast<Eigen::Index>(by_q[1]);
        diag.acceptable_advantage = diag.q(second) - diag.q(first) >= 1.0 / static_cast<double>(a - 1);
    } else {
        diag.acceptable_advantage = true;
    }
    diag.acceptable_stability = diag.s(first) == s_best || diag.r(first) == r_best;
    res.vikor = std::move(diag);
    return res;
}

inline MethodResult rank_with(Method m, const DecisionMatrix& dm, double vikor_v = 0.5) {
    switch (m) {
        case Method::moora: return moora_rank(dm);
        case Method::topsis: return topsis_rank(dm);
        case Method::vikor: return vikor_rank(dm, vikor_v);
    }
    throw PreconditionError("unknown method");
}

}  // namespace surveyrank
