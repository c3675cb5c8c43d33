#pragma once

// Synthetic survey generator: latent classes, class-conditional factor
// Gaussians, ordinal discretization of attitude items, class-dependent
// attribute importance ratings and passive covariates.

#include "surveyrank/common.hpp"
#include "surveyrank/survey_data.hpp"

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace surveyrank {

inline constexpr int n_thresholds = LikertValue::levels - 1;
using Thresholds = std::array<double, n_thresholds>;

struct ClassSpec {
    double share = 1.0;
    std::vector<double> factor_means;  // length m
    std::vector<double> factor_sd;     // length m
};

struct AttributeSet {
    std::string scale_id;
    std::string scale_name;
    ScaleKind kind = ScaleKind::motivator;
    std::vector<std::string> codes;
    std::vector<std::string> labels;
    std::vector<std::vector<int>> class_ranks;  // [class][attribute], 1 = most important
    double top_mean = 1.0;                      // latent mean of the rank-1 attribute
    double step = 0.35;                         // latent mean drop per rank
};

struct CategoricalRule {
    std::string code;
    std::vector<std::string> levels;
    std::vector<std::vector<double>> class_probs;  // [class][level]
};

struct ContinuousRule {
    std::string code;
    std::string units;
    std::vector<double> class_means;
    std::vector<double> class_sd;
    double lower = -std::numeric_limits<double>::infinity();
};

struct GeneratorConfig {
    std::size_t n = 1000;
    std::uint64_t seed = 1;

    // Attitude block.
    std::vector<std::string> item_codes;
    std::vector<std::string> item_labels;
    std::vector<std::string> factor_names;
    std::vector<std::string> factor_labels;
    Matrix loadings;  // p x m target loadings on the ordinal scale
    Matrix phi;       // m x m within-class factor correlation
    std::vector<Thresholds> thresholds;  // per item, strictly increasing
    bool compensate_discretization = true;
    double max_latent_loading = 0.95;

    std::vector<ClassSpec> classes;
    std::vector<AttributeSet> attributes;
    Thresholds attribute_thresholds{-2.4, -1.8, -1.2, -0.5, 0.3, 1.2};
    std::vector<CategoricalRule> categorical;
    std::vector<ContinuousRule> continuous;

    double unfilled_rate = 0.0;
    double partial_rate = 0.0;

    void validate() const;
    nlohmann::json to_json() const;
    static GeneratorConfig from_json(const nlohmann::json& j);
};

struct SimulatedSurvey {
    SurveyDataset dataset;
    std::vector<int> classes;  // 0-based true class per record
    Matrix factors;            // n x m, standardized by population moments
    Matrix latent_loadings;    // p x m loadings applied to the latent responses
};

inline Thresholds equally_spaced_thresholds(double spacing) {
    Thresholds t{};
    for (int k = 0; k < n_thresholds; ++k) t[static_cast<std::size_t>(k)] = (k - 2.5) * spacing;
    return t;
}

// Standard-normal cut points reproducing a 7-level percentage distribution.
inline Thresholds thresholds_from_shares(const std::array<double, LikertValue::levels>& shares) {
    double total = 0.0;
    for (double s : shares) {
        if (!(s >= 0.0)) throw PreconditionError("thresholds_from_shares: negative share");
        total += s;
    }
    if (!(total > 0.0)) throw PreconditionError("thresholds_from_shares: empty distribution");
    const boost::math::normal_distribution<double> nd;
    Thresholds t{};
    double cum = 0.0;
    for (int k = 0; k < n_thresholds; ++k) {
        cum += shares[static_cast<std::size_t>(k)] / total;
        const double p = std::clamp(cum, 1e-6, 1.0 - 1e-6);
        t[static_cast<std::size_t>(k)] = boost::math::quantile(nd, p);
        if (k > 0 && t[static_cast<std::size_t>(k)] <= t[static_cast<std::size_t>(k - 1)]) t[static_cast<std::size_t>(k)] = t[static_cast<std::size_t>(k - 1)] + 1e-3;
    }
    return t;
}

// corr(Y, X) for X ~ N(0, 1) and Y = 1 + #{k : X > t_k}.
inline double discretization_attenuation(const Thresholds& t) {
    const boost::math::normal_distribution<double> nd;
    double cov = 0.0;
    double mean = 1.0;
    double second = 0.0;
    double prev_cdf = 0.0;
    for (int k = 0; k <= n_thresholds; ++k) {
        const double cdf = k < n_thresholds ? boost::math::cdf(nd, t[static_cast<std::size_t>(k)]) : 1.0;
        const double pk = cdf - prev_cdf;
        second += pk * (k + 1.0) * (k + 1.0);
        prev_cdf = cdf;
        if (k < n_thresholds) {
            cov += boost::math::pdf(nd, t[static_cast<std::size_t>(k)]);
            mean += 1.0 - cdf;
        }
    }
    const double var = second - mean * mean;
    if (!(var > 0.0)) throw PreconditionError("discretization_attenuation: degenerate thresholds");
    return cov / std::sqrt(var);
}

inline int discretize(double x, const Thresholds& t) {
    int level = 1;
    for (double c : t)
        if (x > c) ++level;
    return level;
}

inline void GeneratorConfig::validate() const {
    const auto p = static_cast<Eigen::Index>(item_codes.size());
    const auto m = static_cast<Eigen::Index>(factor_names.size());
    if (n == 0) throw PreconditionError("generator: n must be positive");
    if (p == 0 || m == 0) throw PreconditionError("generator: no items or factors");
    if (loadings.rows() != p || loadings.cols() != m) throw PreconditionError("generator: loading matrix shape");
    if (phi.rows() != m || phi.cols() != m) throw PreconditionError("generator: phi shape");
    if (!phi.isApprox(phi.transpose()) || (phi.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
        throw PreconditionError("generator: phi must be a symmetric correlation matrix");
    if (Eigen::LLT<Matrix>(phi).info() != Eigen::Success) throw PreconditionError("generator: phi is not positive definite");
    if (thresholds.size() != item_codes.size()) throw PreconditionError("generator: one threshold set per item");
    auto check_thresholds = [](const Thresholds& t, const std::string& what) {
        for (int k = 1; k < n_thresholds; ++k)
            if (!(t[static_cast<std::size_t>(k)] > t[static_cast<std::size_t>(k - 1)]))
                throw PreconditionError("generator: thresholds of " + what + " not strictly increasing");
    };
    for (std::size_t i = 0; i < thresholds.size(); ++i) check_thresholds(thresholds[i], item_codes[i]);
    check_thresholds(attribute_thresholds, "attributes");
    if (classes.empty()) throw PreconditionError("generator: no classes");
    double total = 0.0;
    for (const auto& c : classes) {
        if (!(c.share > 0.0)) throw PreconditionError("generator: class shares must be positive");
        if (static_cast<Eigen::Index>(c.factor_means.size()) != m || static_cast<Eigen::Index>(c.factor_sd.size()) != m)
            throw PreconditionError("generator: class factor moments must have one entry per factor");
        for (double s : c.factor_sd)
            if (!(s > 0.0)) throw PreconditionError("generator: class factor sd must be positive");
        total += c.share;
    }
    if (std::abs(total - 1.0) > 1e-9) throw PreconditionError("generator: class shares must sum to 1");
    const std::size_t k = classes.size();
    for (const auto& a : attributes) {
        if (a.codes.size() < 2 || a.labels.size() != a.codes.size()) throw PreconditionError("generator: attribute set " + a.scale_id);
        if (a.class_ranks.size() != k) throw PreconditionError("generator: attribute ranks needed for every class");
        for (const auto& r : a.class_ranks)
            if (r.size() != a.codes.size()) throw PreconditionError("generator: attribute rank vector length");
    }
    for (const auto& c : categorical) {
        if (c.class_probs.size() != k) throw PreconditionError("generator: covariate " + c.code + " needs one distribution per class");
        for (const auto& pr : c.class_probs) {
            if (pr.size() != c.levels.size()) throw PreconditionError("generator: covariate " + c.code + " level count");
            double s = 0.0;
            for (double v : pr) {
                if (!(v >= 0.0)) throw PreconditionError("generator: negative probability in " + c.code);
                s += v;
            }
            if (std::abs(s - 1.0) > 1e-6) throw PreconditionError("generator: probabilities of " + c.code + " must sum to 1");
        }
    }
    for (const auto& c : continuous)
        if (c.class_means.size() != k || c.class_sd.size() != k) throw PreconditionError("generator: covariate " + c.code + " per-class moments");
    if (!(unfilled_rate >= 0.0 && partial_rate >= 0.0 && unfilled_rate + partial_rate < 1.0))
        throw PreconditionError("generator: missingness rates out of range");
}

// Population mean vector and covariance of the factor mixture.
inline std::pair<Vector, Matrix> population_factor_moments(const GeneratorConfig& g) {
    const auto m = static_cast<Eigen::Index>(g.factor_names.size());
    Vector mean = Vector::Zero(m);
    for (const auto& c : g.classes) mean += c.share * Eigen::Map<const Vector>(c.factor_means.data(), m);
    Matrix cov = Matrix::Zero(m, m);
    for (const auto& c : g.classes) {
        const Vector mu = Eigen::Map<const Vector>(c.factor_means.data(), m);
        const Vector sd = Eigen::Map<const Vector>(c.factor_sd.data(), m);
        const Matrix within = sd.asDiagonal() * g.phi * sd.asDiagonal();
        cov += c.share * (within + (mu - mean) * (mu - mean).transpose());
    }
    return {mean, cov};
}

inline SurveySchema generator_schema(const GeneratorConfig& g) {
    std::vector<IndicatorItem> items;
    std::vector<Scale> scales;
    const auto m = g.factor_names.size();
    std::vector<std::vector<std::string>> members(m);
    for (std::size_t i = 0; i < g.item_codes.size(); ++i) {
        Eigen::Index f = 0;
        g.loadings.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff(&f);
        members[static_cast<std::size_t>(f)].push_back(g.item_codes[i]);
        items.push_back({g.item_codes[i], i < g.item_labels.size() ? g.item_labels[i] : g.item_codes[i], ""});
    }
    for (std::size_t f = 0; f < m; ++f)
        scales.push_back({g.factor_names[f], f < g.factor_labels.size() ? g.factor_labels[f] : g.factor_names[f], ScaleKind::attitude, members[f]});
    for (const auto& a : g.attributes) {
        for (std::size_t i = 0; i < a.codes.size(); ++i) items.push_back({a.codes[i], a.labels[i], ""});
        scales.push_back({a.scale_id, a.scale_name, a.kind, a.codes});
    }
    std::vector<CovariateSpec> covs;
    for (const auto& c : g.categorical) covs.push_back({c.code, CovariateKind::categorical, c.levels, ""});
    for (const auto& c : g.continuous) covs.push_back({c.code, CovariateKind::continuous, {}, c.units});
    std::vector<ConsistencyRule> rules;
    rules.push_back({"straight-lining", ConsistencyRule::Type::straight_lining, g.item_codes, 6});
    return SurveySchema(std::move(items), std::move(scales), std::move(covs), std::move(rules));
}

inline SimulatedSurvey simulate_survey(const GeneratorConfig& g) {
    g.validate();
    const auto p = static_cast<Eigen::Index>(g.item_codes.size());
    const auto m = static_cast<Eigen::Index>(g.factor_names.size());
    const auto n = static_cast<Eigen::Index>(g.n);

    const auto [pop_mean, pop_cov] = population_factor_moments(g);
    const Vector pop_sd = pop_cov.diagonal().cwiseSqrt();
    const Matrix pop_corr = pop_sd.cwiseInverse().asDiagonal() * pop_cov * pop_sd.cwiseInverse().asDiagonal();

    SimulatedSurvey out;
    out.latent_loadings = g.loadings;
    if (g.compensate_discretization) {
        for (Eigen::Index i = 0; i < p; ++i) {
            const double att = discretization_attenuation(g.thresholds[static_cast<std::size_t>(i)]);
            for (Eigen::Index f = 0; f < m; ++f) {
                const double l = g.loadings(i, f) / att;
                out.latent_loadings(i, f) = std::clamp(l, -g.max_latent_loading, g.max_latent_loading);
            }
        }
    }
    Vector noise_sd(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double h2 = (out.latent_loadings.row(i) * pop_corr * out.latent_loadings.row(i).transpose())(0, 0);
        if (!(h2 <= 1.0 + 1e-12)) throw PreconditionError(fmt::format("generator: item {} has communality {:.3f} > 1", g.item_codes[static_cast<std::size_t>(i)], h2));
        noise_sd(i) = std::sqrt(std::max(0.0, 1.0 - h2));
    }
    std::vector<Matrix> class_chol;
    for (const auto& c : g.classes) {
        const Vector sd = Eigen::Map<const Vector>(c.factor_sd.data(), m);
        class_chol.push_back(Eigen::LLT<Matrix>(sd.asDiagonal() * g.phi * sd.asDiagonal()).matrixL());
    }

    std::mt19937_64 rng(g.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> shares;
    for (const auto& c : g.classes) shares.push_back(c.share);
    std::discrete_distribution<int> pick_class(shares.begin(), shares.end());

    SurveyDataset& ds = out.dataset;
    ds.schema = generator_schema(g);
    ds.provenance.source = fmt::format("simulated(seed={}, n={})", g.seed, g.n);
    ds.provenance.rows_read = g.n;
    out.factors.resize(n, m);
    out.classes.resize(g.n);
    const std::size_t n_items = ds.schema.items().size();
    const int width = std::max(5, static_cast<int>(std::to_string(g.n).size()));
    Vector z(m);
    for (Eigen::Index r = 0; r < n; ++r) {
        const int cls = pick_class(rng);
        out.classes[static_cast<std::size_t>(r)] = cls;
        const auto& cs = g.classes[static_cast<std::size_t>(cls)];
        for (Eigen::Index f = 0; f < m; ++f) z(f) = normal(rng);
        Vector f = Eigen::Map<const Vector>(cs.factor_means.data(), m) + class_chol[static_cast<std::size_t>(cls)] * z;
        f = (f - pop_mean).cwiseQuotient(pop_sd);
        out.factors.row(r) = f.transpose();

        SurveyRecord rec;
        rec.respondent_id = fmt::format("R{:0{}}", r + 1, width);
        rec.responses.reserve(n_items);
        for (Eigen::Index i = 0; i < p; ++i) {
            const double x = out.latent_loadings.row(i).dot(f) + noise_sd(i) * normal(rng);
            rec.responses.emplace_back(discretize(x, g.thresholds[static_cast<std::size_t>(i)]));
        }
        for (const auto& a : g.attributes) {
            const auto& ranks = a.class_ranks[static_cast<std::size_t>(cls)];
            for (std::size_t j = 0; j < a.codes.size(); ++j) {
                const double mu = a.top_mean - a.step * (ranks[j] - 1);
                rec.responses.emplace_back(discretize(mu + normal(rng), g.attribute_thresholds));
            }
        }
        for (const auto& c : g.categorical) {
            const auto& pr = c.class_probs[static_cast<std::size_t>(cls)];
            std::discrete_distribution<std::size_t> d(pr.begin(), pr.end());
            rec.covariates.emplace_back(c.levels[d(rng)]);
        }
        for (const auto& c : g.continuous) {
            const double v = c.class_means[static_cast<std::size_t>(cls)] + c.class_sd[static_cast<std::size_t>(cls)] * normal(rng);
            rec.covariates.emplace_back(std::round(std::max(v, c.lower)));
        }
        const double u = unif(rng);
        if (u < g.unfilled_rate) {
            for (auto& v : rec.responses) v.reset();
        } else if (u < g.unfilled_rate + g.partial_rate) {
            std::uniform_int_distribution<std::size_t> which(0, n_items - 1);
            rec.responses[which(rng)].reset();
        }
        ds.records.push_back(std::move(rec));
    }
    return out;
}

// Reference item distributions (percent at levels 1..7) used to calibrate thresholds.
inline const std::vector<std::array<double, LikertValue::levels>>& reference_item_shares() {
    static const std::vector<std::array<double, LikertValue::levels>> rows{
        {5.0, 13.1, 10.7, 4.5, 16.0, 40.5, 10.1},  {1.2, 3.6, 4.8, 6.0, 19.4, 54.1, 11.0},
        {2.7, 9.2, 8.5, 4.5, 16.6, 46.5, 12.0},    {1.3, 11.9, 8.1, 28.0, 14.7, 25.4, 10.6},
        {0.2, 0.6, 0.7, 2.1, 11.7, 56.4, 28.2},    {0.1, 0.6, 0.7, 1.7, 11.6, 55.4, 29.9},
        {0.4, 0.1, 0.1, 2.1, 7.5, 55.8, 34.0},     {10.6, 22.4, 4.9, 16.0, 24.6, 14.4, 7.2},
        {1.1, 5.4, 4.1, 6.2, 24.7, 34.8, 23.8},    {0.5, 2.7, 1.0, 4.9, 9.8, 36.1, 45.1},
        {0.4, 6.0, 3.1, 8.6, 21.6, 37.1, 23.4},    {0.6, 0.7, 1.9, 5.5, 12.8, 36.4, 42.2},
        {0.6, 1.0, 1.1, 6.2, 13.6, 39.3, 38.3},    {0.4, 3.3, 4.9, 28.0, 20.3, 30.8, 12.4},
        {1.1, 11.8, 4.6, 31.8, 16.3, 25.0, 9.3},   {0.5, 19.0, 6.6, 24.8, 20.1, 19.8, 9.3},
        {0.6, 5.2, 2.9, 21.9, 21.7, 28.4, 19.3},   {3.1, 12.9, 6.9, 16.3, 24.1, 26.9, 9.8},
        {2.6, 8.8, 6.7, 22.4, 29.1, 22.5, 7.9},    {3.7, 19.5, 10.3, 21.3, 17.2, 18.6, 9.4},
    };
    return rows;
}

// Twenty attitude items on six factors; a 0 marks the weak indicator of a factor.
inline Matrix reference_loadings(double weak_loading = 0.3) {
    static const double lambda[20] = {0.758, 0.542, 0.846, 0.0,   0.641, 0.611, 0.652, 0.0,   0.587, 0.813,
                                      0.649, 0.654, 0.750, 0.0,   0.535, 0.769, 0.710, 0.763, 0.575, 0.765};
    static const int factor[20] = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4, 5, 5, 5};
    Matrix l = Matrix::Zero(20, 6);
    for (int i = 0; i < 20; ++i) l(i, factor[i]) = lambda[i] > 0.0 ? lambda[i] : weak_loading;
    return l;
}

namespace detail {

inline void fill_attitude_block(GeneratorConfig& g) {
    for (int i = 1; i <= 20; ++i) g.item_codes.push_back(fmt::format("I{}", i));
    g.item_labels = {"Comfort", "Stress", "Safety in public transit", "Societal responsibility",
                     "Time saving", "Safety in personal vehicle", "Convenience", "Status symbolism",
                     "Preference for online services", "Preference for smartphone", "Preference for newer technology",
                     "Preference for higher walkability", "Preference for shorter commute", "Environmental awareness",
                     "Public opinion", "Acquaintances' opinion", "Government policy",
                     "Preference for differentness", "Preference for adventure and risk", "Preference for newness"};
    g.factor_names = {"PT", "PV", "TECH", "ENV", "NORMS", "VARIETY"};
    g.factor_labels = {"Attitude towards public transit", "Attitude towards personal vehicle", "Tech-savviness",
                       "Environment-friendly lifestyle", "Subjective norms", "Variety-seeking lifestyle"};
    g.loadings = reference_loadings();
    g.phi = Matrix::Identity(6, 6);
}

}  // namespace detail

// Single-population measurement-model preset: orthogonal factors and equally
// spaced thresholds.
inline GeneratorConfig efa_generator_preset(std::size_t n = 5000, std::uint64_t seed = 1) {
    GeneratorConfig g;
    g.n = n;
    g.seed = seed;
    detail::fill_attitude_block(g);
    g.thresholds.assign(20, equally_spaced_thresholds(0.65));
    g.classes.push_back({1.0, std::vector<double>(6, 0.0), std::vector<double>(6, 1.0)});
    return g;
}

// Three-class preset: class shares 48/28/24, factor-mean orderings per class,
// attribute importance orders and covariate profiles. Thresholds are equally
// spaced unless `reference_thresholds`, which fits them to the reference item
// distributions (strong ceiling effects; see README).
inline GeneratorConfig reference_generator_preset(std::size_t n = 900, std::uint64_t seed = 1, double separation = 1.0,
                                              bool reference_thresholds = false) {
    GeneratorConfig g;
    g.n = n;
    g.seed = seed;
    detail::fill_attitude_block(g);
    if (reference_thresholds) {
        for (const auto& row : reference_item_shares()) g.thresholds.push_back(thresholds_from_shares(row));
    } else {
        g.thresholds.assign(20, equally_spaced_thresholds(0.65));
    }
    const double s = separation;
    //                      PT       PV       TECH    ENV      NORMS    VARIETY
    g.classes.push_back({0.48, {-0.9 * s, -0.6 * s, 1.0 * s, -0.9 * s, 0.8 * s, 1.0 * s}, std::vector<double>(6, 1.0)});
    g.classes.push_back({0.28, {-0.3 * s, 0.0 * s, -1.2 * s, 0.0 * s, -1.0 * s, -1.1 * s}, std::vector<double>(6, 1.0)});
    g.classes.push_back({0.24, {1.3 * s, 1.2 * s, 0.0 * s, 1.1 * s, 0.1 * s, -0.2 * s}, std::vector<double>(6, 1.0)});

    AttributeSet mot;
    mot.scale_id = "MOT";
    mot.scale_name = "Motivators";
    mot.kind = ScaleKind::motivator;
    mot.codes = {"M1", "M2", "M3", "M4", "M5", "M6"};
    mot.labels = {"Flexibility", "Travel time", "Reliability", "Availability", "Safety", "Low health risk"};
    mot.class_ranks = {{1, 3, 2, 4, 5, 6}, {1, 2, 3, 5, 4, 6}, {1, 2, 3, 4, 5, 6}};
    AttributeSet det;
    det.scale_id = "DET";
    det.scale_name = "Deterrents";
    det.kind = ScaleKind::deterrent;
    det.codes = {"D1", "D2", "D3", "D4", "D5", "D6"};
    det.labels = {"Travel cost", "Waiting time", "Driver behaviour", "Online payment issues", "Customer support", "App interface"};
    det.class_ranks = {{1, 2, 3, 4, 5, 6}, {1, 2, 4, 3, 6, 5}, {1, 2, 4, 5, 3, 6}};
    g.attributes = {mot, det};

    g.categorical.push_back({"gender", {"male", "female"}, {{0.61, 0.39}, {0.44, 0.56}, {0.55, 0.45}}});
    g.categorical.push_back({"age_group", {"gen_z", "millennial", "gen_x", "boomer"},
                             {{0.42, 0.40, 0.12, 0.06}, {0.10, 0.24, 0.31, 0.35}, {0.14, 0.38, 0.32, 0.16}}});
    g.categorical.push_back({"income", {"low", "low_middle", "middle", "high"},
                             {{0.27, 0.26, 0.33, 0.14}, {0.08, 0.11, 0.73, 0.08}, {0.05, 0.13, 0.42, 0.40}}});
    g.categorical.push_back({"car_owner", {"yes", "no"}, {{0.14, 0.86}, {0.10, 0.90}, {0.52, 0.48}}});
    g.categorical.push_back({"motorcycle_owner", {"yes", "no"}, {{0.38, 0.62}, {0.76, 0.24}, {0.61, 0.39}}});
    g.categorical.push_back({"commute_mode", {"bus", "metro", "personal_vehicle", "active", "on_demand"},
                             {{0.59, 0.09, 0.08, 0.03, 0.21}, {0.49, 0.07, 0.13, 0.22, 0.09}, {0.33, 0.18, 0.26, 0.13, 0.10}}});
    g.categorical.push_back({"rhs_monthly_use", {"never", "1-2", "3-5", "6+"},
                             {{0.28, 0.42, 0.23, 0.07}, {0.61, 0.26, 0.10, 0.03}, {0.31, 0.43, 0.22, 0.04}}});
    g.continuous.push_back({"population_density", "persons/sq km", {33840.0, 26458.0, 25442.0}, {6000.0, 6000.0, 6000.0}, 100.0});
    g.continuous.push_back({"bus_stop_distance", "m", {310.0, 520.0, 380.0}, {120.0, 160.0, 140.0}, 10.0});
    return g;
}

namespace detail {

inline nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
        out.push_back(r);
    }
    return out;
}

inline Matrix json_matrix(const nlohmann::json& a) {
    const auto r = static_cast<Eigen::Index>(a.size());
    const auto c = r ? static_cast<Eigen::Index>(a.at(0).size()) : 0;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(a.at(static_cast<std::size_t>(i)).size()) != c) throw PreconditionError("ragged matrix");
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = a.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
    }
    return m;
}

}  // namespace detail

inline nlohmann::json GeneratorConfig::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["seed"] = seed;
    j["item_codes"] = item_codes;
    j["item_labels"] = item_labels;
    j["factor_names"] = factor_names;
    j["factor_labels"] = factor_labels;
    j["loadings"] = detail::matrix_json(loadings);
    j["phi"] = detail::matrix_json(phi);
    j["thresholds"] = thresholds;
    j["compensate_discretization"] = compensate_discretization;
    j["max_latent_loading"] = max_latent_loading;
    for (const auto& c : classes) j["classes"].push_back({{"share", c.share}, {"factor_means", c.factor_means}, {"factor_sd", c.factor_sd}});
    j["attributes"] = nlohmann::json::array();
    for (const auto& a : attributes)
        j["attributes"].push_back({{"scale_id", a.scale_id}, {"scale_name", a.scale_name}, {"kind", to_string(a.kind)},
                                   {"codes", a.codes}, {"labels", a.labels}, {"class_ranks", a.class_ranks},
                                   {"top_mean", a.top_mean}, {"step", a.step}});
    j["attribute_thresholds"] = attribute_thresholds;
    j["categorical"] = nlohmann::json::array();
    for (const auto& c : categorical) j["categorical"].push_back({{"code", c.code}, {"levels", c.levels}, {"class_probs", c.class_probs}});
    j["continuous"] = nlohmann::json::array();
    for (const auto& c : continuous) {
        nlohmann::json cj{{"code", c.code}, {"units", c.units}, {"class_means", c.class_means}, {"class_sd", c.class_sd}};
        if (std::isfinite(c.lower)) cj["lower"] = c.lower;
        j["continuous"].push_back(cj);
    }
    j["unfilled_rate"] = unfilled_rate;
    j["partial_rate"] = partial_rate;
    return j;
}

// A "preset" key ("reference" or "efa") seeds the defaults; other keys override.
inline GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
    GeneratorConfig g;
    const std::string preset = j.value("preset", "");
    if (preset == "reference") {
        g = reference_generator_preset(j.value("n", std::size_t{900}), j.value("seed", std::uint64_t{1}), j.value("separation", 1.0),
                                   j.value("reference_thresholds", false));
    } else if (preset == "efa") {
        g = efa_generator_preset(j.value("n", std::size_t{5000}), j.value("seed", std::uint64_t{1}));
    } else if (!preset.empty()) {
        throw PreconditionError("generator: unknown preset '" + preset + "'");
    }
    if (j.contains("n")) g.n = j.at("n").get<std::size_t>();
    if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("item_codes")) g.item_codes = j.at("item_codes").get<std::vector<std::string>>();
    if (j.contains("item_labels")) g.item_labels = j.at("item_labels").get<std::vector<std::string>>();
    if (j.contains("factor_names")) g.factor_names = j.at("factor_names").get<std::vector<std::string>>();
    if (j.contains("factor_labels")) g.factor_labels = j.at("factor_labels").get<std::vector<std::string>>();
    if (j.contains("loadings")) g.loadings = detail::json_matrix(j.at("loadings"));
    if (j.contains("phi")) g.phi = detail::json_matrix(j.at("phi"));
    if (j.contains("thresholds")) g.thresholds = j.at("thresholds").get<std::vector<Thresholds>>();
    if (j.contains("threshold_spacing")) g.thresholds.assign(g.item_codes.size(), equally_spaced_thresholds(j.at("threshold_spacing").get<double>()));
    g.compensate_discretization = j.value("compensate_discretization", g.compensate_discretization);
    g.max_latent_loading = j.value("max_latent_loading", g.max_latent_loading);
    if (j.contains("classes")) {
        g.classes.clear();
        for (const auto& c : j.at("classes"))
            g.classes.push_back({c.at("share").get<double>(), c.at("factor_means").get<std::vector<double>>(),
                                 c.at("factor_sd").get<std::vector<double>>()});
    }
    if (j.contains("attributes")) {
        g.attributes.clear();
        for (const auto& a : j.at("attributes")) {
            AttributeSet s;
            s.scale_id = a.at("scale_id").get<std::string>();
            s.scale_name = a.value("scale_name", s.scale_id);
            s.kind = scale_kind_from_string(a.value("kind", "motivator"));
            s.codes = a.at("codes").get<std::vector<std::string>>();
            s.labels = a.value("labels", s.codes);
            s.class_ranks = a.at("class_ranks").get<std::vector<std::vector<int>>>();
            s.top_mean = a.value("top_mean", s.top_mean);
            s.step = a.value("step", s.step);
            g.attributes.push_back(std::move(s));
        }
    }
    if (j.contains("attribute_thresholds")) g.attribute_thresholds = j.at("attribute_thresholds").get<Thresholds>();
    if (j.contains("categorical")) {
        g.categorical.clear();
        for (const auto& c : j.at("categorical"))
            g.categorical.push_back({c.at("code").get<std::string>(), c.at("levels").get<std::vector<std::string>>(),
                                     c.at("class_probs").get<std::vector<std::vector<double>>>()});
    }
    if (j.contains("continuous")) {
        g.continuous.clear();
        for (const auto& c : j.at("continuous"))
            g.continuous.push_back({c.at("code").get<std::string>(), c.value("units", ""), c.at("class_means").get<std::vector<double>>(),
                                    c.at("class_sd").get<std::vector<double>>(),
                                    c.value("lower", -std::numeric_limits<double>::infinity())});
    }
    g.unfilled_rate = j.value("unfilled_rate", g.unfilled_rate);
    g.partial_rate = j.value("partial_rate", g.partial_rate);
    g.validate();
    return g;
}

}  // namespace surveyrank
