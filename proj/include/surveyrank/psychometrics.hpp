#pragma once

// Reliability (Cronbach's alpha) and sampling-adequacy diagnostics (KMO,
// Bartlett's sphericity test) that gate the factor analysis.

#include "surveyrank/common.hpp"
#include "surveyrank/special_functions.hpp"
#include "surveyrank/survey_data.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace surveyrank {

struct CorrelationMatrix {
    std::vector<std::string> items;
    Matrix values;
    std::size_t n = 0;

    Eigen::Index size() const noexcept { return values.rows(); }
};

// Pearson correlations of the columns of `data` (rows = respondents).
inline CorrelationMatrix pearson_correlation(const Matrix& data, std::vector<std::string> items) {
    const auto n = data.rows();
    const auto p = data.cols();
    if (n < 3) throw PreconditionError("correlation: need at least 3 complete records");
    if (static_cast<std::size_t>(p) != items.size()) throw PreconditionError("correlation: item labels do not match columns");
    Matrix centered = data.rowwise() - data.colwise().mean();
    Vector sd = (centered.colwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt().transpose();
    for (Eigen::Index j = 0; j < p; ++j)
        if (!(sd(j) > 0.0)) throw DataError("correlation: item '" + items[static_cast<std::size_t>(j)] + "' has zero variance");
    Matrix z = centered * sd.cwiseInverse().asDiagonal();
    Matrix r = (z.transpose() * z) / static_cast<double>(n - 1);
    r = 0.5 * (r + r.transpose());
    r.diagonal().setOnes();
    r = r.cwiseMax(-1.0).cwiseMin(1.0);
    return {std::move(items), std::move(r), static_cast<std::size_t>(n)};
}

inline CorrelationMatrix pearson_correlation_matrix(const SurveyDataset& ds, const std::vector<std::string>& items) {
    return pearson_correlation(ds.item_matrix(items), items);
}

struct AlphaResult {
    std::string scale;
    std::size_t k = 0;
    double raw = 0.0;           // covariance based; the primary figure
    double standardized = 0.0;  // mean inter-item correlation based
    bool below_threshold = false;
};

inline constexpr double alpha_threshold = 0.70;

inline AlphaResult cronbach_alpha(const Matrix& items, std::string label = {}) {
    const auto k = items.cols();
    const auto n = items.rows();
    if (k < 2) throw PreconditionError("cronbach_alpha: scale needs at least 2 items");
    if (n < 2) throw PreconditionError("cronbach_alpha: need at least 2 respondents");
    Matrix centered = items.rowwise() - items.colwise().mean();
    const double denom = static_cast<double>(n - 1);
    const double item_var_sum = centered.colwise().squaredNorm().sum() / denom;
    const double total_var = centered.rowwise().sum().squaredNorm() / denom;
    if (!(total_var > 0.0)) throw DataError("cronbach_alpha: total score has zero variance");
    const double kd = static_cast<double>(k);

    AlphaResult out;
    out.scale = std::move(label);
    out.k = static_cast<std::size_t>(k);
    out.raw = kd / (kd - 1.0) * (1.0 - item_var_sum / total_var);

    Vector sd = (centered.colwise().squaredNorm() / denom).cwiseSqrt().transpose();
    if ((sd.array() > 0.0).all()) {
        Matrix z = centered * sd.cwiseInverse().asDiagonal();
        Matrix r = z.transpose() * z / denom;
        const double mean_r = (r.sum() - r.trace()) / (kd * (kd - 1.0));
        out.standardized = kd * mean_r / (1.0 + (kd - 1.0) * mean_r);
    } else {
        out.standardized = std::nan("");
    }
    out.below_threshold = out.raw < alpha_threshold;
    return out;
}

inline AlphaResult cronbach_alpha(const SurveyDataset& ds, const Scale& scale) {
    return cronbach_alpha(ds.item_matrix(scale.item_codes), scale.id);
}

struct AdequacyReport {
    double kmo_overall = 0.0;
    std::map<std::string, double> kmo_per_item;  // MSA
    double bartlett_chi2 = 0.0;
    long long bartlett_df = 0;
    double bartlett_p = 1.0;
    double condition_number = 1.0;
    bool adequate = true;  // KMO >= 0.6
    Warnings warnings;
};

inline constexpr double kmo_adequacy_threshold = 0.6;

// Reciprocal condition number below which a correlation matrix is treated as singular.
inline constexpr double singular_rcond = 1e-12;

namespace detail {

inline double condition_estimate(const Matrix& r) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

inline Matrix with_ridge(const Matrix& r, double ridge) {
    if (ridge < 0.0) throw PreconditionError("ridge must be non-negative");
    Matrix out = r;
    out.diagonal().array() += ridge;
    return out;
}

}  // namespace detail

// Overall KMO and per-item MSA from the anti-image (partial) correlations.
// `ridge` > 0 adds epsilon to the diagonal before inversion; default off.
inline AdequacyReport kmo(const CorrelationMatrix& corr, double ridge = 0.0) {
    const Matrix r = detail::with_ridge(corr.values, ridge);
    const auto p = r.rows();
    const double cond = detail::condition_estimate(r);
    if (!(cond < 1.0 / singular_rcond))
        throw NumericalError(fmt::format("kmo: correlation matrix is not invertible (condition estimate {:.3g})", cond));
    const Matrix inv = r.inverse();

    AdequacyReport rep;
    rep.condition_number = cond;
    double r2_total = 0.0;
    double q2_total = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        double r2_row = 0.0;
        double q2_row = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (i == j) continue;
            const double q = -inv(i, j) / std::sqrt(inv(i, i) * inv(j, j));
            r2_row += corr.values(i, j) * corr.values(i, j);
            q2_row += q * q;
        }
        const double denom = r2_row + q2_row;
        rep.kmo_per_item[corr.items.at(static_cast<std::size_t>(i))] = denom > 0.0 ? r2_row / denom : 0.0;
        r2_total += r2_row;
        q2_total += q2_row;
    }
    rep.kmo_overall = (r2_total + q2_total) > 0.0 ? r2_total / (r2_total + q2_total) : 0.0;
    rep.adequate = rep.kmo_overall >= kmo_adequacy_threshold;
    if (!rep.adequate) rep.warnings.push_back(fmt::format("KMO {:.3f} is inadequate (< {:.2f})", rep.kmo_overall, kmo_adequacy_threshold));
    return rep;
}

// Bartlett's test that the correlation matrix is an identity.
inline AdequacyReport bartlett_sphericity(const CorrelationMatrix& corr) {
    const auto p = static_cast<double>(corr.size());
    if (!(static_cast<double>(corr.n) > p)) throw PreconditionError("bartlett: need n > number of items");
    Eigen::LDLT<Matrix> ldlt(corr.values);
    const Vector d = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 0.0))
        throw NumericalError("bartlett: correlation matrix determinant is not positive");
    const double log_det = d.array().log().sum();
    AdequacyReport rep;
    rep.bartlett_df = static_cast<long long>(p * (p - 1.0) / 2.0);
    double chi2 = -(static_cast<double>(corr.n) - 1.0 - (2.0 * p + 5.0) / 6.0) * log_det;
    rep.bartlett_chi2 = chi2 > 0.0 ? chi2 : 0.0;  // clears -0 and rounding noise on identity inputs
    rep.bartlett_p = rep.bartlett_df > 0 ? special::chi_square_upper_tail(rep.bartlett_chi2, static_cast<double>(rep.bartlett_df)) : 1.0;
    return rep;
}

// KMO and Bartlett fields merged into one report.
inline AdequacyReport adequacy(const CorrelationMatrix& corr, double ridge = 0.0) {
    AdequacyReport rep = kmo(corr, ridge);
    const AdequacyReport b = bartlett_sphericity(corr);
    rep.bartlett_chi2 = b.bartlett_chi2;
    rep.bartlett_df = b.bartlett_df;
    rep.bartlett_p = b.bartlett_p;
    return rep;
}

}  // namespace surveyrank
