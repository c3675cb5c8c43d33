#pragma once

// Exploratory factor analysis: principal axis factoring, promax rotation,
// threshold-driven item pruning and regression factor scores.

#include "surveyrank/common.hpp"
#include "surveyrank/psychometrics.hpp"
#include "surveyrank/survey_data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace surveyrank {

struct PafOptions {
    double tol = 1e-3;  // max |delta h2| between iterations
    int max_iter = 1000;
};

// Communalities above this are clipped (Heywood guard).
inline constexpr double heywood_cap = 0.9995;

struct PafResult {
    Matrix loadings;       // p x m, unrotated
    Vector communalities;  // row sums of loadings^2
    Vector eigenvalues;    // reduced matrix, descending, length p
    int iterations = 0;
    double last_delta = 0.0;
    Warnings warnings;
};

namespace detail {

// Descending eigen-pairs of a symmetric matrix.
inline std::pair<Vector, Matrix> eigen_desc(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

inline Vector eigenvalues_desc(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    return es.eigenvalues().reverse();
}

// Flip each column so its largest-magnitude entry is positive; returns the signs.
inline Vector sign_columns(Matrix& m) {
    Vector signs = Vector::Ones(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index arg = 0;
        m.col(j).cwiseAbs().maxCoeff(&arg);
        if (m(arg, j) < 0.0) {
            m.col(j) = -m.col(j);
            signs(j) = -1.0;
        }
    }
    return signs;
}

inline Vector initial_communalities(const Matrix& r) {
    const auto p = r.rows();
    Vector h(p);
    Eigen::FullPivLU<Matrix> lu(r);
    if (lu.isInvertible() && lu.rcond() > singular_rcond) {
        const Matrix inv = lu.inverse();
        for (Eigen::Index i = 0; i < p; ++i) h(i) = 1.0 - 1.0 / inv(i, i);
    } else {
        for (Eigen::Index i = 0; i < p; ++i) {
            double best = 0.0;
            for (Eigen::Index j = 0; j < p; ++j)
                if (i != j) best = std::max(best, std::abs(r(i, j)));
            h(i) = best;
        }
    }
    return h.cwiseMax(0.0).cwiseMin(heywood_cap);
}

}  // namespace detail

inline PafResult principal_axis_factoring(const CorrelationMatrix& corr, int m, const PafOptions& opt = {}) {
    const Matrix& r = corr.values;
    const auto p = r.rows();
    if (m < 1 || m >= p) throw PreconditionError(fmt::format("paf: need 1 <= m < p (m = {}, p = {})", m, p));
    if (opt.max_iter < 1 || !(opt.tol > 0.0)) throw PreconditionError("paf: invalid tolerance or iteration limit");

    PafResult out;
    Vector h = detail::initial_communalities(r);
    bool heywood = false;
    bool collapsed = false;  // a retained eigenvalue went negative after the start
    for (int it = 1; it <= opt.max_iter; ++it) {
        Matrix reduced = r;
        reduced.diagonal() = h;
        auto [vals, vecs] = detail::eigen_desc(reduced);
        for (int k = 0; k < m; ++k) {
            if (vals(k) >= -1e-10) continue;
            if (it == 1) throw NumericalError(fmt::format("paf: fewer than {} non-negative eigenvalues in the reduced matrix", m));
            collapsed = true;
        }
        Matrix lambda = vecs.leftCols(m) * vals.head(m).cwiseMax(0.0).cwiseSqrt().asDiagonal();
        Vector next = lambda.rowwise().squaredNorm();
        if ((next.array() > heywood_cap).any()) heywood = true;
        next = next.cwiseMin(heywood_cap);
        const double delta = (next - h).cwiseAbs().maxCoeff();
        h = next;
        out.iterations = it;
        out.last_delta = delta;
        if (delta < opt.tol) {
            out.loadings = std::move(lambda);
            break;
        }
    }
    if (out.loadings.size() == 0)
        throw NumericalError(fmt::format("paf: no convergence after {} iterations (last max |delta h2| = {:.3g})",
                                         opt.max_iter, out.last_delta));

    // Clipped rows are rescaled so loadings and communalities stay consistent.
    for (Eigen::Index i = 0; i < p; ++i) {
        const double ss = out.loadings.row(i).squaredNorm();
        if (ss > heywood_cap) out.loadings.row(i) *= std::sqrt(heywood_cap / ss);
    }
    detail::sign_columns(out.loadings);
    out.communalities = out.loadings.rowwise().squaredNorm();
    Matrix reduced = r;
    reduced.diagonal() = out.communalities;
    out.eigenvalues = detail::eigenvalues_desc(reduced);

    if (heywood) out.warnings.push_back("Heywood case: communality clipped at 0.9995");
    if (collapsed) out.warnings.push_back("a retained factor lost its variance during iteration (under-identified); its loadings were held at zero");
    for (int k = 0; k < m; ++k) {
        if (out.eigenvalues(k) <= 1e-10) {
            out.warnings.push_back(fmt::format("degenerate solution: factor {} has no common variance", k + 1));
            break;
        }
    }
    return out;
}

struct ScreeSuggestion {
    int n_factors = 1;
    bool weak_elbow = false;
    std::vector<double> second_differences;  // entry i belongs to eigenvalue i+1 (0-based)
};

// Count preceding the largest second difference e[i-1] - 2 e[i] + e[i+1].
inline ScreeSuggestion suggest_n_factors(const std::vector<double>& eigenvalues) {
    const auto n = eigenvalues.size();
    if (n < 3) throw PreconditionError("suggest_n_factors: need at least 3 eigenvalues");
    ScreeSuggestion s;
    std::size_t best = 1;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double d2 = eigenvalues[i - 1] - 2.0 * eigenvalues[i] + eigenvalues[i + 1];
        s.second_differences.push_back(d2);
        if (d2 > best_value) {
            best_value = d2;
            best = i;
        }
    }
    s.n_factors = static_cast<int>(best);
    // Weak elbow: the drop after the elbow is not clearly sharper than the next one.
    const std::size_t c = best;
    if (c + 1 < n && eigenvalues[c - 1] > 0.0 && eigenvalues[c] > 0.0) {
        const double drop = eigenvalues[c] / eigenvalues[c - 1];
        const double next = eigenvalues[c + 1] / eigenvalues[c];
        s.weak_elbow = drop > 0.5 * next;
    }
    return s;
}

inline ScreeSuggestion suggest_n_factors(const Vector& eigenvalues) {
    return suggest_n_factors(std::vector<double>(eigenvalues.data(), eigenvalues.data() + eigenvalues.size()));
}

// Kaiser-normalized varimax. Returns the rotated loadings and the rotation matrix.
inline std::pair<Matrix, Matrix> varimax(const Matrix& loadings, double eps = 1e-5, int max_iter = 1000) {
    const auto p = loadings.rows();
    const auto m = loadings.cols();
    if (m < 2) return {loadings, Matrix::Identity(m, m)};
    Vector norms = loadings.rowwise().norm();
    for (Eigen::Index i = 0; i < p; ++i)
        if (norms(i) <= 0.0) norms(i) = 1.0;
    const Matrix x = norms.cwiseInverse().asDiagonal() * loadings;
    Matrix rot = Matrix::Identity(m, m);
    double d = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const Matrix z = x * rot;
        const Vector colss = z.array().square().colwise().sum().transpose();
        const Matrix target = z.array().cube().matrix() - z * colss.asDiagonal() / static_cast<double>(p);
        Eigen::JacobiSVD<Matrix> svd(x.transpose() * target, Eigen::ComputeFullU | Eigen::ComputeFullV);
        rot = svd.matrixU() * svd.matrixV().transpose();
        const double prev = d;
        d = svd.singularValues().sum();
        if (d < prev * (1.0 + eps)) break;
    }
    return {norms.asDiagonal() * (x * rot), rot};
}

struct FactorSolution {
    std::vector<std::string> items;
    Matrix pattern;                // p x m
    Matrix structure;              // pattern * phi
    Matrix phi;                    // m x m factor correlations
    Vector communalities;          // length p
    Vector eigenvalues;            // reduced matrix, descending, length p
    Vector initial_eigenvalues;    // unreduced correlation matrix, descending
    double kappa = 4.0;
    int paf_iterations = 0;
    Warnings warnings;

    int n_factors() const noexcept { return static_cast<int>(pattern.cols()); }
    // Largest |pattern loading| of each item.
    Vector salient_loadings() const { return pattern.cwiseAbs().rowwise().maxCoeff(); }
    // Index of the factor each item loads on most strongly.
    std::vector<int> primary_factor() const {
        std::vector<int> out(static_cast<std::size_t>(pattern.rows()));
        for (Eigen::Index i = 0; i < pattern.rows(); ++i) {
            Eigen::Index arg = 0;
            pattern.row(i).cwiseAbs().maxCoeff(&arg);
            out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
        }
        return out;
    }
};

// Promax: varimax, then an oblique least-squares fit to the sign-preserving
// power target |x|^kappa. Factors are reordered by pattern sum of squares
// and signed so each column's largest loading is positive.
inline FactorSolution promax_rotate(const Matrix& unrotated, double kappa = 4.0) {
    const auto m = unrotated.cols();
    FactorSolution s;
    s.kappa = kappa;
    if (m == 1) {
        s.pattern = unrotated;
        detail::sign_columns(s.pattern);
        s.phi = Matrix::Identity(1, 1);
        s.structure = s.pattern;
        s.communalities = s.pattern.rowwise().squaredNorm();
        return s;
    }
    if (!(kappa > 1.0)) throw PreconditionError("promax: kappa must exceed 1");
    auto [x, vrot] = varimax(unrotated);
    const Matrix target = x.array().sign() * x.array().abs().pow(kappa);
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    if (qr.rank() < m) throw NumericalError("promax: singular target regression");
    Matrix u = qr.solve(target);
    const Matrix utu = u.transpose() * u;
    Eigen::FullPivLU<Matrix> lu(utu);
    if (!lu.isInvertible()) throw NumericalError("promax: singular target regression");
    const Vector d = lu.inverse().diagonal();
    u = u * d.cwiseSqrt().asDiagonal();
    Matrix pattern = x * u;
    Matrix phi = (u.transpose() * u).inverse();

    // Canonical order and signs.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Vector ss = pattern.colwise().squaredNorm().transpose();
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ss(a) > ss(b); });
    Matrix p2(pattern.rows(), m);
    Matrix phi2(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        p2.col(a) = pattern.col(order[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < m; ++b) phi2(a, b) = phi(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
    }
    const Vector signs = detail::sign_columns(p2);
    phi2 = signs.asDiagonal() * phi2 * signs.asDiagonal();
    phi2 = 0.5 * (phi2 + phi2.transpose());
    phi2.diagonal().setOnes();

    s.pattern = std::move(p2);
    s.phi = std::move(phi2);
    s.structure = s.pattern * s.phi;
    s.communalities = (s.pattern * s.phi * s.pattern.transpose()).diagonal();
    return s;
}

struct EfaOptions {
    PafOptions paf;
    double kappa = 4.0;
};

// PAF extraction followed by promax rotation.
inline FactorSolution fit_efa(const CorrelationMatrix& corr, int m, const EfaOptions& opt = {}) {
    PafResult paf = principal_axis_factoring(corr, m, opt.paf);
    FactorSolution s = promax_rotate(paf.loadings, opt.kappa);
    s.items = corr.items;
    s.eigenvalues = paf.eigenvalues;
    s.initial_eigenvalues = detail::eigenvalues_desc(corr.values);
    s.paf_iterations = paf.iterations;
    s.warnings = std::move(paf.warnings);
    return s;
}

// Share of total item variance (percent) carried by the m retained
// reduced-matrix eigenvalues.
inline double variance_explained(const FactorSolution& s) {
    const auto p = static_cast<double>(s.eigenvalues.size());
    if (p == 0.0) throw PreconditionError("variance_explained: empty solution");
    return 100.0 * s.eigenvalues.head(s.n_factors()).sum() / p;
}

// Same share computed from the unreduced correlation matrix (the "initial
// eigenvalues" figure most statistics packages print).
inline double initial_variance_explained(const FactorSolution& s) {
    const auto p = static_cast<double>(s.initial_eigenvalues.size());
    if (p == 0.0) throw PreconditionError("initial_variance_explained: empty solution");
    return 100.0 * s.initial_eigenvalues.head(s.n_factors()).sum() / p;
}

struct PruneStep {
    std::string item;
    double loading = 0.0;  // its largest |pattern loading| when deleted
    int remaining = 0;     // items left after deletion
};

struct PruneResult {
    std::vector<std::string> retained;
    std::vector<PruneStep> deleted;  // deletion order
    FactorSolution solution;
    int iterations = 0;
};

// Refit, delete the single weakest item below the threshold, repeat.
inline PruneResult prune_items(const Matrix& data, const std::vector<std::string>& items, int m,
                               double threshold = 0.50, const EfaOptions& opt = {}) {
    if (static_cast<std::size_t>(data.cols()) != items.size()) throw PreconditionError("prune_items: labels do not match columns");
    PruneResult out;
    std::vector<Eigen::Index> cols(items.size());
    std::iota(cols.begin(), cols.end(), Eigen::Index{0});
    const auto p = items.size();
    for (std::size_t it = 0; it <= p; ++it) {
        std::vector<std::string> labels;
        Matrix sub(data.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            sub.col(static_cast<Eigen::Index>(j)) = data.col(cols[j]);
            labels.push_back(items[static_cast<std::size_t>(cols[j])]);
        }
        FactorSolution sol = fit_efa(pearson_correlation(sub, labels), m, opt);
        ++out.iterations;
        const Vector salient = sol.salient_loadings();
        Eigen::Index worst = 0;
        const double worst_value = salient.minCoeff(&worst);
        if (worst_value >= threshold) {
            std::vector<int> per_factor(static_cast<std::size_t>(m), 0);
            for (int f : sol.primary_factor()) ++per_factor[static_cast<std::size_t>(f)];
            for (int f = 0; f < m; ++f)
                if (per_factor[static_cast<std::size_t>(f)] < 2)
                    throw NumericalError(fmt::format("prune_items: factor {} is left with {} item(s) after pruning {}",
                                                     f + 1, per_factor[static_cast<std::size_t>(f)], out.deleted.size()));
            out.retained = std::move(labels);
            out.solution = std::move(sol);
            return out;
        }
        if (static_cast<int>(cols.size()) - 1 < 2 * m)
            throw NumericalError(fmt::format("prune_items: deleting '{}' would leave fewer than 2 items per factor",
                                             labels[static_cast<std::size_t>(worst)]));
        out.deleted.push_back({labels[static_cast<std::size_t>(worst)], worst_value, static_cast<int>(cols.size()) - 1});
        cols.erase(cols.begin() + worst);
    }
    throw NumericalError("prune_items: did not terminate");  // unreachable: at most p deletions
}

inline PruneResult prune_items(const SurveyDataset& ds, const std::vector<std::string>& items, int m,
                               double threshold = 0.50, const EfaOptions& opt = {}) {
    return prune_items(ds.item_matrix(items), items, m, threshold, opt);
}

struct FactorScores {
    std::vector<std::string> respondent_ids;
    Matrix scores;  // n x m
};

// Thurstone regression scores F = Z R^-1 S on the estimation sample.
inline Matrix factor_score_matrix(const Matrix& data, const FactorSolution& s) {
    if (data.cols() != s.structure.rows()) throw PreconditionError("factor_scores: data columns do not match solution items");
    const auto n = data.rows();
    if (n < 3) throw PreconditionError("factor_scores: need at least 3 respondents");
    Matrix z = data.rowwise() - data.colwise().mean();
    const Vector sd = (z.colwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt().transpose();
    if (!(sd.array() > 0.0).all()) throw DataError("factor_scores: an item has zero variance");
    z = z * sd.cwiseInverse().asDiagonal();
    Matrix r = z.transpose() * z / static_cast<double>(n - 1);
    r.diagonal().setOnes();
    Eigen::LDLT<Matrix> ldlt(r);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > singular_rcond))
        throw NumericalError("factor_scores: item correlation matrix is singular");
    const Matrix weights = ldlt.solve(s.structure);
    return z * weights;
}

inline FactorScores factor_scores(const SurveyDataset& ds, const FactorSolution& s) {
    return {ds.respondent_ids(), factor_score_matrix(ds.item_matrix(s.items), s)};
}

// Tucker congruence coefficient between two loading vectors.
inline double tucker_congruence(const Vector& a, const Vector& b) {
    const double denom = std::sqrt(a.squaredNorm() * b.squaredNorm());
    return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

struct FactorAlignment {
    std::vector<int> column;  // column[k] = estimated column matched to reference column k
    Vector sign;              // sign applied to that estimated column
    double min_congruence = 0.0;
};

// Permutation and signs of `estimated` columns maximizing total |congruence|
// with `reference` (exhaustive; m <= 8).
inline FactorAlignment align_factors(const Matrix& estimated, const Matrix& reference) {
    const auto m = reference.cols();
    if (estimated.cols() != m || estimated.rows() != reference.rows()) throw PreconditionError("align_factors: shape mismatch");
    if (m > 8) throw PreconditionError("align_factors: too many factors for exhaustive alignment");
    Matrix c(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) c(a, b) = tucker_congruence(estimated.col(b), reference.col(a));
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_total = -1.0;
    do {
        double total = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) total += std::abs(c(k, perm[static_cast<std::size_t>(k)]));
        if (total > best_total) {
            best_total = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    FactorAlignment out;
    out.column = best;
    out.sign = Vector(m);
    out.min_congruence = 1.0;
    for (Eigen::Index k = 0; k < m; ++k) {
        const double v = c(k, best[static_cast<std::size_t>(k)]);
        out.sign(k) = v < 0.0 ? -1.0 : 1.0;
        out.min_congruence = std::min(out.min_congruence, std::abs(v));
    }
    return out;
}

}  // namespace surveyrank
