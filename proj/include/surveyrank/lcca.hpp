#pragma once

// Latent-class cluster analysis over continuous factor scores: a Gaussian
// mixture with diagonal covariances fitted by EM, BIC-driven class-count
// selection, modal assignment and passive covariate profiling.

#include "surveyrank/common.hpp"
#include "surveyrank/efa.hpp"
#include "surveyrank/survey_data.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace surveyrank {

enum class VarianceModel {
    class_specific,  // sigma^2_kj
    shared,          // sigma^2_j common to all classes
};

struct EmOptions {
    int restarts = 20;
    std::uint64_t seed = 20210301;
    double tol = 1e-6;  // absolute change in log-likelihood
    int max_iter = 2000;
    double variance_floor = 1e-6;  // fraction of the pooled variance of each column
    VarianceModel variance_model = VarianceModel::class_specific;
    int threads = 1;
};

struct FitStats {
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    int n_parameters = 0;
    std::size_t n = 0;
    int iterations = 0;
    std::uint64_t seed = 0;
    int best_restart = -1;
    bool monotone = true;  // every iteration of every restart
};

struct LatentClassModel {
    int k = 1;
    Vector weights;    // length K, descending
    Matrix means;      // K x m
    Matrix variances;  // K x m
    VarianceModel variance_model = VarianceModel::class_specific;
    FitStats fit;

    nlohmann::json to_json() const;
    static LatentClassModel from_json(const nlohmann::json& j);
};

struct PosteriorMatrix {
    std::vector<std::string> respondent_ids;
    Matrix responsibilities;  // n x K, rows sum to 1
};

struct RestartTrace {
    int restart = 0;
    std::vector<double> loglik;  // one entry per E-step
    bool degenerate = false;
    bool converged = false;
    bool monotone = true;
};

struct EmFit {
    LatentClassModel model;
    PosteriorMatrix posterior;
    std::vector<RestartTrace> traces;
    Warnings warnings;
};

inline int count_parameters(int k, Eigen::Index m, VarianceModel vm) {
    const int mi = static_cast<int>(m);
    return (k - 1) + k * mi + (vm == VarianceModel::shared ? mi : k * mi);
}

namespace detail {

inline constexpr double log_2pi = 1.8378770664093454835606594728112;

// Per-row log of the mixture density and the normalized responsibilities.
inline double e_step(const Matrix& x, const Vector& w, const Matrix& mu, const Matrix& var, Matrix& resp) {
    const auto n = x.rows();
    const auto k = mu.rows();
    const auto m = x.cols();
    resp.resize(n, k);
    Vector log_norm(k);
    for (Eigen::Index c = 0; c < k; ++c)
        log_norm(c) = std::log(w(c)) - 0.5 * (static_cast<double>(m) * log_2pi + var.row(c).array().log().sum());
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double hi = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
            const double q = ((x.row(i) - mu.row(c)).array().square() / var.row(c).array()).sum();
            resp(i, c) = log_norm(c) - 0.5 * q;
            hi = std::max(hi, resp(i, c));
        }
        double s = 0.0;
        for (Eigen::Index c = 0; c < k; ++c) {
            resp(i, c) = std::exp(resp(i, c) - hi);
            s += resp(i, c);
        }
        resp.row(i) /= s;
        total += hi + std::log(s);
    }
    return total;
}

struct RestartResult {
    RestartTrace trace;
    Vector w;
    Matrix mu;
    Matrix var;
    double loglik = -std::numeric_limits<double>::infinity();
};

// k-means++ seeding followed by a hard assignment to the nearest seed.
inline void seed_parameters(const Matrix& x, int k, std::mt19937_64& rng, const Vector& floor, const Vector& pooled,
                            Vector& w, Matrix& mu, Matrix& var) {
    const auto n = x.rows();
    const auto m = x.cols();
    mu.resize(k, m);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    mu.row(0) = x.row(pick(rng));
    Vector d2 = (x.rowwise() - mu.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (chosen = 0; chosen < n - 1; ++chosen) {
                target -= d2(chosen);
                if (target <= 0.0) break;
            }
        } else {
            chosen = pick(rng);
        }
        mu.row(c) = x.row(chosen);
        d2 = d2.cwiseMin((x.rowwise() - mu.row(c)).rowwise().squaredNorm());
    }
    Vector count = Vector::Zero(k);
    Matrix sum = Matrix::Zero(k, m);
    Matrix sumsq = Matrix::Zero(k, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        (mu.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
        count(best) += 1.0;
        sum.row(best) += x.row(i);
        sumsq.row(best) += x.row(i).array().square().matrix();
    }
    w.resize(k);
    var.resize(k, m);
    for (int c = 0; c < k; ++c) {
        w(c) = std::max(count(c), 1.0) / static_cast<double>(n);
        if (count(c) >= 2.0) {
            mu.row(c) = sum.row(c) / count(c);
            var.row(c) = (sumsq.row(c) / count(c) - mu.row(c).array().square().matrix()).cwiseMax(floor.transpose());
        } else {
            var.row(c) = pooled.transpose();
        }
    }
    w /= w.sum();
}

inline RestartResult run_restart(const Matrix& x, int k, int restart, const EmOptions& opt, const Vector& floor,
                                 const Vector& pooled) {
    const auto n = x.rows();
    const auto m = x.cols();
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed & 0xffffffffu), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(restart)};
    std::mt19937_64 rng(seq);

    RestartResult res;
    res.trace.restart = restart;
    Vector w;
    Matrix mu;
    Matrix var;
    seed_parameters(x, k, rng, floor, pooled, w, mu, var);
    if (opt.variance_model == VarianceModel::shared) {
        // Start inside the shared parameter space, or the first step can lower the likelihood.
        const Matrix common = (w.transpose() * var).cwiseMax(floor.transpose());
        for (int c = 0; c < k; ++c) var.row(c) = common;
    }

    Matrix resp;
    std::vector<int> floor_streak(static_cast<std::size_t>(k), 0);
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iter; ++it) {
        const double ll = e_step(x, w, mu, var, resp);
        res.trace.loglik.push_back(ll);
        if (it > 0 && ll < prev - 1e-9 * std::max(1.0, std::abs(prev))) res.trace.monotone = false;
        if (it > 0 && std::abs(ll - prev) < opt.tol) {
            res.trace.converged = true;
            break;
        }
        prev = ll;

        // M-step.
        const Vector nk = resp.colwise().sum().transpose();
        for (int c = 0; c < k; ++c) {
            if (nk(c) < 1.0) {
                res.trace.degenerate = true;
                return res;
            }
        }
        w = nk / static_cast<double>(n);
        mu = (nk.cwiseInverse().asDiagonal() * (resp.transpose() * x));
        Matrix pooled_ss = Matrix::Zero(1, m);
        for (int c = 0; c < k; ++c) {
            const Matrix centered = x.rowwise() - mu.row(c);
            const Vector ss = (centered.array().square().colwise() * resp.col(c).array()).colwise().sum().transpose();
            if (opt.variance_model == VarianceModel::shared) {
                pooled_ss += ss.transpose();
            } else {
                var.row(c) = (ss / nk(c)).transpose();
            }
        }
        if (opt.variance_model == VarianceModel::shared)
            for (int c = 0; c < k; ++c) var.row(c) = pooled_ss / static_cast<double>(n);
        for (int c = 0; c < k; ++c) {
            bool at_floor = false;
            for (Eigen::Index j = 0; j < m; ++j) {
                if (var(c, j) <= floor(j)) {
                    var(c, j) = floor(j);
                    at_floor = true;
                }
            }
            auto& streak = floor_streak[static_cast<std::size_t>(c)];
            streak = at_floor ? streak + 1 : 0;
            if (streak > 10) {
                res.trace.degenerate = true;
                return res;
            }
        }
    }
    res.w = std::move(w);
    res.mu = std::move(mu);
    res.var = std::move(var);
    res.loglik = res.trace.loglik.back();
    return res;
}

// Classes sorted by descending weight, ties by lexicographic means.
inline std::vector<Eigen::Index> canonical_order(const Vector& w, const Matrix& mu) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(w.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (w(a) != w(b)) return w(a) > w(b);
        for (Eigen::Index j = 0; j < mu.cols(); ++j)
            if (mu(a, j) != mu(b, j)) return mu(a, j) < mu(b, j);
        return a < b;
    });
    return order;
}

}  // namespace detail

inline EmFit fit_em(const Matrix& x, const std::vector<std::string>& ids, int k, const EmOptions& opt = {}) {
    const auto n = x.rows();
    const auto m = x.cols();
    if (k < 1) throw PreconditionError("fit_em: K must be at least 1");
    if (m < 1) throw PreconditionError("fit_em: no indicators");
    if (!(n > static_cast<Eigen::Index>(k) * (2 * m + 1)))
        throw PreconditionError(fmt::format("fit_em: n = {} too small for K = {} over {} indicators (need n > {})", n, k, m,
                                            static_cast<Eigen::Index>(k) * (2 * m + 1)));
    if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != n) throw PreconditionError("fit_em: id count mismatch");
    if (opt.restarts < 1) throw PreconditionError("fit_em: need at least one restart");

    const Vector mean = x.colwise().mean().transpose();
    const Vector pooled = ((x.rowwise() - mean.transpose()).colwise().squaredNorm() / static_cast<double>(n)).transpose();
    if (!(pooled.array() > 0.0).all()) throw DataError("fit_em: an indicator has zero variance");
    const Vector floor = opt.variance_floor * pooled;

    std::vector<detail::RestartResult> results(static_cast<std::size_t>(opt.restarts));
    const int restarts = k == 1 ? 1 : opt.restarts;  // K = 1 has a closed form; one pass suffices
    results.resize(static_cast<std::size_t>(restarts));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < restarts; r = next++)
            results[static_cast<std::size_t>(r)] = detail::run_restart(x, k, r, opt, floor, pooled);
    };
    const int threads = std::clamp(opt.threads, 1, restarts);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    EmFit fit;
    int best = -1;
    bool monotone = true;
    for (int r = 0; r < restarts; ++r) {
        const auto& res = results[static_cast<std::size_t>(r)];
        fit.traces.push_back(res.trace);
        monotone = monotone && res.trace.monotone;
        if (res.trace.degenerate) continue;
        if (best < 0 || res.loglik > results[static_cast<std::size_t>(best)].loglik) best = r;
    }
    if (best < 0) throw NumericalError(fmt::format("fit_em: all {} restarts degenerate for K = {}", restarts, k));
    const auto& b = results[static_cast<std::size_t>(best)];
    int degenerate = 0;
    int unconverged = 0;
    for (const auto& t : fit.traces) {
        degenerate += t.degenerate ? 1 : 0;
        unconverged += (!t.degenerate && !t.converged) ? 1 : 0;
    }
    if (degenerate) fit.warnings.push_back(fmt::format("K = {}: {} of {} restarts degenerate", k, degenerate, restarts));
    if (!b.trace.converged) fit.warnings.push_back(fmt::format("K = {}: best restart hit max_iter", k));
    (void)unconverged;

    const auto order = detail::canonical_order(b.w, b.mu);
    LatentClassModel& model = fit.model;
    model.k = k;
    model.variance_model = opt.variance_model;
    model.weights.resize(k);
    model.means.resize(k, m);
    model.variances.resize(k, m);
    for (int c = 0; c < k; ++c) {
        const auto src = order[static_cast<std::size_t>(c)];
        model.weights(c) = b.w(src);
        model.means.row(c) = b.mu.row(src);
        model.variances.row(c) = b.var.row(src);
    }
    Matrix resp;
    const double ll = detail::e_step(x, model.weights, model.means, model.variances, resp);
    model.fit.loglik = ll;
    model.fit.n = static_cast<std::size_t>(n);
    model.fit.n_parameters = count_parameters(k, m, opt.variance_model);
    model.fit.aic = -2.0 * ll + 2.0 * model.fit.n_parameters;
    model.fit.bic = -2.0 * ll + model.fit.n_parameters * std::log(static_cast<double>(n));
    model.fit.iterations = static_cast<int>(b.trace.loglik.size());
    model.fit.seed = opt.seed;
    model.fit.best_restart = best;
    model.fit.monotone = monotone;
    fit.posterior.respondent_ids = ids;
    fit.posterior.responsibilities = std::move(resp);
    return fit;
}

inline EmFit fit_em(const FactorScores& scores, int k, const EmOptions& opt = {}) {
    return fit_em(scores.scores, scores.respondent_ids, k, opt);
}

enum class SelectionCriterion { bic, aic };

struct ModelFitRow {
    int k = 0;
    bool ok = false;
    double loglik = 0.0;
    int n_parameters = 0;
    double aic = 0.0;
    double bic = 0.0;
    int iterations = 0;
    std::string error;
};

struct ModelSelection {
    EmFit chosen;
    std::vector<ModelFitRow> table;
    Warnings warnings;
};

// Fits every K and keeps the minimum-criterion model; ties go to the smaller K.
inline ModelSelection select_model(const FactorScores& scores, const std::vector<int>& k_range,
                                   SelectionCriterion criterion = SelectionCriterion::bic, const EmOptions& opt = {}) {
    if (k_range.empty()) throw PreconditionError("select_model: empty K range");
    std::vector<int> ks = k_range;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    ModelSelection sel;
    std::optional<EmFit> best;
    double best_value = std::numeric_limits<double>::infinity();
    for (int k : ks) {
        ModelFitRow row;
        row.k = k;
        try {
            EmFit f = fit_em(scores, k, opt);
            row.ok = true;
            row.loglik = f.model.fit.loglik;
            row.n_parameters = f.model.fit.n_parameters;
            row.aic = f.model.fit.aic;
            row.bic = f.model.fit.bic;
            row.iterations = f.model.fit.iterations;
            const double v = criterion == SelectionCriterion::bic ? row.bic : row.aic;
            sel.warnings.insert(sel.warnings.end(), f.warnings.begin(), f.warnings.end());
            if (v < best_value) {
                best_value = v;
                best = std::move(f);
            }
        } catch (const Error& e) {
            row.error = e.what();
            sel.warnings.push_back(fmt::format("K = {} failed: {}", k, e.what()));
        }
        sel.table.push_back(std::move(row));
    }
    if (!best) throw NumericalError("select_model: every candidate K failed");
    sel.chosen = std::move(*best);
    return sel;
}

struct ClassAssignment {
    std::vector<int> labels;     // 0-based class per respondent
    std::vector<double> shares;  // fraction of respondents per class
    std::size_t ties = 0;
};

inline ClassAssignment assign_classes(const Matrix& responsibilities) {
    const auto n = responsibilities.rows();
    const auto k = responsibilities.cols();
    if (n == 0 || k == 0) throw PreconditionError("assign_classes: empty posterior");
    ClassAssignment out;
    out.labels.resize(static_cast<std::size_t>(n));
    out.shares.assign(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        bool tie = false;
        for (Eigen::Index c = 1; c < k; ++c) {
            if (responsibilities(i, c) > responsibilities(i, best)) {
                best = c;
                tie = false;
            } else if (responsibilities(i, c) == responsibilities(i, best)) {
                tie = true;
            }
        }
        if (tie) ++out.ties;
        out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        out.shares[static_cast<std::size_t>(best)] += 1.0;
    }
    for (auto& s : out.shares) s /= static_cast<double>(n);
    return out;
}

inline ClassAssignment assign_classes(const PosteriorMatrix& post) { return assign_classes(post.responsibilities); }

// One-hot posterior from hard labels, for profiling by modal class.
inline Matrix one_hot(const std::vector<int>& labels, int k) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) throw PreconditionError("one_hot: label out of range");
        out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return out;
}

// Posterior-weighted factor means, K x m.
inline Matrix class_factor_means(const Matrix& responsibilities, const Matrix& scores) {
    if (responsibilities.rows() != scores.rows()) throw PreconditionError("class_factor_means: row mismatch");
    const Vector nk = responsibilities.colwise().sum().transpose();
    if (!(nk.array() > 0.0).all()) throw NumericalError("class_factor_means: empty class");
    return nk.cwiseInverse().asDiagonal() * (responsibilities.transpose() * scores);
}

struct CovariateProfile {
    std::string code;
    CovariateKind kind = CovariateKind::categorical;
    std::vector<std::string> levels;
    Matrix class_shares;            // K x L percent (categorical)
    std::vector<double> overall_shares;
    Vector class_means;             // K (continuous)
    double overall_mean = 0.0;
    std::vector<double> class_weight;  // posterior mass with a non-missing value
};

// Class-conditional covariate summaries; the fitted model is not consulted.
inline std::vector<CovariateProfile> profile_covariates(const Matrix& responsibilities, const SurveyDataset& ds,
                                                        const std::vector<std::string>& covariates) {
    if (static_cast<std::size_t>(responsibilities.rows()) != ds.records.size())
        throw PreconditionError("profile_covariates: posterior rows do not match dataset records");
    const auto k = responsibilities.cols();
    std::vector<CovariateProfile> out;
    for (const auto& code : covariates) {
        auto idx = ds.schema.covariate_index(code);
        if (!idx) throw DataError("profile_covariates: unknown covariate '" + code + "'");
        const auto& spec = ds.schema.covariates()[*idx];
        CovariateProfile prof;
        prof.code = code;
        prof.kind = spec.kind;
        prof.class_weight.assign(static_cast<std::size_t>(k), 0.0);
        if (spec.kind == CovariateKind::categorical) {
            prof.levels = spec.levels;
            const auto L = static_cast<Eigen::Index>(spec.levels.size());
            Matrix mass = Matrix::Zero(k, L);
            Vector overall = Vector::Zero(L);
            for (std::size_t i = 0; i < ds.records.size(); ++i) {
                const auto& v = ds.records[i].covariates[*idx];
                if (!std::holds_alternative<std::string>(v)) continue;
                const auto lv = static_cast<Eigen::Index>(
                    std::find(spec.levels.begin(), spec.levels.end(), std::get<std::string>(v)) - spec.levels.begin());
                mass.col(lv) += responsibilities.row(static_cast<Eigen::Index>(i)).transpose();
                overall(lv) += 1.0;
            }
            prof.class_shares = Matrix::Zero(k, L);
            for (Eigen::Index c = 0; c < k; ++c) {
                const double tot = mass.row(c).sum();
                prof.class_weight[static_cast<std::size_t>(c)] = tot;
                if (tot > 0.0) prof.class_shares.row(c) = 100.0 * mass.row(c) / tot;
            }
            const double ot = overall.sum();
            for (Eigen::Index l = 0; l < L; ++l) prof.overall_shares.push_back(ot > 0.0 ? 100.0 * overall(l) / ot : 0.0);
        } else {
            Vector wsum = Vector::Zero(k);
            Vector vsum = Vector::Zero(k);
            double osum = 0.0;
            std::size_t on = 0;
            for (std::size_t i = 0; i < ds.records.size(); ++i) {
                const auto& v = ds.records[i].covariates[*idx];
                if (!std::holds_alternative<double>(v)) continue;
                const double val = std::get<double>(v);
                for (Eigen::Index c = 0; c < k; ++c) {
                    const double r = responsibilities(static_cast<Eigen::Index>(i), c);
                    wsum(c) += r;
                    vsum(c) += r * val;
                }
                osum += val;
                ++on;
            }
            prof.class_means = Vector::Zero(k);
            for (Eigen::Index c = 0; c < k; ++c) {
                prof.class_weight[static_cast<std::size_t>(c)] = wsum(c);
                prof.class_means(c) = wsum(c) > 0.0 ? vsum(c) / wsum(c) : std::nan("");
            }
            prof.overall_mean = on ? osum / static_cast<double>(on) : std::nan("");
        }
        out.push_back(std::move(prof));
    }
    return out;
}

// Adjusted Rand index between two labelings (Hubert-Arabie).
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw PreconditionError("adjusted_rand_index: size mismatch");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ra;
    std::map<int, double> rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ra[a[i]] += 1.0;
        rb[b[i]] += 1.0;
    }
    auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_joint = 0.0;
    double sum_a = 0.0;
    double sum_b = 0.0;
    for (const auto& [key, v] : joint) sum_joint += c2(v);
    for (const auto& [key, v] : ra) sum_a += c2(v);
    for (const auto& [key, v] : rb) sum_b += c2(v);
    const double total = c2(static_cast<double>(a.size()));
    const double expected = sum_a * sum_b / total;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;
    return (sum_joint - expected) / (max_index - expected);
}

inline nlohmann::json LatentClassModel::to_json() const {
    auto rows = [](const Matrix& m) {
        nlohmann::json out = nlohmann::json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::vector<double> r(static_cast<std::size_t>(m.cols()));
            for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
            out.push_back(r);
        }
        return out;
    };
    nlohmann::json j;
    j["K"] = k;
    j["variance_model"] = variance_model == VarianceModel::shared ? "shared" : "class_specific";
    j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
    j["means"] = rows(means);
    j["variances"] = rows(variances);
    j["fit"] = {{"loglik", fit.loglik}, {"aic", fit.aic},   {"bic", fit.bic},
                {"n_parameters", fit.n_parameters},         {"n", fit.n},
                {"iterations", fit.iterations},             {"seed", fit.seed},
                {"best_restart", fit.best_restart},         {"monotone", fit.monotone}};
    return j;
}

inline LatentClassModel LatentClassModel::from_json(const nlohmann::json& j) {
    auto matrix = [](const nlohmann::json& a) {
        const auto r = static_cast<Eigen::Index>(a.size());
        const auto c = r ? static_cast<Eigen::Index>(a.at(0).size()) : 0;
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index jj = 0; jj < c; ++jj) m(i, jj) = a.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(jj)).get<double>();
        return m;
    };
    LatentClassModel m;
    m.k = j.at("K").get<int>();
    m.variance_model = j.value("variance_model", "class_specific") == "shared" ? VarianceModel::shared : VarianceModel::class_specific;
    const auto w = j.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.means = matrix(j.at("means"));
    m.variances = matrix(j.at("variances"));
    const auto& f = j.at("fit");
    m.fit.loglik = f.at("loglik").get<double>();
    m.fit.aic = f.at("aic").get<double>();
    m.fit.bic = f.at("bic").get<double>();
    m.fit.n_parameters = f.at("n_parameters").get<int>();
    m.fit.n = f.at("n").get<std::size_t>();
    m.fit.iterations = f.at("iterations").get<int>();
    m.fit.seed = f.at("seed").get<std::uint64_t>();
    m.fit.best_restart = f.at("best_restart").get<int>();
    m.fit.monotone = f.at("monotone").get<bool>();
    if (m.weights.size() != m.k || m.means.rows() != m.k || m.variances.rows() != m.k)
        throw DataError("latent class model: inconsistent K");
    if (std::abs(m.weights.sum() - 1.0) > 1e-9) throw DataError("latent class model: weights do not sum to 1");
    return m;
}

}  // namespace surveyrank
