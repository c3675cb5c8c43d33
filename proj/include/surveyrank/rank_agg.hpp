#pragma once

// Meta ranking: the permutation minimizing the weighted sum of distances to a
// set of input rankings, found exhaustively for small lists and by
// cross-entropy Monte Carlo otherwise.

#include "surveyrank/common.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace surveyrank {

enum class Metric { footrule, kendall };

inline std::string to_string(Metric m) { return m == Metric::footrule ? "footrule" : "kendall"; }

inline Metric metric_from_string(const std::string& s) {
    if (s == "footrule") return Metric::footrule;
    if (s == "kendall") return Metric::kendall;
    throw PreconditionError("unknown metric '" + s + "'");
}

// A ranking is rank-per-item: r[i] is the position (1 = best) of item i.
using Ranking = std::vector<int>;

inline bool is_permutation_ranking(const Ranking& r) {
    std::vector<bool> seen(r.size(), false);
    for (int v : r) {
        if (v < 1 || v > static_cast<int>(r.size()) || seen[static_cast<std::size_t>(v - 1)]) return false;
        seen[static_cast<std::size_t>(v - 1)] = true;
    }
    return true;
}

namespace detail {

inline void check_pair(const Ranking& a, const Ranking& b) {
    if (a.size() != b.size()) throw PreconditionError(fmt::format("rankings cover {} and {} items", a.size(), b.size()));
}

}  // namespace detail

inline long long footrule_distance(const Ranking& a, const Ranking& b) {
    detail::check_pair(a, b);
    long long d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

inline long long kendall_distance(const Ranking& a, const Ranking& b) {
    detail::check_pair(a, b);
    long long d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j)
            if ((a[i] < a[j]) != (b[i] < b[j])) ++d;
    return d;
}

inline long long distance(Metric m, const Ranking& a, const Ranking& b) {
    return m == Metric::footrule ? footrule_distance(a, b) : kendall_distance(a, b);
}

// Labeled form: aligns `b` to the item order of `a`.
inline long long distance(Metric m, const std::vector<std::string>& labels_a, const Ranking& a,
                          const std::vector<std::string>& labels_b, const Ranking& b) {
    if (labels_a.size() != a.size() || labels_b.size() != b.size() || labels_a.size() != labels_b.size())
        throw PreconditionError("distance: label mismatch");
    Ranking aligned(a.size());
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        auto it = std::find(labels_b.begin(), labels_b.end(), labels_a[i]);
        if (it == labels_b.end()) throw PreconditionError("distance: label '" + labels_a[i] + "' missing from second ranking");
        aligned[i] = b[static_cast<std::size_t>(it - labels_b.begin())];
    }
    return distance(m, a, aligned);
}

struct RankingEnsemble {
    std::vector<std::string> labels;
    std::vector<Ranking> rankings;
    std::vector<double> weights;       // one per input, default 1
    std::vector<std::string> sources;  // optional names of the inputs

    std::size_t size() const noexcept { return labels.size(); }

    void validate() const {
        if (labels.size() < 2) throw PreconditionError("ensemble: need at least 2 items");
        if (rankings.empty()) throw PreconditionError("ensemble: no input rankings");
        if (weights.size() != rankings.size()) throw PreconditionError("ensemble: one weight per input ranking required");
        for (std::size_t k = 0; k < rankings.size(); ++k) {
            if (rankings[k].size() != labels.size())
                throw PreconditionError(fmt::format("ensemble: input {} ranks {} items, expected {}", k + 1, rankings[k].size(), labels.size()));
            if (!is_permutation_ranking(rankings[k]))
                throw PreconditionError(fmt::format("ensemble: input {} is not a permutation of 1..{}", k + 1, labels.size()));
            if (!(weights[k] > 0.0) || !std::isfinite(weights[k])) throw PreconditionError("ensemble: weights must be positive");
        }
    }
};

inline RankingEnsemble make_ensemble(std::vector<std::string> labels, std::vector<Ranking> rankings,
                                     std::vector<double> weights = {}, std::vector<std::string> sources = {}) {
    if (weights.empty()) weights.assign(rankings.size(), 1.0);
    RankingEnsemble e{std::move(labels), std::move(rankings), std::move(weights), std::move(sources)};
    e.validate();
    return e;
}

inline double objective(const RankingEnsemble& e, const Ranking& candidate, Metric m) {
    double total = 0.0;
    for (std::size_t k = 0; k < e.rankings.size(); ++k) total += e.weights[k] * static_cast<double>(distance(m, candidate, e.rankings[k]));
    return total;
}

enum class AggregationMethod { brute_force, cross_entropy };

inline std::string to_string(AggregationMethod m) { return m == AggregationMethod::brute_force ? "brute-force" : "cross-entropy"; }

struct AggregationResult {
    std::vector<std::string> labels;
    Ranking meta;
    double objective = 0.0;
    Metric metric = Metric::footrule;
    AggregationMethod method = AggregationMethod::brute_force;
    bool optimal = false;
    std::size_t optimal_count = 0;  // brute force: permutations attaining the optimum
    std::optional<std::uint64_t> seed;
    int iterations = 0;
    bool converged = true;
    Warnings warnings;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["labels"] = labels;
        j["meta"] = meta;
        j["objective"] = objective;
        j["metric"] = to_string(metric);
        j["method"] = to_string(method);
        j["optimal"] = optimal;
        if (method == AggregationMethod::brute_force) j["optimal_count"] = optimal_count;
        if (seed) j["seed"] = *seed;
        if (method == AggregationMethod::cross_entropy) {
            j["iterations"] = iterations;
            j["converged"] = converged;
        }
        j["warnings"] = warnings;
        return j;
    }
};

inline constexpr std::size_t brute_force_max_items = 8;

namespace detail {

struct ScanBest {
    Ranking best;
    double value = std::numeric_limits<double>::infinity();
    std::size_t count = 0;
};

// Permutations whose first item sits at rank `first`, in lexicographic order.
inline ScanBest scan_chunk(const RankingEnsemble& e, Metric m, int first) {
    const int a = static_cast<int>(e.size());
    Ranking rest;
    for (int v = 1; v <= a; ++v)
        if (v != first) rest.push_back(v);
    ScanBest sb;
    Ranking cand(static_cast<std::size_t>(a));
    cand[0] = first;
    do {
        std::copy(rest.begin(), rest.end(), cand.begin() + 1);
        const double v = objective(e, cand, m);
        if (v < sb.value) {
            sb.value = v;
            sb.best = cand;
            sb.count = 1;
        } else if (v == sb.value) {
            ++sb.count;
        }
    } while (std::next_permutation(rest.begin(), rest.end()));
    return sb;
}

}  // namespace detail

// Exhaustive search; among equal optima the lexicographically smallest rank
// vector wins.
inline AggregationResult aggregate_bruteforce(const RankingEnsemble& e, Metric m = Metric::footrule, int threads = 1) {
    e.validate();
    if (e.size() > brute_force_max_items)
        throw PreconditionError(fmt::format("aggregate_bruteforce: {} items exceeds {}; use cross-entropy", e.size(), brute_force_max_items));
    const int a = static_cast<int>(e.size());
    std::vector<detail::ScanBest> chunks(static_cast<std::size_t>(a));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int c = next++; c < a; c = next++) chunks[static_cast<std::size_t>(c)] = detail::scan_chunk(e, m, c + 1);
    };
    const int nt = std::clamp(threads, 1, a);
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    AggregationResult res;
    res.labels = e.labels;
    res.metric = m;
    res.method = AggregationMethod::brute_force;
    res.optimal = true;
    res.objective = std::numeric_limits<double>::infinity();
    for (const auto& c : chunks) {  // chunk order is lexicographic order
        if (c.value < res.objective) {
            res.objective = c.value;
            res.meta = c.best;
            res.optimal_count = c.count;
        } else if (c.value == res.objective) {
            res.optimal_count += c.count;
        }
    }
    if (res.optimal_count > 1)
        res.warnings.push_back(fmt::format("{} optimal permutations; lexicographically smallest reported", res.optimal_count));
    return res;
}

struct CrossEntropyOptions {
    std::uint64_t seed = 1;
    int samples = 0;          // per iteration; 0 -> 10 a^2
    double rho = 0.1;         // elite fraction
    double smoothing = 0.25;  // weight of the elite estimate in the update
    int max_stagnation = 7;   // iterations without improvement before stopping
    int max_iter = 1000;
    bool polish = true;       // pairwise-swap descent on the final best
};

namespace detail {

// Position-major sampling: items are drawn position by position from the
// column of the probability matrix, renormalized over unused items.
inline Ranking sample_ranking(const Matrix& p, std::mt19937_64& rng, std::vector<int>& order_buf) {
    const auto a = p.rows();
    Ranking r(static_cast<std::size_t>(a), 0);
    std::vector<bool> used(static_cast<std::size_t>(a), false);
    order_buf.resize(static_cast<std::size_t>(a));
    std::iota(order_buf.begin(), order_buf.end(), 0);
    std::shuffle(order_buf.begin(), order_buf.end(), rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int pos : order_buf) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < a; ++i)
            if (!used[static_cast<std::size_t>(i)]) total += p(i, pos);
        Eigen::Index chosen = -1;
        if (total > 0.0) {
            double target = u(rng) * total;
            for (Eigen::Index i = 0; i < a; ++i) {
                if (used[static_cast<std::size_t>(i)]) continue;
                chosen = i;
                target -= p(i, pos);
                if (target <= 0.0) break;
            }
        } else {
            std::vector<Eigen::Index> free;
            for (Eigen::Index i = 0; i < a; ++i)
                if (!used[static_cast<std::size_t>(i)]) free.push_back(i);
            chosen = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
        }
        used[static_cast<std::size_t>(chosen)] = true;
        r[static_cast<std::size_t>(chosen)] = pos + 1;
    }
    return r;
}

inline bool better(double v, const Ranking& r, double best_v, const Ranking& best) {
    return v < best_v || (v == best_v && r < best);
}

}  // namespace detail

inline AggregationResult aggregate_cross_entropy(const RankingEnsemble& e, Metric m = Metric::footrule,
                                                 const CrossEntropyOptions& opt = {}) {
    e.validate();
    const auto a = static_cast<Eigen::Index>(e.size());
    const int n_samples = opt.samples > 0 ? opt.samples : static_cast<int>(10 * a * a);
    if (!(opt.rho > 0.0 && opt.rho <= 1.0)) throw PreconditionError("cross-entropy: rho must lie in (0, 1]");
    if (!(opt.smoothing > 0.0 && opt.smoothing <= 1.0)) throw PreconditionError("cross-entropy: smoothing must lie in (0, 1]");
    const int n_elite = std::max(1, static_cast<int>(std::ceil(opt.rho * n_samples)));

    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed & 0xffffffffu), static_cast<std::uint32_t>(opt.seed >> 32)};
    std::mt19937_64 rng(seq);
    Matrix p = Matrix::Constant(a, a, 1.0 / static_cast<double>(a));

    AggregationResult res;
    res.labels = e.labels;
    res.metric = m;
    res.method = AggregationMethod::cross_entropy;
    res.seed = opt.seed;
    res.objective = std::numeric_limits<double>::infinity();
    // Inputs are screened as candidates so the result never loses to any of them.
    for (const auto& r : e.rankings) {
        const double v = objective(e, r, m);
        if (detail::better(v, r, res.objective, res.meta)) {
            res.objective = v;
            res.meta = r;
        }
    }

    std::vector<std::pair<double, Ranking>> pop(static_cast<std::size_t>(n_samples));
    std::vector<int> order_buf;
    int stagnant = 0;
    res.converged = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        res.iterations = it + 1;
        for (auto& s : pop) {
            s.second = detail::sample_ranking(p, rng, order_buf);
            s.first = objective(e, s.second, m);
        }
        std::partial_sort(pop.begin(), pop.begin() + n_elite, pop.end());
        bool improved = false;
        if (detail::better(pop[0].first, pop[0].second, res.objective, res.meta)) {
            improved = pop[0].first < res.objective;
            res.objective = pop[0].first;
            res.meta = pop[0].second;
        }
        Matrix elite = Matrix::Zero(a, a);
        for (int k = 0; k < n_elite; ++k)
            for (Eigen::Index i = 0; i < a; ++i) elite(i, pop[static_cast<std::size_t>(k)].second[static_cast<std::size_t>(i)] - 1) += 1.0;
        elite /= static_cast<double>(n_elite);
        p = (1.0 - opt.smoothing) * p + opt.smoothing * elite;
        stagnant = improved ? 0 : stagnant + 1;
        if (stagnant >= opt.max_stagnation) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) res.warnings.push_back(fmt::format("cross-entropy: no convergence in {} iterations; best found reported", opt.max_iter));

    if (opt.polish) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (std::size_t i = 0; i < res.meta.size(); ++i) {
                for (std::size_t j = i + 1; j < res.meta.size(); ++j) {
                    Ranking cand = res.meta;
                    std::swap(cand[i], cand[j]);
                    const double v = objective(e, cand, m);
                    if (v < res.objective) {
                        res.objective = v;
                        res.meta = std::move(cand);
                        moved = true;
                    }
                }
            }
        }
    }
    res.optimal = false;
    return res;
}

struct AggregationPolicy {
    Metric metric = Metric::footrule;
    std::size_t brute_force_max = brute_force_max_items;
    int threads = 1;
    CrossEntropyOptions cross_entropy;
};

inline AggregationResult aggregate(const RankingEnsemble& e, const AggregationPolicy& policy = {}) {
    if (e.size() <= std::min(policy.brute_force_max, brute_force_max_items)) return aggregate_bruteforce(e, policy.metric, policy.threads);
    return aggregate_cross_entropy(e, policy.metric, policy.cross_entropy);
}

}  // namespace surveyrank
