#pragma once

// Independent reference computations. Plain loops, no shared code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

// Two-component 1-D Gaussian mixture with one shared variance: maximum
// log-likelihood by grid search over (pi, mu1, mu2, log sigma^2), refined by
// repeatedly re-gridding a shrinking box around the incumbent.
inline double mixture_loglik(const std::vector<double>& x, double pi, double mu1, double mu2, double var) {
    const double c = -0.5 * std::log(2.0 * M_PI * var);
    double ll = 0.0;
    for (double v : x) {
        const double a = std::log(pi) + c - 0.5 * (v - mu1) * (v - mu1) / var;
        const double b = std::log(1.0 - pi) + c - 0.5 * (v - mu2) * (v - mu2) / var;
        const double hi = std::max(a, b);
        ll += hi + std::log(std::exp(a - hi) + std::exp(b - hi));
    }
    return ll;
}

inline double grid_max_two_class_shared(const std::vector<double>& x) {
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it, hi = *hi_it;
    const double span = hi - lo;
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());

    // Box: pi in (0,1), means within the data range, log variance from tiny to total.
    std::array<double, 4> center{0.5, lo + span / 4, hi - span / 4, std::log(var) - 2.0};
    std::array<double, 4> half{0.499, span / 2 + 1e-9, span / 2 + 1e-9, 6.0};
    double best = -std::numeric_limits<double>::infinity();
    std::array<double, 4> arg = center;
    const int g = 16;
    for (int round = 0; round < 18; ++round) {
        for (int a = 0; a <= g; ++a) {
            const double pi = std::clamp(center[0] - half[0] + 2 * half[0] * a / g, 1e-6, 1 - 1e-6);
            for (int b = 0; b <= g; ++b) {
                const double m1 = center[1] - half[1] + 2 * half[1] * b / g;
                for (int c = 0; c <= g; ++c) {
                    const double m2 = center[2] - half[2] + 2 * half[2] * c / g;
                    for (int d = 0; d <= g; ++d) {
                        const double lv = center[3] - half[3] + 2 * half[3] * d / g;
                        const double ll = mixture_loglik(x, pi, m1, m2, std::exp(lv));
                        if (ll > best) {
                            best = ll;
                            arg = {pi, m1, m2, lv};
                        }
                    }
                }
            }
        }
        center = arg;
        for (auto& h : half) h *= 0.35;
    }
    return best;
}

// MCDM step by step, one criterion at a time.
struct Mcdm {
    std::vector<std::vector<double>> x;  // alternatives x criteria
    std::vector<bool> benefit;
    std::vector<double> w;  // sums to 1
};

inline std::vector<double> column_norms(const Mcdm& d) {
    std::vector<double> out(d.benefit.size(), 0.0);
    for (const auto& row : d.x)
        for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j] * row[j];
    for (auto& v : out) v = std::sqrt(v);
    return out;
}

inline std::vector<double> moora(const Mcdm& d) {
    const auto norm = column_norms(d);
    std::vector<double> y;
    for (const auto& row : d.x) {
        double plus = 0.0, minus = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double v = d.w[j] * row[j] / norm[j];
            if (d.benefit[j]) plus += v;
            else minus += v;
        }
        y.push_back(plus - minus);
    }
    return y;
}

inline std::vector<double> topsis(const Mcdm& d) {
    const auto norm = column_norms(d);
    const std::size_t n = d.x.size(), m = d.benefit.size();
    std::vector<std::vector<double>> v(n, std::vector<double>(m));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) v[i][j] = d.w[j] * d.x[i][j] / norm[j];
    std::vector<double> pis(m), nis(m);
    for (std::size_t j = 0; j < m; ++j) {
        double mx = v[0][j], mn = v[0][j];
        for (std::size_t i = 1; i < n; ++i) {
            mx = std::max(mx, v[i][j]);
            mn = std::min(mn, v[i][j]);
        }
        pis[j] = d.benefit[j] ? mx : mn;
        nis[j] = d.benefit[j] ? mn : mx;
    }
    std::vector<double> c;
    for (std::size_t i = 0; i < n; ++i) {
        double dp = 0.0, dn = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            dp += (v[i][j] - pis[j]) * (v[i][j] - pis[j]);
            dn += (v[i][j] - nis[j]) * (v[i][j] - nis[j]);
        }
        dp = std::sqrt(dp);
        dn = std::sqrt(dn);
        c.push_back(dn / (dp + dn));
    }
    return c;
}

struct Vikor {
    std::vector<double> s, r, q;
};

inline Vikor vikor(const Mcdm& d, double v) {
    const std::size_t n = d.x.size(), m = d.benefit.size();
    std::vector<double> best(m), worst(m);
    for (std::size_t j = 0; j < m; ++j) {
        double mx = d.x[0][j], mn = d.x[0][j];
        for (std::size_t i = 1; i < n; ++i) {
            mx = std::max(mx, d.x[i][j]);
            mn = std::min(mn, d.x[i][j]);
        }
        best[j] = d.benefit[j] ? mx : mn;
        worst[j] = d.benefit[j] ? mn : mx;
    }
    Vikor out;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0, r = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double gap = best[j] == worst[j] ? 0.0 : d.w[j] * (best[j] - d.x[i][j]) / (best[j] - worst[j]);
            s += gap;
            r = std::max(r, gap);
        }
        out.s.push_back(s);
        out.r.push_back(r);
    }
    const double smin = *std::min_element(out.s.begin(), out.s.end()), smax = *std::max_element(out.s.begin(), out.s.end());
    const double rmin = *std::min_element(out.r.begin(), out.r.end()), rmax = *std::max_element(out.r.begin(), out.r.end());
    for (std::size_t i = 0; i < n; ++i) {
        const double a = smax == smin ? 0.0 : (out.s[i] - smin) / (smax - smin);
        const double b = rmax == rmin ? 0.0 : (out.r[i] - rmin) / (rmax - rmin);
        out.q.push_back(v * a + (1.0 - v) * b);
    }
    return out;
}

// Rank by score, 1 = best; ties share the smallest rank.
inline std::vector<int> competition_ranks(const std::vector<double>& score, bool higher_is_better) {
    std::vector<int> r(score.size());
    for (std::size_t i = 0; i < score.size(); ++i) {
        int better = 0;
        for (std::size_t j = 0; j < score.size(); ++j)
            if (higher_is_better ? score[j] > score[i] : score[j] < score[i]) ++better;
        r[i] = better + 1;
    }
    return r;
}

// Exhaustive footrule minimisation with a plain next_permutation scan.
inline long long footrule(const std::vector<int>& a, const std::vector<int>& b) {
    long long s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

inline long long best_footrule(const std::vector<std::vector<int>>& inputs) {
    std::vector<int> cand(inputs.front().size());
    std::iota(cand.begin(), cand.end(), 1);
    long long best = std::numeric_limits<long long>::max();
    do {
        long long t = 0;
        for (const auto& r : inputs) t += footrule(cand, r);
        best = std::min(best, t);
    } while (std::next_permutation(cand.begin(), cand.end()));
    return best;
}

}  // namespace oracle
