#pragma once

#include "poekl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace poekl {

struct CellSummary {
    std::string method_id;
    std::string env_id;
    std::string goal_id;
    std::vector<double> returns;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    size_t n_seeds = 0;
};

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

namespace detail {
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double idx = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(idx);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}
} // namespace detail

/// Percentile bootstrap of the mean. The input is sorted before resampling so
/// the interval is invariant to input order.
inline std::pair<double, double> bootstrap_ci(std::vector<double> values, double level,
                                              size_t resamples, uint64_t seed) {
    if (values.size() < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 values");
    if (resamples < 100) throw std::invalid_argument("bootstrap_ci: resamples must be >= 100");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level outside (0,1)");
    std::sort(values.begin(), values.end());
    Rng rng(Rng::derive(seed, 0x626F6F74ULL)); // "boot"
    const size_t n = values.size();
    std::vector<double> means(resamples);
    for (size_t r = 0; r < resamples; ++r) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += values[rng.uniform_int(n)];
        means[r] = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - level) / 2.0;
    return {detail::quantile_sorted(means, tail), detail::quantile_sorted(means, 1.0 - tail)};
}

struct PairedDiff {
    double mean_diff = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Bootstrap over matched per-episode differences. Inputs must be aligned by
/// (seed, episode) key order.
inline PairedDiff paired_diff_ci(const std::vector<double>& a, const std::vector<double>& b,
                                 double level, size_t resamples, uint64_t seed) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("paired_diff_ci: misaligned inputs");
    std::vector<double> diffs(a.size());
    for (size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
    PairedDiff out;
    out.mean_diff = mean_of(diffs);
    bool all_equal = true;
    for (double d : diffs)
        if (d != diffs[0]) all_equal = false;
    if (all_equal) {
        // zero-variance differences give a degenerate interval
        out.ci_low = out.ci_high = diffs[0];
        return out;
    }
    const auto [lo, hi] = bootstrap_ci(diffs, level, resamples, seed);
    out.ci_low = lo;
    out.ci_high = hi;
    return out;
}

/// All-pairs probability of improvement with ties counted one half.
inline double prob_improvement(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("prob_improvement: empty input");
    double wins = 0.0;
    for (double x : a)
        for (double y : b) {
            if (x > y) wins += 1.0;
            else if (x == y) wins += 0.5;
        }
    return wins / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

enum class VerdictLabel { Help, Frozen, Hurt };

struct Verdict {
    VerdictLabel label = VerdictLabel::Frozen;
    double best_gap = 0.0;
    double half_width = 0.0;
};

inline const char* verdict_name(VerdictLabel v) {
    switch (v) {
    case VerdictLabel::Help: return "Help";
    case VerdictLabel::Frozen: return "Frozen";
    case VerdictLabel::Hurt: return "Hurt";
    }
    return "?";
}

/// CI-half-width classifier: Help if the best composition mean clears the
/// frozen mean by more than one half-width, Hurt if it falls below by more,
/// Frozen otherwise.
inline Verdict classify_cell(const CellSummary& frozen, double composition_best_mean) {
    if (frozen.ci_low > frozen.mean || frozen.ci_high < frozen.mean)
        throw std::invalid_argument("classify_cell: invalid CI");
    Verdict v;
    v.half_width = std::max(frozen.ci_high - frozen.mean, frozen.mean - frozen.ci_low);
    v.best_gap = composition_best_mean - frozen.mean;
    if (v.best_gap > v.half_width)
        v.label = VerdictLabel::Help;
    else if (-v.best_gap > v.half_width)
        v.label = VerdictLabel::Hurt;
    else
        v.label = VerdictLabel::Frozen;
    return v;
}

} // namespace poekl
