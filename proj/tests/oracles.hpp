#pragma once

// Slow, obviously-correct reference implementations. None of them calls into
// the library code they are compared against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "refclass/panel.hpp"

namespace oracle {

/// O(n^2) midranks: 1 + #{smaller} + (#{equal} - 1) / 2.
inline std::vector<double> midranks(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double below = 0, equal = 0;
        for (double x : v) {
            if (x < v[i]) ++below;
            if (x == v[i]) ++equal;
        }
        out[i] = 1.0 + below + (equal - 1.0) / 2.0;
    }
    return out;
}

/// sqrt(m) sup_x |G(x) - x|, scanning both one-sided limits at every jump
/// and at the interval ends. Counts are taken directly, ties included.
inline double ks_scan(const std::vector<double>& p) {
    const double m = static_cast<double>(p.size());
    std::vector<double> points(p);
    points.push_back(0.0);
    points.push_back(1.0);
    double sup = 0.0;
    for (double x : points) {
        double le = 0, lt = 0;
        for (double v : p) {
            if (v <= x) ++le;
            if (v < x) ++lt;
        }
        sup = std::max({sup, std::abs(le / m - x), std::abs(lt / m - x)});
    }
    return std::sqrt(m) * sup;
}

/// m * integral_0^1 (G(x) - x)^2 dx by Simpson's rule on every interval where
/// G is constant. Simpson is exact for the quadratic integrand on each piece.
inline double cvm_quadrature(const std::vector<double>& p) {
    const double m = static_cast<double>(p.size());
    std::vector<double> cuts(p);
    cuts.push_back(0.0);
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        const double mid = 0.5 * (a + b);
        double g = 0;  // G on the open interval (a, b)
        for (double v : p) {
            if (v <= mid) ++g;
        }
        g /= m;
        auto f = [&](double x) { return (g - x) * (g - x); };
        total += (b - a) / 6.0 * (f(a) + 4.0 * f(mid) + f(b));
    }
    return m * total;
}

/// Type-1 quantile by sorting and indexing ceil(alpha n) with exact rationals
/// for the levels used in tests (alpha given as num / den).
inline double order_statistic(std::vector<double> v, long num, long den) {
    std::sort(v.begin(), v.end());
    const long n = static_cast<long>(v.size());
    long idx = (num * n + den - 1) / den;  // ceil(num n / den)
    idx = std::clamp(idx, 1L, n);
    return v[static_cast<std::size_t>(idx - 1)];
}

/// Sum over levels of |alpha-quantile of p - alpha|, levels in hundredths.
inline double delta_q_hundredths(const std::vector<double>& p, const std::vector<long>& hundredths) {
    double s = 0.0;
    for (long h : hundredths) s += std::abs(order_statistic(p, h, 100) - static_cast<double>(h) / 100.0);
    return s;
}

/// Single-variable class as a window on the candidates' empirical distribution.
/// `m` candidates lie below the target; the class is the block of k
/// consecutive order statistics centred on the target's ECDF position
/// (k / 2 on each side) and slid inwards at the tails. Tie-free data, even k.
/// Returns candidate indices in ascending order.
inline std::vector<std::size_t> ecdf_window(const std::vector<double>& x, double target, std::size_t k) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    long below = 0;
    for (double v : x) {
        if (v < target) ++below;
    }
    long lo = below - static_cast<long>(k / 2);  // 0-based first order statistic
    lo = std::clamp(lo, 0L, static_cast<long>(n - k));
    std::vector<std::size_t> out(order.begin() + lo, order.begin() + lo + static_cast<long>(k));
    std::sort(out.begin(), out.end());
    return out;
}

/// The same window phrased on ECDF values: candidate j is chosen when the
/// share of candidates between the target and x_j (x_j included) is at most
/// (k / 2) / n. Valid for interior targets only.
inline std::vector<std::size_t> ecdf_distance_window(const std::vector<double>& x, double target,
                                                     std::size_t k) {
    const double n = static_cast<double>(x.size());
    const double half = static_cast<double>(k / 2) / n;
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < x.size(); ++j) {
        double between = 0;
        for (double v : x) {
            if (x[j] < target ? (v >= x[j] && v < target) : (v <= x[j] && v > target)) ++between;
        }
        if (between / n <= half + 1e-12) out.push_back(j);
    }
    return out;
}

/// Pearson correlation matrix with denominators n - 1, straight from the sums.
inline std::vector<std::vector<double>> correlation(const std::vector<std::vector<double>>& cols) {
    const std::size_t k = cols.size();
    const std::size_t n = cols[0].size();
    std::vector<double> mean(k, 0.0), sd(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        for (double v : cols[c]) mean[c] += v;
        mean[c] /= static_cast<double>(n);
        for (double v : cols[c]) sd[c] += (v - mean[c]) * (v - mean[c]);
        sd[c] = std::sqrt(sd[c] / static_cast<double>(n - 1));
    }
    std::vector<std::vector<double>> r(k, std::vector<double>(k, 0.0));
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (cols[a][i] - mean[a]) * (cols[b][i] - mean[b]);
            r[a][b] = s / static_cast<double>(n - 1) / (sd[a] * sd[b]);
        }
    }
    return r;
}

/// Leading eigenvector of a symmetric positive semi-definite matrix by power
/// iteration, signed so that its largest-magnitude entry is positive.
inline std::vector<double> leading_eigenvector(const std::vector<std::vector<double>>& a, int iterations = 5000) {
    const std::size_t k = a.size();
    std::vector<double> v(k, 1.0), w(k);
    for (std::size_t i = 0; i < k; ++i) v[i] += 0.01 * static_cast<double>(i);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < k; ++i) {
            w[i] = 0.0;
            for (std::size_t j = 0; j < k; ++j) w[i] += a[i][j] * v[j];
        }
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < k; ++i) v[i] = w[i] / norm;
    }
    std::size_t big = 0;
    for (std::size_t i = 1; i < k; ++i) {
        if (std::abs(v[i]) > std::abs(v[big])) big = i;
    }
    if (v[big] < 0) {
        for (double& x : v) x = -x;
    }
    return v;
}

/// Eligible base years straight from the inequalities: start + w + h - 1 <= t
/// <= end - h, every variable observed at t, the firm observed at t + h with
/// positive sales at t and observed sales at t + h.
inline std::set<std::pair<std::string, int>> eligible_cases(const refclass::Panel& panel, int h, int w,
                                                            const std::vector<refclass::VariableKey>& vars) {
    std::set<std::pair<std::string, int>> out;
    const refclass::VariableKey sales{refclass::Base::sales};
    std::set<std::string> firms;
    for (std::size_t r = 0; r < panel.size(); ++r) firms.insert(panel.firm(r));
    for (const auto& f : firms) {
        for (int t = panel.start_year(); t <= panel.end_year(); ++t) {
            if (!(panel.start_year() + w + h - 1 <= t && t <= panel.end_year() - h)) continue;
            const auto row = panel.find(f, t);
            const auto ahead = panel.find(f, t + h);
            if (!row || !ahead) continue;
            bool ok = true;
            for (const auto& k : vars) ok = ok && panel.value(*row, k).has_value();
            const auto s0 = panel.value(*row, sales);
            const auto s1 = panel.value(*ahead, sales);
            if (!ok || !s0 || !s1 || *s0 <= 0.0) continue;
            out.insert({f, t});
        }
    }
    return out;
}

inline std::vector<double> uniform_sample(std::mt19937_64& rng, std::size_t m) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(m);
    for (double& x : p) x = u(rng);
    return p;
}

}  // namespace oracle
