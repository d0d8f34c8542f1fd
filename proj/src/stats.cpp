#include "refclass/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refclass/errors.hpp"

namespace refclass {

namespace {

void reject_nan(std::span<const double> sample) {
    for (double v : sample) {
        if (std::isnan(v)) throw DomainError("NaN in sample");
    }
}

}  // namespace

RankVector ranks(std::span<const double> sample) {
    if (sample.empty()) throw DomainError("ranks of an empty sample");
    reject_nan(sample);
    const std::size_t n = sample.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sample[a] < sample[b]; });
    RankVector out{std::vector<double>(n)};
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && sample[order[j]] == sample[order[i]]) ++j;
        // Positions i+1 .. j share their average.
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) out.values[order[k]] = mid;
        i = j;
    }
    return out;
}

double insertion_rank(std::span<const double> sample, double x) {
    if (std::isnan(x)) throw DomainError("NaN insertion value");
    reject_nan(sample);
    std::size_t below = 0;
    std::size_t equal = 0;
    for (double s : sample) {
        if (s < x) {
            ++below;
        } else if (s == x) {
            ++equal;
        }
    }
    return 1.0 + static_cast<double>(below) + 0.5 * static_cast<double>(equal);
}

double insertion_rank_sorted(std::span<const double> sorted, double x) {
    if (std::isnan(x)) throw DomainError("NaN insertion value");
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), x);
    auto hi = std::upper_bound(lo, sorted.end(), x);
    return 1.0 + static_cast<double>(lo - sorted.begin()) + 0.5 * static_cast<double>(hi - lo);
}

Ecdf::Ecdf(std::vector<double> sample) : sorted_(std::move(sample)) {
    if (sorted_.empty()) throw DomainError("ECDF of an empty sample");
    reject_nan(sorted_);
    std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double y) const {
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), y);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double Ecdf::left_limit(double y) const {
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), y);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

std::size_t quantile_index(double alpha, std::size_t n) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("quantile level must lie in (0, 1]");
    // alpha * n can sit one ulp above an integer (0.07 * 100); snap it back.
    const double scaled = alpha * static_cast<double>(n);
    const double nearest = std::round(scaled);
    const double idx = std::abs(scaled - nearest) <= 1e-9 * std::max(1.0, scaled) ? nearest
                                                                                  : std::ceil(scaled);
    return std::clamp<std::size_t>(static_cast<std::size_t>(idx), 1, n);
}

double Ecdf::quantile(double alpha) const {
    return sorted_[quantile_index(alpha, sorted_.size()) - 1];
}

double ecdf_eval(const Ecdf& ecdf, double y) { return ecdf(y); }

double empirical_quantile(const Ecdf& ecdf, double alpha) { return ecdf.quantile(alpha); }

}  // namespace refclass
