#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace refclass {

/// The nine default quantile levels, weighted towards the tails.
const std::vector<double>& default_quantile_levels();

/// Multiset of PIT values in [0, 1]. Merging is concatenation, so every
/// statistic on merge(a, b) equals the statistic on the pooled values.
class PitSample {
public:
    PitSample() = default;
    explicit PitSample(std::vector<double> values);

    /// Throws DomainError for values outside [0, 1] or NaN.
    void add(double p);
    void merge(const PitSample& other);

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double> sorted() const;

private:
    std::vector<double> values_;
};

PitSample merge(PitSample a, const PitSample& b);

/// Sum over levels of |type-1 quantile of the sample - level|.
double delta_q(const PitSample& sample, std::span<const double> levels);
double delta_q(const PitSample& sample);

/// sqrt(m) sup |G_m(x) - x|.
double ks_stat(const PitSample& sample);

/// m ∫ (G_m(x) - x)^2 dx = 1/(12m) + sum_i (p_(i) - (2i-1)/(2m))^2.
double cvm_stat(const PitSample& sample);

/// Upper bound of delta_q for the given levels: sum of max(level, 1 - level).
double delta_q_bound(std::span<const double> levels);

struct CalibrationReport {
    std::size_t m = 0;
    double delta_q = 0.0;
    double ks = 0.0;
    double cvm = 0.0;
    std::vector<double> levels;
};

/// Scores a sample; an empty sample yields m = 0 with zeroed statistics.
CalibrationReport score(const PitSample& sample, std::span<const double> levels);
CalibrationReport score(const PitSample& sample);

}  // namespace refclass
