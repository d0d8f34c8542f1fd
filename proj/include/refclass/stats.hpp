#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace refclass {

/// Midranks aligned with the input order. Ties share the average of the
/// positions they occupy, so the ranks always sum to n(n+1)/2.
struct RankVector {
    std::vector<double> values;
    std::size_t n() const { return values.size(); }
};

/// Throws DomainError on empty input or NaN.
RankVector ranks(std::span<const double> sample);

/// Rank `x` would get among sample ∪ {x}: 1 + #{s < x} + #{s == x} / 2.
double insertion_rank(std::span<const double> sample, double x);

/// Same as insertion_rank, for an already ascending sample (O(log n)).
double insertion_rank_sorted(std::span<const double> sorted, double x);

/// Empirical distribution of a finite sample.
class Ecdf {
public:
    /// Throws DomainError for an empty sample or NaN values.
    explicit Ecdf(std::vector<double> sample);

    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted() const { return sorted_; }

    /// n^-1 #{sample <= y}.
    double operator()(double y) const;
    /// n^-1 #{sample < y}, the left limit at y.
    double left_limit(double y) const;
    /// Order statistic ceil(alpha n): the left-continuous inverse.
    double quantile(double alpha) const;

private:
    std::vector<double> sorted_;
};

double ecdf_eval(const Ecdf& ecdf, double y);
double empirical_quantile(const Ecdf& ecdf, double alpha);

/// 1-based index ceil(alpha n) of the type-1 quantile, clamped to [1, n].
std::size_t quantile_index(double alpha, std::size_t n);

}  // namespace refclass
