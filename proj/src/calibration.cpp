#include "refclass/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "refclass/errors.hpp"
#include "refclass/stats.hpp"

namespace refclass {

const std::vector<double>& default_quantile_levels() {
    static const std::vector<double> levels{0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99};
    return levels;
}

PitSample::PitSample(std::vector<double> values) {
    values_.reserve(values.size());
    for (double p : values) add(p);
}

void PitSample::add(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("PIT value outside [0, 1]");
    values_.push_back(p);
}

void PitSample::merge(const PitSample& other) {
    values_.insert(values_.end(), other.values_.begin(), other.values_.end());
}

std::vector<double> PitSample::sorted() const {
    std::vector<double> s = values_;
    std::sort(s.begin(), s.end());
    return s;
}

PitSample merge(PitSample a, const PitSample& b) {
    a.merge(b);
    return a;
}

namespace {

void require_nonempty(const PitSample& s, const char* what) {
    if (s.empty()) throw DomainError(std::string(what) + " of an empty PIT sample");
}

void check_levels(std::span<const double> levels) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw DomainError("quantile levels must lie in (0, 1)");
        if (i > 0 && !(levels[i] > levels[i - 1])) {
            throw DomainError("quantile levels must be strictly increasing");
        }
    }
}

}  // namespace

double delta_q(const PitSample& sample, std::span<const double> levels) {
    require_nonempty(sample, "delta_q");
    check_levels(levels);
    const auto sorted = sample.sorted();
    double sum = 0.0;
    for (double a : levels) {
        sum += std::abs(sorted[quantile_index(a, sorted.size()) - 1] - a);
    }
    return sum;
}

double delta_q(const PitSample& sample) { return delta_q(sample, default_quantile_levels()); }

double delta_q_bound(std::span<const double> levels) {
    double b = 0.0;
    for (double a : levels) b += std::max(a, 1.0 - a);
    return b;
}

double ks_stat(const PitSample& sample) {
    require_nonempty(sample, "KS statistic");
    const auto sorted = sample.sorted();
    const double m = static_cast<double>(sorted.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double p = sorted[i];
        sup = std::max({sup, static_cast<double>(i + 1) / m - p, p - static_cast<double>(i) / m});
    }
    return std::sqrt(m) * sup;
}

double cvm_stat(const PitSample& sample) {
    require_nonempty(sample, "CvM statistic");
    const auto sorted = sample.sorted();
    const double m = static_cast<double>(sorted.size());
    double sum = 1.0 / (12.0 * m);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double d = sorted[i] - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * m);
        sum += d * d;
    }
    return sum;
}

CalibrationReport score(const PitSample& sample, std::span<const double> levels) {
    CalibrationReport r;
    r.levels.assign(levels.begin(), levels.end());
    r.m = sample.size();
    if (sample.empty()) return r;
    r.delta_q = delta_q(sample, levels);
    r.ks = ks_stat(sample);
    r.cvm = cvm_stat(sample);
    return r;
}

CalibrationReport score(const PitSample& sample) { return score(sample, default_quantile_levels()); }

}  // namespace refclass
