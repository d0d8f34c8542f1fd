#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace refclass {

/// Dense row-major matrix, just enough for correlation PCA.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::vector<double> column(std::size_t c) const;

    Matrix transpose() const;
    Matrix operator*(const Matrix& rhs) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Transformation applied before the PCA fit.
enum class PreTransform { identity, signed_fifth_root, ranks, trim };

std::string to_string(PreTransform t);
PreTransform parse_pre_transform(std::string_view text);

/// Rule choosing how many principal components to keep.
struct PcCountRule {
    enum class Kind { fixed, explain, above_mean };
    Kind kind = Kind::fixed;
    std::size_t count = 2;   // fixed
    double threshold = 0.0;  // explain, in (0, 1)

    static PcCountRule fixed(std::size_t k);
    static PcCountRule explain(double share);
    static PcCountRule above_mean();

    /// "2", "3", "75%", "90%", "mean".
    std::string name() const;
    static PcCountRule parse(std::string_view text);

    bool operator==(const PcCountRule&) const = default;
};

/// The five rules of the full option grid.
std::vector<PcCountRule> all_pc_rules();
std::vector<PreTransform> all_pre_transforms();

/// sign(x) |x|^(1/5).
double signed_fifth_root(double x);

inline constexpr double kTrimShare = 0.025;
inline constexpr std::size_t kMinRows = 20;

struct TransformedData {
    Matrix data;                            // N' x kappa
    std::vector<double> target;             // kappa
    std::vector<std::size_t> retained_rows; // indices into the input rows
};

/// Applies `t` to the candidate matrix and the initial firm's vector.
/// trim drops each row lying in the outer 2.5% of any column and passes the
/// initial firm through unchanged; DegenerateError if fewer than 20 rows survive.
TransformedData pre_transform(const Matrix& data, std::span<const double> target, PreTransform t);

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues descend; the largest-magnitude entry of each eigenvector is positive.
struct SymmetricEigen {
    std::vector<double> values;
    Matrix vectors;  // columns are eigenvectors
    int sweeps = 0;
};

SymmetricEigen jacobi_eigen(Matrix a, double tolerance = 1e-12, int max_sweeps = 100);

struct PcaModel {
    std::vector<std::size_t> columns;   // retained input columns
    std::vector<std::size_t> dropped;   // zero-variance input columns
    std::vector<double> means;          // per retained column
    std::vector<double> stds;           // per retained column, denominator n - 1
    Matrix weights;                     // kappa' x kappa', columns = eigenvectors
    std::vector<double> eigenvalues;    // descending, sum = kappa'
    std::size_t components = 0;         // L
    PreTransform transform = PreTransform::identity;

    std::size_t input_columns() const { return columns.size() + dropped.size(); }
};

/// Correlation-matrix PCA of `data`. Constant columns are dropped; all
/// columns constant is a DegenerateError. components is set to every column.
PcaModel fit(const Matrix& data);

/// Number of components picked by `rule` for descending `eigenvalues`.
std::size_t select_count(std::span<const double> eigenvalues, const PcCountRule& rule);

/// Which statistics standardize the full matrix under the trim transform.
enum class TrimStandardization { trimmed_subset, full_sample };

struct Projection {
    Matrix rows;                // N x L
    std::vector<double> target; // L
};

/// Standardizes with the model statistics and rotates onto the first L
/// eigenvectors. `rows` must have model.input_columns() columns.
Projection project(const PcaModel& model, const Matrix& rows, std::span<const double> target);

}  // namespace refclass
