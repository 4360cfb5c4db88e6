#pragma once

#include <initializer_list>
#include <vector>

#include "posidwell/errors.hpp"

namespace posidwell {

/// Dense row-major matrix of doubles. All entries must be finite; factory
/// functions and arithmetic throw domain_error on NaN or infinity.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(int rows, int cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> init);

    static Matrix identity(int n);
    static Matrix zeros(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    Matrix transpose() const;

    /// Induced infinity norm (maximum absolute row sum).
    double norm_inf() const;

    /// Largest absolute entry.
    double max_abs() const;

    /// Throws domain_error if any entry is NaN or infinite.
    void check_finite(const char* what) const;

    friend Matrix operator+(const Matrix& a, const Matrix& b);
    friend Matrix operator-(const Matrix& a, const Matrix& b);
    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend Matrix operator*(double s, const Matrix& a);
    friend bool operator==(const Matrix& a, const Matrix& b);

private:
    int rows_, cols_;
    std::vector<double> data_;
};

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Block-diagonal concatenation of the given matrices.
Matrix block_diag(const std::vector<Matrix>& blocks);

/// Solves m x = rhs by partial-pivot Gaussian elimination. Throws
/// domain_error when a pivot falls below 1e-12 * norm_inf(m).
Matrix solve_linear(const Matrix& m, const Matrix& rhs);

/// Matrix exponential expm(m * t) by scaling-and-squaring with a degree-13
/// Pade approximant. When the input is Metzler, tiny negative off-diagonal
/// round-off (within [-1e-12, 0)) is clamped to zero so that the result of
/// exponentiating a Metzler matrix stays nonnegative.
Matrix expm(const Matrix& m, double t = 1.0);

/// Spectral radius of an entrywise-nonnegative matrix by shifted power
/// iteration. Throws domain_error when an entry is negative.
double spectral_radius(const Matrix& m);

/// Coefficients of det(sI - m), highest power first (monic), computed by
/// the Faddeev-LeVerrier recurrence.
std::vector<double> characteristic_polynomial(const Matrix& m);

} // namespace posidwell
