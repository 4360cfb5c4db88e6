#include "posidwell/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace posidwell {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0)
        throw dimension_error("matrix dimensions must be nonnegative");
    if (!std::isfinite(fill)) throw domain_error("matrix fill value must be finite");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = static_cast<int>(init.size());
    cols_ = rows_ ? static_cast<int>(init.begin()->size()) : 0;
    data_.reserve(static_cast<size_t>(rows_) * cols_);
    for (const auto& row : init) {
        if (static_cast<int>(row.size()) != cols_)
            throw dimension_error("ragged initializer for matrix");
        for (double v : row) data_.push_back(v);
    }
    check_finite("matrix initializer");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::zeros(int rows, int cols) { return Matrix(rows, cols); }

Matrix Matrix::transpose() const {
    Matrix r(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
}

double Matrix::norm_inf() const {
    double best = 0.0;
    for (int i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
        best = std::max(best, s);
    }
    return best;
}

double Matrix::max_abs() const {
    double best = 0.0;
    for (double v : data_) best = std::max(best, std::abs(v));
    return best;
}

void Matrix::check_finite(const char* what) const {
    for (double v : data_)
        if (!std::isfinite(v))
            throw domain_error(std::string(what) + " contains a non-finite entry");
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
        throw dimension_error("matrix addition dimension mismatch");
    Matrix r(a.rows_, a.cols_);
    for (size_t k = 0; k < a.data_.size(); ++k) r.data_[k] = a.data_[k] + b.data_[k];
    return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
        throw dimension_error("matrix subtraction dimension mismatch");
    Matrix r(a.rows_, a.cols_);
    for (size_t k = 0; k < a.data_.size(); ++k) r.data_[k] = a.data_[k] - b.data_[k];
    return r;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw dimension_error("matrix product dimension mismatch");
    Matrix r(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
        for (int k = 0; k < a.cols_; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols_; ++j) r(i, j) += aik * b(k, j);
        }
    r.check_finite("matrix product");
    return r;
}

Matrix operator*(double s, const Matrix& a) {
    if (!std::isfinite(s)) throw domain_error("matrix scale factor must be finite");
    Matrix r(a.rows_, a.cols_);
    for (size_t k = 0; k < a.data_.size(); ++k) r.data_[k] = s * a.data_[k];
    return r;
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix r(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
            double aij = a(i, j);
            if (aij == 0.0) continue;
            for (int p = 0; p < b.rows(); ++p)
                for (int q = 0; q < b.cols(); ++q)
                    r(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
        }
    return r;
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
    int rows = 0, cols = 0;
    for (const auto& blk : blocks) {
        rows += blk.rows();
        cols += blk.cols();
    }
    Matrix r(rows, cols);
    int ro = 0, co = 0;
    for (const auto& blk : blocks) {
        for (int i = 0; i < blk.rows(); ++i)
            for (int j = 0; j < blk.cols(); ++j) r(ro + i, co + j) = blk(i, j);
        ro += blk.rows();
        co += blk.cols();
    }
    return r;
}

Matrix solve_linear(const Matrix& m, const Matrix& rhs) {
    if (m.rows() != m.cols()) throw dimension_error("linear solve needs a square matrix");
    if (rhs.rows() != m.rows()) throw dimension_error("linear solve rhs row mismatch");
    const int n = m.rows();
    const double tol = 1e-12 * std::max(m.norm_inf(), 1e-300);

    Matrix a = m;
    Matrix x = rhs;
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;

    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(a(col, col));
        for (int i = col + 1; i < n; ++i) {
            double v = std::abs(a(i, col));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < tol) throw domain_error("linear solve: matrix is singular to working precision");
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            for (int j = 0; j < x.cols(); ++j) std::swap(x(col, j), x(piv, j));
        }
        for (int i = col + 1; i < n; ++i) {
            double f = a(i, col) / a(col, col);
            if (f == 0.0) continue;
            a(i, col) = 0.0;
            for (int j = col + 1; j < n; ++j) a(i, j) -= f * a(col, j);
            for (int j = 0; j < x.cols(); ++j) x(i, j) -= f * x(col, j);
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        for (int j = 0; j < x.cols(); ++j) x(col, j) /= a(col, col);
        for (int i = 0; i < col; ++i) {
            double f = a(i, col);
            if (f == 0.0) continue;
            for (int j = 0; j < x.cols(); ++j) x(i, j) -= f * x(col, j);
        }
    }
    x.check_finite("linear solve result");
    return x;
}

namespace {

bool is_metzler_pattern(const Matrix& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) < 0.0) return false;
    return true;
}

} // namespace

Matrix expm(const Matrix& m, double t) {
    if (m.rows() != m.cols()) throw dimension_error("matrix exponential needs a square matrix");
    if (!std::isfinite(t)) throw domain_error("matrix exponential time must be finite");
    const int n = m.rows();
    if (n == 0) return Matrix(0, 0);

    const bool metzler_input = is_metzler_pattern(m) ? (t >= 0.0) : false;

    Matrix a = t * m;
    int squarings = 0;
    double nrm = a.norm_inf();
    if (nrm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
        a = std::ldexp(1.0, -squarings) * a;
    }

    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};

    const Matrix eye = Matrix::identity(n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;

    Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                    b[3] * a2 + b[1] * eye);
    Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
               b[0] * eye;

    Matrix r = solve_linear(v - u, v + u);
    for (int k = 0; k < squarings; ++k) r = r * r;

    if (metzler_input) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (r(i, j) < 0.0 && r(i, j) >= -1e-12) r(i, j) = 0.0;
    }
    r.check_finite("matrix exponential");
    return r;
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) throw dimension_error("spectral radius needs a square matrix");
    const int n = m.rows();
    if (n == 0) return 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (m(i, j) < 0.0)
                throw domain_error("spectral radius is only defined here for nonnegative matrices");

    const double shift = 1e-3 * (1.0 + m.norm_inf());
    Matrix s = m;
    for (int i = 0; i < n; ++i) s(i, i) += shift;

    std::vector<double> v(n, 1.0), w(n, 0.0);
    double lambda = 0.0;
    for (int iter = 0; iter < 100000; ++iter) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += s(i, j) * v[j];
            w[i] = acc;
        }
        double vv = 0.0, vw = 0.0;
        for (int i = 0; i < n; ++i) {
            vv += v[i] * v[i];
            vw += v[i] * w[i];
        }
        lambda = vw / vv;
        double resid = 0.0, wmax = 0.0;
        for (int i = 0; i < n; ++i) {
            resid = std::max(resid, std::abs(w[i] - lambda * v[i]));
            wmax = std::max(wmax, std::abs(w[i]));
        }
        if (resid < 1e-12 * std::max(1.0, wmax)) break;
        if (wmax == 0.0) break;
        for (int i = 0; i < n; ++i) v[i] = w[i] / wmax;
    }
    return lambda - shift;
}

std::vector<double> characteristic_polynomial(const Matrix& m) {
    if (m.rows() != m.cols())
        throw dimension_error("characteristic polynomial needs a square matrix");
    const int n = m.rows();
    std::vector<double> c(static_cast<size_t>(n) + 1, 0.0);
    c[0] = 1.0;
    Matrix mk = Matrix::identity(n);
    for (int k = 1; k <= n; ++k) {
        mk = m * mk;
        double tr = 0.0;
        for (int i = 0; i < n; ++i) tr += mk(i, i);
        c[static_cast<size_t>(k)] = -tr / k;
        for (int i = 0; i < n; ++i) mk(i, i) += c[static_cast<size_t>(k)];
    }
    return c;
}

} // namespace posidwell
