#include "spectra/banded.hpp"

#include <cmath>
#include <string>

#include "spectra/error.hpp"

namespace spectra {

// ---------------------------------------------------------------------------
// BandedOp

BandedOp::BandedOp(std::size_t rows, std::size_t cols, std::size_t lower, std::size_t upper)
    : rows_(rows), cols_(cols), lower_(lower), upper_(upper), data_(rows * (lower + upper + 1), cplx(0.0))
{
}

BandedOp BandedOp::identity(std::size_t n)
{
    BandedOp I(n, n, 0, 0);
    for (std::size_t i = 0; i < n; ++i) I.ref(i, i) = 1.0;
    return I;
}

cplx& BandedOp::ref(std::size_t i, std::size_t j)
{
    if (!in_band(i, j)) {
        throw SizeError("BandedOp::ref(" + std::to_string(i) + ", " + std::to_string(j) + ") outside the band");
    }
    return data_[index(i, j)];
}

CVector BandedOp::apply(std::span<const cplx> x) const
{
    if (x.size() != cols_) throw SizeError("BandedOp::apply: dimension mismatch");
    CVector y(rows_, cplx(0.0));
    for (std::size_t i = 0; i < rows_; ++i) {
        cplx s = 0.0;
        for (std::size_t j = row_begin(i); j < row_end(i); ++j) s += data_[index(i, j)] * x[j];
        y[i] = s;
    }
    return y;
}

Matrix BandedOp::to_dense() const
{
    Matrix D = Matrix::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = row_begin(i); j < row_end(i); ++j) {
            D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data_[index(i, j)];
        }
    }
    return D;
}

BandedOp BandedOp::truncated(std::size_t rows, std::size_t cols) const
{
    if (rows > rows_ || cols > cols_) throw SizeError("BandedOp::truncated: requested block is larger");
    BandedOp T(rows, cols, lower_, upper_);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = T.row_begin(i); j < T.row_end(i); ++j) T.data_[T.index(i, j)] = (*this)(i, j);
    }
    return T;
}

BandedOp BandedOp::trimmed() const
{
    std::size_t lo = 0;
    std::size_t up = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = row_begin(i); j < row_end(i); ++j) {
            if (data_[index(i, j)] == cplx(0.0)) continue;
            if (i > j) lo = std::max(lo, i - j);
            if (j > i) up = std::max(up, j - i);
        }
    }
    BandedOp T(rows_, cols_, lo, up);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = T.row_begin(i); j < T.row_end(i); ++j) T.data_[T.index(i, j)] = (*this)(i, j);
    }
    return T;
}

BandedOp BandedOp::scaled(cplx s) const
{
    BandedOp T = *this;
    for (auto& v : T.data_) v *= s;
    return T;
}

BandedOp operator*(const BandedOp& A, const BandedOp& B)
{
    if (A.cols_ != B.rows_) throw SizeError("BandedOp product: inner dimension mismatch");
    BandedOp C(A.rows_, B.cols_, A.lower_ + B.lower_, A.upper_ + B.upper_);
    for (std::size_t i = 0; i < A.rows_; ++i) {
        for (std::size_t p = A.row_begin(i); p < A.row_end(i); ++p) {
            const cplx a = A.data_[A.index(i, p)];
            if (a == cplx(0.0)) continue;
            for (std::size_t j = B.row_begin(p); j < B.row_end(p); ++j) {
                C.data_[C.index(i, j)] += a * B.data_[B.index(p, j)];
            }
        }
    }
    return C;
}

BandedOp operator+(const BandedOp& A, const BandedOp& B)
{
    if (A.rows_ != B.rows_ || A.cols_ != B.cols_) throw SizeError("BandedOp sum: dimension mismatch");
    BandedOp C(A.rows_, A.cols_, std::max(A.lower_, B.lower_), std::max(A.upper_, B.upper_));
    for (std::size_t i = 0; i < C.rows_; ++i) {
        for (std::size_t j = A.row_begin(i); j < A.row_end(i); ++j) C.data_[C.index(i, j)] += A.data_[A.index(i, j)];
        for (std::size_t j = B.row_begin(i); j < B.row_end(i); ++j) C.data_[C.index(i, j)] += B.data_[B.index(i, j)];
    }
    return C;
}

// ---------------------------------------------------------------------------
// AlmostBanded

AlmostBanded::AlmostBanded(std::size_t n, std::size_t border_rows, std::size_t lower, std::size_t upper)
    : n_(n), k_(border_rows), lower_(lower), upper_(upper), border_(border_rows * n, cplx(0.0)),
      band_(n * (lower + upper + 1), cplx(0.0))
{
    if (border_rows > n) {
        throw SizeError("almost-banded matrix with " + std::to_string(border_rows) + " border rows but size " +
                        std::to_string(n));
    }
}

cplx& AlmostBanded::band(std::size_t i, std::size_t j)
{
    if (!in_band(i, j)) {
        throw SizeError("AlmostBanded::band(" + std::to_string(i) + ", " + std::to_string(j) + ") outside the band");
    }
    return band_[i * (lower_ + upper_ + 1) + (j + lower_ - i)];
}

cplx AlmostBanded::operator()(std::size_t i, std::size_t j) const noexcept
{
    if (i < k_) return border_[i * n_ + j];
    if (!in_band(i, j)) return 0.0;
    return band_[i * (lower_ + upper_ + 1) + (j + lower_ - i)];
}

CVector AlmostBanded::apply(std::span<const cplx> x) const
{
    if (x.size() != n_) throw SizeError("AlmostBanded::apply: dimension mismatch");
    CVector y(n_, cplx(0.0));
    for (std::size_t i = 0; i < n_; ++i) {
        cplx s = 0.0;
        for (std::size_t j = row_begin(i); j < row_end(i); ++j) s += (*this)(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Matrix AlmostBanded::apply(const Matrix& X) const
{
    if (static_cast<std::size_t>(X.rows()) != n_) throw SizeError("AlmostBanded::apply: dimension mismatch");
    Matrix Y = Matrix::Zero(X.rows(), X.cols());
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = row_begin(i); j < row_end(i); ++j) {
            const cplx a = (*this)(i, j);
            if (a != cplx(0.0)) Y.row(static_cast<Eigen::Index>(i)) += a * X.row(static_cast<Eigen::Index>(j));
        }
    }
    return Y;
}

Matrix AlmostBanded::to_dense() const
{
    Matrix D = Matrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = row_begin(i); j < row_end(i); ++j) {
            D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j);
        }
    }
    return D;
}

double AlmostBanded::storage_bytes(std::size_t n, std::size_t border_rows, std::size_t lower,
                                   std::size_t upper) noexcept
{
    const double entries = static_cast<double>(n) * static_cast<double>(border_rows) +
                           static_cast<double>(n) * static_cast<double>(lower + upper + 1);
    return entries * static_cast<double>(sizeof(cplx));
}

// ---------------------------------------------------------------------------
// Solver

namespace {

// One row of the matrix being reduced. Columns [lo, end) are explicit (stored from column `base`);
// columns >= end equal sum_k alpha[k] * border(k, col). Columns < lo are zero.
struct WorkRow {
    std::size_t base = 0;
    std::size_t lo = 0;
    CVector w;
    CVector alpha;

    [[nodiscard]] std::size_t end() const noexcept { return base + w.size(); }
};

class FilledInQR {
public:
    FilledInQR(const AlmostBanded& M, Matrix& rhs) : M_(M), rhs_(rhs), n_(M.size()), k_(M.border_rows())
    {
        rows_.resize(n_);
        for (std::size_t r = 0; r < n_; ++r) {
            WorkRow& row = rows_[r];
            if (r < k_) {
                row.alpha.assign(k_, cplx(0.0));
                row.alpha[r] = 1.0;
            } else {
                row.base = row.lo = M.row_begin(r);
                const std::size_t e = M.row_end(r);
                row.w.resize(e - row.base);
                for (std::size_t j = row.base; j < e; ++j) row.w[j - row.base] = M(r, j);
            }
        }
    }

    void factor(double singular_tol)
    {
        double norm = 0.0;
        for (std::size_t r = 0; r < n_; ++r) {
            double s = 0.0;
            for (std::size_t j = M_.row_begin(r); j < M_.row_end(r); ++j) s += std::norm(M_(r, j));
            norm = std::max(norm, std::sqrt(s));
        }
        const double threshold = singular_tol * static_cast<double>(n_) * norm;

        for (std::size_t c = 0; c < n_; ++c) {
            const std::size_t last = std::min(n_ - 1, std::max(c + M_.lower(), k_ == 0 ? 0 : k_ - 1));
            for (std::size_t r = c + 1; r <= last; ++r) {
                const cplx v = value(rows_[r], c);
                if (v == cplx(0.0)) continue;
                rotate(c, r);
            }
            WorkRow& piv = rows_[c];
            ensure_column(piv, c);
            const cplx d = piv.w[c - piv.base];
            if (!(std::abs(d) > threshold)) {
                throw SingularSystemError("almost-banded system is numerically singular at column " +
                                              std::to_string(c),
                                          c);
            }
        }
    }

    [[nodiscard]] Matrix back_substitute() const
    {
        const Eigen::Index m = rhs_.cols();
        Matrix X(static_cast<Eigen::Index>(n_), m);
        // cum[k * (n + 1) + j] = sum_{j' >= j} border(k, j') x_{j'}
        std::vector<cplx> cum(k_ * (n_ + 1));
        for (Eigen::Index col = 0; col < m; ++col) {
            std::fill(cum.begin(), cum.end(), cplx(0.0));
            for (std::size_t c = n_; c-- > 0;) {
                const WorkRow& row = rows_[c];
                cplx s = rhs_(static_cast<Eigen::Index>(c), col);
                const std::size_t e = row.end();
                for (std::size_t j = c + 1; j < e; ++j) s -= row.w[j - row.base] * X(static_cast<Eigen::Index>(j), col);
                if (!row.alpha.empty()) {
                    for (std::size_t k = 0; k < k_; ++k) {
                        if (row.alpha[k] != cplx(0.0)) s -= row.alpha[k] * cum[k * (n_ + 1) + e];
                    }
                }
                const cplx x = s / row.w[c - row.base];
                X(static_cast<Eigen::Index>(c), col) = x;
                for (std::size_t k = 0; k < k_; ++k) {
                    cum[k * (n_ + 1) + c] = cum[k * (n_ + 1) + c + 1] + M_.border(k, c) * x;
                }
            }
        }
        return X;
    }

private:
    [[nodiscard]] cplx tail_value(const WorkRow& row, std::size_t col) const
    {
        cplx s = 0.0;
        for (std::size_t k = 0; k < row.alpha.size(); ++k) {
            if (row.alpha[k] != cplx(0.0)) s += row.alpha[k] * M_.border(k, col);
        }
        return s;
    }

    [[nodiscard]] cplx value(const WorkRow& row, std::size_t col) const
    {
        if (col < row.lo) return 0.0;
        if (col < row.end()) return row.w[col - row.base];
        return row.alpha.empty() ? cplx(0.0) : tail_value(row, col);
    }

    // Make the explicit window of `row` start at or before c (dropping known zeros) and reach column c.
    void ensure_column(WorkRow& row, std::size_t c) const
    {
        if (row.end() <= c) {
            row.base = row.lo = c;
            row.w.clear();
        }
        extend(row, c + 1);
    }

    void extend(WorkRow& row, std::size_t e) const
    {
        while (row.end() < e) row.w.push_back(row.alpha.empty() ? cplx(0.0) : tail_value(row, row.end()));
    }

    // Givens rotation of rows c and r that zeroes entry (r, c).
    void rotate(std::size_t c, std::size_t r)
    {
        WorkRow& p = rows_[c];
        WorkRow& q = rows_[r];
        ensure_column(p, c);
        ensure_column(q, c);
        p.lo = std::max(p.lo, c);
        q.lo = std::max(q.lo, c);
        const std::size_t e = std::max(p.end(), q.end());
        extend(p, e);
        extend(q, e);

        const cplx a = p.w[c - p.base];
        const cplx b = q.w[c - q.base];
        const double rho = std::hypot(std::abs(a), std::abs(b));
        const cplx g = a / rho;
        const cplx s = b / rho;
        const cplx gc = std::conj(g);
        const cplx sc = std::conj(s);

        for (std::size_t j = c; j < e; ++j) {
            cplx& x = p.w[j - p.base];
            cplx& y = q.w[j - q.base];
            const cplx nx = gc * x + sc * y;
            const cplx ny = -s * x + g * y;
            x = nx;
            y = ny;
        }
        q.w[c - q.base] = 0.0;
        q.lo = c + 1;

        if (!p.alpha.empty() || !q.alpha.empty()) {
            if (p.alpha.empty()) p.alpha.assign(k_, cplx(0.0));
            if (q.alpha.empty()) q.alpha.assign(k_, cplx(0.0));
            for (std::size_t k = 0; k < k_; ++k) {
                const cplx x = p.alpha[k];
                const cplx y = q.alpha[k];
                p.alpha[k] = gc * x + sc * y;
                q.alpha[k] = -s * x + g * y;
            }
        }

        const auto ic = static_cast<Eigen::Index>(c);
        const auto ir = static_cast<Eigen::Index>(r);
        for (Eigen::Index col = 0; col < rhs_.cols(); ++col) {
            const cplx x = rhs_(ic, col);
            const cplx y = rhs_(ir, col);
            rhs_(ic, col) = gc * x + sc * y;
            rhs_(ir, col) = -s * x + g * y;
        }
    }

    const AlmostBanded& M_;
    Matrix& rhs_;
    std::size_t n_;
    std::size_t k_;
    std::vector<WorkRow> rows_;
};

}  // namespace

Matrix almost_banded_solve(const AlmostBanded& M, const Matrix& B, const AlmostBandedSolveOptions& opts)
{
    if (static_cast<std::size_t>(B.rows()) != M.size()) {
        throw SizeError("almost_banded_solve: right-hand side has " + std::to_string(B.rows()) + " rows, expected " +
                        std::to_string(M.size()));
    }
    if (M.size() == 0) return Matrix(0, B.cols());
    Matrix rhs = B;
    FilledInQR qr(M, rhs);
    qr.factor(opts.singular_tol);
    return qr.back_substitute();
}

CVector almost_banded_solve(const AlmostBanded& M, std::span<const cplx> b, const AlmostBandedSolveOptions& opts)
{
    Matrix B(static_cast<Eigen::Index>(b.size()), 1);
    for (std::size_t i = 0; i < b.size(); ++i) B(static_cast<Eigen::Index>(i), 0) = b[i];
    const Matrix X = almost_banded_solve(M, B, opts);
    return CVector(X.data(), X.data() + X.rows());
}

}  // namespace spectra
