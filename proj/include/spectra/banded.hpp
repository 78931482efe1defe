#pragma once

// Banded operators and almost-banded linear systems.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>

#include "spectra/types.hpp"

namespace spectra {

/// Rectangular banded matrix. Entry (i, j) may be nonzero only when -lower <= j - i <= upper.
/// Storage is row-major within the band: row i holds columns i - lower .. i + upper.
class BandedOp {
public:
    BandedOp() = default;
    BandedOp(std::size_t rows, std::size_t cols, std::size_t lower, std::size_t upper);

    static BandedOp identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t lower() const noexcept { return lower_; }
    [[nodiscard]] std::size_t upper() const noexcept { return upper_; }

    [[nodiscard]] bool in_band(std::size_t i, std::size_t j) const noexcept
    {
        return i < rows_ && j < cols_ && j + lower_ >= i && j <= i + upper_;
    }
    /// Zero outside the band.
    [[nodiscard]] cplx operator()(std::size_t i, std::size_t j) const noexcept
    {
        return in_band(i, j) ? data_[index(i, j)] : cplx(0.0);
    }
    /// Mutable access; (i, j) must be inside the band.
    cplx& ref(std::size_t i, std::size_t j);

    /// First and one-past-last column that can be nonzero in row i.
    [[nodiscard]] std::size_t row_begin(std::size_t i) const noexcept { return i > lower_ ? i - lower_ : 0; }
    [[nodiscard]] std::size_t row_end(std::size_t i) const noexcept
    {
        return std::min(cols_, i + upper_ + 1);
    }

    [[nodiscard]] CVector apply(std::span<const cplx> x) const;
    [[nodiscard]] Matrix to_dense() const;

    /// Leading rows x cols block; bandwidths are kept.
    [[nodiscard]] BandedOp truncated(std::size_t rows, std::size_t cols) const;
    /// Same operator with bandwidths shrunk to the outermost exactly-nonzero diagonals.
    [[nodiscard]] BandedOp trimmed() const;

    [[nodiscard]] BandedOp scaled(cplx s) const;

    friend BandedOp operator*(const BandedOp& A, const BandedOp& B);
    friend BandedOp operator+(const BandedOp& A, const BandedOp& B);

private:
    [[nodiscard]] std::size_t width() const noexcept { return lower_ + upper_ + 1; }
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept
    {
        return i * width() + (j + lower_ - i);
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t lower_ = 0;
    std::size_t upper_ = 0;
    CVector data_;
};

/// Square n x n matrix whose first K rows are dense ("border" rows) and whose remaining rows are
/// banded: row i >= K may be nonzero only in columns i - lower .. i + upper.
class AlmostBanded {
public:
    AlmostBanded() = default;
    AlmostBanded(std::size_t n, std::size_t border_rows, std::size_t lower, std::size_t upper);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t border_rows() const noexcept { return k_; }
    [[nodiscard]] std::size_t lower() const noexcept { return lower_; }
    [[nodiscard]] std::size_t upper() const noexcept { return upper_; }

    /// Dense border entry (r, j), r < border_rows().
    cplx& border(std::size_t r, std::size_t j) { return border_[r * n_ + j]; }
    [[nodiscard]] cplx border(std::size_t r, std::size_t j) const { return border_[r * n_ + j]; }
    [[nodiscard]] std::span<const cplx> border_row(std::size_t r) const
    {
        return {border_.data() + r * n_, n_};
    }

    [[nodiscard]] bool in_band(std::size_t i, std::size_t j) const noexcept
    {
        return i >= k_ && i < n_ && j < n_ && j + lower_ >= i && j <= i + upper_;
    }
    /// Banded entry (i, j), i >= border_rows(), inside the band.
    cplx& band(std::size_t i, std::size_t j);

    [[nodiscard]] cplx operator()(std::size_t i, std::size_t j) const noexcept;

    /// Columns that can be nonzero in row i.
    [[nodiscard]] std::size_t row_begin(std::size_t i) const noexcept
    {
        return (i < k_ || i <= lower_) ? 0 : i - lower_;
    }
    [[nodiscard]] std::size_t row_end(std::size_t i) const noexcept
    {
        return i < k_ ? n_ : std::min(n_, i + upper_ + 1);
    }

    [[nodiscard]] CVector apply(std::span<const cplx> x) const;
    [[nodiscard]] Matrix apply(const Matrix& X) const;
    [[nodiscard]] Matrix to_dense() const;

    /// Bytes needed to hold the matrix.
    [[nodiscard]] static double storage_bytes(std::size_t n, std::size_t border_rows, std::size_t lower,
                                              std::size_t upper) noexcept;

private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    std::size_t lower_ = 0;
    std::size_t upper_ = 0;
    CVector border_;
    CVector band_;
};

struct AlmostBandedSolveOptions {
    /// A pivot |R(c, c)| <= singular_tol * n * ||M|| is reported as singular.
    double singular_tol = std::numeric_limits<double>::epsilon();
};

/// Solve M X = B for every column of B with a structure-exploiting Givens QR. Rows touched by the
/// dense border carry their out-of-band tail as a combination of the original border rows, so the
/// work is O(n (lower + upper + K) (lower + K)) and the matrix is never densified.
/// Throws SingularSystemError naming the first numerically zero pivot column.
[[nodiscard]] Matrix almost_banded_solve(const AlmostBanded& M, const Matrix& B,
                                         const AlmostBandedSolveOptions& opts = {});
[[nodiscard]] CVector almost_banded_solve(const AlmostBanded& M, std::span<const cplx> b,
                                          const AlmostBandedSolveOptions& opts = {});

}  // namespace spectra
