#pragma once

// Chebyshev coefficient containers, value/coefficient transforms, evaluation and
// adaptive construction in one and two variables.

#include <cstddef>
#include <functional>
#include <span>

#include "spectra/types.hpp"

namespace spectra {

/// Closed interval [a, b] with a < b, both finite.
class Interval {
public:
    Interval() = default;
    Interval(double a, double b);

    [[nodiscard]] double a() const noexcept { return a_; }
    [[nodiscard]] double b() const noexcept { return b_; }
    [[nodiscard]] double length() const noexcept { return b_ - a_; }

    /// Affine map onto [-1, 1].
    [[nodiscard]] double to_unit(double x) const noexcept { return 2.0 * (x - a_) / (b_ - a_) - 1.0; }
    [[nodiscard]] double from_unit(double t) const noexcept { return a_ + 0.5 * (t + 1.0) * (b_ - a_); }

    /// Chain-rule factor d/dx = scale() * d/dt.
    [[nodiscard]] double scale() const noexcept { return 2.0 / (b_ - a_); }

    /// True if x lies in [a, b] up to 10 eps |b - a|.
    [[nodiscard]] bool contains(double x) const noexcept;

    friend bool operator==(const Interval&, const Interval&) = default;

private:
    double a_ = -1.0;
    double b_ = 1.0;
};

/// Chebyshev series sum_j c_j T_j(phi(x)) on an interval. Index 0 is the T_0 coefficient.
class Cheb1 {
public:
    Cheb1();
    explicit Cheb1(CVector coeffs, Interval interval = {});

    [[nodiscard]] const CVector& coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] const Interval& interval() const noexcept { return interval_; }
    [[nodiscard]] std::size_t size() const noexcept { return coeffs_.size(); }
    [[nodiscard]] std::size_t degree() const noexcept { return coeffs_.size() - 1; }

    /// Largest coefficient magnitude.
    [[nodiscard]] double max_abs() const noexcept;
    [[nodiscard]] bool is_zero() const noexcept { return max_abs() == 0.0; }

    [[nodiscard]] cplx operator()(double x) const;

private:
    CVector coeffs_;
    Interval interval_;
};

/// Bivariate series sum_ij X(i, j) T_i(psi(y)) T_j(phi(x)); rows index y, columns index x.
class Cheb2 {
public:
    Cheb2();
    Cheb2(Matrix coeffs, Interval xinterval, Interval yinterval);

    [[nodiscard]] const Matrix& coeffs() const noexcept { return X_; }
    [[nodiscard]] const Interval& xinterval() const noexcept { return xint_; }
    [[nodiscard]] const Interval& yinterval() const noexcept { return yint_; }
    [[nodiscard]] Eigen::Index nx() const noexcept { return X_.cols(); }
    [[nodiscard]] Eigen::Index ny() const noexcept { return X_.rows(); }
    [[nodiscard]] double max_abs() const noexcept;

    [[nodiscard]] cplx operator()(double x, double y) const;

private:
    Matrix X_;
    Interval xint_;
    Interval yint_;
};

/// Options for the adaptive constructors.
struct ApproxOptions {
    double tol = 1e-14;
    /// Largest admissible polynomial degree per dimension.
    std::size_t max_degree = std::size_t{1} << 17;
};

using Function1 = std::function<cplx(double)>;
using Function2 = std::function<cplx(double, double)>;

/// Clenshaw evaluation of a Chebyshev series at x in f's interval.
[[nodiscard]] cplx clenshaw_eval(const Cheb1& f, double x);

/// Clenshaw evaluation at t in [-1, 1] with no domain check.
[[nodiscard]] cplx clenshaw_unit(std::span<const cplx> coeffs, double t) noexcept;

/// Second-kind Chebyshev points cos(k pi / (n - 1)), k = 0..n-1 (descending from 1).
[[nodiscard]] std::vector<double> cheb_points(std::size_t n);

/// Coefficients of the interpolant through values at cheb_points(n) mapped to `interval`.
[[nodiscard]] Cheb1 vals_to_coeffs(std::span<const cplx> values, Interval interval = {});

/// Values of f at n second-kind points. Throws SizeError when n < f.size() unless
/// `allow_truncation` is set, in which case coefficients beyond n - 1 are dropped.
[[nodiscard]] CVector coeffs_to_vals(const Cheb1& f, std::size_t n, bool allow_truncation = false);

/// Adaptive interpolation at degrees 8, 16, 32, ... until the tail test passes.
[[nodiscard]] Cheb1 interp1_adaptive(const Function1& f, Interval interval = {},
                                     const ApproxOptions& opts = {});

/// Tensor-product adaptive interpolation; n_x and n_y double independently.
[[nodiscard]] Cheb2 interp2_adaptive(const Function2& f, Interval xinterval = {},
                                     Interval yinterval = {}, const ApproxOptions& opts = {});

/// Evaluate a bivariate series at (x, y) inside its rectangle.
[[nodiscard]] cplx eval2(const Cheb2& S, double x, double y);

// Tail test shared by every adaptive loop.

/// Number of trailing coefficients examined by the tail test for a length-n sequence.
[[nodiscard]] std::size_t tail_window(std::size_t n) noexcept;

/// True when each of the trailing tail_window(n) magnitudes is <= tol * scale.
/// The window never includes index 0.
[[nodiscard]] bool tail_small(std::span<const double> magnitudes, double tol, double scale) noexcept;

/// Convenience overload on coefficients, with scale = max |c|.
[[nodiscard]] bool tail_resolved(std::span<const cplx> coeffs, double tol) noexcept;

/// Drop trailing coefficients with |c| <= tol * max|c|, keeping at least one.
[[nodiscard]] CVector trim_tail(std::span<const cplx> coeffs, double tol);

/// Drop trailing rows and columns whose entries are all <= tol * max|X|, keeping at least one of each.
[[nodiscard]] Matrix trim_tail2(const Matrix& X, double tol);

/// Chebyshev coefficients of the derivative on [-1, 1] (classical backward recurrence).
[[nodiscard]] CVector cheb_derivative(std::span<const cplx> coeffs);

/// Derivative of a Cheb1 on its own interval.
[[nodiscard]] Cheb1 differentiate(const Cheb1& f, int order = 1);

/// Values T_j^{(d)}(t) for j = 0..n-1 at t in [-1, 1].
[[nodiscard]] std::vector<double> cheb_basis_derivatives(double t, std::size_t n, int d);

/// Type-I discrete cosine transform in place: y_j = sum''_k x_k cos(pi j k / (n - 1)) scaled as
/// FFTW's REDFT00 (endpoints weight 1, interior weight 2). Direct below 64 points.
void dct1(std::span<double> data);

}  // namespace spectra
