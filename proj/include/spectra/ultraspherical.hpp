#pragma once

// Banded ultraspherical operators: differentiation D_lambda, conversion S_lambda and
// multiplication M_lambda[a], plus discretization of linear ordinary differential operators.

#include <cstddef>
#include <map>
#include <span>

#include "spectra/banded.hpp"
#include "spectra/cheb.hpp"

namespace spectra {

/// n x n truncation of D_lambda on `interval`: Chebyshev coefficients to C^(lambda)
/// coefficients of the lambda-th derivative. lambda = 0 gives the identity.
[[nodiscard]] BandedOp diff_op(int lambda, std::size_t n, Interval interval = {});

/// n x n truncation of S_lambda: C^(lambda) to C^(lambda+1) coefficients (S_0 acts on Chebyshev).
[[nodiscard]] BandedOp conv_op(int lambda, std::size_t n);

/// S_{to-1} ... S_{from}, n x n (identity when from == to).
[[nodiscard]] BandedOp conversion_chain(int from, int to, std::size_t n);

/// Multiplication by a(x) in the Chebyshev basis (Toeplitz plus Hankel form). Bandwidth deg(a).
[[nodiscard]] BandedOp mult_op0(const Cheb1& a, std::size_t n);

/// Multiplication by a(x) in the C^(lambda) basis, lambda >= 1, built from the three-term recurrence
/// of the ultraspherical polynomials. M_lambda[a] S_{lambda-1}...S_0 u gives the C^(lambda)
/// coefficients of a u.
[[nodiscard]] BandedOp mult_opL(const Cheb1& a, int lambda, std::size_t n);

/// Dispatches to mult_op0 or mult_opL.
[[nodiscard]] BandedOp mult_op(const Cheb1& a, int lambda, std::size_t n);

/// C^(lambda) coefficients of a Chebyshev series (applies S_{lambda-1}...S_0).
[[nodiscard]] CVector to_ultraspherical(std::span<const cplx> cheb, int lambda);

/// Values of the C^(lambda) series sum_k c_k C_k^(lambda)(t), t in [-1, 1] (lambda >= 1; lambda = 0
/// is read as Chebyshev T).
[[nodiscard]] cplx ultraspherical_eval(std::span<const cplx> coeffs, int lambda, double t) noexcept;

/// Linear ordinary differential operator sum_k a_k(x) d^k/dx^k with Chebyshev coefficient functions.
class LinearODO {
public:
    LinearODO() = default;
    explicit LinearODO(Interval interval) : interval_(interval) {}
    LinearODO(std::map<int, Cheb1> terms, Interval interval);

    /// Add `a` to the coefficient of d^order/dx^order.
    void add_term(int order, const Cheb1& a);

    [[nodiscard]] const std::map<int, Cheb1>& terms() const noexcept { return terms_; }
    [[nodiscard]] const Interval& interval() const noexcept { return interval_; }
    /// Highest order with a coefficient that is not identically zero; -1 for the zero operator.
    [[nodiscard]] int order() const noexcept;
    [[nodiscard]] bool is_zero() const noexcept { return order() < 0; }

    /// Apply to a Chebyshev series on the same interval (Chebyshev coefficients of the result).
    [[nodiscard]] Cheb1 apply(const Cheb1& u) const;

private:
    std::map<int, Cheb1> terms_;
    Interval interval_;
};

/// n x n truncation of sum_k S_{N-1}...S_k M_k[a_k] D_k. The output basis is C^(output_order)
/// (output_order defaults to the operator order N and must be >= N). Factors are built at size
/// n + 2 * output_order and truncated last.
[[nodiscard]] BandedOp discretize_odo(const LinearODO& L, std::size_t n, int output_order = -1);

/// Constraint functionals applied to the Chebyshev basis: a K x n matrix.
using BoundaryRows = Matrix;

/// Row (T_0^{(d)}(x0), ..., T_{n-1}^{(d)}(x0)) scaled for `interval`.
[[nodiscard]] CVector point_functional(double x0, int derivative, std::size_t n, Interval interval = {});

/// Result of stacking constraints on top of the operator rows.
struct AlmostBandedSystem {
    AlmostBanded matrix;
    CVector rhs;
};

/// [B; first n-K rows of L] with right-hand side [c; first n-K entries of S_{N-1}...S_0 f].
/// `output_order` is the range basis index N of L.
[[nodiscard]] AlmostBandedSystem assemble_system(const BandedOp& L, const BoundaryRows& B, std::span<const cplx> c,
                                                 const Cheb1& rhs, std::size_t n, int output_order);

}  // namespace spectra
