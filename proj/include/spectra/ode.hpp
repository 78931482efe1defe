#pragma once

// Adaptive boundary-value solver for linear ODEs by the ultraspherical method.

#include <cstddef>
#include <vector>

#include "spectra/cheb.hpp"
#include "spectra/ultraspherical.hpp"

namespace spectra {

/// A linear constraint functional on Chebyshev series. Either a combination
/// sum_t weight_t * u^{(derivative_t)}(point_t), or a raw coefficient row (zero-padded).
struct Functional {
    struct Term {
        cplx weight = 1.0;
        double point = 0.0;
        int derivative = 0;
    };
    std::vector<Term> terms;
    CVector raw;

    static Functional point(double x0, int derivative = 0, cplx weight = 1.0)
    {
        return Functional{{Term{weight, x0, derivative}}, {}};
    }
    static Functional row(CVector coeffs) { return Functional{{}, std::move(coeffs)}; }

    /// Action on T_0..T_{n-1} for an interval.
    [[nodiscard]] CVector discretize(std::size_t n, Interval interval) const;
    /// Action on a given series.
    [[nodiscard]] cplx apply(const Cheb1& u) const;
};

struct OdeProblem {
    LinearODO op;
    std::vector<Functional> constraints;
    CVector values;
    Cheb1 rhs;
};

struct OdeOptions {
    double tol = 1e-14;
    std::size_t start_n = 17;
    std::size_t max_n = (std::size_t{1} << 17) + 1;
};

struct OdeSolution {
    Cheb1 u;
    /// Size of the final discretization.
    std::size_t n = 0;
    /// ||M x - b|| / ||b|| of the final almost-banded system.
    double residual = 0.0;
    std::vector<std::size_t> sizes;
};

/// Solve at n = 17, 33, 65, ... until the coefficient tail passes the tail test.
/// Throws UnresolvedError past max_n and IllPosedError (or SingularSystemError) for singular systems.
[[nodiscard]] OdeSolution solve_ode(const OdeProblem& p, const OdeOptions& opts = {});

/// One solve at a fixed size; no adaptivity.
[[nodiscard]] OdeSolution solve_ode_fixed(const OdeProblem& p, std::size_t n);

}  // namespace spectra
