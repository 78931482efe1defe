#include "spectra/ode.hpp"

#include <cmath>
#include <string>

#include "spectra/error.hpp"

namespace spectra {

CVector Functional::discretize(std::size_t n, Interval interval) const
{
    CVector row(n, cplx(0.0));
    for (const auto& t : terms) {
        const CVector r = point_functional(t.point, t.derivative, n, interval);
        for (std::size_t j = 0; j < n; ++j) row[j] += t.weight * r[j];
    }
    for (std::size_t j = 0; j < std::min(n, raw.size()); ++j) row[j] += raw[j];
    return row;
}

cplx Functional::apply(const Cheb1& u) const
{
    const CVector row = discretize(u.size(), u.interval());
    cplx s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += row[j] * u.coeffs()[j];
    return s;
}

OdeSolution solve_ode_fixed(const OdeProblem& p, std::size_t n)
{
    const std::size_t K = p.constraints.size();
    if (p.values.size() != K) throw SizeError("solve_ode: constraint values do not match constraints");
    const int N = p.op.order();
    if (N < 0) throw IllPosedError("solve_ode: operator is identically zero");

    Matrix B(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < K; ++r) {
        const CVector row = p.constraints[r].discretize(n, p.op.interval());
        for (std::size_t j = 0; j < n; ++j) B(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = row[j];
    }
    const BandedOp L = discretize_odo(p.op, n);
    const Cheb1 f(p.rhs.coeffs(), p.op.interval());
    const AlmostBandedSystem sys = assemble_system(L, B, p.values, f, n, N);
    const CVector x = almost_banded_solve(sys.matrix, sys.rhs);

    const CVector Mx = sys.matrix.apply(x);
    double rn = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rn += std::norm(Mx[i] - sys.rhs[i]);
        bn += std::norm(sys.rhs[i]);
    }
    OdeSolution sol;
    sol.u = Cheb1(x, p.op.interval());
    sol.n = n;
    sol.residual = bn > 0.0 ? std::sqrt(rn / bn) : std::sqrt(rn);
    sol.sizes.push_back(n);
    return sol;
}

OdeSolution solve_ode(const OdeProblem& p, const OdeOptions& opts)
{
    std::vector<std::size_t> sizes;
    std::size_t n = std::max<std::size_t>(opts.start_n, p.constraints.size() + 1);
    n = std::max(n, p.rhs.size());
    for (;;) {
        OdeSolution sol = solve_ode_fixed(p, n);
        sizes.push_back(n);
        if (tail_resolved(sol.u.coeffs(), opts.tol)) {
            sol.u = Cheb1(trim_tail(sol.u.coeffs(), opts.tol), p.op.interval());
            sol.sizes = std::move(sizes);
            return sol;
        }
        const std::size_t next = 2 * (n - 1) + 1;
        if (next > opts.max_n) {
            throw UnresolvedError("solve_ode: not resolved at n = " + std::to_string(n) + " (cap " +
                                      std::to_string(opts.max_n) + ")",
                                  opts.max_n);
        }
        n = next;
    }
}

}  // namespace spectra
