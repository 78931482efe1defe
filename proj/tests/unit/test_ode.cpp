#include <gtest/gtest.h>

#include <cmath>

#include "spectra/error.hpp"
#include "spectra/ode.hpp"

using namespace spectra;

namespace {

OdeProblem perturbed(double eps)
{
    OdeProblem p;
    p.op.add_term(2, Cheb1({eps}));
    p.op.add_term(1, Cheb1({0.0, 1.0}));
    p.op.add_term(0, interp1_adaptive([](double x) { return cplx(std::sin(x)); }));
    p.constraints = {Functional::point(-1.0), Functional::point(1.0)};
    p.values = {1.0, 1.0};
    p.rhs = Cheb1({0.0});
    return p;
}

}  // namespace

TEST(SolveOde, FirstOrderConstant)
{
    OdeProblem p;
    p.op.add_term(1, Cheb1({1.0}));
    p.constraints = {Functional::point(-1.0)};
    p.values = {1.0};
    p.rhs = Cheb1({0.0});
    const OdeSolution s = solve_ode(p);
    ASSERT_EQ(s.u.size(), 1U);
    EXPECT_LT(std::abs(s.u.coeffs()[0] - 1.0), 1e-15);
}

TEST(SolveOde, Linear)
{
    OdeProblem p;
    p.op.add_term(2, Cheb1({1.0}));
    p.constraints = {Functional::point(-1.0), Functional::point(1.0)};
    p.values = {-1.0, 1.0};
    p.rhs = Cheb1({0.0});
    const OdeSolution s = solve_ode(p);
    ASSERT_EQ(s.u.size(), 2U);
    EXPECT_LT(std::abs(s.u.coeffs()[0]), 1e-15);
    EXPECT_LT(std::abs(s.u.coeffs()[1] - 1.0), 1e-15);
}

TEST(SolveOde, Exponential)
{
    OdeProblem p;
    p.op.add_term(1, Cheb1({1.0}));
    p.op.add_term(0, Cheb1({1.0}));
    p.constraints = {Functional::point(-1.0)};
    p.values = {std::exp(1.0)};
    p.rhs = Cheb1({0.0});
    const OdeSolution s = solve_ode(p);
    EXPECT_LT(std::abs(s.u(0.0) - 1.0), 1e-13);
    EXPECT_LT(std::abs(s.u(0.5) - std::exp(-0.5)), 1e-13);
}

TEST(SolveOde, ShiftedIntervalAndRobin)
{
    // u'' = 0 on [2, 4], u(2) = 1, u(4) + u'(4) = 0 => u = 1 + s (x - 2), 1 + 2s + s = 0.
    const Interval I(2.0, 4.0);
    OdeProblem p;
    p.op = LinearODO(I);
    p.op.add_term(2, Cheb1({1.0}, I));
    Functional robin = Functional::point(4.0);
    robin.terms.push_back({1.0, 4.0, 1});
    p.constraints = {Functional::point(2.0), robin};
    p.values = {1.0, 0.0};
    p.rhs = Cheb1({0.0}, I);
    const OdeSolution s = solve_ode(p);
    const double slope = -1.0 / 3.0;
    EXPECT_LT(std::abs(s.u(3.0) - (1.0 + slope)), 1e-14);
}

TEST(SolveOde, ModeratePerturbation)
{
    const OdeProblem p = perturbed(1e-3);
    const OdeSolution s = solve_ode(p);
    EXPECT_LT(std::abs(s.u(-1.0) - 1.0), 1e-10);
    EXPECT_LT(std::abs(s.u(1.0) - 1.0), 1e-10);
    EXPECT_LT(s.residual, 1e-12);
    for (std::size_t r = 0; r < p.constraints.size(); ++r)
        EXPECT_LT(std::abs(p.constraints[r].apply(s.u) - p.values[r]), 1e-12);
}

TEST(SolveOde, RefinementIsSelfConsistent)
{
    const OdeProblem p = perturbed(1e-2);
    const OdeSolution s = solve_ode(p);
    const OdeSolution t = solve_ode_fixed(p, 2 * (s.sizes.back() - 1) + 1);
    double scale = 0.0;
    for (const auto& c : s.u.coeffs()) scale = std::max(scale, std::abs(c));
    for (std::size_t k = 0; k < s.u.size(); ++k)
        EXPECT_LT(std::abs(s.u.coeffs()[k] - t.u.coeffs()[k]), 1e-12 * scale);
}

TEST(SolveOde, CapExceeded)
{
    OdeOptions opts;
    opts.max_n = 33;
    EXPECT_THROW((void)solve_ode(perturbed(1e-5), opts), UnresolvedError);
}

TEST(SolveOde, SingularSystem)
{
    // u'' = 0 with two identical conditions.
    OdeProblem p;
    p.op.add_term(2, Cheb1({1.0}));
    p.constraints = {Functional::point(1.0), Functional::point(1.0)};
    p.values = {1.0, 1.0};
    p.rhs = Cheb1({0.0});
    EXPECT_THROW((void)solve_ode(p), IllPosedError);
}
