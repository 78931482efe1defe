#pragma once

// Text front end: a small expression grammar for linear partial differential operators,
// right-hand sides and boundary conditions, and forward-mode extraction of the
// variable coefficients l_ij(x, y) of d^{i+j} u / dy^i dx^j.

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "spectra/cheb.hpp"
#include "spectra/ode.hpp"
#include "spectra/ultraspherical.hpp"

namespace spectra {

struct ExprNode {
    enum class Kind { U, VarX, VarY, Const, Diff, Add, Sub, Mul, Div, Pow, Neg, Func, Laplacian, Biharmonic };
    Kind kind = Kind::Const;
    cplx value = 0.0;
    /// Diff variable: 'x', 'y', or 'n' for the normal derivative of a boundary condition.
    char var = 'x';
    int order = 0;
    std::string func;
    std::vector<std::shared_ptr<const ExprNode>> kids;
    bool has_u = false;
    std::size_t offset = 0;
};

/// Parsed expression. Linearity in u is validated at parse time.
class PdoExpr {
public:
    PdoExpr() = default;
    explicit PdoExpr(std::shared_ptr<const ExprNode> root) : root_(std::move(root)) {}

    [[nodiscard]] const ExprNode& root() const { return *root_; }
    [[nodiscard]] bool has_u() const { return root_->has_u; }
    /// Structural rendering, e.g. "Mul(Func(sin, Mul(x, y)), Diff(u, x, 1))".
    [[nodiscard]] std::string to_string() const;

private:
    std::shared_ptr<const ExprNode> root_;
};

/// Grammar (whitespace-insensitive):
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | '+' unary | power
///   power  := primary ('^' unary)?
///   primary:= number | 'x' | 'y' | 'u' | 'i' | 'pi' | func '(' expr ')'
///           | 'diff' '(' expr ',' ('x'|'y') ',' integer ')' | 'diff' '(' expr [',' integer] ')'
///           | 'laplacian' '(' expr ')' | 'biharmonic' '(' expr ')' | '(' expr ')'
/// func is one of sin cos tan exp log sqrt sinh cosh tanh abs real imag.
/// Throws ParseError (with byte offset) and NonlinearityError.
[[nodiscard]] PdoExpr parse_pdo(const std::string& text);

/// Closed-form evaluation of a u-free expression.
[[nodiscard]] Function2 to_function(const PdoExpr& e);

/// True if the u-free expression involves neither x nor y.
[[nodiscard]] bool is_constant_expr(const ExprNode& n);

/// l_ij(x, y) for i = y-order, j = x-order. Entries that vanish are absent.
class CoeffArray {
public:
    CoeffArray() = default;
    CoeffArray(Interval xinterval, Interval yinterval) : xint_(xinterval), yint_(yinterval) {}

    using Key = std::pair<int, int>;
    [[nodiscard]] const std::map<Key, Cheb2>& entries() const noexcept { return entries_; }
    void set(int i, int j, Cheb2 c) { entries_[{i, j}] = std::move(c); }
    [[nodiscard]] bool has(int i, int j) const { return entries_.count({i, j}) != 0; }
    [[nodiscard]] const Cheb2& at(int i, int j) const { return entries_.at({i, j}); }

    [[nodiscard]] const Interval& xinterval() const noexcept { return xint_; }
    [[nodiscard]] const Interval& yinterval() const noexcept { return yint_; }
    /// Largest y-order and x-order with an entry; -1 when empty.
    [[nodiscard]] int Ny() const noexcept;
    [[nodiscard]] int Nx() const noexcept;
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    /// True when every entry is a constant.
    [[nodiscard]] bool constant_coefficients() const noexcept;

private:
    std::map<Key, Cheb2> entries_;
    Interval xint_;
    Interval yint_;
};

/// Forward-mode extraction. u-free subexpressions are sampled on the rectangle; derivatives of
/// variable coefficients follow the product rule. Coefficients below drop_tol relative to the
/// largest one are dropped. Throws NonlinearityError for a term without u.
[[nodiscard]] CoeffArray extract_coeffs(const PdoExpr& e, Interval xinterval, Interval yinterval,
                                        double tol = 1e-14, double drop_tol = 1e-14);

// Boundary conditions -----------------------------------------------------------------------

enum class Edge { Left, Right, Down, Up };

[[nodiscard]] const char* edge_name(Edge e) noexcept;

/// One condition on an edge: sum_d weights[d] * (d^d u / dn^d) = data(t), where n is the coordinate
/// normal to the edge (x on left/right, y on down/up) and t the tangential coordinate.
struct BcCondition {
    std::map<int, cplx> weights;
    Function1 data;
    std::string text;

    [[nodiscard]] bool is_dirichlet() const;
    [[nodiscard]] bool is_neumann() const;
};

struct BcSpec {
    Edge edge = Edge::Left;
    std::vector<BcCondition> conditions;
};

/// Parse one edge's conditions. Conditions are separated by ';'. Each is
///   "dirichlet: <data>" | "neumann: <data>" | <expr> [ '=' <data> ]
/// where expr is linear in u with constant coefficients, diff(u) is the first normal derivative
/// and u-free terms move to the data. Data are expressions in x and y evaluated on the edge.
[[nodiscard]] BcSpec parse_bc(const std::string& text, Edge edge, Interval xinterval, Interval yinterval);

/// Build a single condition of a named type with the given data expression.
[[nodiscard]] BcCondition make_bc(const std::string& type, const std::string& data, const std::string& expr,
                                  Edge edge, Interval xinterval, Interval yinterval);

// Ordinary differential equations ------------------------------------------------------------

/// Linear operator in x alone, e.g. "1e-3*diff(u,x,2) + x*u". Throws ParseError if it involves y.
[[nodiscard]] LinearODO extract_odo(const PdoExpr& e, Interval interval, double tol = 1e-14);

/// Point condition sum_t c_t u^(d_t)(x_t) = value, written with u(x0), diff(u)(x0) or diff(u,k)(x0),
/// e.g. "u(-1) = 1", "diff(u)(1) - 2*u(1) = 0", "u(0) + u(1)". A missing right side means 0.
struct OdeCondition {
    Functional functional;
    cplx value = 0.0;
};
[[nodiscard]] OdeCondition parse_ode_bc(const std::string& text);

}  // namespace spectra
