// Acceptance run: one PASS/FAIL line per criterion, indented detail lines below it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "spectra/error.hpp"
#include "spectra/io.hpp"
#include "spectra/ode.hpp"
#include "spectra/pde.hpp"
#include "spectra/pdo.hpp"
#include "spectra/separable.hpp"
#include "spectra/sylvester.hpp"
#include "spectra/ultraspherical.hpp"

using namespace spectra;

namespace {

const double kPi = std::numbers::pi;

int failures = 0;

class Stopwatch {
public:
    [[nodiscard]] double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string sci(double v) { return fmt("%.2e", v); }

void verdict(int id, const std::string& title, bool pass, const std::vector<std::string>& details)
{
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << "  " << id << ". " << title << "\n";
    for (const auto& d : details) std::cout << "      " << d << "\n";
    std::cout.flush();
}

void crashed(int id, const std::string& title, const std::exception& e)
{
    verdict(id, title, false, {std::string("error: ") + e.what()});
}

ProblemFile load(const std::string& name) { return read_problem(std::string(SPECTRA_PROBLEMS_DIR) + "/" + name); }

std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    return v;
}

struct GridError {
    double max = 0.0;
    double rms = 0.0;
};

GridError grid_error(const Cheb2& u, const std::function<cplx(double, double)>& exact, int n = 100)
{
    GridError e;
    double sum = 0.0;
    for (double x : linspace(u.xinterval().a(), u.xinterval().b(), n))
        for (double y : linspace(u.yinterval().a(), u.yinterval().b(), n)) {
            const double d = std::abs(eval2(u, x, y) - exact(x, y));
            e.max = std::max(e.max, d);
            sum += d * d;
        }
    e.rms = std::sqrt(sum / (n * n));
    return e;
}

// Coefficients of du/dx (columns) or du/dy (rows) of a Cheb2.
Matrix dx(const Matrix& X, double scale)
{
    Matrix D = Matrix::Zero(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        CVector row(X.row(i).begin(), X.row(i).end());
        const CVector d = cheb_derivative(row);
        for (std::size_t j = 0; j < d.size(); ++j) D(i, static_cast<Eigen::Index>(j)) = scale * d[j];
    }
    return D;
}

Matrix dy(const Matrix& X, double scale) { return dx(X.transpose(), scale).transpose(); }

std::string degree_str(const Cheb2& u) { return "(" + std::to_string(u.nx() - 1) + ", " + std::to_string(u.ny() - 1) + ")"; }

std::string size_str(const PdeDiagnostics& d)
{
    return "n_x=" + std::to_string(d.nx) + ", n_y=" + std::to_string(d.ny);
}

// --- 1 ---------------------------------------------------------------------------------------

void helmholtz()
{
    const std::string title = "Helmholtz u_xx+u_yy+1000u=cos(10xy), Dirichlet 1: auto-resolution";
    try {
        const ProblemFile f = load("helmholtz.json");
        Stopwatch sw;
        const Solution s = solve_pde(build_problem(f), f.options);
        const double t = sw.seconds();
        const auto& d = s.diagnostics;
        const bool size_ok = d.nx >= 129 && d.nx <= 513 && d.ny >= 129 && d.ny <= 513;

        // Agreement with a solve at the next doubling, and the pointwise PDE residual from
        // differentiated coefficients, scaled by |u_xx| + |u_yy| + |1000 u|.
        const Cheb2 ref(solve_pde_fixed(build_problem(f), 2 * d.nx - 1, 2 * d.ny - 1, f.options), s.u.xinterval(),
                        s.u.yinterval());
        const Matrix& X = s.u.coeffs();
        const double sx = s.u.xinterval().scale(), sy = s.u.yinterval().scale();
        const Cheb2 uxx(dx(dx(X, sx), sx), s.u.xinterval(), s.u.yinterval());
        const Cheb2 uyy(dy(dy(X, sy), sy), s.u.xinterval(), s.u.yinterval());
        const auto interior = [&](double h, double* agreement) {
            double res = 0.0, scale = 0.0, diff = 0.0, umax = 0.0;
            for (double x : linspace(-h, h, 40))
                for (double y : linspace(-h, h, 40)) {
                    const cplx u = eval2(s.u, x, y), a = eval2(uxx, x, y), b = eval2(uyy, x, y);
                    res = std::max(res, std::abs(a + b + 1000.0 * u - std::cos(10.0 * x * y)));
                    scale = std::max(scale, std::abs(a) + std::abs(b) + std::abs(1000.0 * u));
                    diff = std::max(diff, std::abs(u - eval2(ref, x, y)));
                    umax = std::max(umax, std::abs(u));
                }
            *agreement = diff / umax;
            return res / scale;
        };
        double agree = 0.0, agree_inner = 0.0;
        const double res95 = interior(0.95, &agree), res80 = interior(0.8, &agree_inner);
        const double discrete = d.steps.back().residual;
        const bool pass = d.resolved && size_ok && discrete <= 1e-10 && agree <= 1e-10 && t <= 60.0;
        verdict(1, title, pass,
                {"tol " + sci(f.options.tol) + " (problem file): resolved at " + size_str(d) + ", path " + d.path +
                     ", " + std::to_string(d.subproblems) + " subproblems",
                 "discrete residual " + sci(discrete) + "; max relative difference from the " +
                     std::to_string(2 * d.nx - 1) + "^2 solve on [-0.95,0.95]^2: " + sci(agree),
                 "pointwise PDE residual (scaled): " + sci(res95) + " on [-0.95,0.95]^2, " + sci(res80) +
                     " on [-0.8,0.8]^2 (corner singularity: coefficients decay algebraically)",
                 "runtime " + fmt("%.2f", t) + " s (target <= 60 s)"});
    } catch (const std::exception& e) {
        crashed(1, title, e);
    }
}

// --- 2 ---------------------------------------------------------------------------------------

void example1()
{
    const std::string title = "Helmholtz omega=10*pi, exact cos(wx)cos(wy)";
    try {
        const ProblemFile f = load("example1_helmholtz.json");
        Stopwatch sw;
        const Solution s = solve_pde(build_problem(f), f.options);
        const double t = sw.seconds();
        const double w = 10 * kPi;
        const GridError e = grid_error(s.u, [&](double x, double y) { return std::cos(w * x) * std::cos(w * y); });
        // pi dof per wavelength: pi * (2 / (2 pi / w)) = w on [-1, 1].
        const double pi_dof = w;
        const double deg = static_cast<double>(std::max(s.u.nx(), s.u.ny()));
        const double ratio = deg / pi_dof;
        const bool pass = e.rms <= 1e-9 && ratio <= 4.0 && t <= 10.0;
        verdict(2, title, pass,
                {"tol " + sci(f.options.tol) + ": " + size_str(s.diagnostics) + ", coefficients kept " +
                     degree_str(s.u) + " degree",
                 "grid L2 (rms) error " + sci(e.rms) + ", max error " + sci(e.max),
                 "coefficients per dimension / (pi dof per wavelength = " + fmt("%.1f", pi_dof) +
                     ") = " + fmt("%.2f", ratio) + " (discretization size ratio " +
                     fmt("%.2f", static_cast<double>(s.diagnostics.nx) / pi_dof) + ")",
                 "runtime " + fmt("%.2f", t) + " s (target <= 10 s)"});
    } catch (const std::exception& e) {
        crashed(2, title, e);
    }
}

// --- 3 ---------------------------------------------------------------------------------------

void example5()
{
    const std::string title = "biharmonic with clamped data from Im((x-iy)e^{-2(x+iy)} + cos(cos(x+iy)))";
    try {
        const ProblemFile f = load("example5_biharmonic.json");
        Stopwatch sw;
        const Solution s = solve_pde(build_problem(f), f.options);
        const double t = sw.seconds();
        const auto exact = [](double x, double y) {
            const cplx z(x, y), zb(x, -y);
            return cplx(std::imag(zb * std::exp(-2.0 * z) + std::cos(std::cos(z))));
        };
        const GridError e = grid_error(s.u, exact);
        const auto& d = s.diagnostics;
        const bool deg_ok = s.u.nx() - 1 <= 65 && s.u.ny() - 1 <= 65;
        const bool pass = deg_ok && e.max <= 1e-11 && d.path == "kge3" && d.rank == 3;
        verdict(3, title, pass,
                {"degree " + degree_str(s.u) + " at " + size_str(d) + " (limit (65, 65))",
                 "max error on 100x100 grid " + sci(e.max) + " (limit 1e-11)",
                 "path " + d.path + ", splitting rank " + std::to_string(d.rank) + ", runtime " + fmt("%.2f", t) + " s"});
    } catch (const std::exception& e) {
        crashed(3, title, e);
    }
}

// --- 4 ---------------------------------------------------------------------------------------

void rank_table()
{
    const std::string title = "splitting ranks at tau=1e-12";
    struct Row {
        const char* name;
        const char* op;
        int expected;
    };
    const std::vector<Row> rows = {
        {"Laplace", "laplacian(u)", 2},
        {"Helmholtz", "laplacian(u) + 100*u", 2},
        {"heat", "diff(u,y) - diff(u,x,2)", 2},
        {"transport", "diff(u,y) + diff(u,x)", 2},
        {"wave", "diff(u,y,2) - diff(u,x,2)", 2},
        {"Euler-Tricomi", "diff(u,x,2) - x*diff(u,y,2)", 2},
        {"biharmonic", "biharmonic(u)", 3},
        {"u_xx + u_xy + u_yy", "diff(u,x,2) + diff(diff(u,x,1),y,1) + diff(u,y,2)", 3},
        {"(2+sin(x+y))u_xx + exp(-(x^2+y^2))u_yy", "(2+sin(x+y))*diff(u,x,2) + exp(-(x^2+y^2))*diff(u,y,2)", 4},
    };
    try {
        bool pass = true;
        std::vector<std::string> details;
        for (const auto& r : rows) {
            const SeparableRep rep = splitting_rank(extract_coeffs(parse_pdo(r.op), {}, {}), 1e-12);
            pass = pass && rep.k == r.expected;
            details.push_back(std::string(r.name) + ": " + std::to_string(rep.k) + " (expected " +
                              std::to_string(r.expected) + ")");
        }
        verdict(4, title, pass, details);
    } catch (const std::exception& e) {
        crashed(4, title, e);
    }
}

// --- 5 ---------------------------------------------------------------------------------------

void example2()
{
    const std::string title = "variable-coefficient Helmholtz, exact cos(cos(x(y+1)))";
    try {
        const ProblemFile f = load("example2_variable_helmholtz.json");
        Stopwatch sw;
        const Solution s = solve_pde(build_problem(f), f.options);
        const double t = sw.seconds();
        const GridError e =
            grid_error(s.u, [](double x, double y) { return cplx(std::cos(std::cos(x * (y + 1.0)))); });
        const auto& d = s.diagnostics;
        const bool pass = d.rank == 9 && e.max <= 1e-12;
        verdict(5, title, pass,
                {"splitting rank " + std::to_string(d.rank) + " (expected 9), path " + d.path,
                 "max error on 100x100 grid " + sci(e.max) + " (limit 1e-12), degree " + degree_str(s.u),
                 "runtime " + fmt("%.2f", t) + " s"});
    } catch (const std::exception& e) {
        crashed(5, title, e);
    }
}

// --- 6 ---------------------------------------------------------------------------------------

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

void singular_perturbation()
{
    const std::string title = "eps u'' + x u' + sin(x) u = 0, u(-1)=u(1)=1";
    try {
        const OdeSolution a = solve_ode(perturbed(1e-3));
        const double bc = std::max(std::abs(a.u(-1.0) - 1.0), std::abs(a.u(1.0) - 1.0));
        Stopwatch sw;
        const OdeSolution b = solve_ode(perturbed(1e-7));
        const double t = sw.seconds();
        const bool pass = bc <= 1e-10 && b.u.degree() >= 11000 && b.u.degree() <= 46000 && t <= 30.0;
        verdict(6, title, pass,
                {"eps=1e-3: degree " + std::to_string(a.u.degree()) + ", boundary error " + sci(bc),
                 "eps=1e-7: degree " + std::to_string(b.u.degree()) + " (n=" + std::to_string(b.n) +
                     ", window [11000, 46000]), residual " + sci(b.residual) + ", runtime " + fmt("%.2f", t) + " s"});
    } catch (const std::exception& e) {
        crashed(6, title, e);
    }
}

// --- 7 ---------------------------------------------------------------------------------------

cplx rnd(std::mt19937& g)
{
    std::normal_distribution<double> d;
    return {d(g), d(g)};
}

Matrix random_matrix(std::mt19937& g, Eigen::Index r, Eigen::Index c)
{
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) M(i, j) = rnd(g);
    return M;
}

double max_abs(const Matrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

double almost_banded_suite(std::mt19937& g, double* agreement)
{
    std::uniform_int_distribution<std::size_t> size(4, 160), border(0, 4), width(0, 5), cols(1, 3);
    double worst = 0.0;
    *agreement = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = size(g), K = std::min(border(g), n - 1), lo = width(g), up = width(g);
        AlmostBanded M(n, K, lo, up);
        for (std::size_t r = 0; r < K; ++r)
            for (std::size_t j = 0; j < n; ++j) M.border(r, j) = rnd(g);
        for (std::size_t i = K; i < n; ++i)
            for (std::size_t j = M.row_begin(i); j < M.row_end(i); ++j) M.band(i, j) = rnd(g) + (i == j ? 4.0 : 0.0);
        const Matrix B = random_matrix(g, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols(g)));
        const Matrix X = almost_banded_solve(M, B);
        const Matrix D = M.to_dense();
        const Matrix Xd = D.fullPivLu().solve(B);
        worst = std::max(worst, max_abs(D * X - B) / (max_abs(D) * max_abs(X) + max_abs(B)));
        *agreement = std::max(*agreement, max_abs(X - Xd) / max_abs(Xd));
    }
    return worst;
}

BandedOp random_banded(std::mt19937& g, std::size_t n, std::size_t lo, std::size_t up, double shift)
{
    BandedOp A(n, n, lo, up);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = A.row_begin(i); j < A.row_end(i); ++j) A.ref(i, j) = rnd(g) + (i == j ? shift : 0.0);
    return A;
}

Matrix kron(const Matrix& A, const Matrix& B)
{
    Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

// Dense Kronecker system: truncated operator rows plus both constraint families, vec(X)
// column-major, so vec(A X C^T) = (C kron A) vec(X).
Matrix kronecker_oracle(const ConstrainedSylvester& S)
{
    const Eigen::Index ny = S.ny(), nx = S.nx(), Ky = S.By.rows(), Kx = S.Bx.rows();
    Matrix Op = Matrix::Zero(ny * nx, ny * nx);
    for (std::size_t j = 0; j < S.terms(); ++j) Op += kron(S.C[j].to_dense(), S.A[j].to_dense());
    const Eigen::Index nrow = (ny - Ky) * (nx - Kx) + Ky * nx + Kx * ny;
    Matrix M(nrow, ny * nx);
    ColVector rhs(nrow);
    Eigen::Index r = 0;
    for (Eigen::Index b = 0; b < nx - Kx; ++b)
        for (Eigen::Index a = 0; a < ny - Ky; ++a) {
            M.row(r) = Op.row(b * ny + a);
            rhs(r++) = S.F(a, b);
        }
    const Matrix Cy = kron(Matrix::Identity(nx, nx), S.By);
    for (Eigen::Index i = 0; i < Cy.rows(); ++i) {
        M.row(r) = Cy.row(i);
        rhs(r++) = S.H(i % Ky, i / Ky);
    }
    const Matrix Cx = kron(S.Bx, Matrix::Identity(ny, ny));
    for (Eigen::Index i = 0; i < Cx.rows(); ++i) {
        M.row(r) = Cx.row(i);
        rhs(r++) = S.G(i / ny, i % ny);
    }
    const ColVector v = M.colPivHouseholderQr().solve(rhs);
    return Eigen::Map<const Matrix>(v.data(), ny, nx);
}

struct SylvesterStats {
    double constraints = 0.0;
    double agreement = 0.0;
    int per_k[4] = {0, 0, 0, 0};
};

SylvesterStats sylvester_suite(std::mt19937& g)
{
    SylvesterStats st;
    std::uniform_int_distribution<std::size_t> terms(1, 3), bw(0, 3);
    std::uniform_int_distribution<Eigen::Index> size(6, 24), cons(1, 3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = terms(g);
        const Eigen::Index ny = size(g), nx = size(g), Ky = cons(g), Kx = cons(g);
        ConstrainedSylvester S;
        for (std::size_t j = 0; j < k; ++j) {
            const double shift = j == 0 ? 6.0 : 0.0;
            S.A.push_back(random_banded(g, static_cast<std::size_t>(ny), bw(g), bw(g), shift));
            S.C.push_back(random_banded(g, static_cast<std::size_t>(nx), bw(g), bw(g), shift));
        }
        const Matrix Xt = random_matrix(g, ny, nx);
        S.By = random_matrix(g, Ky, ny);
        S.Bx = random_matrix(g, Kx, nx);
        S.H = S.By * Xt;
        S.G = S.Bx * Xt.transpose();
        S.F = apply_operator(S, Xt);
        const Matrix X = solve_constrained(S);
        const double scale = max_abs(X);
        st.constraints = std::max({st.constraints, max_abs(S.By * X - S.H) / (max_abs(S.By) * scale),
                                   max_abs(X * S.Bx.transpose() - S.G.transpose()) / (max_abs(S.Bx) * scale)});
        st.agreement = std::max(st.agreement, max_abs(X - kronecker_oracle(S)) / scale);
        ++st.per_k[k];
    }
    return st;
}

// Direct three-term recurrence for C_k^(lambda); lambda = 0 means Chebyshev T.
double gegenbauer(int lambda, std::size_t k, double t)
{
    if (lambda == 0) return std::cos(static_cast<double>(k) * std::acos(t));
    double c0 = 1.0, c1 = 2.0 * lambda * t;
    if (k == 0) return c0;
    for (std::size_t m = 1; m < k; ++m) {
        const double c2 = (2.0 * t * (m + lambda) * c1 - (m + 2.0 * lambda - 1.0) * c0) / (m + 1.0);
        c0 = c1;
        c1 = c2;
    }
    return c1;
}

cplx series(const CVector& c, int lambda, double t)
{
    cplx s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * gegenbauer(lambda, k, t);
    return s;
}

// p^(d)(x) for monomial coefficients p.
cplx monomial_derivative(const CVector& p, int d, double x)
{
    cplx s = 0.0;
    for (std::size_t j = p.size(); j-- > static_cast<std::size_t>(d);) {
        double f = 1.0;
        for (int q = 0; q < d; ++q) f *= static_cast<double>(j - static_cast<std::size_t>(q));
        s = s * x + f * p[j];
    }
    return s;
}

Cheb1 cheb_of_monomials(const CVector& p, std::size_t n, Interval I)
{
    std::vector<cplx> v;
    for (double t : cheb_points(n)) v.push_back(monomial_derivative(p, 0, I.from_unit(t)));
    return vals_to_coeffs(v, I);
}

CVector padded(const CVector& c, std::size_t n)
{
    CVector out(c);
    out.resize(n, 0.0);
    return out;
}

double operator_identities(std::mt19937& g)
{
    const std::size_t deg = 12, adeg = 5, n = 32;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Interval I = trial % 2 ? Interval(0.0, 3.0) : Interval(-1.0, 1.0);
        CVector p(deg + 1), q(adeg + 1);
        for (auto& c : p) c = rnd(g);
        for (auto& c : q) c = rnd(g);
        const CVector u = padded(cheb_of_monomials(p, deg + 1, I).coeffs(), n);
        const Cheb1 a = cheb_of_monomials(q, adeg + 1, I);
        const std::vector<double> ts = linspace(-0.99, 0.99, 23);
        const auto rel = [](cplx got, cplx want, double scale) { return std::abs(got - want) / scale; };

        for (int lam = 1; lam <= 4; ++lam) {
            const CVector c = diff_op(lam, n, I).apply(u);
            double scale = 0.0;
            for (double t : ts) scale = std::max(scale, std::abs(monomial_derivative(p, lam, I.from_unit(t))));
            for (double t : ts) worst = std::max(worst, rel(series(c, lam, t), monomial_derivative(p, lam, I.from_unit(t)), scale));
        }
        for (int lam = 0; lam <= 3; ++lam) {
            CVector c(n);
            for (auto& v : c) v = rnd(g);
            const CVector s = conv_op(lam, n + 2).apply(padded(c, n + 2));
            double scale = 0.0;
            for (double t : ts) scale = std::max(scale, std::abs(series(c, lam, t)));
            for (double t : ts) worst = std::max(worst, rel(series(s, lam + 1, t), series(c, lam, t), scale));
        }
        for (int lam = 0; lam <= 3; ++lam) {
            const CVector c = mult_op(a, lam, n).apply(to_ultraspherical(u, lam));
            double scale = 0.0;
            for (double t : ts) scale = std::max(scale, std::abs(a(I.from_unit(t)) * monomial_derivative(p, 0, I.from_unit(t))));
            for (double t : ts) {
                const double x = I.from_unit(t);
                worst = std::max(worst, rel(series(c, lam, t), monomial_derivative(q, 0, x) * monomial_derivative(p, 0, x), scale));
            }
        }
    }
    return worst;
}

double parity_suite(std::vector<std::string>* cases)
{
    const Interval I;
    const std::string g = "exp(x/2)*sin(y+0.3) + x*y^2 + cos(2*x)";
    const std::string gx = "0.5*exp(x/2)*sin(y+0.3) + y^2 - 2*sin(2*x)";
    const std::string gy = "exp(x/2)*cos(y+0.3) + 2*x*y";
    struct Case {
        const char* name;
        PdeProblem p;
        std::size_t n;
    };
    std::vector<Case> list;
    list.push_back({"Helmholtz, Dirichlet",
                    make_problem("laplacian(u) + 10*u", "exp(x)*cos(2*y) + x*y", I, I,
                                 {{Edge::Left, "u = " + g}, {Edge::Right, "u = " + g},
                                  {Edge::Down, "u = " + g}, {Edge::Up, "u = " + g}}),
                    33});
    list.push_back({"Dirichlet in x, Neumann in y",
                    make_problem("laplacian(u) - u", "sin(3*x+y) + 1", I, I,
                                 {{Edge::Left, "u = " + g}, {Edge::Right, "u = " + g},
                                  {Edge::Down, "neumann: " + gy}, {Edge::Up, "neumann: " + gy}}),
                    41});
    list.push_back({"clamped biharmonic",
                    make_problem("biharmonic(u)", "x^2 + exp(y)", I, I,
                                 {{Edge::Left, "dirichlet: " + g + "; neumann: " + gx},
                                  {Edge::Right, "dirichlet: " + g + "; neumann: " + gx},
                                  {Edge::Down, "dirichlet: " + g + "; neumann: " + gy},
                                  {Edge::Up, "dirichlet: " + g + "; neumann: " + gy}}),
                    33});
    list.push_back({"u_xx + u_yy + u_x (x not split)",
                    make_problem("laplacian(u) + diff(u,x)", "cos(x*y)", I, I,
                                 {{Edge::Left, "u = " + g}, {Edge::Right, "u = " + g},
                                  {Edge::Down, "u = " + g}, {Edge::Up, "u = " + g}}),
                    33});
    double worst = 0.0;
    for (const auto& c : list) {
        PdeOptions split, whole;
        whole.parity = false;
        PdeDiagnostics da, db;
        const Matrix A = solve_pde_fixed(c.p, c.n, c.n, split, &da);
        const Matrix B = solve_pde_fixed(c.p, c.n, c.n, whole, &db);
        const double d = max_abs(A - B) / max_abs(B);
        worst = std::max(worst, d);
        cases->push_back(std::string(c.name) + ": " + std::to_string(da.subproblems) + " subproblems, difference " + sci(d));
    }
    return worst;
}

void property_suites()
{
    const std::string title = "property suites against independent oracles";
    try {
        std::mt19937 g(20240611);
        double ab_agree = 0.0;
        const double ab = almost_banded_suite(g, &ab_agree);
        const SylvesterStats sy = sylvester_suite(g);
        const double ops = operator_identities(g);
        std::vector<std::string> cases;
        const double par = parity_suite(&cases);
        const bool pass = ab <= 1e-10 && sy.constraints <= 1e-10 && sy.agreement <= 1e-10 && ops <= 1e-12 && par <= 1e-10;
        std::vector<std::string> details = {
            "(a) 500 almost-banded solves: max relative residual " + sci(ab) + ", max deviation from dense LU " +
                sci(ab_agree),
            "(b) 200 constrained Sylvester instances (k=1: " + std::to_string(sy.per_k[1]) + ", k=2: " +
                std::to_string(sy.per_k[2]) + ", k=3: " + std::to_string(sy.per_k[3]) +
                "): constraint defect " + sci(sy.constraints) + ", Kronecker oracle deviation " + sci(sy.agreement),
            "(c) D, S, M pointwise identities: max relative error " + sci(ops),
            "(d) parity split vs unsplit: max relative difference " + sci(par)};
        for (const auto& c : cases) details.push_back("    " + c);
        verdict(7, title, pass, details);
    } catch (const std::exception& e) {
        crashed(7, title, e);
    }
}

// --- 8 ---------------------------------------------------------------------------------------

struct Attempt {
    bool ok = false;
    std::string note;
    Solution s;
};

Attempt attempt(const ProblemFile& f, const PdeOptions& opts)
{
    Attempt a;
    Stopwatch sw;
    try {
        a.s = solve_pde(build_problem(f), opts);
        a.ok = true;
        a.note = "resolved at " + size_str(a.s.diagnostics) + ", degree " + degree_str(a.s.u);
    } catch (const std::exception& e) {
        a.note = e.what();
    }
    a.note += " [" + fmt("%.1f", sw.seconds()) + " s]";
    return a;
}

void time_dependent()
{
    const std::string title = "wave / Klein-Gordon and Schrodinger runs";
    try {
        const ProblemFile kg = load("example3_klein_gordon.json");
        const ProblemFile wave = load("example3_wave.json");
        const ProblemFile sch = load("example4_schrodinger.json");

        const Attempt a_kg = attempt(kg, kg.options);
        const Attempt a_wave = attempt(wave, wave.options);
        const Attempt a_sch = attempt(sch, sch.options);
        const bool kg_deg = a_kg.ok && a_kg.s.u.nx() - 1 <= 129 && a_kg.s.u.ny() - 1 <= 513;
        double asym = 0.0;
        if (a_sch.ok)
            for (double x : linspace(0.0, 0.5, 101)) {
                const double l = std::norm(eval2(a_sch.s.u, x, 0.54)), r = std::norm(eval2(a_sch.s.u, 1.0 - x, 0.54));
                asym = std::max(asym, std::abs(l - r));
            }

        // The same problems with the library defaults: tail tolerance 1e-14 and strict corner
        // compatibility. The cap is lowered to 513 to keep the wave runs short.
        PdeOptions capped;
        capped.max_n = 513;
        const Attempt d_kg = attempt(kg, capped);
        const Attempt d_wave = attempt(wave, capped);
        const Attempt d_sch = attempt(sch, PdeOptions{});

        const bool file_ok = a_kg.ok && a_wave.ok && a_sch.ok && kg_deg && asym <= 1e-6;
        const bool default_ok = d_kg.ok && d_wave.ok && d_sch.ok;
        verdict(8, title, file_ok && default_ok,
                {"Klein-Gordon, tol " + sci(kg.options.tol) + ": " + a_kg.note + " (limit (129, 513))",
                 "wave, tol " + sci(wave.options.tol) + ": " + a_wave.note,
                 "Schrodinger, tol " + sci(sch.options.tol) + ", relaxed compatibility: " + a_sch.note +
                     "; max ||u(x,0.54)|^2 - |u(1-x,0.54)|^2| = " + sci(asym),
                 "default tolerances, Klein-Gordon (tol 1e-14, cap 513): " + d_kg.note,
                 "default tolerances, wave (tol 1e-14, cap 513): " + d_wave.note,
                 "default tolerances, Schrodinger (tol 1e-14, strict compatibility): " + d_sch.note});
    } catch (const std::exception& e) {
        crashed(8, title, e);
    }
}

// --- 9 ---------------------------------------------------------------------------------------

// Time of the Sylvester stage alone (assembly excluded), best of three.
double sylvester_time(const PdeProblem& p, std::size_t nx, std::size_t ny, const std::string& path)
{
    const SeparableRep rep = splitting_rank(p.op);
    const Matrix rhs = interp2_adaptive(p.rhs, p.xinterval, p.yinterval).coeffs();
    const ConstrainedSylvester S =
        build_system(rep, rhs, discretize_bcs(p.bcs, nx, ny, p.xinterval, p.yinterval), nx, ny);
    double best = 1e300;
    for (int rep_i = 0; rep_i < 3; ++rep_i) {
        SylvesterReport r;
        Stopwatch sw;
        (void)solve_constrained(S, {}, &r);
        best = std::min(best, sw.seconds());
        if (r.path != path) throw InternalConsistencyError("expected path " + path + ", got " + r.path);
    }
    return best;
}

double slope(const std::vector<double>& n, const std::vector<double>& t)
{
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        mx += std::log(n[i]);
        my += std::log(t[i]);
    }
    mx /= n.size();
    my /= n.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        sxy += (std::log(n[i]) - mx) * (std::log(t[i]) - my);
        sxx += (std::log(n[i]) - mx) * (std::log(n[i]) - mx);
    }
    return sxy / sxx;
}

void complexity()
{
    const std::string title = "complexity: k=2 slope <= 3.4, k=1 slope <= 1.5";
    try {
        const Interval I;
        const PdeProblem k2 = make_problem("laplacian(u)", "cos(3*x*y)", I, I,
                                           {{Edge::Left, "u = 1"}, {Edge::Right, "u = 1"},
                                            {Edge::Down, "u = 1"}, {Edge::Up, "u = 1"}});
        const PdeProblem k1 = make_problem("diff(diff(u,x,1),y,1)", "cos(3*x*y)", I, I,
                                           {{Edge::Left, "u = cos(y)"}, {Edge::Down, "u = cos(x)"}});
        const std::vector<double> ns = {64, 128, 256, 512};
        std::vector<double> t2, t1;
        for (double n : ns) {
            t2.push_back(sylvester_time(k2, static_cast<std::size_t>(n), static_cast<std::size_t>(n), "k2"));
            t1.push_back(sylvester_time(k1, static_cast<std::size_t>(n), 64, "k1"));
        }
        const double s2 = slope(ns, t2), s1 = slope(ns, t1);
        std::string l2 = "k=2 (n_x=n_y=n): ", l1 = "k=1 (n_x=n, n_y=64): ";
        for (std::size_t i = 0; i < ns.size(); ++i) {
            l2 += fmt("%.0f:", ns[i]) + fmt("%.4f s ", t2[i]);
            l1 += fmt("%.0f:", ns[i]) + fmt("%.4f s ", t1[i]);
        }
        verdict(9, title, s2 <= 3.4 && s1 <= 1.5,
                {l2 + "-> slope " + fmt("%.2f", s2), l1 + "-> slope " + fmt("%.2f", s1)});
    } catch (const std::exception& e) {
        crashed(9, title, e);
    }
}

}  // namespace

int main()
{
    Stopwatch total;
    helmholtz();
    example1();
    example5();
    rank_table();
    example2();
    singular_perturbation();
    property_suites();
    time_dependent();
    complexity();
    std::cout << (failures == 0 ? std::string("all criteria passed")
                                : std::to_string(failures) + (failures == 1 ? " criterion" : " criteria") + " failed")
              << " ("
              << fmt("%.1f", total.seconds()) << " s)\n";
    return failures == 0 ? 0 : 1;
}
