#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spectra/error.hpp"
#include "spectra/sylvester.hpp"
#include "spectra/ultraspherical.hpp"

using namespace spectra;

namespace {

double max_abs(const Matrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

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

BandedOp random_banded(std::mt19937& g, std::size_t n, std::size_t lo, std::size_t up, double shift)
{
    BandedOp A(n, n, lo, up);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = A.row_begin(i); j < A.row_end(i); ++j) A.ref(i, j) = rnd(g) + (i == j ? shift : 0.0);
    return A;
}

AlmostBanded random_almost_banded(std::mt19937& g, std::size_t n, std::size_t K, std::size_t lo, std::size_t up)
{
    AlmostBanded M(n, K, lo, up);
    for (std::size_t r = 0; r < K; ++r)
        for (std::size_t j = 0; j < n; ++j) M.border(r, j) = rnd(g);
    for (std::size_t i = K; i < n; ++i)
        for (std::size_t j = M.row_begin(i); j < M.row_end(i); ++j) M.band(i, j) = rnd(g) + (i == j ? 4.0 : 0.0);
    return M;
}

Matrix kron(const Matrix& A, const Matrix& B)
{
    Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

Matrix unvec(const ColVector& v, Eigen::Index r, Eigen::Index c) { return Eigen::Map<const Matrix>(v.data(), r, c); }

// Dense least squares over the truncated operator rows and both constraint families, with
// vec(X) column-major: vec(A X C^T) = (C kron A) vec(X).
Matrix dense_oracle(const ConstrainedSylvester& S)
{
    const Eigen::Index ny = S.ny(), nx = S.nx(), Ky = S.By.rows(), Kx = S.Bx.rows();
    const Eigen::Index my = ny - Ky, mx = nx - Kx;
    Matrix Op = Matrix::Zero(ny * nx, ny * nx);
    for (std::size_t j = 0; j < S.terms(); ++j) Op += kron(S.C[j].to_dense(), S.A[j].to_dense());
    std::vector<Eigen::Index> rows;
    for (Eigen::Index b = 0; b < mx; ++b)
        for (Eigen::Index a = 0; a < my; ++a) rows.push_back(b * ny + a);
    const Eigen::Index nrow = static_cast<Eigen::Index>(rows.size()) + Ky * nx + Kx * ny;
    Matrix M(nrow, ny * nx);
    ColVector rhs(nrow);
    Eigen::Index r = 0;
    for (Eigen::Index q : rows) {
        M.row(r) = Op.row(q);
        rhs(r++) = S.F(q % ny, q / ny);
    }
    const Matrix Iy = Matrix::Identity(ny, ny), Ix = Matrix::Identity(nx, nx);
    const Matrix Cy = kron(Ix, S.By);  // vec(By X)
    for (Eigen::Index i = 0; i < Cy.rows(); ++i) {
        M.row(r) = Cy.row(i);
        rhs(r++) = S.H(i % Ky, i / Ky);
    }
    const Matrix Cx = kron(S.Bx, Iy);  // vec(X Bx^T)
    for (Eigen::Index i = 0; i < Cx.rows(); ++i) {
        M.row(r) = Cx.row(i);
        rhs(r++) = S.G(i / ny, i % ny);
    }
    const ColVector v = M.colPivHouseholderQr().solve(rhs);
    return unvec(v, ny, nx);
}

ConstrainedSylvester random_instance(std::mt19937& g, std::size_t k, Eigen::Index ny, Eigen::Index nx, Eigen::Index Ky,
                                     Eigen::Index Kx, Matrix* Xtrue = nullptr)
{
    ConstrainedSylvester S;
    std::uniform_int_distribution<std::size_t> bw(0, 3);
    for (std::size_t j = 0; j < k; ++j) {
        const double shift = j == 0 ? 6.0 : 0.0;
        S.A.push_back(random_banded(g, static_cast<std::size_t>(ny), bw(g), bw(g), shift));
        S.C.push_back(random_banded(g, static_cast<std::size_t>(nx), bw(g), bw(g), shift));
    }
    const Matrix X = random_matrix(g, ny, nx);
    S.By = random_matrix(g, Ky, ny);
    S.Bx = random_matrix(g, Kx, nx);
    S.H = S.By * X;
    S.G = S.Bx * X.transpose();
    S.F = apply_operator(S, X);
    if (Xtrue) *Xtrue = X;
    return S;
}

Matrix dirichlet_rows(Eigen::Index n)
{
    Matrix B(2, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        B(0, k) = (k % 2 == 0) ? 1.0 : -1.0;
        B(1, k) = 1.0;
    }
    return B;
}

// Poisson-type factors: the Laplacian is D2 (x) S + S (x) D2 with S = S1 S0.
ConstrainedSylvester poisson_instance(Eigen::Index ny, Eigen::Index nx, const Matrix& X)
{
    ConstrainedSylvester S;
    const auto uy = static_cast<std::size_t>(ny), ux = static_cast<std::size_t>(nx);
    S.A = {diff_op(2, uy), conversion_chain(0, 2, uy)};
    S.C = {conversion_chain(0, 2, ux), diff_op(2, ux)};
    S.By = dirichlet_rows(ny);
    S.Bx = dirichlet_rows(nx);
    S.H = S.By * X;
    S.G = S.Bx * X.transpose();
    S.F = apply_operator(S, X);
    return S;
}

}  // namespace

TEST(Canonicalize, DirichletRowsBecomeParityRows)
{
    const CanonicalConstraints c = canonicalize_rows(dirichlet_rows(9));
    ASSERT_EQ(c.perm.size(), 9u);
    for (std::size_t a = 0; a < 9; ++a) EXPECT_EQ(c.perm[a], static_cast<Eigen::Index>(a));
    for (Eigen::Index k = 0; k < 9; ++k) {
        EXPECT_NEAR(std::abs(c.B(0, k) - cplx(k % 2 == 0 ? 1.0 : 0.0)), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(c.B(1, k) - cplx(k % 2 == 1 ? 1.0 : 0.0)), 0.0, 1e-15);
    }
}

TEST(Canonicalize, PreservesRowSpace)
{
    std::mt19937 g(7);
    const Matrix B = random_matrix(g, 3, 20);
    const CanonicalConstraints c = canonicalize_rows(B);
    EXPECT_EQ(c.B.leftCols(3), Matrix::Identity(3, 3));
    // Undo the column permutation and compare with Binv B.
    Matrix back(3, 20);
    for (Eigen::Index a = 0; a < 20; ++a) back.col(c.perm[static_cast<std::size_t>(a)]) = c.B.col(a);
    EXPECT_LT(max_abs(back - c.Binv * B), 1e-13);
    // Same row space: stacking does not raise the rank.
    Matrix stacked(6, 20);
    stacked << B, back;
    EXPECT_EQ(Eigen::FullPivLU<Matrix>(stacked).rank(), 3);
}

TEST(Canonicalize, DependentRowsRejected)
{
    Matrix B = dirichlet_rows(8);
    B.row(1) = 2.0 * B.row(0);
    EXPECT_THROW((void)canonicalize_rows(B), DependentConstraintsError);
}

TEST(Canonicalize, FallsBackBeyondCandidateColumns)
{
    // The first 2K columns are zero, so pivots must come from further right.
    Matrix B = Matrix::Zero(1, 6);
    B(0, 4) = 3.0;
    const CanonicalConstraints c = canonicalize_rows(B);
    EXPECT_EQ(c.perm[0], 4);
    EXPECT_NEAR(std::abs(c.B(0, 0) - 1.0), 0.0, 0.0);
}

TEST(Compatibility, PerturbedCornerIsRejected)
{
    std::mt19937 g(3);
    const Matrix X = random_matrix(g, 10, 12);
    ConstrainedSylvester S = poisson_instance(10, 12, X);
    EXPECT_TRUE(check_compatibility(S).ok);
    EXPECT_LT(check_compatibility(S).defect, 1e-12);
    S.H(0, 0) += 1e-3;
    const Compatibility c = check_compatibility(S);
    EXPECT_FALSE(c.ok);
    EXPECT_NEAR(c.defect, 1e-3, 1e-9);
    try {
        (void)solve_constrained(S);
        FAIL() << "expected CompatibilityError";
    } catch (const CompatibilityError& e) {
        EXPECT_NEAR(e.defect(), 1e-3, 1e-9);
    }
}

TEST(Eliminate, StructuralZerosAndBorder)
{
    std::mt19937 g(11);
    const Matrix X = random_matrix(g, 16, 14);
    const ConstrainedSylvester S = poisson_instance(16, 14, X);
    const CanonicalSylvester can = canonicalize(S);
    const ReducedSylvester red = eliminate(S, can);
    ASSERT_EQ(red.A.size(), 2u);
    // D2 has no lower band and pivots 0, 1, so only the first two rows touch the pivot columns.
    EXPECT_EQ(red.A[0].border_rows(), 2u);
    EXPECT_EQ(red.A[1].border_rows(), red.A[0].border_rows());
    EXPECT_EQ(red.A[0].size(), 14u);
    EXPECT_EQ(red.C[0].size(), 12u);
    // Reduced equation is satisfied by the exact interior block.
    Matrix X22(14, 12);
    for (Eigen::Index a = 0; a < 14; ++a)
        for (Eigen::Index b = 0; b < 12; ++b) X22(a, b) = X(can.y.perm[a + 2], can.x.perm[b + 2]);
    Matrix R = Matrix::Zero(14, 12);
    for (std::size_t j = 0; j < 2; ++j) R += red.A[j].to_dense() * X22 * red.C[j].to_dense().transpose();
    EXPECT_LT(max_abs(R - red.F), 1e-10 * max_abs(red.F));
}

TEST(SolveK1, DiagonalCase)
{
    std::mt19937 g(1);
    const std::size_t m = 9, n = 7;
    AlmostBanded A(m, 0, 0, 0), C(n, 0, 0, 0);
    std::vector<cplx> a(m), c(n);
    for (std::size_t i = 0; i < m; ++i) A.band(i, i) = a[i] = rnd(g) + 3.0;
    for (std::size_t i = 0; i < n; ++i) C.band(i, i) = c[i] = rnd(g) + 3.0;
    const Matrix F = random_matrix(g, m, n);
    const Matrix X = solve_k1(A, C, F);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            EXPECT_NEAR(std::abs(X(i, j) - F(i, j) / (a[i] * c[j])), 0.0, 1e-13);
}

TEST(SolveK2, DiagonalCase)
{
    std::mt19937 g(2);
    const Eigen::Index m = 6, n = 5;
    const ColVector a1 = random_matrix(g, m, 1), a2 = random_matrix(g, m, 1);
    const ColVector c1 = random_matrix(g, n, 1), c2 = random_matrix(g, n, 1);
    const Matrix F = random_matrix(g, m, n);
    const Matrix X = solve_k2(a1.asDiagonal(), c1.asDiagonal(), a2.asDiagonal(), c2.asDiagonal(), F);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            EXPECT_NEAR(std::abs(X(i, j) - F(i, j) / (a1(i) * c1(j) + a2(i) * c2(j))), 0.0, 1e-11);
}

TEST(SolveK2, SharedEigenvalueIsNonUnique)
{
    // a1 c1 + a2 c2 vanishes for the (0, 0) entry.
    Matrix A1 = Matrix::Identity(3, 3), A2 = Matrix::Identity(3, 3), C1 = Matrix::Identity(3, 3), C2 = Matrix::Identity(3, 3);
    A2(0, 0) = 2.0;
    C2(0, 0) = -0.5;
    A2(1, 1) = 3.0;
    A2(2, 2) = 5.0;
    C2(1, 1) = 7.0;
    C2(2, 2) = 11.0;
    const Matrix F = Matrix::Ones(3, 3);
    EXPECT_THROW((void)solve_k2(A1, C1, A2, C2, F), NonUniqueSolutionError);
}

TEST(SolveKge3, MatchesDenseKronecker)
{
    std::mt19937 g(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t my = 4 + trial % 7, mx = 3 + (trial * 3) % 8;
        std::vector<AlmostBanded> A, C;
        for (int j = 0; j < 3; ++j) {
            A.push_back(random_almost_banded(g, my, 2, 2, 1));
            C.push_back(random_almost_banded(g, mx, 1, 1, 2));
        }
        const Matrix F = random_matrix(g, static_cast<Eigen::Index>(my), static_cast<Eigen::Index>(mx));
        SylvesterOptions banded, dense;
        banded.kron_solver = KronSolver::AlmostBanded;
        dense.kron_solver = KronSolver::Dense;
        const Matrix X = solve_kge3(A, C, F, banded);
        const Matrix X2 = solve_kge3(A, C, F, dense);
        Matrix Op = Matrix::Zero(static_cast<Eigen::Index>(my * mx), static_cast<Eigen::Index>(my * mx));
        for (int j = 0; j < 3; ++j) Op += kron(C[j].to_dense(), A[j].to_dense());
        const ColVector v = Op.fullPivLu().solve(Eigen::Map<const ColVector>(F.data(), F.size()));
        const Matrix Xd = unvec(v, static_cast<Eigen::Index>(my), static_cast<Eigen::Index>(mx));
        EXPECT_LT(max_abs(X - Xd), 1e-9 * std::max(1.0, max_abs(Xd))) << "trial " << trial;
        EXPECT_LT(max_abs(X2 - Xd), 1e-9 * std::max(1.0, max_abs(Xd))) << "trial " << trial;
    }
}

TEST(SolveKge3, SolverChoiceFollowsBandWidth)
{
    std::mt19937 g(12);
    std::vector<AlmostBanded> A, C;
    for (int j = 0; j < 3; ++j) {
        A.push_back(random_almost_banded(g, 200, 2, 2, 2));
        C.push_back(random_almost_banded(g, 5, 1, 1, 1));
    }
    SylvesterReport rep;
    (void)solve_kge3(A, C, random_matrix(g, 200, 5), {}, &rep);
    EXPECT_EQ(rep.kron_solver, "almost-banded");

    std::vector<AlmostBanded> D, E;
    for (int j = 0; j < 3; ++j) {
        D.push_back(random_almost_banded(g, 12, 11, 11, 0));
        E.push_back(random_almost_banded(g, 12, 11, 11, 0));
    }
    (void)solve_kge3(D, E, random_matrix(g, 12, 12), {}, &rep);
    EXPECT_EQ(rep.kron_solver, "dense");
}

TEST(SolveKge3, OrientationPrefersSmallInnerDimension)
{
    std::mt19937 g(9);
    std::vector<AlmostBanded> A, C;
    for (int j = 0; j < 3; ++j) {
        A.push_back(random_almost_banded(g, 64, 2, 2, 2));
        C.push_back(random_almost_banded(g, 8, 2, 2, 2));
    }
    SylvesterReport rep;
    const Matrix F = random_matrix(g, 64, 8);
    (void)solve_kge3(A, C, F, {}, &rep);
    EXPECT_EQ(rep.orientation, "x-major");
    EXPECT_LT(rep.cost_x_major, rep.cost_y_major);
    EXPECT_DOUBLE_EQ(rep.cost_x_major, kronecker_cost(A, C));

    SylvesterReport rep2;
    (void)solve_kge3(C, A, Matrix(F.transpose()), {}, &rep2);
    EXPECT_EQ(rep2.orientation, "y-major");
}

TEST(SolveKge3, MemoryCapRaises)
{
    std::mt19937 g(4);
    std::vector<AlmostBanded> A{random_almost_banded(g, 30, 2, 2, 2)}, C{random_almost_banded(g, 30, 2, 2, 2)};
    SylvesterOptions opts;
    opts.memory_cap_bytes = 1000.0;
    EXPECT_THROW((void)solve_kge3(A, C, random_matrix(g, 30, 30), opts), ResourceError);
    opts.kron_solver = KronSolver::Dense;
    EXPECT_THROW((void)solve_kge3(A, C, random_matrix(g, 30, 30), opts), ResourceError);
}

TEST(SolveConstrained, PoissonRecoversExactCoefficients)
{
    std::mt19937 g(13);
    const Matrix X = random_matrix(g, 20, 17);
    const ConstrainedSylvester S = poisson_instance(20, 17, X);
    SylvesterReport rep;
    const Matrix Xs = solve_constrained(S, {}, &rep);
    EXPECT_EQ(rep.path, "k2");
    EXPECT_LT(max_abs(Xs - X), 1e-10 * max_abs(X));
    EXPECT_LT(rep.x11_disagreement, 1e-10);
}

TEST(SolveConstrained, Kge3AgreesWithK2)
{
    std::mt19937 g(17);
    const Matrix X = random_matrix(g, 14, 11);
    const ConstrainedSylvester S = poisson_instance(14, 11, X);
    SylvesterOptions o2, o3;
    o2.path = SylvesterPath::K2;
    o3.path = SylvesterPath::KGE3;
    const Matrix X2 = solve_constrained(S, o2);
    const Matrix X3 = solve_constrained(S, o3);
    EXPECT_LT(max_abs(X2 - X3), 1e-10 * max_abs(X2));
}

TEST(SolveConstrained, RandomInstancesMatchDenseOracle)
{
    std::mt19937 g(2024);
    std::uniform_int_distribution<int> size(5, 24), kk(1, 3), cons(0, 2);
    int solved = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = static_cast<std::size_t>(kk(g));
        const Eigen::Index ny = size(g), nx = size(g), Ky = cons(g), Kx = cons(g);
        Matrix Xtrue;
        const ConstrainedSylvester S = random_instance(g, k, ny, nx, Ky, Kx, &Xtrue);
        Matrix X;
        try {
            X = solve_constrained(S);
        } catch (const IllPosedError& e) {
            ADD_FAILURE() << "trial " << trial << ": " << e.what();
            continue;
        }
        const Matrix Xo = dense_oracle(S);
        const double scale = std::max(1.0, max_abs(Xo));
        EXPECT_LT(max_abs(X - Xo), 1e-8 * scale) << "trial " << trial << " k=" << k << " " << ny << "x" << nx;
        EXPECT_LT(max_abs(S.By * X - S.H), 1e-10 * scale);
        EXPECT_LT(max_abs(X * S.Bx.transpose() - S.G.transpose()), 1e-10 * scale);
        ++solved;
    }
    EXPECT_EQ(solved, 200);
}

TEST(SolveConstrained, PivotOrderInvariance)
{
    std::mt19937 g(21);
    const Matrix X = random_matrix(g, 12, 15);
    const ConstrainedSylvester S = poisson_instance(12, 15, X);
    SylvesterOptions forced;
    forced.pivots_y = {11, 10};
    forced.pivots_x = {13, 14};
    const Matrix Xa = solve_constrained(S);
    const Matrix Xb = solve_constrained(S, forced);
    EXPECT_LT(max_abs(Xa - Xb), 1e-10 * max_abs(Xa));
}

TEST(SolveConstrained, SizeMismatchRejected)
{
    std::mt19937 g(1);
    ConstrainedSylvester S = random_instance(g, 1, 6, 6, 1, 1);
    S.H = Matrix::Zero(1, 5);
    EXPECT_THROW((void)solve_constrained(S), SizeError);
}
