#include "spectra/sylvester.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <tuple>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "spectra/error.hpp"

namespace spectra {

namespace {

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double max_abs(const Matrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

// Columns of M placed back at their original indices: out[:, perm[a]] = M[:, a].
Matrix unpermute_cols(const Matrix& M, const std::vector<Eigen::Index>& perm)
{
    Matrix out(M.rows(), M.cols());
    for (Eigen::Index a = 0; a < M.cols(); ++a) out.col(perm[static_cast<std::size_t>(a)]) = M.col(a);
    return out;
}

Matrix permute_cols(const Matrix& M, const std::vector<Eigen::Index>& perm)
{
    Matrix out(M.rows(), M.cols());
    for (Eigen::Index a = 0; a < M.cols(); ++a) out.col(a) = M.col(perm[static_cast<std::size_t>(a)]);
    return out;
}

// Dense columns `cols` of a banded operator.
Matrix banded_columns(const BandedOp& A, const std::vector<Eigen::Index>& cols)
{
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(A.rows()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t s = 0; s < cols.size(); ++s) {
        const auto c = static_cast<std::size_t>(cols[s]);
        const std::size_t lo = c > A.upper() ? c - A.upper() : 0;
        const std::size_t hi = std::min(A.rows(), c + A.lower() + 1);
        for (std::size_t r = lo; r < hi; ++r) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = A(r, c);
    }
    return out;
}

struct ReducedShape {
    std::size_t border = 0;
    std::size_t lower = 0;
    std::size_t upper = 0;
};

ReducedShape reduced_shape(const std::vector<BandedOp>& ops, const CanonicalConstraints& can, std::size_t m)
{
    const std::size_t K = static_cast<std::size_t>(can.B.rows());
    ReducedShape s;
    for (const auto& A : ops) {
        for (std::size_t t = 0; t < K; ++t) {
            const auto p = static_cast<std::size_t>(can.perm[t]);
            s.border = std::max(s.border, std::min(m, p + A.lower() + 1));
        }
        s.lower = std::max(s.lower, A.lower() + K);
        s.upper = std::max(s.upper, A.upper());
    }
    s.border = std::min(s.border, m);
    return s;
}

// Rows 0..m-1 of (A P - (A P)[:, :K] B) restricted to columns K.., as an almost-banded matrix.
AlmostBanded reduce_factor(const BandedOp& A, const CanonicalConstraints& can, const ReducedShape& shape)
{
    const std::size_t n = A.rows();
    const std::size_t K = static_cast<std::size_t>(can.B.rows());
    const std::size_t m = n - K;
    std::vector<std::size_t> newpos(n);
    for (std::size_t a = 0; a < n; ++a) newpos[static_cast<std::size_t>(can.perm[a])] = a;

    AlmostBanded M(m, shape.border, shape.lower, shape.upper);
    for (std::size_t r = 0; r < shape.border; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            cplx v = A(r, static_cast<std::size_t>(can.perm[K + c]));
            for (std::size_t t = 0; t < K; ++t)
                v -= A(r, static_cast<std::size_t>(can.perm[t])) * can.B(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(K + c));
            M.border(r, c) = v;
        }
        // The eliminated columns must vanish exactly.
        for (std::size_t s = 0; s < K; ++s) {
            cplx z = A(r, static_cast<std::size_t>(can.perm[s]));
            for (std::size_t t = 0; t < K; ++t)
                z -= A(r, static_cast<std::size_t>(can.perm[t])) * can.B(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s));
            if (z != cplx(0.0)) throw InternalConsistencyError("eliminate: constrained columns are not structurally zero");
        }
    }
    for (std::size_t r = shape.border; r < m; ++r) {
        for (std::size_t o = A.row_begin(r); o < A.row_end(r); ++o) {
            const cplx v = A(r, o);
            if (v == cplx(0.0)) continue;
            const std::size_t a = newpos[o];
            if (a < K) throw InternalConsistencyError("eliminate: pivot column touches a banded row");
            const std::size_t c = a - K;
            if (!M.in_band(r, c)) throw InternalConsistencyError("eliminate: entry outside the reduced band");
            M.band(r, c) = v;
        }
    }
    return M;
}

struct KronShape {
    std::size_t ni = 0, no = 0, K = 0, L = 0, U = 0;
};

KronShape kron_shape(const std::vector<AlmostBanded>& outer, const std::vector<AlmostBanded>& inner)
{
    KronShape s;
    s.no = outer.front().size();
    s.ni = inner.front().size();
    std::size_t Ro = 0, Lo = 0, Uo = 0, Ri = 0, Li = 0, Ui = 0;
    for (const auto& O : outer) {
        Ro = std::max(Ro, O.border_rows());
        Lo = std::max(Lo, O.lower());
        Uo = std::max(Uo, O.upper());
    }
    for (const auto& I : inner) {
        Ri = std::max(Ri, I.border_rows());
        Li = std::max(Li, I.lower());
        Ui = std::max(Ui, I.upper());
    }
    const std::size_t li = std::min(s.ni - 1, std::max(Li, Ri > 0 ? Ri - 1 : 0));
    const std::size_t ui = Ri > 0 ? s.ni - 1 : std::min(Ui, s.ni - 1);
    s.K = Ro * s.ni;
    s.L = Lo * s.ni + li;
    s.U = Uo * s.ni + ui;
    return s;
}

// Calls add(r, c, v) for every nonzero of sum_t O_t (x) I_t, row r = jo * ni + io.
template <class Add>
void kron_entries(const std::vector<AlmostBanded>& outer, const std::vector<AlmostBanded>& inner, std::size_t ni,
                  Add&& add)
{
    const std::size_t no = outer.front().size();
    for (std::size_t jo = 0; jo < no; ++jo) {
        for (std::size_t io = 0; io < ni; ++io) {
            const std::size_t r = jo * ni + io;
            for (std::size_t t = 0; t < outer.size(); ++t) {
                const AlmostBanded& O = outer[t];
                const AlmostBanded& I = inner[t];
                for (std::size_t l = O.row_begin(jo); l < O.row_end(jo); ++l) {
                    const cplx o = O(jo, l);
                    if (o == cplx(0.0)) continue;
                    for (std::size_t ip = I.row_begin(io); ip < I.row_end(io); ++ip) {
                        const cplx v = I(io, ip);
                        if (v != cplx(0.0)) add(r, l * ni + ip, o * v);
                    }
                }
            }
        }
    }
}

// When the Kronecker band covers most of the matrix a blocked dense LU is much faster than
// row-by-row Givens rotations.
bool prefer_dense(const KronShape& s)
{
    const double N = static_cast<double>(s.ni) * static_cast<double>(s.no);
    const double K = std::min(static_cast<double>(s.K), N);
    const double L = static_cast<double>(s.L), U = static_cast<double>(s.U);
    return N * N * N / 30.0 < N * (L + U + K) * (L + K);
}

std::string mib(double bytes) { return std::to_string(static_cast<long long>(bytes / 1048576.0)) + " MiB"; }

// Solve sum_t I_t Y O_t^T = R with Y(i, j) at vector index j * ni + i.
Matrix kron_solve(const std::vector<AlmostBanded>& outer, const std::vector<AlmostBanded>& inner, const Matrix& R,
                  double cap, KronSolver solver, std::string* method)
{
    const KronShape s = kron_shape(outer, inner);
    const std::size_t N = s.ni * s.no;
    const std::size_t K = std::min(s.K, N);
    const auto n = static_cast<Eigen::Index>(N);
    const ColVector rhs = Eigen::Map<const ColVector>(R.data(), n);
    ColVector y;
    if (solver == KronSolver::Dense || (solver == KronSolver::Auto && prefer_dense(s))) {
        const double bytes = 16.0 * static_cast<double>(N) * static_cast<double>(N);
        if (bytes > cap) throw ResourceError("dense Kronecker system needs " + mib(bytes) + ", above the cap of " + mib(cap));
        if (method) *method = "dense";
        Matrix M = Matrix::Zero(n, n);
        kron_entries(outer, inner, s.ni, [&](std::size_t r, std::size_t c, cplx v) {
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += v;
        });
        const Eigen::PartialPivLU<Matrix> lu(M);
        const double piv = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
        if (!(piv > 1e-14 * static_cast<double>(N) * lu.matrixLU().cwiseAbs().maxCoeff()))
            throw SingularSystemError("Kronecker system is numerically singular", 0);
        y = lu.solve(rhs);
    } else {
        const double bytes = AlmostBanded::storage_bytes(N, K, s.L, s.U);
        if (bytes > cap) throw ResourceError("Kronecker system needs " + mib(bytes) + ", above the cap of " + mib(cap));
        if (method) *method = "almost-banded";
        AlmostBanded M(N, K, s.L, s.U);
        kron_entries(outer, inner, s.ni, [&](std::size_t r, std::size_t c, cplx v) {
            if (r < K) {
                M.border(r, c) += v;
            } else {
                M.band(r, c) += v;
            }
        });
        const CVector yv = almost_banded_solve(M, CVector(rhs.data(), rhs.data() + n));
        y = Eigen::Map<const ColVector>(yv.data(), n);
    }
    return Eigen::Map<const Matrix>(y.data(), static_cast<Eigen::Index>(s.ni), static_cast<Eigen::Index>(s.no));
}

// Complex QZ: A = Q S Z^H, B = Q T Z^H.
struct QZ {
    Matrix S, T, Q, Z;
};

QZ qz(const Matrix& A, const Matrix& B)
{
    const auto n = static_cast<lapack_int>(A.rows());
    QZ r{A, B, Matrix(A.rows(), A.rows()), Matrix(A.rows(), A.rows())};
    std::vector<cplx> alpha(static_cast<std::size_t>(std::max(n, 1))), beta(static_cast<std::size_t>(std::max(n, 1)));
    lapack_int sdim = 0;
    const lapack_int info = LAPACKE_zgges(LAPACK_COL_MAJOR, 'V', 'V', 'N', nullptr, n, r.S.data(), n, r.T.data(), n,
                                          &sdim, alpha.data(), beta.data(), r.Q.data(), n, r.Z.data(), n);
    if (info != 0) throw Error("generalized Schur decomposition failed (zgges info " + std::to_string(info) + ")");
    return r;
}

SylvesterPath path_for(SylvesterPath requested, std::size_t k)
{
    if (requested != SylvesterPath::Auto) return requested;
    return k == 1 ? SylvesterPath::K1 : k == 2 ? SylvesterPath::K2 : SylvesterPath::KGE3;
}

const char* path_name(SylvesterPath p)
{
    switch (p) {
    case SylvesterPath::K1: return "k1";
    case SylvesterPath::K2: return "k2";
    case SylvesterPath::KGE3: return "kge3";
    default: return "auto";
    }
}

}  // namespace

void ConstrainedSylvester::validate() const
{
    if (A.empty() || A.size() != C.size()) throw SizeError("Sylvester: A and C must be nonempty and of equal count");
    const auto ny_ = static_cast<std::size_t>(F.rows()), nx_ = static_cast<std::size_t>(F.cols());
    for (const auto& a : A)
        if (a.rows() != ny_ || a.cols() != ny_) throw SizeError("Sylvester: A_j must be n_y x n_y");
    for (const auto& c : C)
        if (c.rows() != nx_ || c.cols() != nx_) throw SizeError("Sylvester: C_j must be n_x x n_x");
    if (By.cols() != F.rows() || H.rows() != By.rows() || H.cols() != F.cols())
        throw SizeError("Sylvester: inconsistent y constraints");
    if (Bx.cols() != F.cols() || G.rows() != Bx.rows() || G.cols() != F.rows())
        throw SizeError("Sylvester: inconsistent x constraints");
}

CanonicalConstraints canonicalize_rows(const Matrix& B, double dependence_tol, const std::vector<Eigen::Index>& forced)
{
    const Eigen::Index K = B.rows(), n = B.cols();
    CanonicalConstraints out;
    if (K > n) throw DependentConstraintsError("more constraints than unknowns");
    std::vector<Eigen::Index> pivots;
    const double scale = max_abs(B);
    if (K > 0 && scale == 0.0) throw DependentConstraintsError("constraint rows are zero");

    if (!forced.empty()) {
        if (static_cast<Eigen::Index>(forced.size()) != K) throw SizeError("forced pivot list has the wrong length");
        pivots = forced;
        std::vector<bool> seen(static_cast<std::size_t>(n), false);
        for (Eigen::Index p : pivots) {
            if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) throw SizeError("invalid forced pivot list");
            seen[static_cast<std::size_t>(p)] = true;
        }
    } else {
        Matrix W = B;
        std::vector<bool> chosen(static_cast<std::size_t>(n), false);
        const Eigen::Index candidates = std::min(n, 2 * K);
        for (Eigen::Index s = 0; s < K; ++s) {
            auto search = [&](Eigen::Index limit) {
                Eigen::Index best = -1;
                double bn = 0.0;
                for (Eigen::Index c = 0; c < limit; ++c) {
                    if (chosen[static_cast<std::size_t>(c)]) continue;
                    const double nrm = W.col(c).tail(K - s).norm();
                    if (nrm > bn) {
                        bn = nrm;
                        best = c;
                    }
                }
                return std::make_pair(best, bn);
            };
            auto [c, nrm] = search(candidates);
            if (c < 0 || nrm <= dependence_tol * scale) std::tie(c, nrm) = search(n);
            if (c < 0 || nrm <= dependence_tol * scale) {
                throw DependentConstraintsError("constraint rows are linearly dependent (rank " + std::to_string(s) +
                                                " of " + std::to_string(K) + ")");
            }
            Eigen::Index r = s;
            W.col(c).tail(K - s).cwiseAbs().maxCoeff(&r);
            r += s;
            W.row(s).swap(W.row(r));
            for (Eigen::Index t = s + 1; t < K; ++t) W.row(t) -= (W(t, c) / W(s, c)) * W.row(s);
            chosen[static_cast<std::size_t>(c)] = true;
            pivots.push_back(c);
        }
    }

    out.perm = pivots;
    std::vector<bool> is_pivot(static_cast<std::size_t>(n), false);
    for (Eigen::Index p : pivots) is_pivot[static_cast<std::size_t>(p)] = true;
    for (Eigen::Index c = 0; c < n; ++c)
        if (!is_pivot[static_cast<std::size_t>(c)]) out.perm.push_back(c);

    if (K == 0) {
        out.B = Matrix(0, n);
        out.Binv = Matrix(0, 0);
        return out;
    }
    const Matrix Bhat = permute_cols(B, out.perm).leftCols(K);
    const Eigen::FullPivLU<Matrix> lu(Bhat);
    if (lu.rank() < K) throw DependentConstraintsError("constraint pivot block is singular");
    out.Binv = lu.inverse();
    out.B = out.Binv * permute_cols(B, out.perm);
    const double id_err = max_abs(out.B.leftCols(K) - Matrix::Identity(K, K));
    if (id_err > 1e-8) throw DependentConstraintsError("constraint pivot block is too ill-conditioned");
    out.B.leftCols(K) = Matrix::Identity(K, K);
    return out;
}

CanonicalSylvester canonicalize(const ConstrainedSylvester& S, const SylvesterOptions& opts)
{
    S.validate();
    CanonicalSylvester c;
    c.y = canonicalize_rows(S.By, opts.dependence_tol, opts.pivots_y);
    c.x = canonicalize_rows(S.Bx, opts.dependence_tol, opts.pivots_x);
    c.H = permute_cols(c.y.Binv * S.H, c.x.perm);
    c.G = permute_cols(c.x.Binv * S.G, c.y.perm);
    if (S.By.rows() == 0) c.H = Matrix(0, S.nx());
    if (S.Bx.rows() == 0) c.G = Matrix(0, S.ny());
    return c;
}

Compatibility check_compatibility(const Matrix& By, const Matrix& Bx, const Matrix& H, const Matrix& G, double tol)
{
    Compatibility r;
    if (By.rows() == 0 || Bx.rows() == 0) return r;
    const Matrix D = H * Bx.transpose() - By * G.transpose();
    r.defect = max_abs(D);
    // Derivative rows grow like n^2, so the data are weighted by the constraint magnitudes.
    auto row_sum = [](const Matrix& M) { return M.size() ? M.cwiseAbs().rowwise().sum().maxCoeff() : 0.0; };
    const double scale = std::max({row_sum(H) * max_abs(Bx), row_sum(G) * max_abs(By), 1.0});
    r.ok = r.defect <= tol * scale;
    return r;
}

Compatibility check_compatibility(const ConstrainedSylvester& S, double tol)
{
    return check_compatibility(S.By, S.Bx, S.H, S.G, tol);
}

ReducedSylvester eliminate(const ConstrainedSylvester& S, const CanonicalSylvester& can)
{
    const auto ny = static_cast<std::size_t>(S.ny()), nx = static_cast<std::size_t>(S.nx());
    const auto Ky = static_cast<std::size_t>(S.By.rows()), Kx = static_cast<std::size_t>(S.Bx.rows());
    if (Ky >= ny || Kx >= nx) throw SizeError("Sylvester: no unknowns left after eliminating the constraints");
    const std::size_t my = ny - Ky, mx = nx - Kx;

    ReducedSylvester red;
    const ReducedShape sy = reduced_shape(S.A, can.y, my);
    const ReducedShape sx = reduced_shape(S.C, can.x, mx);
    for (const auto& A : S.A) red.A.push_back(reduce_factor(A, can.y, sy));
    for (const auto& C : S.C) red.C.push_back(reduce_factor(C, can.x, sx));

    const std::vector<Eigen::Index> piv_y(can.y.perm.begin(), can.y.perm.begin() + static_cast<std::ptrdiff_t>(Ky));
    const std::vector<Eigen::Index> piv_x(can.x.perm.begin(), can.x.perm.begin() + static_cast<std::ptrdiff_t>(Kx));
    Matrix Ft = S.F;
    const Matrix Hp = Ky ? unpermute_cols(can.H, can.x.perm) : Matrix(0, S.nx());
    // G'^T with rows back at their original y positions.
    Matrix GTp;
    if (Kx) GTp = unpermute_cols(can.G, can.y.perm).transpose();
    const Matrix ByG = (Ky && Kx) ? Matrix(can.y.B * can.G.transpose()) : Matrix();
    for (std::size_t j = 0; j < S.terms(); ++j) {
        const Matrix A1 = banded_columns(S.A[j], piv_y);
        if (Ky) Ft -= A1 * banded_right(Hp, S.C[j]);
        if (Kx) {
            Matrix AG = banded_left(S.A[j], GTp);
            if (Ky) AG -= A1 * ByG;
            Ft -= AG * banded_columns(S.C[j], piv_x).transpose();
        }
    }
    red.F = Ft.topLeftCorner(static_cast<Eigen::Index>(my), static_cast<Eigen::Index>(mx));
    return red;
}

Matrix solve_k1(const AlmostBanded& A, const AlmostBanded& C, const Matrix& F)
{
    const Matrix Y = almost_banded_solve(A, F);
    return almost_banded_solve(C, Matrix(Y.transpose())).transpose();
}

Matrix solve_k2(const Matrix& A1, const Matrix& C1, const Matrix& A2, const Matrix& C2, const Matrix& F,
                double pencil_tol)
{
    const Eigen::Index my = F.rows(), mx = F.cols();
    const QZ qa = qz(A1, A2);
    // Symmetric problems (e.g. the Laplacian on a square) repeat a pencil, possibly swapped.
    QZ qc;
    const bool same = C1.rows() == A1.rows();
    if (same && C1 == A1 && C2 == A2) {
        qc = qa;
    } else if (same && C1 == A2 && C2 == A1) {
        qc = {qa.T, qa.S, qa.Q, qa.Z};
    } else {
        qc = qz(C1, C2);
    }
    const Matrix Fp = qa.Q.adjoint() * F * qc.Q.conjugate();
    const double s1 = max_abs(qa.S), t1 = max_abs(qa.T);

    Matrix Y = Matrix::Zero(my, mx), W1 = Matrix::Zero(my, mx), W2 = Matrix::Zero(my, mx);
    for (Eigen::Index j = mx - 1; j >= 0; --j) {
        ColVector rhs = Fp.col(j);
        const Eigen::Index rest = mx - j - 1;
        if (rest > 0) {
            rhs -= W1.rightCols(rest) * qc.S.row(j).tail(rest).transpose();
            rhs -= W2.rightCols(rest) * qc.T.row(j).tail(rest).transpose();
        }
        const cplx a = qc.S(j, j), b = qc.T(j, j);
        const double scale = std::abs(a) * s1 + std::abs(b) * t1;
        // Back substitution with the upper-triangular a S1 + b T1.
        ColVector y(my);
        for (Eigen::Index i = my - 1; i >= 0; --i) {
            cplx s = rhs(i);
            for (Eigen::Index k = i + 1; k < my; ++k) s -= (a * qa.S(i, k) + b * qa.T(i, k)) * y(k);
            const cplx d = a * qa.S(i, i) + b * qa.T(i, i);
            if (!(std::abs(d) > pencil_tol * scale)) {
                throw NonUniqueSolutionError("Sylvester pencils share an eigenvalue (pivot " + std::to_string(std::abs(d)) +
                                             " at column " + std::to_string(j) + ")");
            }
            y(i) = s / d;
        }
        Y.col(j) = y;
        W1.col(j) = qa.S.triangularView<Eigen::Upper>() * y;
        W2.col(j) = qa.T.triangularView<Eigen::Upper>() * y;
    }
    return qa.Z * Y * qc.Z.transpose();
}

double kronecker_cost(const std::vector<AlmostBanded>& outer, const std::vector<AlmostBanded>& inner)
{
    const KronShape s = kron_shape(outer, inner);
    const double N = static_cast<double>(s.ni) * static_cast<double>(s.no);
    const double K = std::min(static_cast<double>(s.K), N);
    const double L = static_cast<double>(s.L), U = static_cast<double>(s.U);
    return N * (L + U + K) * (L + K);
}

Matrix solve_kge3(const std::vector<AlmostBanded>& A, const std::vector<AlmostBanded>& C, const Matrix& F,
                  const SylvesterOptions& opts, SylvesterReport* report)
{
    if (A.empty() || A.size() != C.size()) throw SizeError("solve_kge3: mismatched term lists");
    // x-major: x fastest, so x is the inner factor and we solve for X^T.
    const double cx = kronecker_cost(A, C);
    const double cy = kronecker_cost(C, A);
    const bool x_major = cx < cy;
    if (report) {
        report->cost_x_major = cx;
        report->cost_y_major = cy;
        report->orientation = x_major ? "x-major" : "y-major";
    }
    std::string* method = report ? &report->kron_solver : nullptr;
    if (x_major) return kron_solve(A, C, Matrix(F.transpose()), opts.memory_cap_bytes, opts.kron_solver, method).transpose();
    return kron_solve(C, A, F, opts.memory_cap_bytes, opts.kron_solver, method);
}

Matrix recover(const Matrix& X22, const CanonicalSylvester& can, double tol, double* disagreement)
{
    const Eigen::Index Ky = can.y.B.rows(), Kx = can.x.B.rows();
    const Eigen::Index my = X22.rows(), mx = X22.cols();
    const Eigen::Index ny = my + Ky, nx = mx + Kx;
    Matrix Xp(ny, nx);
    Xp.bottomRightCorner(my, mx) = X22;
    const Matrix B2y = can.y.B.rightCols(my);
    const Matrix B2x = can.x.B.rightCols(mx);
    const Matrix GT = can.G.transpose();
    if (Ky) Xp.topRightCorner(Ky, mx) = can.H.rightCols(mx) - B2y * X22;
    if (Kx) Xp.bottomLeftCorner(my, Kx) = GT.bottomRows(my) - X22 * B2x.transpose();
    double dis = 0.0;
    if (Ky && Kx) {
        const Matrix X11a = can.H.leftCols(Kx) - B2y * Xp.bottomLeftCorner(my, Kx);
        const Matrix X11b = GT.topRows(Ky) - Xp.topRightCorner(Ky, mx) * B2x.transpose();
        dis = max_abs(X11a - X11b);
        Xp.topLeftCorner(Ky, Kx) = 0.5 * (X11a + X11b);
        // Same floor as the compatibility test, so parity classes with roundoff-sized data pass.
        const double scale = std::max({max_abs(Xp), max_abs(can.H), max_abs(can.G), 1.0});
        if (disagreement) *disagreement = dis;
        if (tol > 0.0 && dis > tol * scale) {
            throw CompatibilityError("corner block formulas disagree by " + std::to_string(dis) +
                                         " (boundary data incompatible at the corners)",
                                     dis);
        }
    }
    if (disagreement) *disagreement = dis;
    Matrix X(ny, nx);
    for (Eigen::Index a = 0; a < ny; ++a)
        for (Eigen::Index b = 0; b < nx; ++b)
            X(can.y.perm[static_cast<std::size_t>(a)], can.x.perm[static_cast<std::size_t>(b)]) = Xp(a, b);
    return X;
}

Matrix solve_constrained(const ConstrainedSylvester& S, const SylvesterOptions& opts, SylvesterReport* report)
{
    S.validate();
    SylvesterReport local;
    SylvesterReport& rep = report ? *report : local;
    const Compatibility compat = check_compatibility(S, opts.compat_tol);
    rep.compat_defect = compat.defect;
    if (!compat.ok && opts.enforce_compatibility) {
        throw CompatibilityError("boundary data violate the corner compatibility conditions (defect " +
                                     sci(compat.defect) + ")",
                                 compat.defect);
    }
    const CanonicalSylvester can = canonicalize(S, opts);
    const std::size_t k = S.terms();
    const SylvesterPath path = path_for(opts.path, k);
    if (path == SylvesterPath::K1 && k != 1) throw SizeError("k1 path needs exactly one term");
    if (path == SylvesterPath::K2 && k > 2) throw SizeError("k2 path needs at most two terms");
    rep.path = path_name(path);
    if (S.F.isZero(0.0) && S.H.isZero(0.0) && S.G.isZero(0.0)) {
        // Homogeneous data: the (assumed unique) solution is zero.
        return Matrix::Zero(S.ny(), S.nx());
    }
    const ReducedSylvester red = eliminate(S, can);

    Matrix X22;
    switch (path) {
    case SylvesterPath::K1:
        X22 = solve_k1(red.A[0], red.C[0], red.F);
        break;
    case SylvesterPath::K2: {
        const Matrix A1 = red.A[0].to_dense(), C1 = red.C[0].to_dense();
        const Matrix A2 = k == 2 ? red.A[1].to_dense() : Matrix::Zero(A1.rows(), A1.cols());
        const Matrix C2 = k == 2 ? red.C[1].to_dense() : Matrix::Zero(C1.rows(), C1.cols());
        X22 = solve_k2(A1, C1, A2, C2, red.F, opts.pencil_tol);
        break;
    }
    default:
        X22 = solve_kge3(red.A, red.C, red.F, opts, &rep);
        break;
    }
    return recover(X22, can, opts.enforce_compatibility ? opts.recover_tol : 0.0, &rep.x11_disagreement);
}

Matrix banded_left(const BandedOp& A, const Matrix& X)
{
    Matrix R = Matrix::Zero(static_cast<Eigen::Index>(A.rows()), X.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = A.row_begin(i); j < A.row_end(i); ++j) {
            const cplx a = A(i, j);
            if (a != cplx(0.0)) R.row(static_cast<Eigen::Index>(i)) += a * X.row(static_cast<Eigen::Index>(j));
        }
    return R;
}

Matrix banded_right(const Matrix& X, const BandedOp& C)
{
    Matrix R = Matrix::Zero(X.rows(), static_cast<Eigen::Index>(C.rows()));
    for (std::size_t i = 0; i < C.rows(); ++i)
        for (std::size_t j = C.row_begin(i); j < C.row_end(i); ++j) {
            const cplx c = C(i, j);
            if (c != cplx(0.0)) R.col(static_cast<Eigen::Index>(i)) += c * X.col(static_cast<Eigen::Index>(j));
        }
    return R;
}

Matrix apply_operator(const ConstrainedSylvester& S, const Matrix& X)
{
    if (S.A.empty()) throw SizeError("apply_operator: no terms");
    Matrix R = Matrix::Zero(static_cast<Eigen::Index>(S.A[0].rows()), static_cast<Eigen::Index>(S.C[0].rows()));
    for (std::size_t j = 0; j < S.terms(); ++j) R += banded_right(banded_left(S.A[j], X), S.C[j]);
    return R;
}

}  // namespace spectra
