#include "spectra/separable.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "spectra/error.hpp"

namespace spectra {

namespace {

struct Shape {
    int Ny, Nx;
    Eigen::Index py, px;
};

Shape shape_of(const CoeffArray& C)
{
    Shape s{C.Ny(), C.Nx(), 1, 1};
    for (const auto& [k, c] : C.entries()) {
        s.py = std::max(s.py, c.ny());
        s.px = std::max(s.px, c.nx());
    }
    return s;
}

// Drop coefficients that vanish relative to the largest one in the same operator.
LinearODO clean(const std::vector<CVector>& coeffs, Interval interval)
{
    double top = 0.0;
    for (const auto& c : coeffs)
        for (const auto& v : c) top = std::max(top, std::abs(v));
    LinearODO L(interval);
    for (std::size_t order = 0; order < coeffs.size(); ++order) {
        double m = 0.0;
        for (const auto& v : coeffs[order]) m = std::max(m, std::abs(v));
        if (m <= 1e-14 * top) continue;
        L.add_term(static_cast<int>(order), Cheb1(trim_tail(coeffs[order], 1e-14), interval));
    }
    return L;
}

}  // namespace

Matrix unfolding_matrix(const CoeffArray& C)
{
    const Shape s = shape_of(C);
    Matrix M = Matrix::Zero((s.Ny + 1) * s.py, (s.Nx + 1) * s.px);
    for (const auto& [k, c] : C.entries()) {
        const Matrix& X = c.coeffs();
        M.block(k.first * s.py, k.second * s.px, X.rows(), X.cols()) = X;
    }
    return M;
}

SeparableRep splitting_rank(const CoeffArray& C, double tau)
{
    if (C.empty()) throw IllPosedError("splitting_rank: the operator is zero");
    const Shape s = shape_of(C);
    const Matrix M = unfolding_matrix(C);
    const Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();

    SeparableRep rep;
    rep.xinterval = C.xinterval();
    rep.yinterval = C.yinterval();
    const double smax = sv.size() ? sv(0) : 0.0;
    if (smax == 0.0) throw IllPosedError("splitting_rank: the operator is zero");
    double discarded = 0.0;
    for (Eigen::Index r = 0; r < sv.size(); ++r) {
        rep.singular_values.push_back(sv(r));
        if (sv(r) > tau * smax) {
            ++rep.k;
        } else {
            discarded += sv(r) * sv(r);
        }
    }
    rep.discarded = std::sqrt(discarded);

    const Matrix& U = svd.matrixU();
    const Matrix& V = svd.matrixV();
    for (int r = 0; r < rep.k; ++r) {
        const double w = std::sqrt(sv(r));
        std::vector<CVector> ycoef(static_cast<std::size_t>(s.Ny + 1), CVector(static_cast<std::size_t>(s.py)));
        std::vector<CVector> xcoef(static_cast<std::size_t>(s.Nx + 1), CVector(static_cast<std::size_t>(s.px)));
        for (int i = 0; i <= s.Ny; ++i)
            for (Eigen::Index a = 0; a < s.py; ++a) ycoef[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = w * U(i * s.py + a, r);
        for (int j = 0; j <= s.Nx; ++j)
            for (Eigen::Index b = 0; b < s.px; ++b)
                xcoef[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)] = w * std::conj(V(j * s.px + b, r));
        SeparableTerm t{clean(ycoef, C.yinterval()), clean(xcoef, C.xinterval())};
        rep.Ny = std::max(rep.Ny, t.y.order());
        rep.Nx = std::max(rep.Nx, t.x.order());
        rep.terms.push_back(std::move(t));
    }
    return rep;
}

CoeffArray reconstruct_symbol(const SeparableRep& S)
{
    std::map<CoeffArray::Key, Matrix> acc;
    for (const auto& t : S.terms) {
        for (const auto& [i, ay] : t.y.terms()) {
            for (const auto& [j, ax] : t.x.terms()) {
                const ColVector cy = Eigen::Map<const ColVector>(ay.coeffs().data(), static_cast<Eigen::Index>(ay.size()));
                const ColVector cx = Eigen::Map<const ColVector>(ax.coeffs().data(), static_cast<Eigen::Index>(ax.size()));
                const Matrix outer = cy * cx.transpose();
                auto it = acc.find({i, j});
                if (it == acc.end()) {
                    acc.emplace(CoeffArray::Key{i, j}, outer);
                } else {
                    Matrix& m = it->second;
                    Matrix sum = Matrix::Zero(std::max(m.rows(), outer.rows()), std::max(m.cols(), outer.cols()));
                    sum.topLeftCorner(m.rows(), m.cols()) += m;
                    sum.topLeftCorner(outer.rows(), outer.cols()) += outer;
                    m = std::move(sum);
                }
            }
        }
    }
    CoeffArray out(S.xinterval, S.yinterval);
    for (auto& [k, m] : acc) out.set(k.first, k.second, Cheb2(std::move(m), S.xinterval, S.yinterval));
    return out;
}

}  // namespace spectra
