#include "spectra/ultraspherical.hpp"

#include <cmath>
#include <string>

#include "spectra/error.hpp"

namespace spectra {

BandedOp diff_op(int lambda, std::size_t n, Interval interval)
{
    if (lambda < 0) throw SizeError("diff_op: negative order");
    if (lambda == 0) return BandedOp::identity(n);
    const auto lam = static_cast<std::size_t>(lambda);
    // 2^{lambda-1} (lambda-1)! times the chain-rule factor.
    double factor = std::pow(2.0, lambda - 1) * std::tgamma(static_cast<double>(lambda));
    factor *= std::pow(interval.scale(), lambda);
    BandedOp D(n, n, 0, lam);
    for (std::size_t k = 0; k + lam < n; ++k) D.ref(k, k + lam) = factor * static_cast<double>(k + lam);
    return D;
}

BandedOp conv_op(int lambda, std::size_t n)
{
    if (lambda < 0) throw SizeError("conv_op: negative level");
    BandedOp S(n, n, 0, 2);
    const double lam = lambda;
    for (std::size_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k);
        if (lambda == 0) {
            S.ref(k, k) = (k == 0) ? 1.0 : 0.5;
            if (k + 2 < n) S.ref(k, k + 2) = -0.5;
        } else {
            S.ref(k, k) = (k == 0) ? 1.0 : lam / (lam + kk);
            if (k + 2 < n) S.ref(k, k + 2) = -lam / (lam + kk + 2.0);
        }
    }
    return S;
}

BandedOp conversion_chain(int from, int to, std::size_t n)
{
    BandedOp S = BandedOp::identity(n);
    for (int l = from; l < to; ++l) S = conv_op(l, n) * S;
    return S;
}

BandedOp mult_op0(const Cheb1& a, std::size_t n)
{
    const CVector& c = a.coeffs();
    const std::size_t m = c.size() - 1;
    auto coeff = [&](std::size_t k) { return k <= m ? c[k] : cplx(0.0); };
    BandedOp M(n, n, m, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = M.row_begin(i); j < M.row_end(i); ++j) {
            const std::size_t d = i > j ? i - j : j - i;
            const cplx toeplitz = (d == 0) ? 2.0 * c[0] : coeff(d);
            const cplx hankel = (i >= 1) ? coeff(i + j) : cplx(0.0);
            M.ref(i, j) = 0.5 * (toeplitz + hankel);
        }
    }
    return M;
}

BandedOp mult_opL(const Cheb1& a, int lambda, std::size_t n)
{
    if (lambda < 1) throw SizeError("mult_opL needs lambda >= 1");
    const CVector c = to_ultraspherical(a.coeffs(), lambda);
    const std::size_t m = c.size() - 1;
    const std::size_t N = n + m + 2;
    const double lam = lambda;

    // Multiplication by x in the C^(lambda) basis:
    // x C_k = ((k+1) C_{k+1} + (k+2 lambda-1) C_{k-1}) / (2 (k + lambda)).
    BandedOp X(N, N, 1, 1);
    for (std::size_t k = 0; k < N; ++k) {
        const double kk = static_cast<double>(k);
        if (k + 1 < N) X.ref(k + 1, k) = (kk + 1.0) / (2.0 * (kk + lam));
        if (k >= 1) X.ref(k - 1, k) = (kk + 2.0 * lam - 1.0) / (2.0 * (kk + lam));
    }

    // P_k = multiplication by C_k^(lambda)(x):
    // P_{k+1} = (2 (k + lambda) X P_k - (k + 2 lambda - 1) P_{k-1}) / (k + 1).
    BandedOp prev = BandedOp::identity(N);
    BandedOp result = prev.scaled(c[0]);
    if (m >= 1) {
        BandedOp cur = X.scaled(2.0 * lam);
        result = result + cur.scaled(c[1]);
        for (std::size_t k = 1; k < m; ++k) {
            const double kk = static_cast<double>(k);
            BandedOp next = (X * cur).scaled(2.0 * (kk + lam) / (kk + 1.0)) +
                            prev.scaled(-(kk + 2.0 * lam - 1.0) / (kk + 1.0));
            result = result + next.scaled(c[k + 1]);
            prev = std::move(cur);
            cur = std::move(next);
        }
    }
    return result.truncated(n, n).trimmed();
}

BandedOp mult_op(const Cheb1& a, int lambda, std::size_t n)
{
    return lambda == 0 ? mult_op0(a, n) : mult_opL(a, lambda, n);
}

CVector to_ultraspherical(std::span<const cplx> cheb, int lambda)
{
    CVector v(cheb.begin(), cheb.end());
    const std::size_t n = v.size();
    for (int l = 0; l < lambda; ++l) v = conv_op(l, n).apply(v);
    return v;
}

cplx ultraspherical_eval(std::span<const cplx> coeffs, int lambda, double t) noexcept
{
    if (lambda == 0) return clenshaw_unit(coeffs, t);
    const double lam = lambda;
    double pm1 = 0.0;
    double p = 1.0;
    cplx s = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        s += coeffs[k] * p;
        const double kk = static_cast<double>(k);
        const double next = (2.0 * (kk + lam) * t * p - (kk + 2.0 * lam - 1.0) * pm1) / (kk + 1.0);
        pm1 = p;
        p = next;
    }
    return s;
}

// ---------------------------------------------------------------------------
// LinearODO

LinearODO::LinearODO(std::map<int, Cheb1> terms, Interval interval) : terms_(std::move(terms)), interval_(interval)
{
    for (const auto& [order, a] : terms_) {
        if (order < 0) throw SizeError("LinearODO: negative derivative order");
        if (!(a.interval() == interval_)) throw DomainError("LinearODO: coefficient interval mismatch");
    }
}

void LinearODO::add_term(int order, const Cheb1& a)
{
    if (order < 0) throw SizeError("LinearODO: negative derivative order");
    auto it = terms_.find(order);
    if (it == terms_.end()) {
        terms_.emplace(order, Cheb1(a.coeffs(), interval_));
        return;
    }
    CVector sum = it->second.coeffs();
    if (sum.size() < a.size()) sum.resize(a.size(), cplx(0.0));
    for (std::size_t k = 0; k < a.size(); ++k) sum[k] += a.coeffs()[k];
    it->second = Cheb1(std::move(sum), interval_);
}

int LinearODO::order() const noexcept
{
    int N = -1;
    for (const auto& [order, a] : terms_) {
        if (!a.is_zero()) N = std::max(N, order);
    }
    return N;
}

Cheb1 LinearODO::apply(const Cheb1& u) const
{
    std::size_t len = 1;
    for (const auto& [order, a] : terms_) len = std::max(len, a.size() + u.size());
    CVector out(len, cplx(0.0));
    for (const auto& [order, a] : terms_) {
        if (a.is_zero()) continue;
        CVector du = differentiate(u, order).coeffs();
        du.resize(len, cplx(0.0));
        const CVector prod = mult_op0(a, len).apply(du);
        for (std::size_t k = 0; k < len; ++k) out[k] += prod[k];
    }
    return Cheb1(std::move(out), interval_);
}

BandedOp discretize_odo(const LinearODO& L, std::size_t n, int output_order)
{
    const int N = L.order();
    if (N < 0) throw IllPosedError("discretize_odo: operator is identically zero");
    const int out = output_order < 0 ? N : output_order;
    if (out < N) throw SizeError("discretize_odo: output basis index below the operator order");
    const std::size_t m = n + 2 * static_cast<std::size_t>(out);

    BandedOp total(m, m, 0, 0);
    for (const auto& [lambda, a] : L.terms()) {
        if (a.is_zero()) continue;
        BandedOp term = diff_op(lambda, m, L.interval());
        if (a.size() == 1) {
            term = term.scaled(a.coeffs()[0]);
        } else {
            term = mult_op(a, lambda, m) * term;
        }
        if (lambda < out) term = conversion_chain(lambda, out, m) * term;
        total = total + term;
    }
    return total.truncated(n, n).trimmed();
}

CVector point_functional(double x0, int derivative, std::size_t n, Interval interval)
{
    if (!interval.contains(x0)) throw DomainError("point_functional: point outside the interval");
    const double t = std::clamp(interval.to_unit(x0), -1.0, 1.0);
    const auto vals = cheb_basis_derivatives(t, n, derivative);
    const double s = std::pow(interval.scale(), derivative);
    CVector row(n);
    for (std::size_t j = 0; j < n; ++j) row[j] = vals[j] * s;
    return row;
}

AlmostBandedSystem assemble_system(const BandedOp& L, const BoundaryRows& B, std::span<const cplx> c,
                                   const Cheb1& rhs, std::size_t n, int output_order)
{
    const auto K = static_cast<std::size_t>(B.rows());
    if (K > n) throw SizeError("assemble_system: " + std::to_string(K) + " constraints exceed size " + std::to_string(n));
    if (c.size() != K) throw SizeError("assemble_system: constraint values do not match constraint rows");
    if (static_cast<std::size_t>(B.cols()) < n || L.rows() < n - K || L.cols() < n) {
        throw SizeError("assemble_system: operator or constraint rows too small");
    }
    const std::size_t lower = L.lower() + K;
    const std::size_t upper = L.upper() > K ? L.upper() - K : 0;
    AlmostBandedSystem sys{AlmostBanded(n, K, lower, upper), CVector(n, cplx(0.0))};
    for (std::size_t r = 0; r < K; ++r) {
        for (std::size_t j = 0; j < n; ++j) sys.matrix.border(r, j) = B(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
        sys.rhs[r] = c[r];
    }
    for (std::size_t i = 0; i + K < n; ++i) {
        for (std::size_t j = L.row_begin(i); j < std::min(n, L.row_end(i)); ++j) {
            const cplx v = L(i, j);
            if (v != cplx(0.0)) sys.matrix.band(i + K, j) = v;
        }
    }
    CVector f = rhs.coeffs();
    f.resize(std::max(f.size(), n + 2 * static_cast<std::size_t>(std::max(output_order, 0))), cplx(0.0));
    const CVector fc = to_ultraspherical(f, output_order);
    for (std::size_t i = 0; i + K < n; ++i) sys.rhs[i + K] = fc[i];
    return sys;
}

}  // namespace spectra
