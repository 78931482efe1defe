#include "spectra/cheb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "spectra/error.hpp"

namespace spectra {

namespace {

constexpr std::size_t kDirectTransformLimit = 64;

// FFTW's planner is not reentrant.
std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

void dct1_direct(std::span<double> data)
{
    const std::size_t n = data.size();
    std::vector<double> out(n, 0.0);
    const double h = std::numbers::pi / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        double s = data[0] + ((j % 2 == 0) ? data[n - 1] : -data[n - 1]);
        for (std::size_t k = 1; k + 1 < n; ++k) {
            // Reduce j*k modulo 2(n-1) so the cosine argument stays small.
            const std::size_t jk = (j * k) % (2 * (n - 1));
            s += 2.0 * data[k] * std::cos(h * static_cast<double>(jk));
        }
        out[j] = s;
    }
    std::copy(out.begin(), out.end(), data.begin());
}

void dct1_fftw(std::span<double> data)
{
    const int n = static_cast<int>(data.size());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_r2r_1d(n, data.data(), data.data(), FFTW_REDFT00, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

// Complex DCT-I: transform real and imaginary parts independently.
void dct1_complex(CVector& v)
{
    const std::size_t n = v.size();
    std::vector<double> re(n);
    std::vector<double> im(n);
    bool has_imag = false;
    for (std::size_t k = 0; k < n; ++k) {
        re[k] = v[k].real();
        im[k] = v[k].imag();
        has_imag = has_imag || im[k] != 0.0;
    }
    dct1(re);
    if (has_imag) dct1(im);
    for (std::size_t k = 0; k < n; ++k) v[k] = cplx(re[k], has_imag ? im[k] : 0.0);
}

CVector values_to_coeffs_raw(CVector v)
{
    const std::size_t n = v.size();
    if (n == 1) return v;
    dct1_complex(v);
    const double s = 1.0 / static_cast<double>(n - 1);
    for (auto& c : v) c *= s;
    v.front() *= 0.5;
    v.back() *= 0.5;
    return v;
}

CVector coeffs_to_values_raw(CVector c)
{
    const std::size_t n = c.size();
    if (n == 1) return c;
    for (std::size_t j = 1; j + 1 < n; ++j) c[j] *= 0.5;
    dct1_complex(c);
    return c;
}

void check_finite(cplx v, double x)
{
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw EvaluationError("function returned a non-finite value at x = " + std::to_string(x));
    }
}

// Transform a grid of values (rows ~ y points, cols ~ x points) into bivariate coefficients.
Matrix grid_values_to_coeffs(const Matrix& V)
{
    Matrix X(V.rows(), V.cols());
    CVector buf;
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        buf.assign(V.col(j).data(), V.col(j).data() + V.rows());
        buf = values_to_coeffs_raw(std::move(buf));
        for (Eigen::Index i = 0; i < V.rows(); ++i) X(i, j) = buf[static_cast<std::size_t>(i)];
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        buf.resize(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index j = 0; j < X.cols(); ++j) buf[static_cast<std::size_t>(j)] = X(i, j);
        buf = values_to_coeffs_raw(std::move(buf));
        for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = buf[static_cast<std::size_t>(j)];
    }
    return X;
}

}  // namespace

// ---------------------------------------------------------------------------
// Interval / Cheb1 / Cheb2

Interval::Interval(double a, double b) : a_(a), b_(b)
{
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
        throw DomainError("interval requires finite a < b, got [" + std::to_string(a) + ", " +
                          std::to_string(b) + "]");
    }
}

bool Interval::contains(double x) const noexcept
{
    const double slack = 10.0 * std::numeric_limits<double>::epsilon() * (b_ - a_);
    return x >= a_ - slack && x <= b_ + slack;
}

Cheb1::Cheb1() : coeffs_{cplx(0.0)} {}

Cheb1::Cheb1(CVector coeffs, Interval interval) : coeffs_(std::move(coeffs)), interval_(interval)
{
    if (coeffs_.empty()) throw EmptyInputError("Cheb1 needs at least one coefficient");
}

double Cheb1::max_abs() const noexcept
{
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

cplx Cheb1::operator()(double x) const { return clenshaw_eval(*this, x); }

Cheb2::Cheb2() : X_(Matrix::Zero(1, 1)) {}

Cheb2::Cheb2(Matrix coeffs, Interval xinterval, Interval yinterval)
    : X_(std::move(coeffs)), xint_(xinterval), yint_(yinterval)
{
    if (X_.rows() < 1 || X_.cols() < 1) throw EmptyInputError("Cheb2 needs a nonempty coefficient matrix");
}

double Cheb2::max_abs() const noexcept { return X_.cwiseAbs().maxCoeff(); }

cplx Cheb2::operator()(double x, double y) const { return eval2(*this, x, y); }

// ---------------------------------------------------------------------------
// Evaluation

cplx clenshaw_unit(std::span<const cplx> coeffs, double t) noexcept
{
    const std::size_t n = coeffs.size();
    if (n == 0) return 0.0;
    if (n == 1) return coeffs[0];
    cplx b1 = 0.0;
    cplx b2 = 0.0;
    for (std::size_t k = n - 1; k >= 1; --k) {
        const cplx b0 = coeffs[k] + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    return coeffs[0] + t * b1 - b2;
}

cplx clenshaw_eval(const Cheb1& f, double x)
{
    if (!f.interval().contains(x)) {
        throw DomainError("point " + std::to_string(x) + " outside [" + std::to_string(f.interval().a()) +
                          ", " + std::to_string(f.interval().b()) + "]");
    }
    const double t = std::clamp(f.interval().to_unit(x), -1.0, 1.0);
    return clenshaw_unit(f.coeffs(), t);
}

cplx eval2(const Cheb2& S, double x, double y)
{
    if (!S.xinterval().contains(x) || !S.yinterval().contains(y)) {
        throw DomainError("point (" + std::to_string(x) + ", " + std::to_string(y) + ") outside the rectangle");
    }
    const double tx = std::clamp(S.xinterval().to_unit(x), -1.0, 1.0);
    const double ty = std::clamp(S.yinterval().to_unit(y), -1.0, 1.0);
    const Matrix& X = S.coeffs();
    CVector row(static_cast<std::size_t>(X.cols()));
    CVector inner(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
        inner[static_cast<std::size_t>(i)] = clenshaw_unit(row, tx);
    }
    return clenshaw_unit(inner, ty);
}

// ---------------------------------------------------------------------------
// Transforms

void dct1(std::span<double> data)
{
    if (data.size() < 2) return;
    if (data.size() < kDirectTransformLimit) {
        dct1_direct(data);
    } else {
        dct1_fftw(data);
    }
}

std::vector<double> cheb_points(std::size_t n)
{
    if (n == 0) throw EmptyInputError("cheb_points needs n >= 1");
    if (n == 1) return {0.0};
    std::vector<double> pts(n);
    const double m = static_cast<double>(n - 1);
    // sin form keeps the points exactly symmetric.
    for (std::size_t k = 0; k < n; ++k) {
        pts[k] = std::sin(std::numbers::pi * (m - 2.0 * static_cast<double>(k)) / (2.0 * m));
    }
    return pts;
}

Cheb1 vals_to_coeffs(std::span<const cplx> values, Interval interval)
{
    if (values.empty()) throw EmptyInputError("vals_to_coeffs needs at least one value");
    return Cheb1(values_to_coeffs_raw(CVector(values.begin(), values.end())), interval);
}

CVector coeffs_to_vals(const Cheb1& f, std::size_t n, bool allow_truncation)
{
    if (n == 0) throw EmptyInputError("coeffs_to_vals needs n >= 1");
    if (n < f.size() && !allow_truncation) {
        throw SizeError("coeffs_to_vals: " + std::to_string(f.size()) + " coefficients do not fit in " +
                        std::to_string(n) + " points");
    }
    CVector c(n, cplx(0.0));
    std::copy_n(f.coeffs().begin(), std::min(n, f.size()), c.begin());
    return coeffs_to_values_raw(std::move(c));
}

// ---------------------------------------------------------------------------
// Tail test

std::size_t tail_window(std::size_t n) noexcept
{
    const std::size_t w = std::max<std::size_t>(3, (n + 31) / 32);
    return n == 0 ? 0 : std::min(w, n - 1);
}

bool tail_small(std::span<const double> magnitudes, double tol, double scale) noexcept
{
    if (scale == 0.0) return true;
    const std::size_t n = magnitudes.size();
    const std::size_t w = tail_window(n);
    for (std::size_t k = n - w; k < n; ++k) {
        if (magnitudes[k] > tol * scale) return false;
    }
    return true;
}

bool tail_resolved(std::span<const cplx> coeffs, double tol) noexcept
{
    std::vector<double> mags(coeffs.size());
    double scale = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        mags[k] = std::abs(coeffs[k]);
        scale = std::max(scale, mags[k]);
    }
    return tail_small(mags, tol, scale);
}

CVector trim_tail(std::span<const cplx> coeffs, double tol)
{
    if (coeffs.empty()) return {cplx(0.0)};
    double scale = 0.0;
    for (const auto& c : coeffs) scale = std::max(scale, std::abs(c));
    std::size_t keep = coeffs.size();
    while (keep > 1 && std::abs(coeffs[keep - 1]) <= tol * scale) --keep;
    return CVector(coeffs.begin(), coeffs.begin() + static_cast<std::ptrdiff_t>(keep));
}

Matrix trim_tail2(const Matrix& X, double tol)
{
    const double thresh = tol * X.cwiseAbs().maxCoeff();
    Eigen::Index rows = X.rows();
    Eigen::Index cols = X.cols();
    while (rows > 1 && X.row(rows - 1).cwiseAbs().maxCoeff() <= thresh) --rows;
    while (cols > 1 && X.col(cols - 1).head(rows).cwiseAbs().maxCoeff() <= thresh) --cols;
    return X.topLeftCorner(rows, cols);
}

// ---------------------------------------------------------------------------
// Adaptive construction

Cheb1 interp1_adaptive(const Function1& f, Interval interval, const ApproxOptions& opts)
{
    for (std::size_t m = 8; m <= opts.max_degree; m *= 2) {
        const auto pts = cheb_points(m + 1);
        CVector vals(m + 1);
        for (std::size_t k = 0; k <= m; ++k) {
            const double x = interval.from_unit(pts[k]);
            vals[k] = f(x);
            check_finite(vals[k], x);
        }
        CVector c = values_to_coeffs_raw(std::move(vals));
        if (tail_resolved(c, opts.tol)) return Cheb1(trim_tail(c, opts.tol), interval);
    }
    throw UnresolvedError("function not resolved below the degree cap " + std::to_string(opts.max_degree),
                          opts.max_degree);
}

Cheb2 interp2_adaptive(const Function2& f, Interval xinterval, Interval yinterval, const ApproxOptions& opts)
{
    std::size_t mx = 8;
    std::size_t my = 8;
    while (true) {
        if (mx > opts.max_degree || my > opts.max_degree) {
            throw UnresolvedError("bivariate function not resolved below the degree cap " +
                                      std::to_string(opts.max_degree),
                                  opts.max_degree);
        }
        const auto px = cheb_points(mx + 1);
        const auto py = cheb_points(my + 1);
        Matrix V(static_cast<Eigen::Index>(my + 1), static_cast<Eigen::Index>(mx + 1));
        for (std::size_t i = 0; i <= my; ++i) {
            const double y = yinterval.from_unit(py[i]);
            for (std::size_t j = 0; j <= mx; ++j) {
                const double x = xinterval.from_unit(px[j]);
                const cplx v = f(x, y);
                check_finite(v, x);
                V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            }
        }
        const Matrix X = grid_values_to_coeffs(V);
        const Eigen::MatrixXd A = X.cwiseAbs();
        const double scale = A.maxCoeff();
        std::vector<double> colmax(static_cast<std::size_t>(A.cols()));
        std::vector<double> rowmax(static_cast<std::size_t>(A.rows()));
        for (Eigen::Index j = 0; j < A.cols(); ++j) colmax[static_cast<std::size_t>(j)] = A.col(j).maxCoeff();
        for (Eigen::Index i = 0; i < A.rows(); ++i) rowmax[static_cast<std::size_t>(i)] = A.row(i).maxCoeff();
        const bool x_ok = tail_small(colmax, opts.tol, scale);
        const bool y_ok = tail_small(rowmax, opts.tol, scale);
        if (x_ok && y_ok) return Cheb2(trim_tail2(X, opts.tol), xinterval, yinterval);
        if (!x_ok) mx *= 2;
        if (!y_ok) my *= 2;
    }
}

// ---------------------------------------------------------------------------
// Calculus helpers

CVector cheb_derivative(std::span<const cplx> coeffs)
{
    const std::size_t n = coeffs.size();
    if (n <= 1) return {cplx(0.0)};
    CVector d(n + 1, cplx(0.0));
    for (std::size_t k = n - 1; k-- > 0;) {
        d[k] = d[k + 2] + 2.0 * static_cast<double>(k + 1) * coeffs[k + 1];
    }
    d[0] *= 0.5;
    d.resize(n - 1);
    return d;
}

Cheb1 differentiate(const Cheb1& f, int order)
{
    CVector c = f.coeffs();
    const double s = f.interval().scale();
    for (int k = 0; k < order; ++k) {
        c = cheb_derivative(c);
        for (auto& v : c) v *= s;
    }
    return Cheb1(std::move(c), f.interval());
}

std::vector<double> cheb_basis_derivatives(double t, std::size_t n, int d)
{
    // T^{(m)}_{j+1} = 2 t T^{(m)}_j + 2 m T^{(m-1)}_j - T^{(m)}_{j-1}
    std::vector<std::vector<double>> T(static_cast<std::size_t>(d) + 1, std::vector<double>(n, 0.0));
    for (int m = 0; m <= d; ++m) {
        auto& cur = T[static_cast<std::size_t>(m)];
        if (n > 0) cur[0] = (m == 0) ? 1.0 : 0.0;
        if (n > 1) cur[1] = (m == 0) ? t : (m == 1 ? 1.0 : 0.0);
        for (std::size_t j = 1; j + 1 < n; ++j) {
            double v = 2.0 * t * cur[j] - cur[j - 1];
            if (m > 0) v += 2.0 * m * T[static_cast<std::size_t>(m - 1)][j];
            cur[j + 1] = v;
        }
    }
    return T[static_cast<std::size_t>(d)];
}

}  // namespace spectra
