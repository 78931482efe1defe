#include "spectra/pde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <set>
#include <thread>

#include "spectra/error.hpp"
#include "spectra/ultraspherical.hpp"

namespace spectra {

namespace {

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

bool normal_is_x(Edge e) { return e == Edge::Left || e == Edge::Right; }

double max_abs(const Matrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

std::size_t next_size(std::size_t n) { return 2 * (n - 1) + 1; }

std::string size_context(std::size_t nx, std::size_t ny)
{
    return " [at n_x=" + std::to_string(nx) + ", n_y=" + std::to_string(ny) + "]";
}

// Rethrow with the discretization size appended, keeping the error type.
[[noreturn]] void rethrow_with_context(std::size_t nx, std::size_t ny)
{
    const std::string ctx = size_context(nx, ny);
    try {
        throw;
    } catch (const CompatibilityError& e) {
        throw CompatibilityError(e.what() + ctx, e.defect());
    } catch (const SingularSystemError& e) {
        throw SingularSystemError(e.what() + ctx, e.column());
    } catch (const NonUniqueSolutionError& e) {
        throw NonUniqueSolutionError(e.what() + ctx);
    } catch (const DependentConstraintsError& e) {
        throw DependentConstraintsError(e.what() + ctx);
    } catch (const IllPosedError& e) {
        throw IllPosedError(e.what() + ctx);
    } catch (const ResourceError& e) {
        throw ResourceError(e.what() + ctx);
    } catch (const SizeError& e) {
        throw SizeError(e.what() + ctx);
    }
}

// Constraint rows of one variable with the metadata needed for the parity split.
struct AxisRows {
    Matrix B;     // K x n
    Matrix data;  // K x m (tangential coefficients)
    std::vector<const BcData*> source;
};

AxisRows discretize_axis(const std::vector<BcData>& bcs, bool x_axis, std::size_t n, std::size_t m, Interval normal)
{
    AxisRows a;
    for (const auto& bc : bcs)
        if (normal_is_x(bc.edge) == x_axis) a.source.push_back(&bc);
    const auto K = static_cast<Eigen::Index>(a.source.size());
    a.B = Matrix::Zero(K, static_cast<Eigen::Index>(n));
    a.data = Matrix::Zero(K, static_cast<Eigen::Index>(m));
    for (Eigen::Index r = 0; r < K; ++r) {
        const BcData& bc = *a.source[static_cast<std::size_t>(r)];
        const bool high = bc.edge == Edge::Right || bc.edge == Edge::Up;
        const double pos = high ? normal.b() : normal.a();
        for (const auto& [d, w] : bc.weights) {
            const CVector row = point_functional(pos, d, n, normal);
            for (std::size_t j = 0; j < n; ++j) a.B(r, static_cast<Eigen::Index>(j)) += w * row[j];
        }
        const CVector& c = bc.data.coeffs();
        for (std::size_t j = 0; j < std::min(m, c.size()); ++j) a.data(r, static_cast<Eigen::Index>(j)) = c[j];
    }
    return a;
}

// One parity class (or the whole index range) of a variable.
struct AxisClass {
    std::vector<std::size_t> cols;  // unknown indices
    std::vector<std::size_t> rows;  // equation rows of the full operator
    Matrix B;                       // constraints restricted to cols
    Matrix data;                    // K_q x m, full tangential length
};

std::vector<AxisClass> axis_classes(const AxisRows& a, const AxisParity& par, std::size_t n)
{
    std::vector<AxisClass> out;
    if (!par.eligible) {
        AxisClass c;
        for (std::size_t k = 0; k < n; ++k) {
            c.cols.push_back(k);
            c.rows.push_back(k);
        }
        c.B = a.B;
        c.data = a.data;
        out.push_back(std::move(c));
        return out;
    }
    // Pair low/high edge conditions by derivative order.
    std::map<int, std::pair<Eigen::Index, Eigen::Index>> pairs;
    for (Eigen::Index r = 0; r < a.B.rows(); ++r) {
        const BcData& bc = *a.source[static_cast<std::size_t>(r)];
        const int d = bc.weights.begin()->first;
        const bool high = bc.edge == Edge::Right || bc.edge == Edge::Up;
        auto it = pairs.try_emplace(d, -1, -1).first;
        (high ? it->second.second : it->second.first) = r;
    }
    for (int q = 0; q < 2; ++q) {
        AxisClass c;
        for (std::size_t k = static_cast<std::size_t>(q); k < n; k += 2) c.cols.push_back(k);
        const std::size_t rp = static_cast<std::size_t>((q + par.parity) % 2);
        for (std::size_t i = 0; i < c.cols.size(); ++i) c.rows.push_back(rp + 2 * i);
        const auto K = static_cast<Eigen::Index>(pairs.size());
        c.B = Matrix::Zero(K, static_cast<Eigen::Index>(c.cols.size()));
        c.data = Matrix::Zero(K, a.data.cols());
        Eigen::Index r = 0;
        for (const auto& [d, lh] : pairs) {
            const auto [lo, hi] = lh;
            const cplx wl = a.source[static_cast<std::size_t>(lo)]->weights.begin()->second;
            const cplx wh = a.source[static_cast<std::size_t>(hi)]->weights.begin()->second;
            const double sigma = ((d + q) % 2 == 0) ? 1.0 : -1.0;
            const Matrix row = 0.5 * (a.B.row(hi) / wh + sigma * a.B.row(lo) / wl);
            for (std::size_t b = 0; b < c.cols.size(); ++b) c.B(r, static_cast<Eigen::Index>(b)) = row(0, static_cast<Eigen::Index>(c.cols[b]));
            c.data.row(r) = 0.5 * (a.data.row(hi) / wh + sigma * a.data.row(lo) / wl);
            ++r;
        }
        out.push_back(std::move(c));
    }
    return out;
}

BandedOp sub_operator(const BandedOp& A, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols)
{
    const std::size_t s = cols.size();
    BandedOp out(s, s, A.lower() + 1, A.upper() + 1);
    for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = out.row_begin(a); b < out.row_end(a); ++b) out.ref(a, b) = A(rows[a], cols[b]);
    return out.trimmed();
}

Matrix select(const Matrix& M, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols)
{
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b)
            out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                M(static_cast<Eigen::Index>(rows[a]), static_cast<Eigen::Index>(cols[b]));
    return out;
}

Matrix select_cols(const Matrix& M, const std::vector<std::size_t>& cols)
{
    Matrix out(M.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t b = 0; b < cols.size(); ++b) out.col(static_cast<Eigen::Index>(b)) = M.col(static_cast<Eigen::Index>(cols[b]));
    return out;
}

unsigned worker_count(unsigned requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SPECTRA_PDE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Everything that does not depend on the discretization size.
struct Prepared {
    SeparableRep rep;
    Matrix rhs;
    std::vector<BcData> bcs;
    ParityPlan plan;
    std::size_t data_nx = 1;  // longest data series along x (down/up edges)
    std::size_t data_ny = 1;
};

Prepared prepare(const PdeProblem& p, const PdeOptions& opts)
{
    Prepared pr;
    pr.rep = splitting_rank(p.op, opts.rank_tol);
    if (p.rhs) {
        // Data are always resolved to machine precision, independent of the solution tolerance.
        ApproxOptions ao;
        ao.max_degree = std::max<std::size_t>(opts.max_n, 8);
        pr.rhs = interp2_adaptive(p.rhs, p.xinterval, p.yinterval, ao).coeffs();
    } else {
        pr.rhs = Matrix::Zero(1, 1);
    }
    pr.bcs = resolve_bc_data(p.bcs, p.xinterval, p.yinterval);
    for (const auto& bc : pr.bcs) {
        if (normal_is_x(bc.edge)) {
            pr.data_ny = std::max(pr.data_ny, bc.data.size());
        } else {
            pr.data_nx = std::max(pr.data_nx, bc.data.size());
        }
    }
    pr.plan = opts.parity ? parity_split(p.op, p.bcs) : ParityPlan{};
    return pr;
}

struct SubResult {
    Matrix X;
    double residual = 0.0;
    SylvesterReport report;
};

Matrix solve_prepared(const Prepared& pr, const PdeProblem& p, std::size_t nx, std::size_t ny, const PdeOptions& opts,
                      PdeDiagnostics* diag)
{
    const SeparableRep& rep = pr.rep;
    const std::size_t Ny = ny + 2, Nx = nx + 2;
    std::vector<BandedOp> Afull, Cfull;
    for (const auto& t : rep.terms) {
        Afull.push_back(discretize_odo(t.y, Ny, rep.Ny));
        Cfull.push_back(discretize_odo(t.x, Nx, rep.Nx));
    }
    const Matrix Ffull = convert_rhs(pr.rhs, rep.Ny, rep.Nx, Ny, Nx);
    const AxisRows ay = discretize_axis(pr.bcs, false, ny, nx, p.yinterval);
    const AxisRows ax = discretize_axis(pr.bcs, true, nx, ny, p.xinterval);
    const auto cy = axis_classes(ay, pr.plan.y, ny);
    const auto cx = axis_classes(ax, pr.plan.x, nx);

    // Residuals of all subproblems are measured against the data of the whole problem.
    const double scale = std::max({max_abs(Ffull), max_abs(ay.data), max_abs(ax.data)});

    std::vector<std::pair<const AxisClass*, const AxisClass*>> jobs;
    for (const auto& a : cy)
        for (const auto& b : cx) jobs.emplace_back(&a, &b);

    auto run = [&](const AxisClass& y, const AxisClass& x) {
        ConstrainedSylvester S;
        for (std::size_t j = 0; j < rep.terms.size(); ++j) {
            S.A.push_back(sub_operator(Afull[j], y.rows, y.cols));
            S.C.push_back(sub_operator(Cfull[j], x.rows, x.cols));
        }
        S.F = select(Ffull, y.rows, x.rows);
        S.By = y.B;
        S.H = select_cols(y.data, x.cols);
        S.Bx = x.B;
        S.G = select_cols(x.data, y.cols);
        SubResult r;
        r.X = solve_constrained(S, opts.sylvester, &r.report);
        r.residual = system_residual(S, r.X, scale);
        return r;
    };

    std::vector<SubResult> results(jobs.size());
    const unsigned workers = worker_count(opts.threads);
    if (workers > 1 && jobs.size() > 1) {
        std::vector<std::future<SubResult>> fut;
        for (const auto& [y, x] : jobs) fut.push_back(std::async(std::launch::async, run, std::cref(*y), std::cref(*x)));
        for (std::size_t i = 0; i < fut.size(); ++i) results[i] = fut[i].get();
    } else {
        for (std::size_t i = 0; i < jobs.size(); ++i) results[i] = run(*jobs[i].first, *jobs[i].second);
    }

    Matrix X = Matrix::Zero(static_cast<Eigen::Index>(ny), static_cast<Eigen::Index>(nx));
    double residual = 0.0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& [y, x] = jobs[i];
        for (std::size_t a = 0; a < y->cols.size(); ++a)
            for (std::size_t b = 0; b < x->cols.size(); ++b)
                X(static_cast<Eigen::Index>(y->cols[a]), static_cast<Eigen::Index>(x->cols[b])) =
                    results[i].X(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        residual = std::max(residual, results[i].residual);
    }
    if (diag) {
        diag->nx = nx;
        diag->ny = ny;
        diag->rank = rep.k;
        diag->singular_values = rep.singular_values;
        diag->path = results.front().report.path;
        diag->orientation = results.front().report.orientation;
        diag->subproblems = jobs.size();
        diag->steps.push_back({nx, ny, residual, false, false});
    }
    return X;
}

std::size_t start_size(std::size_t start, std::size_t needed)
{
    std::size_t n = std::max<std::size_t>(start, 2);
    while (n < needed) n = next_size(n);
    return n;
}

}  // namespace

PdeProblem make_problem(const std::string& op, const std::string& rhs, Interval xinterval, Interval yinterval,
                        const std::map<Edge, std::string>& bcs)
{
    PdeProblem p;
    p.xinterval = xinterval;
    p.yinterval = yinterval;
    p.op = extract_coeffs(parse_pdo(op), xinterval, yinterval);
    const PdoExpr f = parse_pdo(rhs.empty() ? "0" : rhs);
    if (f.has_u()) throw NonlinearityError("right-hand side must not contain u");
    if (!(is_constant_expr(f.root()) && f.root().kind == ExprNode::Kind::Const && f.root().value == cplx(0.0)))
        p.rhs = to_function(f);
    for (const auto& [edge, text] : bcs) p.bcs.push_back(parse_bc(text, edge, xinterval, yinterval));
    return p;
}

std::vector<BcData> resolve_bc_data(const std::vector<BcSpec>& bcs, Interval xinterval, Interval yinterval, double tol)
{
    std::vector<BcData> out;
    ApproxOptions ao;
    ao.tol = tol;
    for (const auto& spec : bcs) {
        const Interval tangential = normal_is_x(spec.edge) ? yinterval : xinterval;
        for (const auto& c : spec.conditions) {
            if (c.weights.empty()) throw IllPosedError(std::string("condition on the ") + edge_name(spec.edge) + " edge does not involve u");
            BcData d;
            d.edge = spec.edge;
            d.weights = c.weights;
            d.data = c.data ? interp1_adaptive(c.data, tangential, ao) : Cheb1(CVector{0.0}, tangential);
            out.push_back(std::move(d));
        }
    }
    return out;
}

BcDiscretization discretize_bcs(const std::vector<BcData>& bcs, std::size_t nx, std::size_t ny, Interval xinterval,
                                Interval yinterval)
{
    const AxisRows ax = discretize_axis(bcs, true, nx, ny, xinterval);
    const AxisRows ay = discretize_axis(bcs, false, ny, nx, yinterval);
    return {ax.B, ax.data, ay.B, ay.data};
}

BcDiscretization discretize_bcs(const std::vector<BcSpec>& bcs, std::size_t nx, std::size_t ny, Interval xinterval,
                                Interval yinterval)
{
    return discretize_bcs(resolve_bc_data(bcs, xinterval, yinterval), nx, ny, xinterval, yinterval);
}

Matrix convert_rhs(const Matrix& coeffs, int Ny, int Nx, std::size_t rows, std::size_t cols)
{
    // Only the leading rows + 2 N_y (cols + 2 N_x) input coefficients reach the output block.
    const std::size_t P = rows + 2 * static_cast<std::size_t>(Ny);
    const std::size_t Q = cols + 2 * static_cast<std::size_t>(Nx);
    Matrix F = Matrix::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(Q));
    const Eigen::Index r = std::min<Eigen::Index>(coeffs.rows(), static_cast<Eigen::Index>(P));
    const Eigen::Index c = std::min<Eigen::Index>(coeffs.cols(), static_cast<Eigen::Index>(Q));
    F.topLeftCorner(r, c) = coeffs.topLeftCorner(r, c);
    if (Ny > 0) F = banded_left(conversion_chain(0, Ny, P), F);
    if (Nx > 0) F = banded_right(F, conversion_chain(0, Nx, Q));
    return F.topLeftCorner(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstrainedSylvester build_system(const SeparableRep& rep, const Matrix& rhs_coeffs, const BcDiscretization& bcs,
                                  std::size_t nx, std::size_t ny)
{
    if (rep.k < 1) throw IllPosedError("build_system: empty separable representation");
    ConstrainedSylvester S;
    for (const auto& t : rep.terms) {
        S.A.push_back(discretize_odo(t.y, ny, rep.Ny));
        S.C.push_back(discretize_odo(t.x, nx, rep.Nx));
    }
    S.F = convert_rhs(rhs_coeffs, rep.Ny, rep.Nx, ny, nx);
    S.By = bcs.By;
    S.H = bcs.H;
    S.Bx = bcs.Bx;
    S.G = bcs.G;
    S.validate();
    return S;
}

std::pair<bool, bool> is_resolved(const Matrix& X, double tol)
{
    if (X.size() == 0) throw EmptyInputError("is_resolved: empty coefficient matrix");
    const double scale = max_abs(X);
    std::vector<double> colmax(static_cast<std::size_t>(X.cols())), rowmax(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) colmax[static_cast<std::size_t>(j)] = X.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < X.rows(); ++i) rowmax[static_cast<std::size_t>(i)] = X.row(i).cwiseAbs().maxCoeff();
    return {tail_small(colmax, tol, scale), tail_small(rowmax, tol, scale)};
}

ParityPlan parity_split(const CoeffArray& op, const std::vector<BcSpec>& bcs)
{
    ParityPlan plan;
    if (op.empty() || !op.constant_coefficients()) return plan;
    auto axis = [&](bool x_axis) {
        AxisParity a;
        std::set<int> parities;
        for (const auto& [key, c] : op.entries()) parities.insert((x_axis ? key.second : key.first) % 2);
        if (parities.size() != 1) return a;
        a.parity = *parities.begin();
        std::multiset<int> low, high;
        for (const auto& spec : bcs) {
            if (normal_is_x(spec.edge) != x_axis) continue;
            for (const auto& c : spec.conditions) {
                if (c.weights.size() != 1) return a;
                const bool hi = spec.edge == Edge::Right || spec.edge == Edge::Up;
                (hi ? high : low).insert(c.weights.begin()->first);
            }
        }
        if (low != high) return a;
        if (std::set<int>(low.begin(), low.end()).size() != low.size()) return a;
        a.eligible = true;
        return a;
    };
    plan.x = axis(true);
    plan.y = axis(false);
    return plan;
}

double system_residual(const ConstrainedSylvester& S, const Matrix& X, double scale)
{
    const Eigen::Index my = S.ny() - S.By.rows(), mx = S.nx() - S.Bx.rows();
    const Matrix R = apply_operator(S, X) - S.F;
    double r = max_abs(R.topLeftCorner(my, mx));
    if (S.By.rows()) r = std::max(r, max_abs(S.By * X - S.H));
    if (S.Bx.rows()) r = std::max(r, max_abs(X * S.Bx.transpose() - S.G.transpose()));
    if (scale <= 0.0) scale = std::max({max_abs(S.F), max_abs(S.H), max_abs(S.G)});
    return scale > 0.0 ? r / scale : r;
}

Matrix solve_pde_fixed(const PdeProblem& p, std::size_t nx, std::size_t ny, const PdeOptions& opts, PdeDiagnostics* diag)
{
    const Prepared pr = prepare(p, opts);
    try {
        return solve_prepared(pr, p, nx, ny, opts, diag);
    } catch (const Error&) {
        rethrow_with_context(nx, ny);
    }
}

Solution solve_pde(const PdeProblem& p, const PdeOptions& opts)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Prepared pr = prepare(p, opts);
    Solution sol;
    PdeDiagnostics& diag = sol.diagnostics;
    diag.subproblems = pr.plan.count();

    // Starting sizes keep every boundary data series intact, so the corner compatibility of the
    // discrete data equals that of the data themselves.
    std::size_t nx = start_size(opts.start_n, pr.data_nx);
    std::size_t ny = start_size(opts.start_n, pr.data_ny);
    {
        const BcDiscretization b = discretize_bcs(pr.bcs, nx, ny, p.xinterval, p.yinterval);
        const Compatibility c = check_compatibility(b.By, b.Bx, b.H, b.G, opts.sylvester.compat_tol);
        diag.compat_defect = c.defect;
        if (!c.ok && opts.sylvester.enforce_compatibility) {
            throw CompatibilityError("boundary data are incompatible at the corners (compatibility defect " +
                                         sci(c.defect) + ")",
                                     c.defect);
        }
    }
    if (nx > opts.max_n || ny > opts.max_n)
        throw UnresolvedError("boundary data need more than max_n coefficients", opts.max_n);

    Matrix X;
    for (;;) {
        try {
            X = solve_prepared(pr, p, nx, ny, opts, &diag);
        } catch (const Error&) {
            rethrow_with_context(nx, ny);
        }
        const auto [x_ok, y_ok] = is_resolved(X, opts.tol);
        diag.steps.back().x_ok = x_ok;
        diag.steps.back().y_ok = y_ok;
        if (x_ok && y_ok) break;
        const std::size_t nx2 = x_ok ? nx : next_size(nx);
        const std::size_t ny2 = y_ok ? ny : next_size(ny);
        if (nx2 > opts.max_n || ny2 > opts.max_n) {
            throw UnresolvedError("solution not resolved at n_x=" + std::to_string(nx) + ", n_y=" + std::to_string(ny) +
                                      " (cap " + std::to_string(opts.max_n) + ")",
                                  opts.max_n);
        }
        nx = nx2;
        ny = ny2;
    }
    diag.resolved = true;
    sol.u = Cheb2(trim_tail2(X, opts.tol), p.xinterval, p.yinterval);
    diag.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

}  // namespace spectra
