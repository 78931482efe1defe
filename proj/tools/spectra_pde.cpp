// spectra_pde: solve linear PDEs on rectangles from JSON problem files.
//
//   spectra_pde solve problem.json --out result.json
//   spectra_pde eval result.json --grid 101x101 > u.csv
//   spectra_pde rank problem.json
//   spectra_pde ode --op "1e-3*diff(u,x,2) - x*u" --bc "u(-1)=1" --bc "u(1)=2"
//
// Exit codes: 0 success, 2 unresolved (or evaluation point outside the domain), 3 ill-posed,
// 4 malformed input, 1 anything else.

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectra/error.hpp"
#include "spectra/io.hpp"
#include "spectra/separable.hpp"

using namespace spectra;

namespace {

struct OutOfDomain : Error {
    using Error::Error;
};

struct Overrides {
    std::optional<double> tol;
    std::optional<std::size_t> max_n;
    std::optional<double> rank_tol;

    void add_solver(CLI::App* app)
    {
        app->add_option("--tol", tol, "tail-test tolerance (default 1e-14, or the problem file's tol)");
        app->add_option("--max-n", max_n, "largest discretization size per dimension");
    }
    void add_rank(CLI::App* app)
    {
        app->add_option("--rank-tol", rank_tol, "relative singular-value cutoff of the splitting rank");
    }
    void apply(PdeOptions& o) const
    {
        if (tol) o.tol = *tol;
        if (max_n) o.max_n = *max_n;
        if (rank_tol) o.rank_tol = *rank_tol;
    }
};

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void emit(const std::string& out, const std::string& text)
{
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f || !(f << text)) throw Error("cannot write '" + out + "'");
}

std::vector<double> parse_reals(const std::string& s, char sep)
{
    std::vector<double> v;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) {
        std::size_t used = 0;
        try {
            v.push_back(std::stod(item, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
            throw SchemaError("'" + item + "' is not a number");
    }
    return v;
}

// "101x101", "101X101" or "101×101".
std::pair<std::size_t, std::size_t> parse_grid(std::string g)
{
    for (const char* sep : {"\xc3\x97", "X"}) {
        const std::size_t p = g.find(sep);
        if (p != std::string::npos) g.replace(p, std::strlen(sep), "x");
    }
    const std::size_t p = g.find('x');
    try {
        std::size_t a = 0, b = 0;
        const long nx = std::stol(g.substr(0, p), &a), ny = std::stol(g.substr(p + 1), &b);
        if (p != std::string::npos && a == p && b == g.size() - p - 1 && nx > 0 && ny > 0)
            return {static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)};
    } catch (const std::exception&) {
    }
    throw SchemaError("grid must look like NXxNY, got '" + g + "'");
}

std::vector<double> uniform(const Interval& I, std::size_t n)
{
    if (n == 1) return {0.5 * (I.a() + I.b())};
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = I.a() + (I.b() - I.a()) * static_cast<double>(k) / static_cast<double>(n - 1);
    v.back() = I.b();
    return v;
}

int cmd_solve(const std::string& problem, const std::string& out, const Overrides& ov)
{
    ProblemFile f = read_problem(problem);
    ov.apply(f.options);
    const Solution s = solve_pde(build_problem(f), f.options);
    if (out.empty() || out == "-") {
        std::cout << result_to_json(s);
    } else {
        write_result(out, s);
    }
    const PdeDiagnostics& d = s.diagnostics;
    std::cerr << "resolved at n_x=" << d.nx << ", n_y=" << d.ny << "; degree (" << s.u.nx() - 1 << ", " << s.u.ny() - 1
              << "); splitting rank " << d.rank << "; path " << d.path << "; " << d.subproblems << " subproblem"
              << (d.subproblems == 1 ? "" : "s") << "; " << d.wall_time << " s\n";
    return 0;
}

int cmd_eval(const std::string& result, const std::string& grid, const std::string& points, const std::string& format,
             const std::string& out)
{
    const ResultFile r = read_result(result);
    const Interval& xi = r.u.xinterval();
    const Interval& yi = r.u.yinterval();
    std::vector<std::pair<double, double>> pts;
    if (!points.empty()) {
        std::stringstream in(points);
        std::string item;
        while (std::getline(in, item, ';')) {
            if (item.find_first_not_of(" \t\n") == std::string::npos) continue;
            const auto v = parse_reals(item, ',');
            if (v.size() != 2) throw SchemaError("points must be 'x,y;x,y;...'");
            pts.emplace_back(v[0], v[1]);
        }
    } else {
        const auto [nx, ny] = parse_grid(grid.empty() ? "101x101" : grid);
        const auto xs = uniform(xi, nx), ys = uniform(yi, ny);
        for (double y : ys)
            for (double x : xs) pts.emplace_back(x, y);
    }
    for (const auto& [x, y] : pts)
        if (!xi.contains(x) || !yi.contains(y))
            throw OutOfDomain("point (" + fmt(x) + ", " + fmt(y) + ") lies outside the domain");

    std::string text;
    if (format == "json") {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& [x, y] : pts) {
            const cplx v = eval2(r.u, x, y);
            rows.push_back({x, y, v.real(), v.imag()});
        }
        text = nlohmann::ordered_json{{"columns", {"x", "y", "re", "im"}}, {"values", rows}}.dump() + "\n";
    } else {
        std::ostringstream s;
        s << "x,y,re,im\n";
        for (const auto& [x, y] : pts) {
            const cplx v = eval2(r.u, x, y);
            s << fmt(x) << ',' << fmt(y) << ',' << fmt(v.real()) << ',' << fmt(v.imag()) << '\n';
        }
        text = s.str();
    }
    emit(out, text);
    return 0;
}

int cmd_rank(const std::string& problem, const std::string& op, const std::string& domain, const Overrides& ov)
{
    ProblemFile f;
    if (!problem.empty()) {
        f = read_problem(problem);
    } else {
        if (op.empty()) throw SchemaError("rank needs a problem file or --op");
        f.op = op;
        if (!domain.empty()) {
            const auto d = parse_reals(domain, ',');
            if (d.size() != 4 || !(d[0] < d[1]) || !(d[2] < d[3])) throw SchemaError("--domain must be a,b,c,d with a<b, c<d");
            f.xinterval = Interval(d[0], d[1]);
            f.yinterval = Interval(d[2], d[3]);
        }
    }
    ov.apply(f.options);
    const CoeffArray c = extract_coeffs(parse_pdo(f.op), f.xinterval, f.yinterval);
    const SeparableRep rep = splitting_rank(c, f.options.rank_tol);
    std::cout << "splitting rank: " << rep.k << "\n";
    // The kept values and the first few discarded ones show the size of the gap.
    const std::size_t shown = std::min(rep.singular_values.size(), static_cast<std::size_t>(rep.k) + 3);
    std::cout << "singular values:";
    for (std::size_t k = 0; k < shown; ++k) std::cout << ' ' << fmt(rep.singular_values[k]);
    if (shown < rep.singular_values.size()) std::cout << " ... (" << rep.singular_values.size() << " total)";
    std::cout << "\n";
    for (int t = 0; t < rep.k; ++t) {
        const auto& term = rep.terms[static_cast<std::size_t>(t)];
        std::cout << "term " << t + 1 << ": y-order " << term.y.order() << ", x-order " << term.x.order() << "\n";
    }
    return 0;
}

int cmd_ode(const std::string& op, const std::vector<std::string>& bcs, const std::string& rhs,
            const std::string& domain, const Overrides& ov, const std::string& format, const std::string& out)
{
    Interval I(-1.0, 1.0);
    if (!domain.empty()) {
        const auto d = parse_reals(domain, ',');
        if (d.size() != 2 || !(d[0] < d[1])) throw SchemaError("--domain must be a,b with a<b");
        I = Interval(d[0], d[1]);
    }
    OdeProblem p;
    p.op = extract_odo(parse_pdo(op), I);
    for (const auto& text : bcs) {
        OdeCondition c = parse_ode_bc(text);
        p.constraints.push_back(std::move(c.functional));
        p.values.push_back(c.value);
    }
    const PdoExpr f = parse_pdo(rhs.empty() ? "0" : rhs);
    if (f.has_u()) throw NonlinearityError("right-hand side must not contain u");
    const Function2 g = to_function(f);
    p.rhs = interp1_adaptive([&g](double x) { return g(x, 0.0); }, I);
    OdeOptions o;
    if (ov.tol) o.tol = *ov.tol;
    if (ov.max_n) o.max_n = *ov.max_n;
    const OdeSolution s = solve_ode(p, o);
    if (format == "json") {
        emit(out, ode_result_to_json(s));
    } else {
        std::ostringstream t;
        t << "k,re,im\n";
        for (std::size_t k = 0; k < s.u.size(); ++k)
            t << k << ',' << fmt(s.u.coeffs()[k].real()) << ',' << fmt(s.u.coeffs()[k].imag()) << '\n';
        emit(out, t.str());
    }
    std::cerr << "degree " << s.u.degree() << " (n=" << s.n << ", residual " << s.residual << ")\n";
    return 0;
}

int fail(int code, const std::string& msg)
{
    std::cerr << "spectra_pde: " << msg << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Ultraspherical spectral solver for linear PDEs on rectangles"};
    app.require_subcommand(1);
    Overrides ov;
    std::string out, format = "csv";

    std::string problem;
    auto* solve = app.add_subcommand("solve", "solve a problem file and write the result document");
    solve->add_option("problem", problem, "problem file (JSON)")->required();
    solve->add_option("-o,--out", out, "result file (default: stdout)");
    ov.add_solver(solve);
    ov.add_rank(solve);

    std::string result, grid, points;
    auto* eval = app.add_subcommand("eval", "evaluate a result on a grid or at points");
    eval->add_option("result", result, "result file")->required();
    auto* g = eval->add_option("--grid", grid, "uniform NXxNY grid including the edges (default 101x101)");
    eval->add_option("--points", points, "explicit points 'x,y;x,y;...'")->excludes(g);
    eval->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    eval->add_option("-o,--out", out, "output file (default: stdout)");

    std::string op, domain;
    auto* rank = app.add_subcommand("rank", "splitting rank and separable terms of an operator");
    rank->add_option("problem", problem, "problem file (or use --op)");
    rank->add_option("--op", op, "operator string");
    rank->add_option("--domain", domain, "a,b,c,d (default -1,1,-1,1)");
    ov.add_rank(rank);

    std::vector<std::string> bcs;
    std::string rhs = "0";
    auto* ode = app.add_subcommand("ode", "solve a linear boundary-value ODE in x");
    ode->add_option("--op", op, "operator, e.g. 'diff(u,x,2) + x*u'")->required();
    ode->add_option("--bc", bcs, "point condition such as 'u(-1)=1' (repeatable)")->required();
    ode->add_option("--rhs", rhs, "right-hand side in x");
    ode->add_option("--domain", domain, "a,b (default -1,1)");
    ode->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    ode->add_option("-o,--out", out, "output file (default: stdout)");
    ov.add_solver(ode);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 4;
    }

    try {
        if (*solve) return cmd_solve(problem, out, ov);
        if (*eval) return cmd_eval(result, grid, points, format, out);
        if (*rank) return cmd_rank(problem, op, domain, ov);
        return cmd_ode(op, bcs, rhs, domain, ov, format, out);
    } catch (const OutOfDomain& e) {
        return fail(2, e.what());
    } catch (const UnresolvedError& e) {
        return fail(2, std::string("unresolved: ") + e.what());
    } catch (const IllPosedError& e) {
        return fail(3, std::string("ill-posed: ") + e.what());
    } catch (const SchemaError& e) {
        return fail(4, std::string("invalid input: ") + e.what());
    } catch (const ParseError& e) {
        return fail(4, std::string("invalid expression: ") + e.what());
    } catch (const NonlinearityError& e) {
        return fail(4, std::string("invalid expression: ") + e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
}
