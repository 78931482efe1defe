#include "spectra/pdo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <regex>
#include <sstream>

#include "spectra/error.hpp"

namespace spectra {

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;
using Kind = ExprNode::Kind;

const char* const kFuncs[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "abs", "real", "imag"};

bool is_func(const std::string& name)
{
    for (const char* f : kFuncs)
        if (name == f) return true;
    return false;
}

NodePtr make(Kind k, std::size_t offset, std::vector<NodePtr> kids = {})
{
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->offset = offset;
    n->kids = std::move(kids);
    for (const auto& c : n->kids) n->has_u = n->has_u || c->has_u;
    if (k == Kind::U) n->has_u = true;
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    NodePtr parse()
    {
        skip();
        if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
        NodePtr e = expr();
        skip();
        if (pos_ < s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
        return e;
    }

private:
    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c)
    {
        if (!accept(c)) {
            if (pos_ >= s_.size()) throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    NodePtr expr()
    {
        NodePtr lhs = term();
        for (;;) {
            skip();
            const std::size_t at = pos_;
            if (accept('+')) {
                lhs = make(Kind::Add, at, {lhs, term()});
            } else if (accept('-')) {
                lhs = make(Kind::Sub, at, {lhs, term()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr term()
    {
        NodePtr lhs = unary();
        for (;;) {
            skip();
            const std::size_t at = pos_;
            if (accept('*')) {
                NodePtr rhs = unary();
                if (lhs->has_u && rhs->has_u) throw NonlinearityError("product of two u-terms at offset " + std::to_string(at));
                lhs = make(Kind::Mul, at, {lhs, rhs});
            } else if (accept('/')) {
                NodePtr rhs = unary();
                if (rhs->has_u) throw NonlinearityError("division by a u-term at offset " + std::to_string(at));
                lhs = make(Kind::Div, at, {lhs, rhs});
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary()
    {
        skip();
        const std::size_t at = pos_;
        if (accept('-')) return make(Kind::Neg, at, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power()
    {
        NodePtr base = primary();
        skip();
        const std::size_t at = pos_;
        if (accept('^')) {
            NodePtr ex = unary();
            if (base->has_u || ex->has_u) throw NonlinearityError("power of a u-term at offset " + std::to_string(at));
            return make(Kind::Pow, at, {base, ex});
        }
        return base;
    }

    NodePtr number()
    {
        const std::size_t at = pos_;
        std::size_t end = pos_;
        while (end < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.')) ++end;
        if (end < s_.size() && (s_[end] == 'e' || s_[end] == 'E')) {
            std::size_t e = end + 1;
            if (e < s_.size() && (s_[e] == '+' || s_[e] == '-')) ++e;
            if (e < s_.size() && std::isdigit(static_cast<unsigned char>(s_[e]))) {
                end = e;
                while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end;
            }
        }
        const std::string tok = s_.substr(at, end - at);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw ParseError("malformed number '" + tok + "'", at);
        }
        if (used != tok.size()) throw ParseError("malformed number '" + tok + "'", at);
        pos_ = end;
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::Const;
        n->value = v;
        n->offset = at;
        return n;
    }

    std::string identifier()
    {
        const std::size_t at = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        return s_.substr(at, pos_ - at);
    }

    int integer()
    {
        skip();
        const std::size_t at = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (at == pos_) throw ParseError("expected a non-negative integer", at);
        return std::stoi(s_.substr(at, pos_ - at));
    }

    NodePtr constant(cplx v, std::size_t at)
    {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::Const;
        n->value = v;
        n->offset = at;
        return n;
    }

    NodePtr primary()
    {
        skip();
        const std::size_t at = pos_;
        if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (accept('(')) {
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (!std::isalpha(static_cast<unsigned char>(c))) throw ParseError(std::string("unexpected '") + c + "'", at);

        const std::string id = identifier();
        if (id == "x") return make(Kind::VarX, at);
        if (id == "y") return make(Kind::VarY, at);
        if (id == "u") return make(Kind::U, at);
        if (id == "i") return constant(cplx(0.0, 1.0), at);
        if (id == "pi") return constant(std::numbers::pi, at);
        if (id == "diff") return diff(at);
        if (id == "laplacian" || id == "biharmonic") {
            expect('(');
            NodePtr e = expr();
            expect(')');
            if (!e->has_u) throw ParseError(id + " applies to expressions containing u", at);
            return make(id == "laplacian" ? Kind::Laplacian : Kind::Biharmonic, at, {e});
        }
        if (is_func(id)) {
            expect('(');
            NodePtr e = expr();
            expect(')');
            if (e->has_u) throw NonlinearityError(id + " applied to a u-term at offset " + std::to_string(at));
            auto n = std::make_shared<ExprNode>(*make(Kind::Func, at, {e}));
            n->func = id;
            return n;
        }
        throw ParseError("unknown identifier '" + id + "'", at);
    }

    NodePtr diff(std::size_t at)
    {
        expect('(');
        NodePtr e = expr();
        if (!e->has_u) throw ParseError("diff applies to expressions containing u", at);
        char var = 'n';
        int order = 1;
        if (accept(',')) {
            skip();
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                order = integer();
            } else {
                const std::size_t vat = pos_;
                const std::string v = identifier();
                if (v != "x" && v != "y") throw ParseError("diff variable must be x or y", vat);
                var = v[0];
                if (accept(',')) order = integer();
            }
        }
        expect(')');
        auto n = std::make_shared<ExprNode>(*make(Kind::Diff, at, {e}));
        n->var = var;
        n->order = order;
        return n;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

cplx apply_func(const std::string& f, cplx v)
{
    if (f == "sin") return std::sin(v);
    if (f == "cos") return std::cos(v);
    if (f == "tan") return std::tan(v);
    if (f == "exp") return std::exp(v);
    if (f == "log") return std::log(v);
    if (f == "sqrt") return std::sqrt(v);
    if (f == "sinh") return std::sinh(v);
    if (f == "cosh") return std::cosh(v);
    if (f == "tanh") return std::tanh(v);
    if (f == "abs") return std::abs(v);
    if (f == "real") return std::real(v);
    if (f == "imag") return std::imag(v);
    throw ParseError("unknown function '" + f + "'", 0);
}

cplx eval_node(const ExprNode& n, double x, double y)
{
    switch (n.kind) {
    case Kind::Const: return n.value;
    case Kind::VarX: return x;
    case Kind::VarY: return y;
    case Kind::Add: return eval_node(*n.kids[0], x, y) + eval_node(*n.kids[1], x, y);
    case Kind::Sub: return eval_node(*n.kids[0], x, y) - eval_node(*n.kids[1], x, y);
    case Kind::Mul: return eval_node(*n.kids[0], x, y) * eval_node(*n.kids[1], x, y);
    case Kind::Div: return eval_node(*n.kids[0], x, y) / eval_node(*n.kids[1], x, y);
    case Kind::Neg: return -eval_node(*n.kids[0], x, y);
    case Kind::Pow: {
        const cplx b = eval_node(*n.kids[0], x, y);
        const cplx e = eval_node(*n.kids[1], x, y);
        // Integer powers of real numbers stay exact and real.
        if (e.imag() == 0.0 && e.real() == std::round(e.real()) && std::abs(e.real()) <= 64.0) {
            const int k = static_cast<int>(e.real());
            cplx r = 1.0;
            for (int j = 0; j < std::abs(k); ++j) r *= b;
            return k < 0 ? 1.0 / r : r;
        }
        return std::pow(b, e);
    }
    case Kind::Func: return apply_func(n.func, eval_node(*n.kids[0], x, y));
    default: throw NonlinearityError("expression depends on u");
    }
}

void render(const ExprNode& n, std::ostringstream& os)
{
    auto kids = [&](const char* name) {
        os << name << '(';
        for (std::size_t k = 0; k < n.kids.size(); ++k) {
            if (k) os << ", ";
            render(*n.kids[k], os);
        }
        os << ')';
    };
    switch (n.kind) {
    case Kind::U: os << 'u'; break;
    case Kind::VarX: os << 'x'; break;
    case Kind::VarY: os << 'y'; break;
    case Kind::Const:
        if (n.value.imag() == 0.0) {
            os << n.value.real();
        } else {
            os << '(' << n.value.real() << ',' << n.value.imag() << ')';
        }
        break;
    case Kind::Add: kids("Add"); break;
    case Kind::Sub: kids("Sub"); break;
    case Kind::Mul: kids("Mul"); break;
    case Kind::Div: kids("Div"); break;
    case Kind::Pow: kids("Pow"); break;
    case Kind::Neg: kids("Neg"); break;
    case Kind::Laplacian: kids("Laplacian"); break;
    case Kind::Biharmonic: kids("Biharmonic"); break;
    case Kind::Func:
        os << "Func(" << n.func << ", ";
        render(*n.kids[0], os);
        os << ')';
        break;
    case Kind::Diff:
        os << "Diff(";
        render(*n.kids[0], os);
        os << ", " << n.var << ", " << n.order << ')';
        break;
    }
}

// Bivariate coefficient arithmetic -------------------------------------------------------------

Matrix coeffs_to_vals2(const Matrix& X, Eigen::Index ny, Eigen::Index nx)
{
    Matrix V1(ny, X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const CVector col(X.col(j).data(), X.col(j).data() + X.rows());
        const CVector v = coeffs_to_vals(Cheb1(col), static_cast<std::size_t>(ny));
        for (Eigen::Index i = 0; i < ny; ++i) V1(i, j) = v[static_cast<std::size_t>(i)];
    }
    Matrix V(ny, nx);
    for (Eigen::Index i = 0; i < ny; ++i) {
        CVector row(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = V1(i, j);
        const CVector v = coeffs_to_vals(Cheb1(row), static_cast<std::size_t>(nx));
        for (Eigen::Index j = 0; j < nx; ++j) V(i, j) = v[static_cast<std::size_t>(j)];
    }
    return V;
}

Matrix vals_to_coeffs2(const Matrix& V)
{
    Matrix C1(V.rows(), V.cols());
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        CVector row(static_cast<std::size_t>(V.cols()));
        for (Eigen::Index j = 0; j < V.cols(); ++j) row[static_cast<std::size_t>(j)] = V(i, j);
        const CVector c = vals_to_coeffs(row).coeffs();
        for (Eigen::Index j = 0; j < V.cols(); ++j) C1(i, j) = c[static_cast<std::size_t>(j)];
    }
    Matrix C(V.rows(), V.cols());
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        const CVector col(C1.col(j).data(), C1.col(j).data() + V.rows());
        const CVector c = vals_to_coeffs(col).coeffs();
        for (Eigen::Index i = 0; i < V.rows(); ++i) C(i, j) = c[static_cast<std::size_t>(i)];
    }
    return C;
}

Matrix product2(const Matrix& A, const Matrix& B)
{
    if (A.size() == 1) return A(0, 0) * B;
    if (B.size() == 1) return B(0, 0) * A;
    const Eigen::Index ny = A.rows() + B.rows() - 1, nx = A.cols() + B.cols() - 1;
    const Matrix V = coeffs_to_vals2(A, ny, nx).cwiseProduct(coeffs_to_vals2(B, ny, nx));
    return vals_to_coeffs2(V);
}

Matrix sum2(const Matrix& A, const Matrix& B)
{
    Matrix S = Matrix::Zero(std::max(A.rows(), B.rows()), std::max(A.cols(), B.cols()));
    S.topLeftCorner(A.rows(), A.cols()) += A;
    S.topLeftCorner(B.rows(), B.cols()) += B;
    return S;
}

Matrix derivative2(const Matrix& A, char var, const Interval& xi, const Interval& yi)
{
    if (var == 'x') {
        Matrix D(A.rows(), std::max<Eigen::Index>(1, A.cols() - 1));
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            CVector row(static_cast<std::size_t>(A.cols()));
            for (Eigen::Index j = 0; j < A.cols(); ++j) row[static_cast<std::size_t>(j)] = A(i, j);
            const CVector d = cheb_derivative(row);
            for (Eigen::Index j = 0; j < D.cols(); ++j) D(i, j) = d[static_cast<std::size_t>(j)] * xi.scale();
        }
        return D;
    }
    Matrix D(std::max<Eigen::Index>(1, A.rows() - 1), A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        const CVector col(A.col(j).data(), A.col(j).data() + A.rows());
        const CVector d = cheb_derivative(col);
        for (Eigen::Index i = 0; i < D.rows(); ++i) D(i, j) = d[static_cast<std::size_t>(i)] * yi.scale();
    }
    return D;
}

using TermMap = std::map<CoeffArray::Key, Matrix>;

class Extractor {
public:
    Extractor(Interval xi, Interval yi, double tol) : xi_(xi), yi_(yi), tol_(tol) {}

    TermMap walk(const ExprNode& n)
    {
        if (!n.has_u) {
            throw NonlinearityError("operator has a term without u at offset " + std::to_string(n.offset) +
                                    "; move it to the right-hand side");
        }
        switch (n.kind) {
        case Kind::U: return {{{0, 0}, Matrix::Ones(1, 1)}};
        case Kind::Add: return merge(walk(*n.kids[0]), walk(*n.kids[1]), 1.0);
        case Kind::Sub: return merge(walk(*n.kids[0]), walk(*n.kids[1]), -1.0);
        case Kind::Neg: return scaled(walk(*n.kids[0]), -1.0);
        case Kind::Mul: {
            const bool left_u = n.kids[0]->has_u;
            const ExprNode& coef = *n.kids[left_u ? 1 : 0];
            return multiply(walk(*n.kids[left_u ? 0 : 1]), sample(coef, false));
        }
        case Kind::Div: return multiply(walk(*n.kids[0]), sample(*n.kids[1], true));
        case Kind::Diff: {
            if (n.var == 'n') throw ParseError("diff without a variable is only valid in boundary conditions", n.offset);
            TermMap t = walk(*n.kids[0]);
            for (int k = 0; k < n.order; ++k) t = differentiate(t, n.var);
            return t;
        }
        case Kind::Laplacian: {
            const TermMap t = walk(*n.kids[0]);
            return laplacian(t);
        }
        case Kind::Biharmonic: return laplacian(laplacian(walk(*n.kids[0])));
        default: throw NonlinearityError("unsupported use of u at offset " + std::to_string(n.offset));
        }
    }

private:
    TermMap laplacian(const TermMap& t)
    {
        return merge(differentiate(differentiate(t, 'x'), 'x'), differentiate(differentiate(t, 'y'), 'y'), 1.0);
    }

    Matrix sample(const ExprNode& n, bool reciprocal)
    {
        if (is_constant_expr(n)) {
            const cplx v = eval_node(n, 0.0, 0.0);
            if (reciprocal && v == cplx(0.0)) throw EvaluationError("division by zero");
            return Matrix::Constant(1, 1, reciprocal ? 1.0 / v : v);
        }
        const Function2 f = [&n, reciprocal](double x, double y) {
            const cplx v = eval_node(n, x, y);
            return reciprocal ? 1.0 / v : v;
        };
        ApproxOptions opts;
        opts.tol = tol_;
        return interp2_adaptive(f, xi_, yi_, opts).coeffs();
    }

    static TermMap merge(TermMap a, const TermMap& b, double sign)
    {
        for (const auto& [k, m] : b) {
            auto it = a.find(k);
            if (it == a.end()) {
                a.emplace(k, sign * m);
            } else {
                it->second = sum2(it->second, sign * m);
            }
        }
        return a;
    }

    static TermMap scaled(TermMap a, cplx s)
    {
        for (auto& [k, m] : a) m *= s;
        return a;
    }

    TermMap multiply(TermMap a, const Matrix& c)
    {
        for (auto& [k, m] : a) m = trim_tail2(product2(m, c), 0.1 * tol_);
        return a;
    }

    // d/dvar (a * D^{ij} u) = (d a / dvar) D^{ij} u + a D^{ij + e_var} u.
    TermMap differentiate(const TermMap& t, char var)
    {
        TermMap out;
        for (const auto& [k, m] : t) {
            const CoeffArray::Key up = var == 'x' ? CoeffArray::Key{k.first, k.second + 1}
                                                  : CoeffArray::Key{k.first + 1, k.second};
            out = merge(std::move(out), TermMap{{up, m}}, 1.0);
            if (m.size() > 1) out = merge(std::move(out), TermMap{{k, derivative2(m, var, xi_, yi_)}}, 1.0);
        }
        return out;
    }

    Interval xi_, yi_;
    double tol_;
};

}  // namespace

std::string PdoExpr::to_string() const
{
    std::ostringstream os;
    render(*root_, os);
    return os.str();
}

PdoExpr parse_pdo(const std::string& text)
{
    return PdoExpr(Parser(text).parse());
}

bool is_constant_expr(const ExprNode& n)
{
    if (n.kind == Kind::VarX || n.kind == Kind::VarY || n.kind == Kind::U) return false;
    for (const auto& k : n.kids)
        if (!is_constant_expr(*k)) return false;
    return true;
}

Function2 to_function(const PdoExpr& e)
{
    if (e.has_u()) throw NonlinearityError("expected an expression without u");
    auto root = std::make_shared<PdoExpr>(e);
    return [root](double x, double y) { return eval_node(root->root(), x, y); };
}

int CoeffArray::Ny() const noexcept
{
    int n = -1;
    for (const auto& [k, c] : entries_) n = std::max(n, k.first);
    return n;
}

int CoeffArray::Nx() const noexcept
{
    int n = -1;
    for (const auto& [k, c] : entries_) n = std::max(n, k.second);
    return n;
}

bool CoeffArray::constant_coefficients() const noexcept
{
    for (const auto& [k, c] : entries_)
        if (c.coeffs().size() != 1) return false;
    return true;
}

CoeffArray extract_coeffs(const PdoExpr& e, Interval xinterval, Interval yinterval, double tol, double drop_tol)
{
    Extractor ex(xinterval, yinterval, tol);
    const TermMap terms = ex.walk(e.root());
    double top = 0.0;
    for (const auto& [k, m] : terms) top = std::max(top, m.cwiseAbs().maxCoeff());
    CoeffArray out(xinterval, yinterval);
    for (const auto& [k, m] : terms) {
        const double mx = m.cwiseAbs().maxCoeff();
        if (mx <= drop_tol * top || mx == 0.0) continue;
        out.set(k.first, k.second, Cheb2(trim_tail2(m, tol), xinterval, yinterval));
    }
    return out;
}

// Boundary conditions --------------------------------------------------------------------------

const char* edge_name(Edge e) noexcept
{
    switch (e) {
    case Edge::Left: return "left";
    case Edge::Right: return "right";
    case Edge::Down: return "down";
    case Edge::Up: return "up";
    }
    return "?";
}

bool BcCondition::is_dirichlet() const
{
    return weights.size() == 1 && weights.begin()->first == 0;
}

bool BcCondition::is_neumann() const
{
    return weights.size() == 1 && weights.begin()->first == 1;
}

namespace {

bool normal_is_x(Edge e) { return e == Edge::Left || e == Edge::Right; }

struct LinearBc {
    std::map<int, cplx> weights;
    std::vector<std::pair<cplx, NodePtr>> free_terms;
};

void walk_bc(const NodePtr& n, cplx factor, int shift, Edge edge, LinearBc& out)
{
    if (!n->has_u) {
        if (shift > 0) throw ParseError("derivative of a term without u", n->offset);
        out.free_terms.emplace_back(factor, n);
        return;
    }
    switch (n->kind) {
    case Kind::U: out.weights[shift] += factor; return;
    case Kind::Add:
        walk_bc(n->kids[0], factor, shift, edge, out);
        walk_bc(n->kids[1], factor, shift, edge, out);
        return;
    case Kind::Sub:
        walk_bc(n->kids[0], factor, shift, edge, out);
        walk_bc(n->kids[1], -factor, shift, edge, out);
        return;
    case Kind::Neg: walk_bc(n->kids[0], -factor, shift, edge, out); return;
    case Kind::Mul: {
        const bool left_u = n->kids[0]->has_u;
        const ExprNode& c = *n->kids[left_u ? 1 : 0];
        if (!is_constant_expr(c)) throw ParseError("boundary-condition coefficients must be constants", c.offset);
        walk_bc(n->kids[left_u ? 0 : 1], factor * eval_node(c, 0.0, 0.0), shift, edge, out);
        return;
    }
    case Kind::Div: {
        const ExprNode& c = *n->kids[1];
        if (!is_constant_expr(c)) throw ParseError("boundary-condition coefficients must be constants", c.offset);
        walk_bc(n->kids[0], factor / eval_node(c, 0.0, 0.0), shift, edge, out);
        return;
    }
    case Kind::Diff: {
        const char normal = normal_is_x(edge) ? 'x' : 'y';
        if (n->var != 'n' && n->var != normal) {
            throw ParseError(std::string("tangential derivative on the ") + edge_name(edge) + " edge is not supported",
                             n->offset);
        }
        walk_bc(n->kids[0], factor, shift + n->order, edge, out);
        return;
    }
    default: throw ParseError("unsupported operator in a boundary condition", n->offset);
    }
}

Function1 edge_function(std::vector<std::pair<cplx, Function2>> parts, Edge edge, Interval xi, Interval yi)
{
    const double fixed = edge == Edge::Left ? xi.a() : edge == Edge::Right ? xi.b() : edge == Edge::Down ? yi.a() : yi.b();
    const bool tangential_y = normal_is_x(edge);
    return [parts = std::move(parts), fixed, tangential_y](double t) {
        cplx s = 0.0;
        for (const auto& [w, f] : parts) s += w * (tangential_y ? f(fixed, t) : f(t, fixed));
        return s;
    };
}

std::string trim(const std::string& s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

BcCondition expression_bc(const std::string& lhs, const std::string& rhs, Edge edge, Interval xi, Interval yi)
{
    const PdoExpr e = parse_pdo(lhs);
    LinearBc lin;
    walk_bc(std::make_shared<ExprNode>(e.root()), 1.0, 0, edge, lin);
    for (auto it = lin.weights.begin(); it != lin.weights.end();) {
        it = it->second == cplx(0.0) ? lin.weights.erase(it) : std::next(it);
    }
    if (lin.weights.empty()) throw ParseError("boundary condition does not involve u", 0);
    std::vector<std::pair<cplx, Function2>> parts;
    const std::string data = trim(rhs).empty() ? "0" : rhs;
    parts.emplace_back(1.0, to_function(parse_pdo(data)));
    for (const auto& [w, node] : lin.free_terms) parts.emplace_back(-w, to_function(PdoExpr(node)));
    BcCondition c;
    c.weights = std::move(lin.weights);
    c.data = edge_function(std::move(parts), edge, xi, yi);
    c.text = trim(lhs) + " = " + trim(data);
    return c;
}

}  // namespace

BcCondition make_bc(const std::string& type, const std::string& data, const std::string& expr, Edge edge,
                    Interval xinterval, Interval yinterval)
{
    if (type == "dirichlet") return expression_bc("u", data, edge, xinterval, yinterval);
    if (type == "neumann") return expression_bc("diff(u)", data, edge, xinterval, yinterval);
    if (type == "expr") {
        if (trim(expr).empty()) throw ParseError("expression condition needs an expression", 0);
        return expression_bc(expr, data, edge, xinterval, yinterval);
    }
    throw ParseError("unknown boundary-condition type '" + type + "'", 0);
}

BcSpec parse_bc(const std::string& text, Edge edge, Interval xinterval, Interval yinterval)
{
    BcSpec spec;
    spec.edge = edge;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(';', start);
        if (end == std::string::npos) end = text.size();
        const std::string piece = trim(text.substr(start, end - start));
        start = end + 1;
        if (piece.empty()) continue;
        const std::size_t colon = piece.find(':');
        if (colon != std::string::npos) {
            std::string tag = trim(piece.substr(0, colon));
            for (auto& ch : tag) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (tag != "dirichlet" && tag != "neumann") throw ParseError("unknown condition type '" + tag + "'", 0);
            spec.conditions.push_back(make_bc(tag, piece.substr(colon + 1), "", edge, xinterval, yinterval));
            continue;
        }
        const std::size_t eq = piece.find('=');
        if (eq == std::string::npos) {
            spec.conditions.push_back(expression_bc(piece, "0", edge, xinterval, yinterval));
        } else {
            spec.conditions.push_back(
                expression_bc(piece.substr(0, eq), piece.substr(eq + 1), edge, xinterval, yinterval));
        }
    }
    if (spec.conditions.empty()) throw ParseError("empty boundary condition", 0);
    return spec;
}

LinearODO extract_odo(const PdoExpr& e, Interval interval, double tol)
{
    const CoeffArray c = extract_coeffs(e, interval, Interval(-1.0, 1.0), tol);
    LinearODO L(interval);
    for (const auto& [key, f] : c.entries()) {
        const Matrix& X = f.coeffs();
        if (key.first != 0 || (X.rows() > 1 && X.bottomRows(X.rows() - 1).cwiseAbs().maxCoeff() > 0.0))
            throw ParseError("an ordinary differential operator must not involve y", 0);
        CVector a(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index j = 0; j < X.cols(); ++j) a[static_cast<std::size_t>(j)] = X(0, j);
        L.add_term(key.second, Cheb1(std::move(a), interval));
    }
    if (L.is_zero()) throw IllPosedError("zero differential operator");
    return L;
}

OdeCondition parse_ode_bc(const std::string& text)
{
    const std::size_t eq = text.find('=');
    const std::string lhs = text.substr(0, eq);
    const std::string rhs = eq == std::string::npos ? "0" : text.substr(eq + 1);

    // Every evaluation "u(x0)" or "diff(...)(x0)" is rewritten per point: the evaluations at one
    // point keep their derivative expression, all others become 0.
    static const std::regex eval(R"((\bu\b|\bdiff\s*\([^()]*\))\s*\(([^()]*)\))");
    struct Match {
        std::size_t pos, len;
        std::string expr;
        double point;
    };
    std::vector<Match> matches;
    for (auto it = std::sregex_iterator(lhs.begin(), lhs.end(), eval); it != std::sregex_iterator(); ++it) {
        const PdoExpr pt = parse_pdo((*it)[2].str());
        if (pt.has_u() || !is_constant_expr(pt.root()))
            throw ParseError("evaluation point must be a constant", static_cast<std::size_t>(it->position(2)));
        matches.push_back({static_cast<std::size_t>(it->position()), static_cast<std::size_t>(it->length()),
                           (*it)[1].str(), to_function(pt)(0.0, 0.0).real()});
    }
    if (matches.empty()) throw ParseError("condition has no point evaluation u(x0)", 0);
    auto rewrite = [&](const double* keep) {
        std::string out;
        std::size_t prev = 0;
        for (const auto& m : matches) {
            out += lhs.substr(prev, m.pos - prev);
            out += !keep || m.point == *keep ? "(" + m.expr + ")" : "(0)";
            prev = m.pos + m.len;
        }
        return out + lhs.substr(prev);
    };

    (void)parse_pdo(rewrite(nullptr));  // linearity over all evaluations together
    const double none = std::nan("");
    OdeCondition c;
    const PdoExpr free = parse_pdo(rewrite(&none));
    if (free.has_u()) throw ParseError("u must be evaluated at a point, as in u(1)", 0);
    const PdoExpr value = parse_pdo(trim(rhs).empty() ? "0" : rhs);
    if (value.has_u() || !is_constant_expr(value.root()) || !is_constant_expr(free.root()))
        throw ParseError("condition data must be constants", 0);
    c.value = to_function(value)(0.0, 0.0) - to_function(free)(0.0, 0.0);

    std::vector<double> points;
    for (const auto& m : matches)
        if (std::find(points.begin(), points.end(), m.point) == points.end()) points.push_back(m.point);
    for (const double p : points) {
        const PdoExpr e = parse_pdo(rewrite(&p));
        LinearBc lin;
        walk_bc(std::make_shared<ExprNode>(e.root()), 1.0, 0, Edge::Left, lin);
        for (const auto& [d, w] : lin.weights)
            if (w != cplx(0.0)) c.functional.terms.push_back({w, p, d});
    }
    if (c.functional.terms.empty()) throw ParseError("condition does not involve u", 0);
    return c;
}

}  // namespace spectra
