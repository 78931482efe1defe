#include "spectra/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spectra/error.hpp"

namespace spectra {

namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'S', 'P', 'D', 'E', 'B', 'I', 'N', '1'};

const std::map<std::string, Edge> kEdges{
    {"left", Edge::Left}, {"right", Edge::Right}, {"down", Edge::Down}, {"up", Edge::Up}};

std::string edge_key(Edge e)
{
    for (const auto& [k, v] : kEdges)
        if (v == e) return k;
    return "?";
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw Error("cannot write '" + path + "'");
}

Json parse_json(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object()) throw SchemaError(where + " must be an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw SchemaError("unknown key '" + k + "' in " + where);
    }
}

void check_schema(const Json& j)
{
    if (!j.is_object() || !j.contains("schema")) throw SchemaError("missing \"schema\" tag");
    if (!j["schema"].is_string() || j["schema"].get<std::string>() != kSchema)
        throw SchemaError(std::string("unsupported schema (expected \"") + kSchema + "\")");
}

std::string number_text(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Expressions may be given as strings or plain numbers.
std::string expr_field(const Json& j, const std::string& where)
{
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number()) return number_text(j.get<double>());
    throw SchemaError(where + " must be a string or a number");
}

double number_field(const Json& j, const std::string& where)
{
    if (!j.is_number()) throw SchemaError(where + " must be a number");
    return j.get<double>();
}

std::size_t size_field(const Json& j, const std::string& where)
{
    if (!j.is_number_integer() || j.get<long long>() < 2) throw SchemaError(where + " must be an integer >= 2");
    return j.get<std::size_t>();
}

std::vector<double> domain_field(const Json& j, std::size_t n)
{
    if (!j.is_array() || j.size() != n) throw SchemaError("domain must be an array of " + std::to_string(n) + " numbers");
    std::vector<double> d;
    for (const auto& v : j) d.push_back(number_field(v, "domain entry"));
    for (std::size_t k = 0; k + 1 < n; k += 2)
        if (!(d[k] < d[k + 1])) throw SchemaError("domain must be ordered: a < b, c < d");
    return d;
}

BcEntry bc_entry(const Json& j, const std::string& where)
{
    check_keys(j, {"type", "data", "expr"}, where);
    if (!j.contains("type") || !j["type"].is_string()) throw SchemaError(where + ".type must be a string");
    BcEntry e;
    e.type = j["type"].get<std::string>();
    if (e.type != "dirichlet" && e.type != "neumann" && e.type != "expr")
        throw SchemaError(where + ".type must be dirichlet, neumann or expr");
    if (j.contains("data")) e.data = expr_field(j["data"], where + ".data");
    if (j.contains("expr")) {
        if (!j["expr"].is_string()) throw SchemaError(where + ".expr must be a string");
        e.expr = j["expr"].get<std::string>();
    }
    if (e.type == "expr" && e.expr.empty()) throw SchemaError(where + ": type expr needs \"expr\"");
    return e;
}

Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

cplx complex_field(const Json& j)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw SchemaError("complex entries must be [re, im] pairs");
    return {j[0].get<double>(), j[1].get<double>()};
}

Json matrix_json(const Matrix& X)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        Json r = Json::array();
        for (Eigen::Index j = 0; j < X.cols(); ++j) r.push_back(complex_json(X(i, j)));
        rows.push_back(std::move(r));
    }
    return rows;
}

Json diagnostics_json(const PdeDiagnostics& d, const Cheb2& u)
{
    Json steps = Json::array();
    for (const auto& s : d.steps)
        steps.push_back({{"nx", s.nx}, {"ny", s.ny}, {"residual", s.residual}, {"x_resolved", s.x_ok},
                         {"y_resolved", s.y_ok}});
    return {{"nx", d.nx},
            {"ny", d.ny},
            {"degree", Json::array({u.nx() - 1, u.ny() - 1})},
            {"splitting_rank", d.rank},
            {"singular_values", d.singular_values},
            {"residuals", steps},
            {"compat_defect", d.compat_defect},
            {"path", d.path},
            {"orientation", d.orientation},
            {"subproblems", d.subproblems},
            {"resolved", d.resolved}};
}

PdeDiagnostics diagnostics_field(const Json& j)
{
    PdeDiagnostics d;
    if (!j.is_object()) throw SchemaError("diagnostics must be an object");
    try {
        d.nx = j.value("nx", std::size_t{0});
        d.ny = j.value("ny", std::size_t{0});
        d.rank = j.value("splitting_rank", 0);
        d.singular_values = j.value("singular_values", std::vector<double>{});
        d.compat_defect = j.value("compat_defect", 0.0);
        d.path = j.value("path", std::string());
        d.orientation = j.value("orientation", std::string());
        d.subproblems = j.value("subproblems", std::size_t{1});
        d.resolved = j.value("resolved", false);
        if (j.contains("residuals")) {
            for (const auto& s : j["residuals"])
                d.steps.push_back({s.at("nx").get<std::size_t>(), s.at("ny").get<std::size_t>(),
                                   s.at("residual").get<double>(), s.value("x_resolved", false),
                                   s.value("y_resolved", false)});
        }
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("malformed diagnostics: ") + e.what());
    }
    return d;
}

void put_le(std::ostream& out, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_le(const unsigned char* b)
{
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return std::bit_cast<double>(bits);
}

}  // namespace

ProblemFile parse_problem(const std::string& json_text)
{
    const Json j = parse_json(json_text);
    check_schema(j);
    check_keys(j, {"schema", "operator", "domain", "rhs", "bc", "tol", "max_n", "rank_tol", "parity", "compatibility",
                   "start_n"},
               "problem");
    ProblemFile f;
    if (!j.contains("operator") || !j["operator"].is_string()) throw SchemaError("\"operator\" must be a string");
    f.op = j["operator"].get<std::string>();
    if (!j.contains("domain")) throw SchemaError("missing \"domain\"");
    const auto d = domain_field(j["domain"], 4);
    f.xinterval = Interval(d[0], d[1]);
    f.yinterval = Interval(d[2], d[3]);
    if (j.contains("rhs")) f.rhs = expr_field(j["rhs"], "rhs");
    if (!j.contains("bc")) throw SchemaError("missing \"bc\"");
    check_keys(j["bc"], {"left", "right", "down", "up"}, "bc");
    for (const auto& [k, v] : j["bc"].items()) {
        const std::string where = "bc." + k;
        auto& list = f.bcs[kEdges.at(k)];
        if (v.is_array()) {
            for (std::size_t m = 0; m < v.size(); ++m) list.push_back(bc_entry(v[m], where + "[" + std::to_string(m) + "]"));
        } else {
            list.push_back(bc_entry(v, where));
        }
        if (list.empty()) throw SchemaError(where + " has no conditions");
    }
    PdeOptions& o = f.options;
    if (j.contains("tol")) o.tol = number_field(j["tol"], "tol");
    if (j.contains("rank_tol")) o.rank_tol = number_field(j["rank_tol"], "rank_tol");
    if (j.contains("max_n")) o.max_n = size_field(j["max_n"], "max_n");
    if (j.contains("start_n")) o.start_n = size_field(j["start_n"], "start_n");
    if (!(o.tol > 0.0) || !(o.rank_tol > 0.0)) throw SchemaError("tolerances must be positive");
    if (j.contains("parity")) {
        if (!j["parity"].is_boolean()) throw SchemaError("parity must be true or false");
        o.parity = j["parity"].get<bool>();
    }
    if (j.contains("compatibility")) {
        const std::string c = j["compatibility"].is_string() ? j["compatibility"].get<std::string>() : "";
        if (c != "strict" && c != "relaxed") throw SchemaError("compatibility must be \"strict\" or \"relaxed\"");
        o.sylvester.enforce_compatibility = c == "strict";
    }
    return f;
}

ProblemFile read_problem(const std::string& path) { return parse_problem(read_text(path)); }

std::string problem_to_json(const ProblemFile& f)
{
    Json bc = Json::object();
    for (const auto& [edge, list] : f.bcs) {
        Json arr = Json::array();
        for (const auto& e : list) {
            Json o = {{"type", e.type}, {"data", e.data}};
            if (!e.expr.empty()) o["expr"] = e.expr;
            arr.push_back(std::move(o));
        }
        bc[edge_key(edge)] = arr.size() == 1 ? arr[0] : arr;
    }
    Json j = {{"schema", kSchema},
              {"operator", f.op},
              {"domain", {f.xinterval.a(), f.xinterval.b(), f.yinterval.a(), f.yinterval.b()}},
              {"rhs", f.rhs},
              {"bc", bc},
              {"tol", f.options.tol},
              {"max_n", f.options.max_n},
              {"rank_tol", f.options.rank_tol}};
    if (!f.options.parity) j["parity"] = false;
    if (!f.options.sylvester.enforce_compatibility) j["compatibility"] = "relaxed";
    return j.dump(2) + "\n";
}

PdeProblem build_problem(const ProblemFile& f)
{
    PdeProblem p = make_problem(f.op, f.rhs, f.xinterval, f.yinterval, {});
    for (const auto& [edge, list] : f.bcs) {
        BcSpec spec;
        spec.edge = edge;
        for (const auto& e : list) spec.conditions.push_back(make_bc(e.type, e.data, e.expr, edge, f.xinterval, f.yinterval));
        p.bcs.push_back(std::move(spec));
    }
    return p;
}

std::string result_to_json(const Solution& s, const std::string& sidecar)
{
    const Matrix& X = s.u.coeffs();
    Json j = {{"schema", kSchema},
              {"kind", "result"},
              {"domain", {s.u.xinterval().a(), s.u.xinterval().b(), s.u.yinterval().a(), s.u.yinterval().b()}},
              {"shape", {X.rows(), X.cols()}}};
    if (sidecar.empty()) {
        j["coefficients"] = matrix_json(X);
    } else {
        j["coefficients_file"] = sidecar;
    }
    j["diagnostics"] = diagnostics_json(s.diagnostics, s.u);
    // Kept apart so the rest of the document is reproducible byte for byte.
    j["timing"] = {{"wall_time", s.diagnostics.wall_time}};
    return j.dump(1) + "\n";
}

void write_result(const std::string& path, const Solution& s, std::size_t threshold)
{
    const Matrix& X = s.u.coeffs();
    std::string sidecar;
    if (static_cast<std::size_t>(X.size()) > threshold) {
        const std::filesystem::path bin = path + ".bin";
        write_sidecar(bin.string(), X);
        sidecar = bin.filename().string();
    }
    write_text(path, result_to_json(s, sidecar));
}

ResultFile parse_result(const std::string& json_text, const std::string& base_dir)
{
    const Json j = parse_json(json_text);
    check_schema(j);
    check_keys(j, {"schema", "kind", "domain", "shape", "coefficients", "coefficients_file", "diagnostics", "timing"},
               "result");
    if (j.value("kind", std::string()) != "result") throw SchemaError("not a result document");
    const auto d = domain_field(j.at("domain"), 4);
    if (!j.contains("shape") || !j["shape"].is_array() || j["shape"].size() != 2)
        throw SchemaError("shape must be [rows, cols]");
    const auto rows = j["shape"][0].get<Eigen::Index>(), cols = j["shape"][1].get<Eigen::Index>();
    if (rows < 1 || cols < 1) throw SchemaError("shape must be positive");
    Matrix X(rows, cols);
    if (j.contains("coefficients")) {
        const Json& c = j["coefficients"];
        if (!c.is_array() || static_cast<Eigen::Index>(c.size()) != rows) throw SchemaError("coefficients do not match shape");
        for (Eigen::Index i = 0; i < rows; ++i) {
            const Json& r = c[static_cast<std::size_t>(i)];
            if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols) throw SchemaError("coefficients do not match shape");
            for (Eigen::Index k = 0; k < cols; ++k) X(i, k) = complex_field(r[static_cast<std::size_t>(k)]);
        }
    } else if (j.contains("coefficients_file")) {
        const std::filesystem::path file = j["coefficients_file"].get<std::string>();
        X = read_sidecar((file.is_absolute() ? file : std::filesystem::path(base_dir) / file).string(), rows, cols);
    } else {
        throw SchemaError("result has no coefficients");
    }
    ResultFile r{Cheb2(std::move(X), Interval(d[0], d[1]), Interval(d[2], d[3])), {}};
    if (j.contains("diagnostics")) r.diagnostics = diagnostics_field(j["diagnostics"]);
    if (j.contains("timing")) r.diagnostics.wall_time = j["timing"].value("wall_time", 0.0);
    return r;
}

ResultFile read_result(const std::string& path)
{
    const std::filesystem::path p(path);
    return parse_result(read_text(path), p.has_parent_path() ? p.parent_path().string() : ".");
}

void write_sidecar(const std::string& path, const Matrix& X)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(kMagic, sizeof kMagic);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            put_le(out, X(i, j).real());
            put_le(out, X(i, j).imag());
        }
    if (!out) throw Error("cannot write '" + path + "'");
}

Matrix read_sidecar(const std::string& path, Eigen::Index rows, Eigen::Index cols)
{
    const std::string bytes = read_text(path);
    const std::size_t need = sizeof kMagic + 16 * static_cast<std::size_t>(rows * cols);
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw SchemaError("'" + path + "' is not a coefficient sidecar");
    if (bytes.size() != need) throw SchemaError("sidecar '" + path + "' does not match the declared shape");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + sizeof kMagic;
    Matrix X(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j, p += 16) X(i, j) = cplx(get_le(p), get_le(p + 8));
    return X;
}

std::string ode_result_to_json(const OdeSolution& s)
{
    Json c = Json::array();
    for (const cplx& z : s.u.coeffs()) c.push_back(complex_json(z));
    Json j = {{"schema", kSchema},
              {"kind", "ode-result"},
              {"domain", {s.u.interval().a(), s.u.interval().b()}},
              {"coefficients", c},
              {"diagnostics", {{"degree", s.u.degree()}, {"n", s.n}, {"residual", s.residual}, {"sizes", s.sizes}}}};
    return j.dump(1) + "\n";
}

}  // namespace spectra
