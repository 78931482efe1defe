#pragma once

// Problem and result documents: JSON tagged "schema": "spectra-pde/1". Large coefficient
// matrices go to a binary sidecar ("SPDEBIN1" magic, then little-endian float64 (re, im) pairs,
// row-major).

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "spectra/ode.hpp"
#include "spectra/pde.hpp"

namespace spectra {

inline constexpr const char* kSchema = "spectra-pde/1";
inline constexpr std::size_t kSidecarThreshold = 1000000;

/// One condition of an edge. type is "dirichlet", "neumann" or "expr" (then expr is the
/// functional, e.g. "u + 5*diff(u)"); data is an expression in the tangential variable.
struct BcEntry {
    std::string type;
    std::string data = "0";
    std::string expr;
};

struct ProblemFile {
    std::string op;
    std::string rhs = "0";
    Interval xinterval;
    Interval yinterval;
    std::map<Edge, std::vector<BcEntry>> bcs;
    /// tol, max_n, rank_tol; "parity" and "compatibility": "strict" | "relaxed" are optional keys.
    PdeOptions options;
};

/// Throws SchemaError on malformed documents (unknown keys included).
[[nodiscard]] ProblemFile parse_problem(const std::string& json_text);
[[nodiscard]] ProblemFile read_problem(const std::string& path);
[[nodiscard]] std::string problem_to_json(const ProblemFile& p);

/// Parses the operator, rhs and conditions (ParseError / NonlinearityError on bad expressions).
[[nodiscard]] PdeProblem build_problem(const ProblemFile& f);

struct ResultFile {
    Cheb2 u;
    PdeDiagnostics diagnostics;
};

/// Result document text. When `sidecar` is non-empty the coefficients are referenced by that file
/// name instead of embedded.
[[nodiscard]] std::string result_to_json(const Solution& s, const std::string& sidecar = "");
/// Writes `path`, plus `path` with ".bin" appended when X has more than `threshold` entries.
void write_result(const std::string& path, const Solution& s, std::size_t threshold = kSidecarThreshold);
/// Relative sidecar names resolve against the directory of `path`.
[[nodiscard]] ResultFile read_result(const std::string& path);
[[nodiscard]] ResultFile parse_result(const std::string& json_text, const std::string& base_dir = ".");

void write_sidecar(const std::string& path, const Matrix& X);
[[nodiscard]] Matrix read_sidecar(const std::string& path, Eigen::Index rows, Eigen::Index cols);

[[nodiscard]] std::string ode_result_to_json(const OdeSolution& s);

}  // namespace spectra
