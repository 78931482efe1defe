#pragma once

// Adaptive solution of L u = f on a rectangle with linear boundary conditions on the edges.

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spectra/cheb.hpp"
#include "spectra/pdo.hpp"
#include "spectra/separable.hpp"
#include "spectra/sylvester.hpp"

namespace spectra {

struct PdeProblem {
    CoeffArray op;
    Interval xinterval;
    Interval yinterval;
    std::vector<BcSpec> bcs;
    /// Right-hand side; an empty function means f = 0.
    Function2 rhs;
};

/// Parse operator, rhs and per-edge condition strings (see parse_bc). Edges without an entry are free.
[[nodiscard]] PdeProblem make_problem(const std::string& op, const std::string& rhs, Interval xinterval,
                                      Interval yinterval, const std::map<Edge, std::string>& bcs);

struct PdeOptions {
    /// Tail-test tolerance relative to max |X|.
    double tol = 1e-14;
    std::size_t start_n = 9;
    /// Largest discretization size per dimension.
    std::size_t max_n = 2049;
    double rank_tol = 1e-12;
    /// Use the even/odd decoupling when the problem allows it.
    bool parity = true;
    /// Worker threads for independent subproblems; 0 reads SPECTRA_PDE_THREADS, else hardware.
    unsigned threads = 0;
    SylvesterOptions sylvester;
};

struct PdeStep {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double residual = 0.0;
    bool x_ok = false;
    bool y_ok = false;
};

struct PdeDiagnostics {
    std::size_t nx = 0;
    std::size_t ny = 0;
    int rank = 0;
    std::vector<double> singular_values;
    std::vector<PdeStep> steps;
    double compat_defect = 0.0;
    std::string path;
    std::string orientation;
    std::size_t subproblems = 1;
    bool resolved = false;
    double wall_time = 0.0;
};

struct Solution {
    Cheb2 u;
    PdeDiagnostics diagnostics;
};

/// One boundary condition with its data resolved to a Chebyshev series in the tangential variable.
struct BcData {
    Edge edge = Edge::Left;
    std::map<int, cplx> weights;
    Cheb1 data;
};

[[nodiscard]] std::vector<BcData> resolve_bc_data(const std::vector<BcSpec>& bcs, Interval xinterval,
                                                  Interval yinterval, double tol = 1e-14);

/// Constraint rows acting on X (y rows from the down/up edges, x rows from left/right) and their data.
struct BcDiscretization {
    Matrix Bx;  // K_x x n_x
    Matrix G;   // K_x x n_y
    Matrix By;  // K_y x n_y
    Matrix H;   // K_y x n_x
};

[[nodiscard]] BcDiscretization discretize_bcs(const std::vector<BcData>& bcs, std::size_t nx, std::size_t ny,
                                              Interval xinterval, Interval yinterval);
[[nodiscard]] BcDiscretization discretize_bcs(const std::vector<BcSpec>& bcs, std::size_t nx, std::size_t ny,
                                              Interval xinterval, Interval yinterval);

/// rhs coefficients mapped to the C^(N_y) (x) C^(N_x) range basis, truncated or padded to rows x cols.
[[nodiscard]] Matrix convert_rhs(const Matrix& coeffs, int Ny, int Nx, std::size_t rows, std::size_t cols);

/// The n_y x n_x constrained Sylvester system of the separable representation.
[[nodiscard]] ConstrainedSylvester build_system(const SeparableRep& rep, const Matrix& rhs_coeffs,
                                                const BcDiscretization& bcs, std::size_t nx, std::size_t ny);

/// (x_ok, y_ok): trailing columns / rows below tol * max |X|.
[[nodiscard]] std::pair<bool, bool> is_resolved(const Matrix& X, double tol = 1e-14);

struct AxisParity {
    bool eligible = false;
    /// Parity of every derivative order of the operator in this variable.
    int parity = 0;
};

struct ParityPlan {
    AxisParity x;
    AxisParity y;
    [[nodiscard]] std::size_t count() const noexcept { return (x.eligible ? 2u : 1u) * (y.eligible ? 2u : 1u); }
};

/// Even/odd decoupling test. A variable splits when all coefficients are constant, its derivative
/// orders share one parity, and both opposite edges carry single-order conditions with the same
/// set of orders (pure Dirichlet, pure Neumann, or both as in the clamped biharmonic problem).
[[nodiscard]] ParityPlan parity_split(const CoeffArray& op, const std::vector<BcSpec>& bcs);

/// Residual of the discrete equations and constraints relative to `scale` (default: the data of S).
[[nodiscard]] double system_residual(const ConstrainedSylvester& S, const Matrix& X, double scale = 0.0);

/// Solve at a fixed size, optionally with the parity split. Fills steps-free diagnostics.
[[nodiscard]] Matrix solve_pde_fixed(const PdeProblem& p, std::size_t nx, std::size_t ny, const PdeOptions& opts = {},
                                     PdeDiagnostics* diag = nullptr);

/// Adaptive solve on grids 9, 17, 33, ... per dimension. Throws UnresolvedError past max_n.
[[nodiscard]] Solution solve_pde(const PdeProblem& p, const PdeOptions& opts = {});

}  // namespace spectra
