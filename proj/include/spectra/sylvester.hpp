#pragma once

// Constrained generalized Sylvester equations
//   sum_j A_j X C_j^T = F,   B_y X = H,   X B_x^T = G^T
// solved by eliminating the constrained degrees of freedom and dispatching on the number of terms.

#include <cstddef>
#include <string>
#include <vector>

#include "spectra/banded.hpp"
#include "spectra/types.hpp"

namespace spectra {

struct ConstrainedSylvester {
    std::vector<BandedOp> A;  // n_y x n_y
    std::vector<BandedOp> C;  // n_x x n_x
    Matrix F;                 // n_y x n_x
    Matrix By;                // K_y x n_y
    Matrix Bx;                // K_x x n_x
    Matrix H;                 // K_y x n_x
    Matrix G;                 // K_x x n_y

    [[nodiscard]] std::size_t terms() const noexcept { return A.size(); }
    [[nodiscard]] Eigen::Index ny() const noexcept { return F.rows(); }
    [[nodiscard]] Eigen::Index nx() const noexcept { return F.cols(); }
    /// Throws SizeError on inconsistent dimensions.
    void validate() const;
};

enum class SylvesterPath { Auto, K1, K2, KGE3 };
enum class KronSolver { Auto, AlmostBanded, Dense };

struct SylvesterOptions {
    double compat_tol = 1e-10;
    /// Relative pivot threshold of the two-term back substitution.
    double pencil_tol = 1e-14;
    /// Relative threshold below which a constraint pivot counts as zero.
    double dependence_tol = 1e-12;
    /// Agreement required between the two formulas for the corner block X_11.
    double recover_tol = 1e-10;
    /// When false, incompatible corner data are accepted: the defect is only reported and the
    /// corner block is the mean of its two formulas.
    bool enforce_compatibility = true;
    double memory_cap_bytes = 2.0 * 1024 * 1024 * 1024;
    SylvesterPath path = SylvesterPath::Auto;
    /// Linear solver of the k >= 3 path; Auto uses dense LU when the band covers most of the matrix.
    KronSolver kron_solver = KronSolver::Auto;
    /// Optional forced pivot columns for canonicalization (size K_y / K_x when given).
    std::vector<Eigen::Index> pivots_y;
    std::vector<Eigen::Index> pivots_x;
};

struct SylvesterReport {
    std::string path;
    /// Kronecker vectorization for the k >= 3 path: "x-major" (x index fastest) or "y-major".
    std::string orientation;
    /// "almost-banded" or "dense" (chosen when the Kronecker band covers most of the matrix).
    std::string kron_solver;
    double cost_x_major = 0.0;
    double cost_y_major = 0.0;
    double compat_defect = 0.0;
    double x11_disagreement = 0.0;
};

/// Constraints rewritten as [I | B2] in a permuted column order.
struct CanonicalConstraints {
    /// perm[a] = original index of the column at canonical position a; pivots come first.
    std::vector<Eigen::Index> perm;
    /// K x n, columns in canonical order, leading block exactly the identity.
    Matrix B;
    /// Inverse of the pivot block, applied to the data.
    Matrix Binv;
};

/// Column-pivoted elimination of a K x n constraint matrix. Pivot candidates are the first
/// min(n, 2K) columns (all columns if that set is rank deficient); pivots move to the front and the
/// remaining columns keep their order. Throws DependentConstraintsError.
[[nodiscard]] CanonicalConstraints canonicalize_rows(const Matrix& B, double dependence_tol = 1e-12,
                                                     const std::vector<Eigen::Index>& forced = {});

struct CanonicalSylvester {
    CanonicalConstraints y;
    CanonicalConstraints x;
    /// Canonical data: H' = By^-1 H P_x (K_y x n_x), G' = Bx^-1 G P_y (K_x x n_y).
    Matrix H;
    Matrix G;
};

[[nodiscard]] CanonicalSylvester canonicalize(const ConstrainedSylvester& S, const SylvesterOptions& opts = {});

/// max |H B_x^T - B_y G^T| and whether it is within
/// tol * max(||H||_inf max|B_x|, ||G||_inf max|B_y|, 1).
struct Compatibility {
    bool ok = true;
    double defect = 0.0;
};
[[nodiscard]] Compatibility check_compatibility(const Matrix& By, const Matrix& Bx, const Matrix& H, const Matrix& G,
                                                double tol = 1e-10);
[[nodiscard]] Compatibility check_compatibility(const ConstrainedSylvester& S, double tol = 1e-10);

/// The reduced equation sum_j At_j X22 Ct_j^T = Ft on (n_y - K_y) x (n_x - K_x) unknowns.
struct ReducedSylvester {
    std::vector<AlmostBanded> A;
    std::vector<AlmostBanded> C;
    Matrix F;
};

[[nodiscard]] ReducedSylvester eliminate(const ConstrainedSylvester& S, const CanonicalSylvester& can);

/// A X C^T = F by two sweeps of almost-banded solves.
[[nodiscard]] Matrix solve_k1(const AlmostBanded& A, const AlmostBanded& C, const Matrix& F);

/// A1 X C1^T + A2 X C2^T = F by the generalized Bartels-Stewart algorithm (complex QZ).
/// Throws NonUniqueSolutionError when a back-substitution pivot is below pencil_tol * scale.
[[nodiscard]] Matrix solve_k2(const Matrix& A1, const Matrix& C1, const Matrix& A2, const Matrix& C2, const Matrix& F,
                              double pencil_tol = 1e-14);

/// sum_j A_j X C_j^T = F through an almost-banded Kronecker system in the cheaper orientation.
/// Throws ResourceError when the predicted storage exceeds the memory cap.
[[nodiscard]] Matrix solve_kge3(const std::vector<AlmostBanded>& A, const std::vector<AlmostBanded>& C, const Matrix& F,
                                const SylvesterOptions& opts = {}, SylvesterReport* report = nullptr);

/// Predicted cost N (L + U + K)(L + K) of the Kronecker solve with `inner` varying fastest.
[[nodiscard]] double kronecker_cost(const std::vector<AlmostBanded>& outer, const std::vector<AlmostBanded>& inner);

/// Rebuild the full X from X22 and the constraints; undoes the canonical permutations.
/// Throws CompatibilityError if the two formulas for X11 disagree (tol <= 0 disables the check).
[[nodiscard]] Matrix recover(const Matrix& X22, const CanonicalSylvester& can, double tol = 1e-10,
                             double* disagreement = nullptr);

/// Full pipeline: canonicalize, check compatibility, eliminate, solve, recover.
[[nodiscard]] Matrix solve_constrained(const ConstrainedSylvester& S, const SylvesterOptions& opts = {},
                                       SylvesterReport* report = nullptr);

/// A X with banded A.
[[nodiscard]] Matrix banded_left(const BandedOp& A, const Matrix& X);
/// X C^T with banded C.
[[nodiscard]] Matrix banded_right(const Matrix& X, const BandedOp& C);
/// sum_j A_j X C_j^T.
[[nodiscard]] Matrix apply_operator(const ConstrainedSylvester& S, const Matrix& X);

}  // namespace spectra
