#pragma once

// Splitting rank and separable representation L = sum_r L^y_r (x) L^x_r of a partial
// differential operator, from an SVD of the unfolded coefficient symbol.

#include <utility>
#include <vector>

#include "spectra/pdo.hpp"
#include "spectra/ultraspherical.hpp"

namespace spectra {

struct SeparableTerm {
    LinearODO y;
    LinearODO x;
};

struct SeparableRep {
    int k = 0;
    std::vector<SeparableTerm> terms;
    /// Every singular value of the unfolding, descending.
    std::vector<double> singular_values;
    /// sqrt of the sum of squares of the discarded singular values.
    double discarded = 0.0;
    Interval xinterval;
    Interval yinterval;
    /// Largest derivative orders over all terms.
    int Ny = 0;
    int Nx = 0;
};

/// Unfolding matrix: rows (i, alpha) = (y-order, y-mode), columns (j, beta) = (x-order, x-mode),
/// entry = Chebyshev coefficient (alpha, beta) of l_ij.
[[nodiscard]] Matrix unfolding_matrix(const CoeffArray& C);

/// k = number of singular values above tau * sigma_max; each side of term r carries sqrt(sigma_r).
/// Throws IllPosedError for an empty (zero) operator.
[[nodiscard]] SeparableRep splitting_rank(const CoeffArray& C, double tau = 1e-12);

/// Re-expand a separable representation into coefficient form (validation only).
[[nodiscard]] CoeffArray reconstruct_symbol(const SeparableRep& S);

}  // namespace spectra
