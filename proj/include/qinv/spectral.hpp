// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <qinv/box_cover.hpp>
#include <qinv/system_model.hpp>

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace qinv {

enum class SpectralClass { JointContractive, JointExpansive, Mixed };

std::string to_string(SpectralClass c);

/// Split of R^d into the A-invariant sums of generalized eigenspaces with
/// |lambda| < 1 (Ec) and |lambda| > 1 (Ee).
struct SpectralSplit {
    std::vector<std::complex<double>> eigvals;  // sorted by modulus, then argument
    Matrix Ec_basis;  // d x dc, orthonormal columns
    Matrix Ee_basis;  // d x de, orthonormal columns
    Matrix proj_Ec;   // projection onto Ec along Ee
    Matrix proj_Ee;
    SpectralClass cls = SpectralClass::Mixed;

    int dc() const { return static_cast<int>(Ec_basis.cols()); }
    int de() const { return static_cast<int>(Ee_basis.cols()); }
    /// Rows of [Ec Ee]^{-1}: coordinates of x in the split basis.
    Matrix Lc() const;
    Matrix Le() const;
};

/// Throws MarginalSpectrum when some ||lambda| - 1| < marginal_tol.
SpectralSplit spectral_split(const Matrix& A, double marginal_tol = 1e-8);

/// Orthonormal basis of the A-invariant subspace spanned by the generalized
/// eigenvectors whose eigenvalues satisfy the predicate.
Matrix invariant_subspace(const Matrix& A, bool (*select)(std::complex<double>));

struct SubspaceChain {
    std::vector<Matrix> spaces;  // orthonormal bases of S_0 ... S_{d-p}
    std::vector<int> dims;
    bool has_invariant_subspace = false;
};

/// S_0 = span(e_{p+1}, ..., e_d), S_{i+1} = A(S_i) intersected with that span.
/// The verdict is dim S_{d-p} > 0.
SubspaceChain invariant_subspace_in_kernel(const Matrix& A, int p, double rank_tol = 1e-9);

/// Stacked observability rows pi_p A^j for j = 0..d-p.
Matrix observability_matrix(const Matrix& A, int p);

struct TrapSet {
    BoxCover boxes;   // cover of the union of the per-word boxes
    double bound = 0.0;
    std::size_t words = 0;
    IntervalBox hull;
};

/// Outer cover of the states z(d-p) over difference-system orbits with
/// pi_p z(j) in (-1, 1)^p for j = 0..d-p. Throws UnboundedTrap when A has an
/// invariant subspace inside the unquantized coordinates.
TrapSet trap_set(const DifferenceSystem& diff, int p, int level = 2, std::size_t word_budget = 1000000,
                 std::size_t cell_budget = std::size_t{1} << 22);

}  // namespace qinv
