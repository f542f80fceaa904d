// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <qinv/spectral.hpp>

#include <qinv/errors.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace qinv {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

std::string to_string(SpectralClass c) {
    switch (c) {
        case SpectralClass::JointContractive: return "joint-contractive";
        case SpectralClass::JointExpansive: return "joint-expansive";
        case SpectralClass::Mixed: return "mixed";
    }
    return "?";
}

namespace {

// c real, s complex with [c s; -conj(s) c] [f; g] = [r; 0].
void make_rotation(cplx f, cplx g, double& c, cplx& s) {
    const double af = std::abs(f);
    const double ag = std::abs(g);
    if (ag == 0.0) {
        c = 1.0;
        s = 0.0;
        return;
    }
    if (af == 0.0) {
        c = 0.0;
        s = std::conj(g) / ag;
        return;
    }
    const double n = std::hypot(af, ag);
    c = af / n;
    s = (f / af) * std::conj(g) / n;
}

// x' = c x + s y, y' = -conj(s) x + c y, elementwise.
template <typename X, typename Y>
void rotate(X&& x, Y&& y, double c, cplx s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const cplx a = x(i);
        const cplx b = y(i);
        x(i) = c * a + s * b;
        y(i) = -std::conj(s) * a + c * b;
    }
}

// Swaps diagonal entries k and k+1 of the triangular T, updating U so that
// A = U T U^* still holds.
void swap_diagonal(CMatrix& T, CMatrix& U, Eigen::Index k) {
    const Eigen::Index n = T.rows();
    const cplx t11 = T(k, k);
    const cplx t22 = T(k + 1, k + 1);
    double c = 1.0;
    cplx s = 0.0;
    make_rotation(T(k, k + 1), t22 - t11, c, s);
    if (k + 2 < n) rotate(T.row(k).segment(k + 2, n - k - 2), T.row(k + 1).segment(k + 2, n - k - 2), c, s);
    {
        auto col_k = T.col(k).head(k);
        auto col_k1 = T.col(k + 1).head(k);
        rotate(col_k, col_k1, c, std::conj(s));
    }
    T(k, k) = t22;
    T(k + 1, k + 1) = t11;
    rotate(U.col(k), U.col(k + 1), c, std::conj(s));
}

Matrix orthonormal_columns(const Matrix& W, double rank_tol) {
    if (W.cols() == 0 || W.rows() == 0) return Matrix(W.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return Matrix(W.rows(), 0);
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > rank_tol * sv(0)) ++r;
    return svd.matrixU().leftCols(r);
}

Matrix null_space(const Matrix& M, double rank_tol) {
    const Eigen::Index n = M.cols();
    if (M.rows() == 0) return Matrix::Identity(n, n);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index r = 0;
    const double top = sv.size() ? sv(0) : 0.0;
    while (r < sv.size() && top > 0.0 && sv(r) > rank_tol * std::max(top, 1.0)) ++r;
    return svd.matrixV().rightCols(n - r);
}

bool is_contractive(cplx z) { return std::abs(z) < 1.0; }
bool is_expansive(cplx z) { return std::abs(z) > 1.0; }

}  // namespace

Matrix SpectralSplit::Lc() const {
    Matrix V(Ec_basis.rows(), Ec_basis.cols() + Ee_basis.cols());
    V << Ec_basis, Ee_basis;
    return V.inverse().topRows(dc());
}

Matrix SpectralSplit::Le() const {
    Matrix V(Ec_basis.rows(), Ec_basis.cols() + Ee_basis.cols());
    V << Ec_basis, Ee_basis;
    return V.inverse().bottomRows(de());
}

Matrix invariant_subspace(const Matrix& A, bool (*select)(std::complex<double>)) {
    const Eigen::Index n = A.rows();
    Eigen::ComplexSchur<CMatrix> schur(A.cast<cplx>());
    CMatrix T = schur.matrixT();
    CMatrix U = schur.matrixU();
    // Bubble the selected eigenvalues to the top of the diagonal.
    Eigen::Index placed = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!select(T(i, i))) continue;
        for (Eigen::Index k = i; k > placed; --k) swap_diagonal(T, U, k - 1);
        ++placed;
    }
    if (placed == 0) return Matrix(n, 0);
    Matrix W(n, 2 * placed);
    W << U.leftCols(placed).real(), U.leftCols(placed).imag();
    // The selection is closed under conjugation, so the real and imaginary
    // parts span a real subspace of the same dimension.
    Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeThinU);
    return canonical_basis(svd.matrixU().leftCols(placed));
}

SpectralSplit spectral_split(const Matrix& A, double marginal_tol) {
    if (A.rows() == 0 || A.rows() != A.cols()) throw DimensionMismatch("spectral_split needs a square matrix");
    const Eigen::Index n = A.rows();
    Eigen::ComplexEigenSolver<CMatrix> es(A.cast<cplx>(), false);
    SpectralSplit out;
    for (Eigen::Index i = 0; i < n; ++i) out.eigvals.push_back(es.eigenvalues()(i));
    std::sort(out.eigvals.begin(), out.eigvals.end(), [](cplx a, cplx b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        return std::arg(a) < std::arg(b);
    });
    for (const auto& z : out.eigvals)
        if (std::abs(std::abs(z) - 1.0) < marginal_tol)
            throw MarginalSpectrum("eigenvalue of modulus " + std::to_string(std::abs(z)) + " within " +
                                   std::to_string(marginal_tol) + " of the unit circle");
    out.Ec_basis = invariant_subspace(A, is_contractive);
    out.Ee_basis = invariant_subspace(A, is_expansive);
    const int dc = out.dc();
    const int de = out.de();
    if (dc + de != n) throw MarginalSpectrum("invariant subspaces do not split the state space");
    Matrix V(n, n);
    V << out.Ec_basis, out.Ee_basis;
    const Matrix Vinv = V.inverse();
    Matrix Dc = Matrix::Zero(n, n);
    Dc.topLeftCorner(dc, dc).setIdentity();
    out.proj_Ec = V * Dc * Vinv;
    out.proj_Ee = Matrix::Identity(n, n) - out.proj_Ec;
    out.cls = de == 0 ? SpectralClass::JointContractive : dc == 0 ? SpectralClass::JointExpansive : SpectralClass::Mixed;
    return out;
}

SubspaceChain invariant_subspace_in_kernel(const Matrix& A, int p, double rank_tol) {
    const int d = static_cast<int>(A.rows());
    if (A.cols() != d) throw DimensionMismatch("A must be square");
    if (p < 1 || p > d) throw InvalidSystem("p must satisfy 1 <= p <= d");
    SubspaceChain chain;
    Matrix S = Matrix::Zero(d, d - p);
    S.bottomRows(d - p).setIdentity();
    chain.spaces.push_back(S);
    chain.dims.push_back(d - p);
    for (int i = 0; i < d - p; ++i) {
        Matrix W = orthonormal_columns(A * S, rank_tol);
        if (W.cols() == 0) {
            S = Matrix(d, 0);
        } else {
            const Matrix N = null_space(W.topRows(p), rank_tol);
            S = orthonormal_columns(W * N, rank_tol);
        }
        chain.spaces.push_back(S);
        chain.dims.push_back(static_cast<int>(S.cols()));
    }
    chain.has_invariant_subspace = chain.dims.back() > 0;
    return chain;
}

Matrix observability_matrix(const Matrix& A, int p) {
    const int d = static_cast<int>(A.rows());
    const int n = d - p;
    Matrix O(p * (n + 1), d);
    Matrix Aj = Matrix::Identity(d, d);
    for (int j = 0; j <= n; ++j) {
        O.middleRows(j * p, p) = Aj.topRows(p);
        Aj = Aj * A;
    }
    return O;
}

TrapSet trap_set(const DifferenceSystem& diff, int p, int level, std::size_t word_budget, std::size_t cell_budget) {
    const Matrix& A = diff.A;
    const int d = static_cast<int>(A.rows());
    const SubspaceChain chain = invariant_subspace_in_kernel(A, p);
    if (chain.has_invariant_subspace)
        throw UnboundedTrap("A has an invariant subspace of dimension " + std::to_string(chain.dims.back()) +
                            " inside the unquantized coordinates");
    const int n = d - p;
    const std::size_t nv = diff.diff_alphabet.size();
    double words = 1.0;
    for (int i = 0; i < n; ++i) words *= static_cast<double>(nv);
    if (words > static_cast<double>(word_budget))
        throw BudgetExceeded("trap set needs " + std::to_string(words) + " input words");

    const Matrix O = observability_matrix(A, p);
    const Matrix Opinv = O.completeOrthogonalDecomposition().pseudoInverse();
    Matrix An = Matrix::Identity(d, d);
    for (int i = 0; i < n; ++i) An = A * An;
    const Matrix G = An * Opinv;
    const Vector radius = G.cwiseAbs().rowwise().sum();

    std::vector<Vector> bv;
    for (const auto& v : diff.diff_alphabet) bv.push_back(diff.B * v);

    TrapSet out;
    out.words = static_cast<std::size_t>(words);
    std::vector<IntervalBox> boxes;
    std::vector<std::size_t> word(static_cast<std::size_t>(n), 0);
    while (true) {
        // Forced responses c_j for j = 0..n.
        Vector cbar(p * (n + 1));
        Vector c = Vector::Zero(d);
        cbar.head(p) = c.head(p);
        for (int j = 1; j <= n; ++j) {
            c = A * c + bv[word[static_cast<std::size_t>(j - 1)]];
            cbar.segment(j * p, p) = c.head(p);
        }
        const Vector center = c - G * cbar;
        const Vector pad = 1e-9 * (Vector::Ones(d) + center.cwiseAbs() + radius);
        boxes.push_back({center - radius - pad, center + radius + pad});
        int j = 0;
        for (; j < n; ++j) {
            if (++word[static_cast<std::size_t>(j)] < nv) break;
            word[static_cast<std::size_t>(j)] = 0;
        }
        if (j == n) break;
    }
    out.hull = boxes.front();
    for (const auto& b : boxes) {
        out.hull.lo = out.hull.lo.cwiseMin(b.lo);
        out.hull.hi = out.hull.hi.cwiseMax(b.hi);
    }
    out.bound = std::max(out.hull.lo.cwiseAbs().maxCoeff(), out.hull.hi.cwiseAbs().maxCoeff());
    if (d <= kMaxCoverDim) {
        std::unordered_set<Cell, CellHash> acc;
        for (const auto& b : boxes) {
            if (cell_count(b, level) > static_cast<double>(cell_budget))
                throw BudgetExceeded("trap set cover exceeds the cell budget");
            for_each_cell(b, level, [&](const Cell& x) { acc.insert(x); });
            if (acc.size() > cell_budget) throw BudgetExceeded("trap set cover exceeds the cell budget");
        }
        out.boxes = BoxCover(d, level);
        out.boxes.cells.assign(acc.begin(), acc.end());
        out.boxes.normalize();
    }
    return out;
}

}  // namespace qinv
