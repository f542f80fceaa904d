// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <qinv/interval.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace qinv {

/// Linear system x(k+1) = A x(k) + B u(k) with u in a finite alphabet and
/// quantized output y(k) = floor(C x(k) / delta).
struct QuantizedSystem {
    Matrix A;
    Matrix B;
    std::vector<Vector> alphabet;
    int p = 1;
    double delta = 1.0;
    Matrix C;  // p x d; empty means the projection onto the first p coordinates
    std::string name;
    // Entries of A are declared algebraically independent (set by lw_matrix).
    bool independent_entries = false;

    int d() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }

    /// Output map with an empty C expanded to the coordinate projection.
    Matrix output_map() const;
    /// Throws InvalidSystem or DimensionMismatch on malformed data.
    void validate() const;
    bool is_canonical() const;
};

/// Builds a validated system; the alphabet is deduplicated by exact equality
/// and sorted lexicographically.
QuantizedSystem make_system(Matrix A, Matrix B, std::vector<Vector> alphabet, int p, double delta = 1.0,
                            Matrix C = Matrix(), std::string name = {});

struct CanonicalForm {
    QuantizedSystem system;
    Matrix T;      // new state = T * old state
    Matrix T_inv;
    bool identity = false;
};

CanonicalForm canonicalize(const QuantizedSystem& raw);

/// Orthonormal basis of span(basis), reproducible for a given subspace:
/// built by Gram-Schmidt on the projections of e_1..e_n, largest residual
/// first, ties to the lowest index, with sign fixed so the largest entry is
/// positive.
Matrix canonical_basis(const Matrix& basis, double tol = 1e-9);

struct DifferenceSystem {
    Matrix A;
    Matrix B;
    std::vector<Vector> diff_alphabet;  // sorted, symmetric, contains 0
    int p = 1;
    std::size_t zero_index = 0;
};

DifferenceSystem build_difference(const QuantizedSystem& sys);

struct DoubledSystem {
    Matrix A;  // diag(A, A)
    Matrix B;  // diag(B, B)
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // indices into the alphabet
    std::vector<Vector> paired_alphabet;                     // (u, u') stacked
};

DoubledSystem build_doubled(const QuantizedSystem& sys);

struct AffineMap {
    Matrix M;
    Vector c;
};

/// Finite family of affine maps z -> M z + c sharing one dimension.
struct AffineIFS {
    std::vector<AffineMap> maps;

    int dim() const { return maps.empty() ? 0 : static_cast<int>(maps.front().M.rows()); }
    std::size_t size() const { return maps.size(); }
    /// True when every map shares one linear part.
    bool shared_linear_part() const;
    void validate() const;
};

/// Maps z -> A z + B u for every u in inputs.
AffineIFS forward_ifs(const Matrix& A, const Matrix& B, const std::vector<Vector>& inputs);
AffineIFS forward_ifs(const DifferenceSystem& diff);

/// Maps z -> M^{-1}(z - c).
AffineIFS build_inverse(const AffineIFS& ifs);

Vector step(const AffineIFS& ifs, const Eigen::Ref<const Vector>& state, std::size_t input_index);

Eigen::VectorXi quantized_output(const QuantizedSystem& sys, const Eigen::Ref<const Vector>& state);

/// Lexicographic order on vectors of equal length.
bool lex_less(const Vector& a, const Vector& b);

}  // namespace qinv
