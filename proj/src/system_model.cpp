// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <qinv/system_model.hpp>

#include <qinv/errors.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace qinv {

bool lex_less(const Vector& a, const Vector& b) {
    for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i) {
        if (a(i) < b(i)) return true;
        if (b(i) < a(i)) return false;
    }
    return a.size() < b.size();
}

namespace {

bool exactly_equal(const Vector& a, const Vector& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

void sort_unique(std::vector<Vector>& v) {
    std::sort(v.begin(), v.end(), lex_less);
    v.erase(std::unique(v.begin(), v.end(), exactly_equal), v.end());
}

double inf_norm(const Matrix& M) {
    return M.rows() == 0 ? 0.0 : M.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

Matrix QuantizedSystem::output_map() const {
    if (C.size() != 0) return C;
    Matrix proj = Matrix::Zero(p, d());
    proj.leftCols(p).setIdentity();
    return proj;
}

void QuantizedSystem::validate() const {
    if (A.rows() == 0 || A.rows() != A.cols())
        throw DimensionMismatch("A must be a nonempty square matrix");
    if (B.rows() != A.rows() || B.cols() == 0)
        throw DimensionMismatch("B must have d rows and at least one column");
    if (p < 1 || p > d()) throw InvalidSystem("p must satisfy 1 <= p <= d, got " + std::to_string(p));
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidSystem("delta must be positive");
    if (C.size() != 0 && (C.rows() != p || C.cols() != d()))
        throw DimensionMismatch("C must be p x d");
    if (alphabet.empty()) throw InvalidSystem("alphabet is empty");
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
        if (alphabet[i].size() != m()) throw DimensionMismatch("alphabet vector length differs from columns of B");
        if (!alphabet[i].allFinite()) throw InvalidSystem("alphabet entry is not finite");
        for (std::size_t j = 0; j < i; ++j)
            if (exactly_equal(alphabet[i], alphabet[j])) throw InvalidSystem("duplicate alphabet vector");
    }
    if (!A.allFinite() || !B.allFinite()) throw InvalidSystem("system matrices must be finite");
}

bool QuantizedSystem::is_canonical() const {
    if (delta != 1.0) return false;
    if (C.size() == 0) return true;
    Matrix proj = Matrix::Zero(p, d());
    proj.leftCols(p).setIdentity();
    return (C.array() == proj.array()).all();
}

QuantizedSystem make_system(Matrix A, Matrix B, std::vector<Vector> alphabet, int p, double delta, Matrix C,
                            std::string name) {
    QuantizedSystem sys;
    sys.A = std::move(A);
    sys.B = std::move(B);
    sort_unique(alphabet);
    sys.alphabet = std::move(alphabet);
    sys.p = p;
    sys.delta = delta;
    sys.C = std::move(C);
    sys.name = std::move(name);
    sys.validate();
    return sys;
}

Matrix canonical_basis(const Matrix& basis, double tol) {
    const Eigen::Index n = basis.rows();
    if (basis.cols() == 0) return Matrix(n, 0);
    Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    Eigen::Index r = 0;
    const double cutoff = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
    while (r < sv.size() && sv(r) > cutoff) ++r;
    const Matrix Q = svd.matrixU().leftCols(r);

    Matrix out(n, r);
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (Eigen::Index k = 0; k < r; ++k) {
        Eigen::Index best = -1;
        double best_norm = -1.0;
        Vector best_vec;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            Vector v = Q * Q.row(i).transpose();  // projection of e_i
            for (Eigen::Index j = 0; j < k; ++j) v -= out.col(j).dot(v) * out.col(j);
            const double nv = v.norm();
            if (nv > best_norm + 1e-12) {
                best_norm = nv;
                best = i;
                best_vec = v;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        best_vec /= best_norm;
        Eigen::Index arg = 0;
        best_vec.cwiseAbs().maxCoeff(&arg);
        if (best_vec(arg) < 0) best_vec = -best_vec;
        out.col(k) = best_vec;
    }
    return out;
}

CanonicalForm canonicalize(const QuantizedSystem& raw) {
    raw.validate();
    CanonicalForm out;
    const int d = raw.d();
    if (raw.is_canonical()) {
        out.system = raw;
        out.system.C = Matrix();
        out.T = Matrix::Identity(d, d);
        out.T_inv = Matrix::Identity(d, d);
        out.identity = true;
        return out;
    }
    const Matrix C = raw.output_map();
    Eigen::FullPivLU<Matrix> lu(C);
    lu.setThreshold(1e-12);
    if (C.isZero(0.0) || lu.rank() < raw.p)
        throw RankDeficientOutputMap("rank(C) = " + std::to_string(C.isZero(0.0) ? 0 : lu.rank()) +
                                     " < p = " + std::to_string(raw.p));
    Matrix T(d, d);
    T.topRows(raw.p) = C / raw.delta;
    if (d > raw.p) {
        Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullV);
        const Matrix kernel = svd.matrixV().rightCols(d - raw.p);
        T.bottomRows(d - raw.p) = canonical_basis(kernel).transpose();
    }
    Eigen::PartialPivLU<Matrix> tlu(T);
    out.T = T;
    out.T_inv = tlu.inverse();
    out.system = raw;
    out.system.A = T * raw.A * out.T_inv;
    out.system.B = T * raw.B;
    out.system.delta = 1.0;
    out.system.C = Matrix();
    return out;
}

DifferenceSystem build_difference(const QuantizedSystem& sys) {
    DifferenceSystem diff;
    diff.A = sys.A;
    diff.B = sys.B;
    diff.p = sys.p;
    for (const auto& u : sys.alphabet)
        for (const auto& w : sys.alphabet) diff.diff_alphabet.push_back(u - w);
    sort_unique(diff.diff_alphabet);
    for (std::size_t i = 0; i < diff.diff_alphabet.size(); ++i)
        if (diff.diff_alphabet[i].isZero(0.0)) diff.zero_index = i;
    return diff;
}

DoubledSystem build_doubled(const QuantizedSystem& sys) {
    const int d = sys.d();
    const int m = sys.m();
    DoubledSystem out;
    out.A = Matrix::Zero(2 * d, 2 * d);
    out.A.topLeftCorner(d, d) = sys.A;
    out.A.bottomRightCorner(d, d) = sys.A;
    out.B = Matrix::Zero(2 * d, 2 * m);
    out.B.topLeftCorner(d, m) = sys.B;
    out.B.bottomRightCorner(d, m) = sys.B;
    for (std::size_t i = 0; i < sys.alphabet.size(); ++i) {
        for (std::size_t j = 0; j < sys.alphabet.size(); ++j) {
            Vector uu(2 * m);
            uu << sys.alphabet[i], sys.alphabet[j];
            out.pairs.emplace_back(i, j);
            out.paired_alphabet.push_back(std::move(uu));
        }
    }
    return out;
}

bool AffineIFS::shared_linear_part() const {
    for (const auto& f : maps)
        if (!(f.M.array() == maps.front().M.array()).all()) return false;
    return true;
}

void AffineIFS::validate() const {
    if (maps.empty()) throw InvalidSystem("IFS has no maps");
    const int q = dim();
    for (const auto& f : maps)
        if (f.M.rows() != q || f.M.cols() != q || f.c.size() != q)
            throw DimensionMismatch("IFS maps must share one dimension");
}

AffineIFS forward_ifs(const Matrix& A, const Matrix& B, const std::vector<Vector>& inputs) {
    AffineIFS ifs;
    for (const auto& u : inputs) ifs.maps.push_back({A, B * u});
    return ifs;
}

AffineIFS forward_ifs(const DifferenceSystem& diff) { return forward_ifs(diff.A, diff.B, diff.diff_alphabet); }

AffineIFS build_inverse(const AffineIFS& ifs) {
    ifs.validate();
    AffineIFS out;
    const int q = ifs.dim();
    for (const auto& f : ifs.maps) {
        Eigen::PartialPivLU<Matrix> lu(f.M);
        const double det = std::abs(lu.determinant());
        const double scale = std::pow(inf_norm(f.M), q);
        if (!(det >= 1e-12 * scale) || det == 0.0)
            throw SingularDynamics("|det M| = " + std::to_string(det) + " below tolerance");
        Matrix inv = lu.inverse();
        Vector c = -(inv * f.c);
        out.maps.push_back({std::move(inv), std::move(c)});
    }
    return out;
}

Vector step(const AffineIFS& ifs, const Eigen::Ref<const Vector>& state, std::size_t input_index) {
    if (input_index >= ifs.maps.size())
        throw IndexOutOfRange("input index " + std::to_string(input_index) + " >= " +
                              std::to_string(ifs.maps.size()));
    const auto& f = ifs.maps[input_index];
    if (state.size() != f.M.cols()) throw DimensionMismatch("state length differs from IFS dimension");
    return f.M * state + f.c;
}

Eigen::VectorXi quantized_output(const QuantizedSystem& sys, const Eigen::Ref<const Vector>& state) {
    if (state.size() != sys.d()) throw DimensionMismatch("state length differs from d");
    Eigen::VectorXi y(sys.p);
    for (int j = 0; j < sys.p; ++j) y(j) = static_cast<int>(std::floor(state(j)));
    return y;
}

}  // namespace qinv
