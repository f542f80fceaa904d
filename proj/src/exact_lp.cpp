// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <qinv/errors.hpp>
#include <qinv/exact_lp.hpp>

#include <cstddef>
#include <optional>

namespace qinv {

namespace {

struct Tableau {
    std::size_t m = 0, cols = 0;       // cols excludes the right-hand side
    std::vector<std::vector<Rational>> t;  // m rows of cols + 1 entries
    std::vector<std::size_t> basis;

    void pivot(std::size_t r, std::size_t c) {
        const Rational piv = t[r][c];
        for (auto& x : t[r]) x /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r || sgn(t[i][c]) == 0) continue;
            const Rational f = t[i][c];
            for (std::size_t j = 0; j <= cols; ++j)
                if (sgn(t[r][j]) != 0) t[i][j] -= f * t[r][j];
        }
        basis[r] = c;
    }

    // Maximizes cost over columns below `allowed`. Returns false when unbounded.
    bool run(const std::vector<Rational>& cost, std::size_t allowed) {
        for (;;) {
            std::optional<std::size_t> enter;
            for (std::size_t j = 0; j < allowed && !enter; ++j) {
                Rational rc = cost[j];
                for (std::size_t i = 0; i < m; ++i)
                    if (sgn(t[i][j]) != 0) rc -= cost[basis[i]] * t[i][j];
                if (sgn(rc) > 0) enter = j;
            }
            if (!enter) return true;
            const std::size_t c = *enter;
            std::optional<std::size_t> leave;
            Rational best;
            for (std::size_t i = 0; i < m; ++i) {
                if (sgn(t[i][c]) <= 0) continue;
                const Rational ratio = t[i][cols] / t[i][c];
                if (!leave || ratio < best || (ratio == best && basis[i] < basis[*leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (!leave) return false;
            pivot(*leave, c);
        }
    }

    Rational value(const std::vector<Rational>& cost) const {
        Rational v = 0;
        for (std::size_t i = 0; i < m; ++i) v += cost[basis[i]] * t[i][cols];
        return v;
    }
};

}  // namespace

LpResult lp_maximize(const RationalMatrix& A, const std::vector<Rational>& b, const std::vector<Rational>& c) {
    const std::size_t m = A.size();
    const std::size_t n = c.size();
    if (b.size() != m) throw DimensionMismatch("lp_maximize: rows of A and b differ");
    for (const auto& row : A)
        if (row.size() != n) throw DimensionMismatch("lp_maximize: columns of A and c differ");

    // Columns: x+ (n), x- (n), slack (m), artificial (m).
    Tableau tb;
    tb.m = m;
    tb.cols = 2 * n + 2 * m;
    tb.t.assign(m, std::vector<Rational>(tb.cols + 1, Rational(0)));
    tb.basis.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const int s = sgn(b[i]) < 0 ? -1 : 1;
        for (std::size_t j = 0; j < n; ++j) {
            tb.t[i][j] = s * A[i][j];
            tb.t[i][n + j] = -s * A[i][j];
        }
        tb.t[i][2 * n + i] = s;
        tb.t[i][tb.cols] = s * b[i];
        if (s > 0) {
            tb.basis[i] = 2 * n + i;
        } else {
            tb.t[i][2 * n + m + i] = 1;
            tb.basis[i] = 2 * n + m + i;
        }
    }

    const std::size_t first_art = 2 * n + m;
    std::vector<Rational> phase1(tb.cols, Rational(0));
    for (std::size_t i = 0; i < m; ++i) phase1[first_art + i] = -1;
    tb.run(phase1, tb.cols);
    if (sgn(tb.value(phase1)) < 0) return {LpStatus::Infeasible, Rational(0)};
    for (std::size_t i = 0; i < m; ++i) {
        if (tb.basis[i] < first_art) continue;
        for (std::size_t j = 0; j < first_art; ++j)
            if (sgn(tb.t[i][j]) != 0) {
                tb.pivot(i, j);
                break;
            }
    }

    std::vector<Rational> phase2(tb.cols, Rational(0));
    for (std::size_t j = 0; j < n; ++j) {
        phase2[j] = c[j];
        phase2[n + j] = -c[j];
    }
    if (!tb.run(phase2, first_art)) return {LpStatus::Unbounded, Rational(0)};
    return {LpStatus::Optimal, tb.value(phase2)};
}

}  // namespace qinv
