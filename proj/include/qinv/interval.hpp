// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace qinv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Directed rounding built on error-free transformations: the result of each
// operation is the nearest double on the requested side of the exact value.
// Exact operations are left untouched, so dyadic data stays exact.
namespace rounding {

inline double two_sum_error(double a, double b, double s) {
    const double bb = s - a;
    return (a - (s - bb)) + (b - bb);
}

inline double add_down(double a, double b) {
    const double s = a + b;
    if (!std::isfinite(s)) return s;
    return two_sum_error(a, b, s) >= 0.0 ? s : std::nextafter(s, -std::numeric_limits<double>::infinity());
}

inline double add_up(double a, double b) {
    const double s = a + b;
    if (!std::isfinite(s)) return s;
    return two_sum_error(a, b, s) <= 0.0 ? s : std::nextafter(s, std::numeric_limits<double>::infinity());
}

inline double mul_down(double a, double b) {
    const double p = a * b;
    if (!std::isfinite(p)) return p;
    return std::fma(a, b, -p) >= 0.0 ? p : std::nextafter(p, -std::numeric_limits<double>::infinity());
}

inline double mul_up(double a, double b) {
    const double p = a * b;
    if (!std::isfinite(p)) return p;
    return std::fma(a, b, -p) <= 0.0 ? p : std::nextafter(p, std::numeric_limits<double>::infinity());
}

}  // namespace rounding

/// Closed axis-aligned box [lo, hi].
struct IntervalBox {
    Vector lo;
    Vector hi;

    Eigen::Index dim() const { return lo.size(); }
    Vector center() const { return 0.5 * (lo + hi); }
    Vector width() const { return hi - lo; }

    bool intersects(const IntervalBox& other) const {
        return ((lo.array() <= other.hi.array()) && (other.lo.array() <= hi.array())).all();
    }
    bool contains(const Eigen::Ref<const Vector>& x) const {
        return ((lo.array() <= x.array()) && (x.array() <= hi.array())).all();
    }
};

/// Outward-rounded enclosure of { M x + c : x in box }.
template <typename DerivedM, typename DerivedC>
IntervalBox affine_image(const Eigen::MatrixBase<DerivedM>& M, const Eigen::MatrixBase<DerivedC>& c,
                         const IntervalBox& box) {
    using rounding::add_down;
    using rounding::add_up;
    using rounding::mul_down;
    using rounding::mul_up;
    const Eigen::Index rows = M.rows();
    IntervalBox out{Vector(rows), Vector(rows)};
    for (Eigen::Index i = 0; i < rows; ++i) {
        double lo = c(i);
        double hi = c(i);
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            const double m = M(i, j);
            if (m == 0.0) continue;
            const double a = box.lo(j);
            const double b = box.hi(j);
            if (m > 0.0) {
                lo = add_down(lo, mul_down(m, a));
                hi = add_up(hi, mul_up(m, b));
            } else {
                lo = add_down(lo, mul_down(m, b));
                hi = add_up(hi, mul_up(m, a));
            }
        }
        out.lo(i) = lo;
        out.hi(i) = hi;
    }
    return out;
}

/// Enclosure of { M x : x in box }.
template <typename DerivedM>
IntervalBox linear_image(const Eigen::MatrixBase<DerivedM>& M, const IntervalBox& box) {
    return affine_image(M, Vector::Zero(M.rows()), box);
}

}  // namespace qinv
