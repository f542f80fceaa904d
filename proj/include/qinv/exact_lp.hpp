// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmpxx.h>

#include <vector>

namespace qinv {

using Rational = mpq_class;
using RationalMatrix = std::vector<std::vector<Rational>>;

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Rational value;
};

/// Maximizes c.x subject to A x <= b over free x, in exact arithmetic.
/// Two-phase dense simplex with Bland's rule.
LpResult lp_maximize(const RationalMatrix& A, const std::vector<Rational>& b, const std::vector<Rational>& c);

}  // namespace qinv
